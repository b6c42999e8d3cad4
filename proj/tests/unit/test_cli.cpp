#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "doctest.h"
#include "thyroid/csv.hpp"
#include "thyroid/data.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "thyroid_cli_test";

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + THYROID_CLI + " " + args + " >" + (kDir / "stdout.txt").string() + " 2>" +
                            (kDir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string err() { return thyroid::csv::read_text(kDir / "stderr.txt"); }

const std::string kSmall = "--synthetic --set synth.patients=60 --set cv.k=3 --set cv.reps=1 --set "
                           "model.random_forest.n_trees=20 --shuffle-reps 2 --bootstrap-reps 2";

struct Setup {
    Setup() {
        fs::remove_all(kDir);
        fs::create_directories(kDir);
    }
};

}  // namespace

TEST_CASE("usage and configuration errors exit with 2") {
    Setup s;
    CHECK(run("") == 2);
    CHECK(run("cv --no-such-flag") == 2);
    CHECK(run("summarize --out " + kDir.string()) == 2);
    CHECK(err().find("no data source") != std::string::npos);
    CHECK(run("cv --synthetic --set cv.k=1 --out " + kDir.string()) == 2);
    CHECK(run("cv " + kSmall + " --out " + kDir.string(), "THYROID_CV_FOLDZ=3") == 2);
    CHECK(err().find("THYROID_CV_FOLDZ") != std::string::npos);
    CHECK(run("cv --config " + (kDir / "missing.txt").string()) == 2);
    CHECK(run("compare " + kSmall + " --out " + kDir.string()) == 2);
    CHECK(run("--help") == 0);
}

TEST_CASE("data errors exit with 3") {
    Setup s;
    CHECK(run("summarize --data " + (kDir / "absent.csv").string() + " --out " + kDir.string()) == 3);
    thyroid::csv::write_text(kDir / "bad.csv", "patient_id,age\n1,40\n");
    CHECK(run("summarize --data " + (kDir / "bad.csv").string() + " --out " + kDir.string()) == 3);
    thyroid::csv::write_text(kDir / "expert.csv", "patient_id,location,prediction\n99999,right,1\n");
    CHECK(run("compare " + kSmall + " --expert " + (kDir / "expert.csv").string() + " --out " + kDir.string()) == 3);
    CHECK(err().find("99999/right") != std::string::npos);
}

TEST_CASE("computation errors exit with 4") {
    Setup s;
    auto ds = thyroid::synthesize(40, 3);
    for (auto& r : ds.records) r.malignancy = 0;
    thyroid::csv::write_text(kDir / "benign.csv", thyroid::to_csv(ds));
    CHECK(run("importance --data " + (kDir / "benign.csv").string() + " --set cv.k=3 --set cv.reps=1 --out " +
              kDir.string()) == 4);
}

TEST_CASE("flags override the config file and the environment") {
    Setup s;
    thyroid::csv::write_text(kDir / "run.txt", "data.synthetic = true\nsynth.patients = 60\ncv.k = 3\ncv.reps = 1\nseed = 5\n");
    const auto out = kDir / "out";
    CHECK(run("cv --config " + (kDir / "run.txt").string() + " --seed 8 --out " + out.string(), "THYROID_CV_REPS=2") == 0);
    const auto resolved = thyroid::csv::read_text(out / "run_config.txt");
    CHECK(resolved.find("seed = 8\n") != std::string::npos);
    CHECK(resolved.find("cv.reps = 2\n") != std::string::npos);
    CHECK(resolved.find("cv.k = 3\n") != std::string::npos);
    CHECK(thyroid::csv::read_text(kDir / "stdout.txt").find("cv_table.csv") != std::string::npos);
}

TEST_CASE("every command is byte-identical across worker counts") {
    Setup s;
    for (const std::string cmd : {"summarize", "cv", "bootstrap", "importance", "synth", "all"}) {
        std::string first;
        for (int workers : {1, 4, 8}) {
            const auto out = kDir / (cmd + std::to_string(workers));
            REQUIRE(run(cmd + " " + kSmall + " --workers " + std::to_string(workers) + " --out " + out.string()) == 0);
            std::vector<fs::path> paths;
            for (const auto& e : fs::directory_iterator(out)) paths.push_back(e.path());
            std::sort(paths.begin(), paths.end());
            std::string all;
            for (const auto& p : paths) all += p.filename().string() + "\n" + thyroid::csv::read_text(p);
            if (first.empty()) first = all;
            else CHECK(all == first);
        }
    }
}
