#include "thyroid/models/standardize.hpp"

#include <cmath>

namespace thyroid {

Standardizer Standardizer::fit(const Eigen::MatrixXd& x, const std::vector<bool>& scale_column) {
    Standardizer s = identity(x.cols());
    const auto n = x.rows();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (!scale_column[static_cast<std::size_t>(j)] || n == 0) continue;
        const double mean = x.col(j).mean();
        double sd = 0.0;
        if (n > 1) sd = std::sqrt((x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1));
        s.mean[j] = mean;
        s.sd[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(Eigen::Index cols) {
    return {Eigen::VectorXd::Zero(cols), Eigen::VectorXd::Ones(cols)};
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

nlohmann::json Standardizer::to_json() const {
    return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
            {"sd", std::vector<double>(sd.data(), sd.data() + sd.size())}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
    const auto m = j.at("mean").get<std::vector<double>>();
    const auto s = j.at("sd").get<std::vector<double>>();
    return {Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size())),
            Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()))};
}

}  // namespace thyroid
