#pragma once

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace thyroid {

/// Column-wise z-scoring fitted on training rows. Only columns flagged in
/// the mask are scaled; a constant column keeps SD 1.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;

    static Standardizer fit(const Eigen::MatrixXd& x, const std::vector<bool>& scale_column);
    static Standardizer identity(Eigen::Index cols);

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;

    nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);
};

}  // namespace thyroid
