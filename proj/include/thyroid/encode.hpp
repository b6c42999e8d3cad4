#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thyroid/data.hpp"

namespace thyroid {

struct EncodedColumn {
    std::string name;            // e.g. "age", "location=left"
    Variable variable;
    std::optional<int> level;    // indicator level for categorical columns
    bool numeric() const noexcept { return !level.has_value(); }
};

// Per-column affine scaling. Indicator columns keep mean 0 and SD 1.
struct Scaling {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
};

/// Numeric design matrix. Categorical variables with L levels expand to L-1
/// indicator columns against their first level; numeric variables occupy
/// one column each. Columns follow predictor order.
struct EncodedMatrix {
    Eigen::MatrixXd values;                         // rows = nodules
    std::vector<int> labels;                        // 1 = malignant
    std::vector<std::string> groups;                // patient id per row
    std::vector<std::string> locations;             // location level per row, for keyed lookups
    std::vector<EncodedColumn> columns;
    std::map<std::string, std::vector<int>> var_columns;  // variable name -> column indices
    Scaling scaling;
    bool standardized = false;

    Eigen::Index rows() const noexcept { return values.rows(); }
    Eigen::Index cols() const noexcept { return values.cols(); }

    // Column indices of a variable; throws ConfigError for unknown names.
    const std::vector<int>& columns_of(const std::string& variable) const;
    std::vector<std::string> variable_names() const;
};

/// Column layout of the full schema (independent of data).
std::vector<EncodedColumn> encoded_layout();

/// Encodes a preprocessed dataset. With `standardize`, numeric columns are
/// z-scored with the sample SD; a constant column keeps SD 1 and a warning is
/// written to stderr.
EncodedMatrix encode(const Dataset& ds, bool standardize = false);

/// Reconstructs the predictor values of one encoded row.
NoduleRecord decode_row(const EncodedMatrix& m, Eigen::Index row);

}  // namespace thyroid
