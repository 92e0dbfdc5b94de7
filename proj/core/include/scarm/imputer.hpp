#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "scarm/data.hpp"

namespace scarm {

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Numeric view of a covariate table: values plus an explicit missingness
// mask. Values under the mask are unspecified.
struct MaskedMatrix {
    Eigen::MatrixXd values;
    MaskMatrix missing;
    std::vector<std::string> names;

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
    bool any_missing() const;
};

MaskedMatrix to_masked(const CovariateTable& table);
MaskedMatrix masked_rows(const MaskedMatrix& m, const std::vector<std::size_t>& rows);

// Round-based imputation: each column with holes is regressed on the other
// columns (ridge with lambda = 1 on the Gram of standardized predictors) and
// its missing cells replaced by predictions; five rounds by default.
// Deterministic: columns are visited in index order and there is no sampling.
class Imputer {
public:
    void fit(const MaskedMatrix& data, int rounds = 5);
    // Fills every missing cell; observed cells pass through untouched.
    Eigen::MatrixXd transform(const MaskedMatrix& data) const;
    bool fitted() const { return fitted_; }
    int rounds() const { return rounds_; }

private:
    struct ColumnModel {
        Eigen::VectorXd pred_mean, pred_sd; // over the other columns
        Eigen::VectorXd coef;               // aligned with the other columns
        double target_mean = 0.0;
    };

    Eigen::VectorXd column_means_;
    std::vector<ColumnModel> models_; // one per column; empty coef => mean only
    int rounds_ = 5;
    bool fitted_ = false;
    bool train_had_missing_ = false;

    static ColumnModel fit_column(const Eigen::MatrixXd& filled, const MaskMatrix& missing,
                                  Eigen::Index target);
    static double predict_cell(const ColumnModel& m, const Eigen::MatrixXd& filled,
                               Eigen::Index row, Eigen::Index target);
};

} // namespace scarm
