#include "scarm/imputer.hpp"

#include "scarm/errors.hpp"

namespace scarm {

bool MaskedMatrix::any_missing() const {
    for (Eigen::Index j = 0; j < missing.cols(); ++j)
        for (Eigen::Index i = 0; i < missing.rows(); ++i)
            if (missing(i, j)) return true;
    return false;
}

MaskedMatrix to_masked(const CovariateTable& table) {
    MaskedMatrix m;
    const auto n = static_cast<Eigen::Index>(table.n_rows());
    const auto d = static_cast<Eigen::Index>(table.n_cols());
    m.values.resize(n, d);
    m.missing.resize(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto& col = table.column(static_cast<std::size_t>(j));
        m.names.push_back(col.name);
        for (Eigen::Index i = 0; i < n; ++i) {
            m.missing(i, j) = col.missing[static_cast<std::size_t>(i)];
            m.values(i, j) = m.missing(i, j) ? 0.0 : col.values[static_cast<std::size_t>(i)];
        }
    }
    return m;
}

MaskedMatrix masked_rows(const MaskedMatrix& m, const std::vector<std::size_t>& rows) {
    MaskedMatrix out;
    out.names = m.names;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), m.values.cols());
    out.missing.resize(static_cast<Eigen::Index>(rows.size()), m.missing.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.values.row(static_cast<Eigen::Index>(i)) =
            m.values.row(static_cast<Eigen::Index>(rows[i]));
        out.missing.row(static_cast<Eigen::Index>(i)) =
            m.missing.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

Imputer::ColumnModel Imputer::fit_column(const Eigen::MatrixXd& filled, const MaskMatrix& missing,
                                         Eigen::Index target) {
    const Eigen::Index n = filled.rows();
    const Eigen::Index d = filled.cols();
    std::vector<Eigen::Index> obs;
    for (Eigen::Index i = 0; i < n; ++i)
        if (!missing(i, target)) obs.push_back(i);
    if (obs.empty())
        throw ValidationError("imputer: column has no observed values");

    ColumnModel m;
    double ym = 0.0;
    for (auto i : obs) ym += filled(i, target);
    m.target_mean = ym / static_cast<double>(obs.size());
    if (d == 1) return m; // nothing to regress on

    const Eigen::Index p = d - 1;
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(obs.size()), p);
    Eigen::VectorXd y(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t r = 0; r < obs.size(); ++r) {
        Eigen::Index c = 0;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (j == target) continue;
            Z(static_cast<Eigen::Index>(r), c++) = filled(obs[r], j);
        }
        y(static_cast<Eigen::Index>(r)) = filled(obs[r], target) - m.target_mean;
    }
    m.pred_mean = Z.colwise().mean();
    m.pred_sd.resize(p);
    Z.rowwise() -= m.pred_mean.transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
        const double sd = std::sqrt(Z.col(j).squaredNorm() /
                                    std::max<double>(1.0, static_cast<double>(Z.rows() - 1)));
        m.pred_sd(j) = sd > 1e-12 ? sd : 1.0; // constant predictor contributes nothing
        Z.col(j) /= m.pred_sd(j);
    }
    Eigen::MatrixXd G = Z.transpose() * Z;
    G.diagonal().array() += 1.0; // ridge, lambda = 1 on standardized Gram
    m.coef = G.ldlt().solve(Z.transpose() * y);
    return m;
}

double Imputer::predict_cell(const ColumnModel& m, const Eigen::MatrixXd& filled,
                             Eigen::Index row, Eigen::Index target) {
    if (m.coef.size() == 0) return m.target_mean;
    double z = m.target_mean;
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < filled.cols(); ++j) {
        if (j == target) continue;
        z += m.coef(c) * (filled(row, j) - m.pred_mean(c)) / m.pred_sd(c);
        ++c;
    }
    return z;
}

void Imputer::fit(const MaskedMatrix& data, int rounds) {
    rounds_ = rounds;
    const Eigen::Index n = data.values.rows();
    const Eigen::Index d = data.values.cols();
    column_means_.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        double s = 0.0;
        Eigen::Index cnt = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!data.missing(i, j)) { s += data.values(i, j); ++cnt; }
        if (cnt == 0) throw ValidationError("imputer: column '" + data.names[static_cast<std::size_t>(j)] +
                                            "' is entirely missing");
        column_means_(j) = s / static_cast<double>(cnt);
    }

    train_had_missing_ = data.any_missing();
    Eigen::MatrixXd filled = data.values;
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (data.missing(i, j)) filled(i, j) = column_means_(j);

    if (train_had_missing_) {
        for (int r = 0; r < rounds_; ++r) {
            for (Eigen::Index j = 0; j < d; ++j) {
                bool any = false;
                for (Eigen::Index i = 0; i < n; ++i)
                    if (data.missing(i, j)) { any = true; break; }
                if (!any) continue;
                const ColumnModel m = fit_column(filled, data.missing, j);
                for (Eigen::Index i = 0; i < n; ++i)
                    if (data.missing(i, j)) filled(i, j) = predict_cell(m, filled, i, j);
            }
        }
    }

    // Models for every column, fit on the final filled matrix using rows
    // where the target is observed, so transform can handle missingness
    // patterns unseen in training.
    models_.clear();
    models_.reserve(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) models_.push_back(fit_column(filled, data.missing, j));
    fitted_ = true;
}

Eigen::MatrixXd Imputer::transform(const MaskedMatrix& data) const {
    if (!fitted_) throw EstimationError("imputer used before fit");
    const Eigen::Index n = data.values.rows();
    const Eigen::Index d = data.values.cols();
    if (d != column_means_.size())
        throw ValidationError("imputer: column count mismatch");
    Eigen::MatrixXd filled = data.values;
    bool any = false;
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (data.missing(i, j)) { filled(i, j) = column_means_(j); any = true; }
    if (!any) return filled;
    for (int r = 0; r < rounds_; ++r)
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index i = 0; i < n; ++i)
                if (data.missing(i, j)) filled(i, j) = predict_cell(models_[static_cast<std::size_t>(j)], filled, i, j);
        }
    return filled;
}

} // namespace scarm
