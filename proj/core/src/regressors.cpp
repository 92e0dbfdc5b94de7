#include "scarm/regressors.hpp"

#include <algorithm>
#include <numeric>

#include "scarm/errors.hpp"

namespace scarm {

RegressorKind regressor_kind_from_string(const std::string& s) {
    if (s == "ridge") return RegressorKind::Ridge;
    if (s == "knn") return RegressorKind::Knn;
    throw ConfigError("unknown regressor kind '" + s + "' (expected ridge|knn)");
}

std::string to_string(RegressorKind k) {
    return k == RegressorKind::Ridge ? "ridge" : "knn";
}

void RidgeRegressor::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size() || X.rows() == 0)
        throw EstimationError("ridge: empty or misaligned training data");
    const auto n = static_cast<double>(X.rows());
    feature_mean_ = X.colwise().mean();
    const double ymean = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - feature_mean_.transpose();
    // averaged loss keeps the fit invariant under row duplication
    Eigen::MatrixXd G = (Xc.transpose() * Xc) / n;
    G.diagonal().array() += lambda_;
    coef_ = G.ldlt().solve(Xc.transpose() * (y.array() - ymean).matrix() / n);
    intercept_ = ymean;
}

Eigen::VectorXd RidgeRegressor::predict(const Eigen::MatrixXd& X) const {
    if (coef_.size() == 0) throw EstimationError("ridge: predict before fit");
    return ((X.rowwise() - feature_mean_.transpose()) * coef_).array() + intercept_;
}

void KnnRegressor::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size() || X.rows() == 0)
        throw EstimationError("knn: empty or misaligned training data");
    X_ = X;
    y_ = y;
}

Eigen::VectorXd KnnRegressor::predict(const Eigen::MatrixXd& X) const {
    if (X_.rows() == 0) throw EstimationError("knn: predict before fit");
    const std::size_t n = static_cast<std::size_t>(X_.rows());
    const std::size_t k = std::min(k_ == 0 ? std::size_t{1} : k_, n);
    Eigen::VectorXd out(X.rows());
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (Eigen::Index q = 0; q < X.rows(); ++q) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 =
                (X_.row(static_cast<Eigen::Index>(i)) - X.row(q)).squaredNorm();
            dist[i] = {d2, i};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                          dist.end());
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += y_(static_cast<Eigen::Index>(dist[i].second));
        out(q) = s / static_cast<double>(k);
    }
    return out;
}

std::unique_ptr<Regressor> make_regressor(RegressorKind kind, double hyper) {
    if (kind == RegressorKind::Ridge) return std::make_unique<RidgeRegressor>(hyper);
    const auto k = static_cast<std::size_t>(hyper);
    if (hyper <= 0 || static_cast<double>(k) != hyper)
        throw ConfigError("knn neighbour count must be a positive integer");
    return std::make_unique<KnnRegressor>(k);
}

} // namespace scarm
