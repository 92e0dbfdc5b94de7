#include "scarm/logistic.hpp"

#include <cmath>

#include "scarm/errors.hpp"
#include "scarm/stats.hpp"

namespace scarm {

Eigen::VectorXd LogisticFit::linear(const Eigen::MatrixXd& X) const {
    return (X * coef).array() + intercept;
}

Eigen::VectorXd LogisticFit::predict_proba(const Eigen::MatrixXd& X, double clip) const {
    Eigen::VectorXd z = linear(X);
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z(i) = std::min(1.0 - clip, std::max(clip, sigmoid(z(i))));
    return z;
}

namespace {

// log(1 + e^z) without overflow
double log1pexp(double z) {
    if (z > 35.0) return z;
    if (z < -35.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

} // namespace

double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& coef, double intercept, double lambda) {
    const auto n = static_cast<double>(X.rows());
    const Eigen::VectorXd z = (X * coef).array() + intercept;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        nll += log1pexp(z(i)) - y(i) * z(i);
    return nll / n + 0.5 * lambda * coef.squaredNorm();
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& coef, double intercept, double lambda) {
    const auto n = static_cast<double>(X.rows());
    const Eigen::VectorXd z = (X * coef).array() + intercept;
    Eigen::VectorXd r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = sigmoid(z(i)) - y(i);
    Eigen::VectorXd g(coef.size() + 1);
    g(0) = r.sum() / n;
    g.tail(coef.size()) = (X.transpose() * r) / n + lambda * coef;
    return g;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                         double tol, int max_iter) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (n == 0 || y.size() != n) throw EstimationError("logistic: empty or misaligned data");

    LogisticFit fit;
    fit.lambda = lambda;
    fit.coef = Eigen::VectorXd::Zero(d);
    const double ybar = std::min(1.0 - 1e-12, std::max(1e-12, y.mean()));
    fit.intercept = logit(ybar);

    double obj = logistic_objective(X, y, fit.coef, fit.intercept, lambda);
    if (!std::isfinite(obj)) throw EstimationError("logistic: non-finite loss at start");

    Eigen::VectorXd w(n), r(n);
    for (fit.iterations = 0; fit.iterations < max_iter; ++fit.iterations) {
        const Eigen::VectorXd g = logistic_gradient(X, y, fit.coef, fit.intercept, lambda);
        fit.grad_sup_norm = g.cwiseAbs().maxCoeff();
        if (fit.grad_sup_norm <= tol) {
            fit.converged = true;
            break;
        }
        const Eigen::VectorXd z = (X * fit.coef).array() + fit.intercept;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = sigmoid(z(i));
            w(i) = std::max(p * (1.0 - p), 1e-10);
        }
        // Hessian over (intercept, coef)
        Eigen::MatrixXd H(d + 1, d + 1);
        const Eigen::MatrixXd Xw = X.array().colwise() * w.array();
        H(0, 0) = w.sum();
        H.block(0, 1, 1, d) = Xw.colwise().sum();
        H.block(1, 0, d, 1) = H.block(0, 1, 1, d).transpose();
        H.block(1, 1, d, d) = X.transpose() * Xw;
        H /= static_cast<double>(n);
        for (Eigen::Index j = 1; j <= d; ++j) H(j, j) += lambda;

        const Eigen::VectorXd step = H.ldlt().solve(g);
        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h < 40; ++h) {
            const Eigen::VectorXd cand_coef = fit.coef - alpha * step.tail(d);
            const double cand_int = fit.intercept - alpha * step(0);
            const double cand_obj = logistic_objective(X, y, cand_coef, cand_int, lambda);
            if (std::isfinite(cand_obj) && cand_obj <= obj + 1e-14) {
                fit.coef = cand_coef;
                fit.intercept = cand_int;
                obj = cand_obj;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // step-halving exhausted; gradient criterion decides below
            break;
        }
    }
    if (!fit.converged) {
        const Eigen::VectorXd g = logistic_gradient(X, y, fit.coef, fit.intercept, lambda);
        fit.grad_sup_norm = g.cwiseAbs().maxCoeff();
        fit.converged = fit.grad_sup_norm <= tol;
    }
    fit.objective = obj;
    if (!std::isfinite(obj))
        throw EstimationError("logistic: non-finite loss (last finite objective unavailable)");
    // Huge standardized-scale coefficients with no convergence point to
    // (quasi-)separation; the caller may refit at the largest lambda.
    fit.suspected_separation =
        !fit.converged && fit.coef.size() > 0 && fit.coef.cwiseAbs().maxCoeff() > 15.0;
    return fit;
}

} // namespace scarm
