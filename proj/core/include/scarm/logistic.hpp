#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace scarm {

// L2-penalized logistic regression fit by damped Newton (IRLS).
// Objective (averaged over rows, intercept unpenalized):
//   f(b0, b) = -(1/n) sum_i [ y_i log p_i + (1-y_i) log(1-p_i) ] + (lambda/2) |b|^2
struct LogisticFit {
    Eigen::VectorXd coef;
    double intercept = 0.0;
    double lambda = 0.0;
    bool converged = false;
    int iterations = 0;
    double grad_sup_norm = 0.0;
    double objective = 0.0;
    bool suspected_separation = false;

    Eigen::VectorXd linear(const Eigen::MatrixXd& X) const;
    // probabilities clipped into [clip, 1 - clip]
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X, double clip) const;
};

double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& coef, double intercept, double lambda);

// gradient with respect to (intercept, coef); first entry is the intercept.
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& coef, double intercept, double lambda);

LogisticFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                         double tol = 1e-8, int max_iter = 100);

} // namespace scarm
