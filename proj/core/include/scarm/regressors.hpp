#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>

namespace scarm {

enum class RegressorKind { Ridge, Knn };

RegressorKind regressor_kind_from_string(const std::string& s);
std::string to_string(RegressorKind k);

// Minimal pluggable regressor. Inputs are expected to be standardized by the
// caller; kNN distances in particular assume comparable feature scales.
class Regressor {
public:
    virtual ~Regressor() = default;
    virtual void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) = 0;
    virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
    virtual std::unique_ptr<Regressor> clone_unfitted() const = 0;
    virtual std::map<std::string, double> hyperparams() const = 0;
};

class RidgeRegressor final : public Regressor {
public:
    explicit RidgeRegressor(double lambda) : lambda_(lambda) {}
    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override;
    std::unique_ptr<Regressor> clone_unfitted() const override {
        return std::make_unique<RidgeRegressor>(lambda_);
    }
    std::map<std::string, double> hyperparams() const override { return {{"lambda", lambda_}}; }

    const Eigen::VectorXd& coefficients() const { return coef_; }
    double intercept() const { return intercept_; }

private:
    double lambda_;
    Eigen::VectorXd coef_;
    Eigen::VectorXd feature_mean_;
    double intercept_ = 0.0;
};

// Brute-force k nearest neighbours, Euclidean distance, ties broken by
// lowest training row index. k is capped at the training size.
class KnnRegressor final : public Regressor {
public:
    explicit KnnRegressor(std::size_t k) : k_(k) {}
    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override;
    std::unique_ptr<Regressor> clone_unfitted() const override {
        return std::make_unique<KnnRegressor>(k_);
    }
    std::map<std::string, double> hyperparams() const override {
        return {{"k", static_cast<double>(k_)}};
    }

private:
    std::size_t k_;
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
};

std::unique_ptr<Regressor> make_regressor(RegressorKind kind, double hyper);

} // namespace scarm
