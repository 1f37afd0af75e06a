#pragma once

#include "rffhsmm/predictive.hpp"
#include "rffhsmm/rff_features.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rffhsmm {

struct RegressionPrior {
    double beta = 10.0;  // observation noise precision
    double psi = 1.0;    // prior precision on the feature weights
};

// Sufficient statistics of one output dimension:
//   precision = psi I + beta sum_p phi(t_p) phi(t_p)^T
//   weighted_sum = beta sum_p x_p phi(t_p)
struct RegressionStats {
    Eigen::MatrixXd precision;
    Eigen::VectorXd weighted_sum;
    long n_points = 0;

    RegressionStats(int num_features, double psi);
};

// Bayesian linear regression over a shared FeatureBank, one independent
// regression per output dimension. Statistics update in O(M^2) per point;
// the O(M^3) posterior solve is deferred until refresh().
class ClassModel {
public:
    ClassModel(int class_id, int dims, int num_features, RegressionPrior prior);

    int class_id() const { return class_id_; }
    int dims() const { return static_cast<int>(per_dim_.size()); }
    int num_features() const { return static_cast<int>(per_dim_.front().weighted_sum.size()); }
    long n_points() const { return per_dim_.front().n_points; }
    const RegressionPrior& prior() const { return prior_; }
    bool dirty() const { return dirty_; }

    const RegressionStats& stats(int d) const { return per_dim_[d]; }
    // Replaces the raw statistics (snapshot reload). Marks the cache dirty.
    void set_stats(int d, RegressionStats stats);

    // segment is D x k; frame j uses within-segment index tau = j + 1.
    void add_segment(const FeatureBank& bank, const Eigen::Ref<const Eigen::MatrixXd>& segment);
    // Throws std::logic_error if fewer than k points are held.
    void remove_segment(const FeatureBank& bank, const Eigen::Ref<const Eigen::MatrixXd>& segment);

    // Adds a single (t, x) pair at an arbitrary time.
    void add_point(const FeatureBank& bank, double t, const Eigen::Ref<const Eigen::VectorXd>& x);

    // Recomputes posterior mean/covariance if stale. Throws std::runtime_error
    // when a precision matrix fails to factorize.
    void refresh();

    // These require a refreshed cache (std::logic_error otherwise).
    const Eigen::VectorXd& posterior_mean(int d) const;
    const Eigen::MatrixXd& posterior_cov(int d) const;
    double predictive_mean(const Eigen::VectorXd& phi, int d) const;
    double predictive_var(const Eigen::VectorXd& phi, int d) const;
    double predictive_logpdf(const FeatureBank& bank, double tau, const Eigen::Ref<const Eigen::VectorXd>& x) const;
    PredictiveTable predictive_table(const FeatureBank& bank, int max_tau) const;

    // Refreshes on demand.
    double predictive_logpdf(const FeatureBank& bank, double tau, const Eigen::Ref<const Eigen::VectorXd>& x);

private:
    void check_fresh() const;
    void apply_segment(const FeatureBank& bank, const Eigen::Ref<const Eigen::MatrixXd>& segment, double sign);

    int class_id_;
    RegressionPrior prior_;
    std::vector<RegressionStats> per_dim_;
    std::vector<Eigen::VectorXd> mean_;
    std::vector<Eigen::MatrixXd> cov_;
    bool dirty_ = true;
};

}  // namespace rffhsmm
