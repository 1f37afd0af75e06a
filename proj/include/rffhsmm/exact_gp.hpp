#pragma once

#include "rffhsmm/predictive.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace rffhsmm {

using KernelFn = std::function<double(double, double)>;

// Exact GP regression over the pooled (t, x) points of one class.
// Gram matrix K(p, q) = k(t_p, t_q) + delta_pq / beta, fully re-inverted on
// every refresh. The predictive variance is of the observation, so it
// includes the 1/beta noise term. Dimensions share K and the variance.
class GpClassData {
public:
    GpClassData(int dims, double beta, KernelFn kernel);

    int dims() const { return dims_; }
    double beta() const { return beta_; }
    long n_points() const { return n_points_; }
    bool dirty() const { return dirty_; }

    // segment is D x k, stored with times 1..k.
    void add_segment(const Eigen::Ref<const Eigen::MatrixXd>& segment);
    // Removes one previously added segment with identical values.
    // Throws std::logic_error if none matches.
    void remove_segment(const Eigen::Ref<const Eigen::MatrixXd>& segment);
    void add_point(double t, const Eigen::Ref<const Eigen::VectorXd>& x);

    // Throws std::runtime_error if K fails to factorize.
    void refresh();

    // Requires a refreshed cache.
    const Eigen::MatrixXd& gram_inverse() const;
    Eigen::MatrixXd gram() const;
    const std::vector<double>& times() const { return times_; }
    const Eigen::MatrixXd& values() const { return values_; }  // N x D

    struct Prediction {
        Eigen::VectorXd mean;
        double var = 0.0;
    };
    Prediction predictive(double tau) const;
    double emission_logpdf(double tau, const Eigen::Ref<const Eigen::VectorXd>& x) const;
    PredictiveTable predictive_table(int max_tau) const;

    struct Block {
        std::vector<double> times;
        Eigen::MatrixXd values;  // D x n
    };
    const std::vector<Block>& blocks() const { return blocks_; }

private:
    void check_fresh() const;

    int dims_;
    double beta_;
    KernelFn kernel_;
    std::vector<Block> blocks_;
    long n_points_ = 0;

    bool dirty_ = true;
    std::vector<double> times_;
    Eigen::MatrixXd values_;
    Eigen::MatrixXd gram_inverse_;
    Eigen::MatrixXd weights_;  // K^{-1} X, N x D
};

}  // namespace rffhsmm
