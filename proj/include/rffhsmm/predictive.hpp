#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace rffhsmm {

// Per-dimension predictive Gaussians for within-segment indices 1..max_tau.
// Column tau-1 holds the moments at index tau.
struct PredictiveTable {
    Eigen::MatrixXd mean;  // D x max_tau
    Eigen::MatrixXd var;   // D x max_tau

    int dims() const { return static_cast<int>(mean.rows()); }
    int max_tau() const { return static_cast<int>(mean.cols()); }
};

inline double gaussian_logpdf(double x, double mean, double var) {
    const double r = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

}  // namespace rffhsmm
