#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace rffhsmm {

// Random Fourier feature map for the unit-amplitude RBF kernel
//   k(a, b) = exp(-(a - b)^2 / (2 l^2)).
// Frequencies are drawn from the kernel's spectral density N(0, 1/l^2) and
// phases from Uniform[0, 2pi); the feature map is
//   phi(t)_m = sqrt(2/M) cos(omega_m t + b_m).
// A bank is immutable once built and shared by every class and dimension.
class FeatureBank {
public:
    FeatureBank(std::vector<double> omegas, std::vector<double> phases,
                double lengthscale, std::uint64_t seed);

    int size() const { return static_cast<int>(omegas_.size()); }
    double lengthscale() const { return lengthscale_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<double>& omegas() const { return omegas_; }
    const std::vector<double>& phases() const { return phases_; }

    Eigen::VectorXd phi(double t) const;
    void phi_into(double t, Eigen::Ref<Eigen::VectorXd> out) const;

    // phi(1), ..., phi(max_tau) as the columns of an M x max_tau matrix.
    Eigen::MatrixXd phi_table(int max_tau) const;

    double kernel_approx(double tp, double tq) const;

    bool operator==(const FeatureBank& other) const = default;

private:
    std::vector<double> omegas_;
    std::vector<double> phases_;
    double lengthscale_;
    std::uint64_t seed_;
};

// Draws M (omega, phase) pairs from a mt19937_64 seeded with `seed`.
// Draw order: for m = 0..M-1, omega_m first, then phase_m.
// Throws std::invalid_argument for M < 1 or lengthscale <= 0.
FeatureBank sample_feature_bank(int num_features, double lengthscale, std::uint64_t seed);

// Exact target kernel.
double rbf_kernel(double tp, double tq, double lengthscale = 1.0);

}  // namespace rffhsmm
