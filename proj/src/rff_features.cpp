#include "rffhsmm/rff_features.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace rffhsmm {

FeatureBank::FeatureBank(std::vector<double> omegas, std::vector<double> phases,
                         double lengthscale, std::uint64_t seed)
    : omegas_(std::move(omegas)), phases_(std::move(phases)), lengthscale_(lengthscale), seed_(seed) {
    if (omegas_.empty()) throw std::invalid_argument("feature bank needs at least one feature");
    if (omegas_.size() != phases_.size())
        throw std::invalid_argument("feature bank: omegas and phases differ in length");
    if (!(lengthscale_ > 0.0)) throw std::invalid_argument("feature bank: lengthscale must be positive");
}

void FeatureBank::phi_into(double t, Eigen::Ref<Eigen::VectorXd> out) const {
    const double scale = std::sqrt(2.0 / static_cast<double>(omegas_.size()));
    for (std::size_t m = 0; m < omegas_.size(); ++m)
        out[static_cast<Eigen::Index>(m)] = scale * std::cos(omegas_[m] * t + phases_[m]);
}

Eigen::VectorXd FeatureBank::phi(double t) const {
    Eigen::VectorXd out(size());
    phi_into(t, out);
    return out;
}

Eigen::MatrixXd FeatureBank::phi_table(int max_tau) const {
    Eigen::MatrixXd table(size(), max_tau);
    for (int tau = 1; tau <= max_tau; ++tau) phi_into(static_cast<double>(tau), table.col(tau - 1));
    return table;
}

double FeatureBank::kernel_approx(double tp, double tq) const {
    // Accumulate the products in a fixed order so k(a, b) == k(b, a) bit-for-bit.
    const double scale = 2.0 / static_cast<double>(omegas_.size());
    double sum = 0.0;
    for (std::size_t m = 0; m < omegas_.size(); ++m)
        sum += std::cos(omegas_[m] * tp + phases_[m]) * std::cos(omegas_[m] * tq + phases_[m]);
    return scale * sum;
}

FeatureBank sample_feature_bank(int num_features, double lengthscale, std::uint64_t seed) {
    if (num_features < 1) throw std::invalid_argument("sample_feature_bank: M must be >= 1");
    if (!(lengthscale > 0.0)) throw std::invalid_argument("sample_feature_bank: lengthscale must be > 0");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> spectral(0.0, 1.0 / lengthscale);
    std::uniform_real_distribution<double> phase(0.0, two_pi);

    std::vector<double> omegas(static_cast<std::size_t>(num_features));
    std::vector<double> phases(static_cast<std::size_t>(num_features));
    for (int m = 0; m < num_features; ++m) {
        omegas[m] = spectral(rng);
        double b = phase(rng);
        // generate_canonical may round up to the open endpoint
        if (b >= two_pi) b = 0.0;
        phases[m] = b;
    }
    return FeatureBank(std::move(omegas), std::move(phases), lengthscale, seed);
}

double rbf_kernel(double tp, double tq, double lengthscale) {
    const double d = (tp - tq) / lengthscale;
    return std::exp(-0.5 * d * d);
}

}  // namespace rffhsmm
