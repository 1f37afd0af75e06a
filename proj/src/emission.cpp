#include "rffhsmm/emission.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace rffhsmm {

std::string to_string(Backend backend) { return backend == Backend::rff ? "rff" : "exact-gp"; }

Backend parse_backend(const std::string& name) {
    if (name == "rff") return Backend::rff;
    if (name == "exact-gp" || name == "exact_gp" || name == "gp") return Backend::exact_gp;
    throw std::invalid_argument("unknown backend '" + name + "' (expected rff or exact-gp)");
}

RffBackend::RffBackend(FeatureBank bank, int num_classes, int dims, RegressionPrior prior)
    : bank_(std::move(bank)), prior_(prior) {
    if (num_classes < 1) throw std::invalid_argument("RffBackend: num_classes must be >= 1");
    classes_.reserve(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) classes_.emplace_back(c, dims, bank_.size(), prior);
}

void RffBackend::add_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) {
    classes_[c].add_segment(bank_, segment);
}

void RffBackend::remove_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) {
    classes_[c].remove_segment(bank_, segment);
}

PredictiveTable RffBackend::predictive_table(int c, int max_tau) const {
    return classes_[c].predictive_table(bank_, max_tau);
}

std::unique_ptr<EmissionBackend> RffBackend::empty_clone() const {
    return std::make_unique<RffBackend>(bank_, num_classes(), dims(), prior_);
}

double RffBackend::max_stats_deviation(const EmissionBackend& other) const {
    const auto* rhs = dynamic_cast<const RffBackend*>(&other);
    if (rhs == nullptr || rhs->num_classes() != num_classes() || rhs->dims() != dims())
        return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (int c = 0; c < num_classes(); ++c) {
        if (n_points(c) != rhs->n_points(c)) return std::numeric_limits<double>::infinity();
        for (int d = 0; d < dims(); ++d) {
            const auto& a = classes_[c].stats(d);
            const auto& b = rhs->classes_[c].stats(d);
            worst = std::max(worst, (a.precision - b.precision).cwiseAbs().maxCoeff());
            worst = std::max(worst, (a.weighted_sum - b.weighted_sum).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

ExactGpBackend::ExactGpBackend(int num_classes, int dims, double beta, double lengthscale)
    : beta_(beta), lengthscale_(lengthscale) {
    if (num_classes < 1) throw std::invalid_argument("ExactGpBackend: num_classes must be >= 1");
    if (!(lengthscale > 0.0)) throw std::invalid_argument("ExactGpBackend: lengthscale must be positive");
    const double ell = lengthscale;
    KernelFn rbf = [ell](double a, double b) { return rbf_kernel(a, b, ell); };
    classes_.reserve(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) classes_.emplace_back(dims, beta, rbf);
}

void ExactGpBackend::add_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) {
    classes_[c].add_segment(segment);
}

void ExactGpBackend::remove_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) {
    classes_[c].remove_segment(segment);
}

PredictiveTable ExactGpBackend::predictive_table(int c, int max_tau) const {
    return classes_[c].predictive_table(max_tau);
}

std::unique_ptr<EmissionBackend> ExactGpBackend::empty_clone() const {
    return std::make_unique<ExactGpBackend>(num_classes(), dims(), beta_, lengthscale_);
}

double ExactGpBackend::max_stats_deviation(const EmissionBackend& other) const {
    const auto* rhs = dynamic_cast<const ExactGpBackend*>(&other);
    if (rhs == nullptr || rhs->num_classes() != num_classes() || rhs->dims() != dims())
        return std::numeric_limits<double>::infinity();
    // Point multisets must agree; compare them order-free.
    auto pooled = [](const GpClassData& data) {
        std::vector<std::vector<double>> rows;
        for (const auto& block : data.blocks())
            for (std::size_t j = 0; j < block.times.size(); ++j) {
                std::vector<double> row{block.times[j]};
                for (Eigen::Index d = 0; d < block.values.rows(); ++d)
                    row.push_back(block.values(d, static_cast<Eigen::Index>(j)));
                rows.push_back(std::move(row));
            }
        std::sort(rows.begin(), rows.end());
        return rows;
    };
    double worst = 0.0;
    for (int c = 0; c < num_classes(); ++c) {
        const auto a = pooled(classes_[c]);
        const auto b = pooled(rhs->classes_[c]);
        if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < a[i].size(); ++j) worst = std::max(worst, std::abs(a[i][j] - b[i][j]));
    }
    return worst;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (int i = w; i < n; i += workers) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void refresh_all(EmissionBackend& backend, int threads) {
    parallel_for(backend.num_classes(), threads, [&](int c) {
        if (backend.dirty(c)) backend.refresh(c);
    });
}

EmissionTable build_emission_table(const EmissionBackend& backend, const Eigen::Ref<const Eigen::MatrixXd>& sequence,
                                   int max_tau, int threads) {
    if (sequence.rows() != backend.dims()) throw std::invalid_argument("build_emission_table: dimension mismatch");
    const int C = backend.num_classes();
    const int D = backend.dims();
    const int T = static_cast<int>(sequence.cols());
    EmissionTable table(C, max_tau, T);
    const double log_two_pi = std::log(2.0 * std::numbers::pi);
    const Eigen::MatrixXd frames = sequence.transpose();  // T x D, each dimension contiguous

    parallel_for(C, threads, [&](int c) {
        const PredictiveTable pred = backend.predictive_table(c, max_tau);
        for (int tau = 1; tau <= max_tau; ++tau) {
            double* out = table.row(c, tau);
            double constant = 0.0;
            for (int d = 0; d < D; ++d) constant += log_two_pi + std::log(pred.var(d, tau - 1));
            std::fill(out, out + T, -0.5 * constant);
            for (int d = 0; d < D; ++d) {
                const double mean = pred.mean(d, tau - 1);
                const double half_precision = 0.5 / pred.var(d, tau - 1);
                const double* x = frames.col(d).data();
                for (int t = 0; t < T; ++t) {
                    const double r = x[t] - mean;
                    out[t] -= half_precision * r * r;
                }
            }
        }
    });
    return table;
}

}  // namespace rffhsmm
