#include "rffhsmm/exact_gp.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rffhsmm {

GpClassData::GpClassData(int dims, double beta, KernelFn kernel)
    : dims_(dims), beta_(beta), kernel_(std::move(kernel)) {
    if (dims < 1) throw std::invalid_argument("GpClassData: dims must be >= 1");
    if (!(beta > 0.0)) throw std::invalid_argument("GpClassData: beta must be positive");
    if (!kernel_) throw std::invalid_argument("GpClassData: kernel is empty");
}

void GpClassData::add_segment(const Eigen::Ref<const Eigen::MatrixXd>& segment) {
    if (segment.rows() != dims_) throw std::invalid_argument("GpClassData: segment dimension mismatch");
    if (segment.cols() < 1) throw std::invalid_argument("GpClassData: empty segment");
    Block block{std::vector<double>(static_cast<std::size_t>(segment.cols())), segment};
    for (std::size_t j = 0; j < block.times.size(); ++j) block.times[j] = static_cast<double>(j + 1);
    n_points_ += segment.cols();
    blocks_.push_back(std::move(block));
    dirty_ = true;
}

void GpClassData::remove_segment(const Eigen::Ref<const Eigen::MatrixXd>& segment) {
    auto it = std::find_if(blocks_.begin(), blocks_.end(), [&](const Block& b) {
        if (b.values.cols() != segment.cols() || b.values.rows() != segment.rows()) return false;
        for (std::size_t j = 0; j < b.times.size(); ++j)
            if (b.times[j] != static_cast<double>(j + 1)) return false;
        return b.values == segment;
    });
    if (it == blocks_.end())
        throw std::logic_error("GpClassData: removing a segment of length " + std::to_string(segment.cols()) +
                               " that was never added");
    n_points_ -= segment.cols();
    blocks_.erase(it);
    dirty_ = true;
}

void GpClassData::add_point(double t, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != dims_) throw std::invalid_argument("GpClassData: point dimension mismatch");
    blocks_.push_back(Block{{t}, x});
    ++n_points_;
    dirty_ = true;
}

Eigen::MatrixXd GpClassData::gram() const {
    const auto n = static_cast<Eigen::Index>(times_.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index q = 0; q < n; ++q) {
        for (Eigen::Index p = q; p < n; ++p) {
            const double v = kernel_(times_[p], times_[q]);
            k(p, q) = v;
            k(q, p) = v;
        }
        k(q, q) += 1.0 / beta_;
    }
    return k;
}

void GpClassData::refresh() {
    if (!dirty_) return;
    times_.clear();
    times_.reserve(static_cast<std::size_t>(n_points_));
    values_.resize(n_points_, dims_);
    Eigen::Index row = 0;
    for (const auto& b : blocks_) {
        times_.insert(times_.end(), b.times.begin(), b.times.end());
        values_.middleRows(row, b.values.cols()) = b.values.transpose();
        row += b.values.cols();
    }

    if (n_points_ == 0) {
        gram_inverse_.resize(0, 0);
        weights_.resize(0, dims_);
    } else {
        Eigen::LLT<Eigen::MatrixXd> llt(gram());
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("GpClassData: Gram matrix of " + std::to_string(n_points_) +
                                     " points is not positive definite");
        gram_inverse_ = llt.solve(Eigen::MatrixXd::Identity(n_points_, n_points_));
        weights_ = gram_inverse_ * values_;
    }
    dirty_ = false;
}

void GpClassData::check_fresh() const {
    if (dirty_) throw std::logic_error("GpClassData: cache is stale; call refresh()");
}

const Eigen::MatrixXd& GpClassData::gram_inverse() const {
    check_fresh();
    return gram_inverse_;
}

GpClassData::Prediction GpClassData::predictive(double tau) const {
    check_fresh();
    const auto n = static_cast<Eigen::Index>(times_.size());
    Eigen::VectorXd k(n);
    for (Eigen::Index p = 0; p < n; ++p) k[p] = kernel_(times_[p], tau);
    Prediction out;
    out.mean = n == 0 ? Eigen::VectorXd::Zero(dims_) : Eigen::VectorXd(weights_.transpose() * k);
    const double latent = n == 0 ? kernel_(tau, tau) : kernel_(tau, tau) - k.dot(gram_inverse_ * k);
    out.var = std::max(latent, 0.0) + 1.0 / beta_;
    return out;
}

double GpClassData::emission_logpdf(double tau, const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dims_) throw std::invalid_argument("emission_logpdf: dimension mismatch");
    const Prediction pred = predictive(tau);
    double total = 0.0;
    for (int d = 0; d < dims_; ++d) total += gaussian_logpdf(x[d], pred.mean[d], pred.var);
    return total;
}

PredictiveTable GpClassData::predictive_table(int max_tau) const {
    check_fresh();
    const auto n = static_cast<Eigen::Index>(times_.size());
    PredictiveTable table{Eigen::MatrixXd::Zero(dims_, max_tau), Eigen::MatrixXd(dims_, max_tau)};
    Eigen::VectorXd prior(max_tau);
    for (int tau = 1; tau <= max_tau; ++tau) prior[tau - 1] = kernel_(tau, tau);
    if (n == 0) {
        table.var = (prior.array() + 1.0 / beta_).transpose().replicate(dims_, 1);
        return table;
    }
    Eigen::MatrixXd cross(n, max_tau);
    for (int tau = 1; tau <= max_tau; ++tau)
        for (Eigen::Index p = 0; p < n; ++p) cross(p, tau - 1) = kernel_(times_[p], tau);
    table.mean = weights_.transpose() * cross;
    const Eigen::MatrixXd solved = gram_inverse_ * cross;
    const Eigen::VectorXd reduction = (cross.array() * solved.array()).colwise().sum().transpose();
    const Eigen::VectorXd var = (prior - reduction).cwiseMax(0.0).array() + 1.0 / beta_;
    table.var = var.transpose().replicate(dims_, 1);
    return table;
}

}  // namespace rffhsmm
