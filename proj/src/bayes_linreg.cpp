#include "rffhsmm/bayes_linreg.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace rffhsmm {

RegressionStats::RegressionStats(int num_features, double psi)
    : precision(psi * Eigen::MatrixXd::Identity(num_features, num_features)),
      weighted_sum(Eigen::VectorXd::Zero(num_features)) {}

ClassModel::ClassModel(int class_id, int dims, int num_features, RegressionPrior prior)
    : class_id_(class_id), prior_(prior) {
    if (dims < 1) throw std::invalid_argument("ClassModel: dims must be >= 1");
    if (num_features < 1) throw std::invalid_argument("ClassModel: num_features must be >= 1");
    if (!(prior.beta > 0.0) || !(prior.psi > 0.0))
        throw std::invalid_argument("ClassModel: beta and psi must be positive");
    per_dim_.assign(static_cast<std::size_t>(dims), RegressionStats(num_features, prior.psi));
    mean_.resize(per_dim_.size());
    cov_.resize(per_dim_.size());
}

void ClassModel::set_stats(int d, RegressionStats stats) {
    if (stats.precision.rows() != num_features() || stats.weighted_sum.size() != num_features())
        throw std::invalid_argument("ClassModel::set_stats: feature count mismatch");
    per_dim_[d] = std::move(stats);
    dirty_ = true;
}

void ClassModel::apply_segment(const FeatureBank& bank, const Eigen::Ref<const Eigen::MatrixXd>& segment,
                               double sign) {
    if (segment.rows() != dims())
        throw std::invalid_argument("ClassModel: segment has " + std::to_string(segment.rows()) +
                                    " dimensions, model has " + std::to_string(dims()));
    if (bank.size() != num_features()) throw std::invalid_argument("ClassModel: feature bank size mismatch");
    const int k = static_cast<int>(segment.cols());
    if (k < 1) throw std::invalid_argument("ClassModel: empty segment");

    const Eigen::MatrixXd phis = bank.phi_table(k);  // M x k
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(num_features(), num_features());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(phis, sign * prior_.beta);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

    for (int d = 0; d < dims(); ++d) {
        auto& s = per_dim_[d];
        s.precision += gram;
        s.weighted_sum.noalias() += (sign * prior_.beta) * (phis * segment.row(d).transpose());
        s.n_points += sign > 0 ? k : -k;
    }
    dirty_ = true;
}

void ClassModel::add_segment(const FeatureBank& bank, const Eigen::Ref<const Eigen::MatrixXd>& segment) {
    apply_segment(bank, segment, 1.0);
}

void ClassModel::remove_segment(const FeatureBank& bank, const Eigen::Ref<const Eigen::MatrixXd>& segment) {
    if (n_points() < segment.cols())
        throw std::logic_error("ClassModel " + std::to_string(class_id_) + ": removing " +
                               std::to_string(segment.cols()) + " points from a class holding " +
                               std::to_string(n_points()));
    apply_segment(bank, segment, -1.0);
}

void ClassModel::add_point(const FeatureBank& bank, double t, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != dims()) throw std::invalid_argument("ClassModel::add_point: dimension mismatch");
    const Eigen::VectorXd phi = bank.phi(t);
    for (int d = 0; d < dims(); ++d) {
        auto& s = per_dim_[d];
        s.precision.noalias() += prior_.beta * phi * phi.transpose();
        s.weighted_sum += (prior_.beta * x[d]) * phi;
        ++s.n_points;
    }
    dirty_ = true;
}

void ClassModel::refresh() {
    if (!dirty_) return;
    const auto identity = Eigen::MatrixXd::Identity(num_features(), num_features());
    for (int d = 0; d < dims(); ++d) {
        Eigen::LLT<Eigen::MatrixXd> llt(per_dim_[d].precision);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("ClassModel " + std::to_string(class_id_) +
                                     ": posterior precision is not positive definite (dimension " +
                                     std::to_string(d) + ")");
        mean_[d] = llt.solve(per_dim_[d].weighted_sum);
        cov_[d] = llt.solve(identity);
    }
    dirty_ = false;
}

void ClassModel::check_fresh() const {
    if (dirty_) throw std::logic_error("ClassModel: posterior cache is stale; call refresh()");
}

const Eigen::VectorXd& ClassModel::posterior_mean(int d) const {
    check_fresh();
    return mean_[d];
}

const Eigen::MatrixXd& ClassModel::posterior_cov(int d) const {
    check_fresh();
    return cov_[d];
}

double ClassModel::predictive_mean(const Eigen::VectorXd& phi, int d) const {
    check_fresh();
    return mean_[d].dot(phi);
}

double ClassModel::predictive_var(const Eigen::VectorXd& phi, int d) const {
    check_fresh();
    return 1.0 / prior_.beta + phi.dot(cov_[d] * phi);
}

double ClassModel::predictive_logpdf(const FeatureBank& bank, double tau,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_fresh();
    if (x.size() != dims()) throw std::invalid_argument("predictive_logpdf: dimension mismatch");
    const Eigen::VectorXd phi = bank.phi(tau);
    double total = 0.0;
    for (int d = 0; d < dims(); ++d) total += gaussian_logpdf(x[d], predictive_mean(phi, d), predictive_var(phi, d));
    return total;
}

double ClassModel::predictive_logpdf(const FeatureBank& bank, double tau,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
    refresh();
    return std::as_const(*this).predictive_logpdf(bank, tau, x);
}

PredictiveTable ClassModel::predictive_table(const FeatureBank& bank, int max_tau) const {
    check_fresh();
    const Eigen::MatrixXd phis = bank.phi_table(max_tau);
    PredictiveTable table{Eigen::MatrixXd(dims(), max_tau), Eigen::MatrixXd(dims(), max_tau)};
    for (int d = 0; d < dims(); ++d) {
        table.mean.row(d) = mean_[d].transpose() * phis;
        table.var.row(d) = ((cov_[d] * phis).array() * phis.array()).colwise().sum() + 1.0 / prior_.beta;
    }
    return table;
}

}  // namespace rffhsmm
