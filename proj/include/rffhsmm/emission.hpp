#pragma once

#include "rffhsmm/bayes_linreg.hpp"
#include "rffhsmm/exact_gp.hpp"
#include "rffhsmm/hsmm_ffbs.hpp"
#include "rffhsmm/predictive.hpp"
#include "rffhsmm/rff_features.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rffhsmm {

enum class Backend { rff, exact_gp };

std::string to_string(Backend backend);
Backend parse_backend(const std::string& name);

// Per-class emission models behind one interface so the trainer can swap
// the RFF regression for the exact GP.
class EmissionBackend {
public:
    virtual ~EmissionBackend() = default;

    virtual Backend kind() const = 0;
    virtual int num_classes() const = 0;
    virtual int dims() const = 0;

    virtual void add_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) = 0;
    virtual void remove_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) = 0;
    virtual long n_points(int c) const = 0;
    virtual bool dirty(int c) const = 0;
    virtual void refresh(int c) = 0;
    virtual PredictiveTable predictive_table(int c, int max_tau) const = 0;

    // Same hyperparameters (and feature bank), no data.
    virtual std::unique_ptr<EmissionBackend> empty_clone() const = 0;
    // Largest elementwise difference of the sufficient statistics; +inf if
    // the two hold differently shaped data.
    virtual double max_stats_deviation(const EmissionBackend& other) const = 0;
};

class RffBackend final : public EmissionBackend {
public:
    RffBackend(FeatureBank bank, int num_classes, int dims, RegressionPrior prior);

    Backend kind() const override { return Backend::rff; }
    int num_classes() const override { return static_cast<int>(classes_.size()); }
    int dims() const override { return classes_.front().dims(); }
    void add_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) override;
    void remove_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) override;
    long n_points(int c) const override { return classes_[c].n_points(); }
    bool dirty(int c) const override { return classes_[c].dirty(); }
    void refresh(int c) override { classes_[c].refresh(); }
    PredictiveTable predictive_table(int c, int max_tau) const override;
    std::unique_ptr<EmissionBackend> empty_clone() const override;
    double max_stats_deviation(const EmissionBackend& other) const override;

    const FeatureBank& bank() const { return bank_; }
    const RegressionPrior& prior() const { return prior_; }
    const ClassModel& model(int c) const { return classes_[c]; }
    ClassModel& model(int c) { return classes_[c]; }

private:
    FeatureBank bank_;
    RegressionPrior prior_;
    std::vector<ClassModel> classes_;
};

class ExactGpBackend final : public EmissionBackend {
public:
    ExactGpBackend(int num_classes, int dims, double beta, double lengthscale);

    Backend kind() const override { return Backend::exact_gp; }
    int num_classes() const override { return static_cast<int>(classes_.size()); }
    int dims() const override { return classes_.front().dims(); }
    void add_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) override;
    void remove_segment(int c, const Eigen::Ref<const Eigen::MatrixXd>& segment) override;
    long n_points(int c) const override { return classes_[c].n_points(); }
    bool dirty(int c) const override { return classes_[c].dirty(); }
    void refresh(int c) override { classes_[c].refresh(); }
    PredictiveTable predictive_table(int c, int max_tau) const override;
    std::unique_ptr<EmissionBackend> empty_clone() const override;
    double max_stats_deviation(const EmissionBackend& other) const override;

    double beta() const { return beta_; }
    double lengthscale() const { return lengthscale_; }
    const GpClassData& data(int c) const { return classes_[c]; }
    GpClassData& data(int c) { return classes_[c]; }

private:
    double beta_;
    double lengthscale_;
    std::vector<GpClassData> classes_;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index must
// touch disjoint state.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Refreshes every stale class.
void refresh_all(EmissionBackend& backend, int threads);

// logemis[c][tau][t] = sum_d log N(x_{d,t} | mean_d(tau), var_d(tau)) for
// a D x T sequence. Requires refreshed classes.
EmissionTable build_emission_table(const EmissionBackend& backend, const Eigen::Ref<const Eigen::MatrixXd>& sequence,
                                   int max_tau, int threads);

}  // namespace rffhsmm
