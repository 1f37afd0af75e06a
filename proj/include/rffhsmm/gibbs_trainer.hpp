#pragma once

#include "rffhsmm/emission.hpp"
#include "rffhsmm/hsmm_ffbs.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace rffhsmm {

using SequenceList = std::vector<Eigen::MatrixXd>;  // each D x T_n

struct TrainerConfig {
    Backend backend = Backend::rff;
    int num_features = 20;
    double lengthscale = 1.0;
    double beta = 10.0;
    double psi = 1.0;
    int num_classes = 11;
    int min_duration = 15;
    int max_duration = 30;
    double lambda = 20.0;
    double alpha = 1.0;
    int iterations = 5;
    int restarts = 1;
    std::uint64_t seed = 0;
    bool shuffle = false;  // visit sequences in a random order each sweep
    bool audit = false;    // batch-check statistics after every sweep
    int threads = 1;

    // Throws std::invalid_argument naming the offending field(s).
    void validate() const;
};

// Seconds spent per phase. `total` is wall-clock of the whole run.
struct PhaseTimes {
    double init = 0.0;
    double emission = 0.0;  // emission table precompute
    double dp = 0.0;        // forward filtering + backward sampling
    double stats = 0.0;     // sufficient-statistic and count updates
    double refresh = 0.0;   // posterior refresh
    double total = 0.0;

    double accounted() const { return init + emission + dp + stats + refresh; }
    PhaseTimes& operator+=(const PhaseTimes& rhs);
};

struct TrainerState {
    TrainerConfig config;
    HsmmParams hsmm;
    std::unique_ptr<EmissionBackend> emissions;
    std::vector<std::vector<Segment>> assignments;
    int iteration = 0;
    std::vector<double> loglik_trace;
    std::uint64_t rng_seed = 0;
    std::mt19937_64 rng;
    PhaseTimes times;
};

struct AuditReport {
    double max_stats_deviation = 0.0;
    bool counts_match = true;
    bool coverage_ok = true;
    std::string detail;

    bool ok(double tolerance = 1e-6) const {
        return coverage_ok && counts_match && max_stats_deviation <= tolerance;
    }
};

std::unique_ptr<EmissionBackend> make_backend(const TrainerConfig& config, int dims, std::uint64_t seed);

// Seed of restart r derived from the master seed.
std::uint64_t restart_seed(std::uint64_t master, int restart);

// Random tiling of every sequence with uniform-random classes. Throws
// InfeasibleSequence listing every sequence that cannot be tiled.
TrainerState initialize(const SequenceList& sequences, const TrainerConfig& config, std::uint64_t seed);

void remove_sequence(TrainerState& state, const SequenceList& sequences, std::size_t n);
void add_sequence(TrainerState& state, const SequenceList& sequences, std::size_t n, std::vector<Segment> spans);

// Removes sequence n, refreshes the posteriors, draws a new segmentation by
// FFBS and adds it back. Returns the log marginal likelihood of sequence n
// given the others.
double resample_sequence(TrainerState& state, const SequenceList& sequences, std::size_t n);

// One blocked Gibbs pass over all sequences; appends the summed log
// likelihood to loglik_trace. With config.audit set, throws
// std::runtime_error when the audit fails.
void gibbs_sweep(TrainerState& state, const SequenceList& sequences);

// Compares incremental statistics and counts with a batch rebuild from the
// current assignments.
AuditReport audit(const TrainerState& state, const SequenceList& sequences);

struct SegmentationResult {
    std::vector<std::vector<Segment>> spans;
    std::vector<std::vector<int>> labels;  // per frame
    std::vector<double> loglik_trace;
    double final_loglik = kLogZero;
    PhaseTimes timing;  // summed over restarts
    std::uint64_t seed = 0;
    int best_restart = 0;
    std::vector<double> restart_logliks;
    std::vector<std::uint64_t> restart_seeds;
    std::shared_ptr<TrainerState> state;  // model of the best restart
};

// One chain: initialize + config.iterations sweeps, seeded with `seed`.
SegmentationResult train_single(const SequenceList& sequences, const TrainerConfig& config, std::uint64_t seed);

// config.restarts chains; keeps the one with the highest final log likelihood.
SegmentationResult train(const SequenceList& sequences, const TrainerConfig& config);

}  // namespace rffhsmm
