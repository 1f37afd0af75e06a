#include "rffhsmm/gibbs_trainer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rffhsmm {

namespace {

class PhaseTimer {
public:
    explicit PhaseTimer(double& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~PhaseTimer() {
        sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    PhaseTimer(const PhaseTimer&) = delete;
    PhaseTimer& operator=(const PhaseTimer&) = delete;

private:
    double& sink_;
    std::chrono::steady_clock::time_point start_;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

void TrainerConfig::validate() const {
    std::vector<std::string> problems;
    if (num_features < 1) problems.push_back("num_features (M) must be >= 1");
    if (!(lengthscale > 0.0)) problems.push_back("lengthscale must be > 0");
    if (!(beta > 0.0)) problems.push_back("beta must be > 0");
    if (!(psi > 0.0)) problems.push_back("psi must be > 0");
    if (num_classes < 1) problems.push_back("num_classes (C) must be >= 1");
    if (min_duration < 1) problems.push_back("min_duration (K_min) must be >= 1");
    if (min_duration > max_duration)
        problems.push_back("min_duration (K_min = " + std::to_string(min_duration) +
                           ") must not exceed max_duration (K_max = " + std::to_string(max_duration) + ")");
    if (!(lambda > 0.0)) problems.push_back("lambda must be > 0");
    if (!(alpha > 0.0)) problems.push_back("alpha must be > 0");
    if (iterations < 0) problems.push_back("iterations must be >= 0");
    if (restarts < 1) problems.push_back("restarts must be >= 1");
    if (threads < 1) problems.push_back("threads must be >= 1");
    if (problems.empty()) return;
    std::string msg = "invalid configuration: ";
    for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    throw std::invalid_argument(msg);
}

PhaseTimes& PhaseTimes::operator+=(const PhaseTimes& rhs) {
    init += rhs.init;
    emission += rhs.emission;
    dp += rhs.dp;
    stats += rhs.stats;
    refresh += rhs.refresh;
    total += rhs.total;
    return *this;
}

std::unique_ptr<EmissionBackend> make_backend(const TrainerConfig& config, int dims, std::uint64_t seed) {
    if (config.backend == Backend::rff)
        return std::make_unique<RffBackend>(sample_feature_bank(config.num_features, config.lengthscale, seed),
                                            config.num_classes, dims,
                                            RegressionPrior{config.beta, config.psi});
    return std::make_unique<ExactGpBackend>(config.num_classes, dims, config.beta, config.lengthscale);
}

std::uint64_t restart_seed(std::uint64_t master, int restart) {
    return restart == 0 ? master : splitmix64(master + static_cast<std::uint64_t>(restart));
}

TrainerState initialize(const SequenceList& sequences, const TrainerConfig& config, std::uint64_t seed) {
    config.validate();
    if (sequences.empty()) throw std::invalid_argument("initialize: no sequences");
    const auto dims = static_cast<int>(sequences.front().rows());
    for (std::size_t n = 0; n < sequences.size(); ++n)
        if (sequences[n].rows() != dims)
            throw std::invalid_argument("sequence " + std::to_string(n) + " has " +
                                        std::to_string(sequences[n].rows()) + " dimensions, expected " +
                                        std::to_string(dims));

    std::vector<std::size_t> infeasible;
    for (std::size_t n = 0; n < sequences.size(); ++n) {
        const int T = static_cast<int>(sequences[n].cols());
        if (T < config.min_duration || !feasible_lengths(T, config.min_duration, config.max_duration)[T])
            infeasible.push_back(n);
    }
    if (!infeasible.empty()) {
        std::ostringstream msg;
        msg << "sequences cannot be tiled by durations in [" << config.min_duration << ", " << config.max_duration
            << "]:";
        for (auto n : infeasible) msg << " #" << n << " (" << sequences[n].cols() << " frames)";
        throw InfeasibleSequence(msg.str());
    }

    TrainerState state;
    state.config = config;
    state.rng_seed = seed;
    state.rng.seed(splitmix64(seed));
    state.hsmm = HsmmParams::make(config.num_classes, config.min_duration, config.max_duration, config.lambda,
                                  config.alpha);
    {
        PhaseTimer timer(state.times.init);
        state.emissions = make_backend(config, dims, seed);
        std::uniform_int_distribution<int> pick_class(0, config.num_classes - 1);
        state.assignments.resize(sequences.size());
        for (std::size_t n = 0; n < sequences.size(); ++n) {
            const auto lengths = sample_tiling(static_cast<int>(sequences[n].cols()), config.min_duration,
                                               config.max_duration, state.rng);
            std::vector<Segment> spans;
            int start = 0;
            for (int k : lengths) {
                spans.push_back(Segment{start, k, pick_class(state.rng)});
                start += k;
            }
            for (const auto& s : spans) state.emissions->add_segment(s.label, sequences[n].middleCols(s.start, s.length));
            state.hsmm.count_sequence(segment_labels(spans), +1);
            state.assignments[n] = std::move(spans);
        }
    }
    return state;
}

void remove_sequence(TrainerState& state, const SequenceList& sequences, std::size_t n) {
    PhaseTimer timer(state.times.stats);
    const auto& spans = state.assignments[n];
    for (const auto& s : spans) state.emissions->remove_segment(s.label, sequences[n].middleCols(s.start, s.length));
    state.hsmm.count_sequence(segment_labels(spans), -1);
    state.assignments[n].clear();
}

void add_sequence(TrainerState& state, const SequenceList& sequences, std::size_t n, std::vector<Segment> spans) {
    PhaseTimer timer(state.times.stats);
    for (const auto& s : spans) state.emissions->add_segment(s.label, sequences[n].middleCols(s.start, s.length));
    state.hsmm.count_sequence(segment_labels(spans), +1);
    state.assignments[n] = std::move(spans);
}

double resample_sequence(TrainerState& state, const SequenceList& sequences, std::size_t n) {
    remove_sequence(state, sequences, n);
    {
        PhaseTimer timer(state.times.refresh);
        refresh_all(*state.emissions, state.config.threads);
    }
    EmissionTable table = [&] {
        PhaseTimer timer(state.times.emission);
        return build_emission_table(*state.emissions, sequences[n], state.config.max_duration,
                                    state.config.threads);
    }();
    double loglik = 0.0;
    std::vector<Segment> spans;
    {
        PhaseTimer timer(state.times.dp);
        const ForwardLattice lattice = forward_filter(table, state.hsmm);
        loglik = lattice.log_likelihood();
        spans = backward_sample(lattice, state.hsmm, state.rng);
    }
    add_sequence(state, sequences, n, std::move(spans));
    return loglik;
}

void gibbs_sweep(TrainerState& state, const SequenceList& sequences) {
    std::vector<std::size_t> order(sequences.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (state.config.shuffle) std::shuffle(order.begin(), order.end(), state.rng);

    double total = 0.0;
    for (auto n : order) total += resample_sequence(state, sequences, n);
    ++state.iteration;
    state.loglik_trace.push_back(total);

    if (state.config.audit) {
        const AuditReport report = audit(state, sequences);
        if (!report.ok())
            throw std::runtime_error("audit failed after sweep " + std::to_string(state.iteration) + ": " +
                                     report.detail);
    }
}

AuditReport audit(const TrainerState& state, const SequenceList& sequences) {
    AuditReport report;
    std::ostringstream detail;

    for (std::size_t n = 0; n < sequences.size(); ++n) {
        int expected = 0;
        for (const auto& s : state.assignments[n]) {
            if (s.start != expected || s.length < 1) report.coverage_ok = false;
            expected = s.end();
        }
        if (expected != sequences[n].cols()) report.coverage_ok = false;
    }
    if (!report.coverage_ok) detail << "spans do not tile every sequence; ";

    HsmmParams counts = HsmmParams::make(state.hsmm.num_classes, state.hsmm.min_duration, state.hsmm.max_duration,
                                         state.hsmm.lambda, state.hsmm.alpha);
    auto rebuilt = state.emissions->empty_clone();
    for (std::size_t n = 0; n < sequences.size(); ++n) {
        for (const auto& s : state.assignments[n])
            rebuilt->add_segment(s.label, sequences[n].middleCols(s.start, s.length));
        counts.count_sequence(segment_labels(state.assignments[n]), +1);
    }
    report.counts_match = counts.transition_counts == state.hsmm.transition_counts &&
                          counts.class_counts == state.hsmm.class_counts;
    if (!report.counts_match) detail << "transition/class counts differ from assignments; ";
    for (int c = 0; c < state.hsmm.num_classes; ++c)
        if (state.hsmm.row_total(c) !=
            state.hsmm.class_counts[c] -
                std::count_if(state.assignments.begin(), state.assignments.end(),
                              [c](const auto& spans) { return !spans.empty() && spans.back().label == c; })) {
            report.counts_match = false;
            detail << "row total of class " << c << " inconsistent with terminal segments; ";
        }

    report.max_stats_deviation = state.emissions->max_stats_deviation(*rebuilt);
    detail << "max stats deviation " << report.max_stats_deviation;
    report.detail = detail.str();
    return report;
}

SegmentationResult train_single(const SequenceList& sequences, const TrainerConfig& config, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    auto state = std::make_shared<TrainerState>(initialize(sequences, config, seed));
    for (int it = 0; it < config.iterations; ++it) gibbs_sweep(*state, sequences);
    state->times.total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    SegmentationResult result;
    result.spans = state->assignments;
    for (const auto& spans : result.spans) result.labels.push_back(frame_labels(spans));
    result.loglik_trace = state->loglik_trace;
    result.final_loglik = state->loglik_trace.empty() ? kLogZero : state->loglik_trace.back();
    result.timing = state->times;
    result.seed = seed;
    result.restart_logliks = {result.final_loglik};
    result.restart_seeds = {seed};
    result.state = std::move(state);
    return result;
}

SegmentationResult train(const SequenceList& sequences, const TrainerConfig& config) {
    config.validate();
    SegmentationResult best;
    PhaseTimes timing;
    std::vector<double> logliks;
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < config.restarts; ++r) {
        const std::uint64_t seed = restart_seed(config.seed, r);
        SegmentationResult run = train_single(sequences, config, seed);
        timing += run.timing;
        logliks.push_back(run.final_loglik);
        seeds.push_back(seed);
        // strict comparison keeps the earliest restart on ties
        if (r == 0 || run.final_loglik > best.final_loglik) {
            best = std::move(run);
            best.best_restart = r;
        }
    }
    best.timing = timing;
    best.restart_logliks = std::move(logliks);
    best.restart_seeds = std::move(seeds);
    return best;
}

}  // namespace rffhsmm
