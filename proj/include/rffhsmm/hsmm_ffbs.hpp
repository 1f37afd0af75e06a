#pragma once

#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rffhsmm {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

double log_sum_exp(const double* values, std::size_t n);
inline double log_sum_exp(const std::vector<double>& values) { return log_sum_exp(values.data(), values.size()); }

class InfeasibleSequence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Duration and transition model of the semi-Markov chain.
struct HsmmParams {
    int num_classes = 1;
    int min_duration = 1;
    int max_duration = 1;
    double lambda = 1.0;  // Poisson mean segment length
    double alpha = 1.0;   // Dirichlet smoothing of the transition counts
    std::vector<long> transition_counts;  // C x C, row = previous class
    std::vector<long> class_counts;       // segments per class, terminal segments included

    // Zeroed counts. Throws std::invalid_argument for C < 1, K_min < 1,
    // K_min > K_max, or non-positive lambda/alpha.
    static HsmmParams make(int num_classes, int min_duration, int max_duration, double lambda, double alpha);

    void validate() const;
    // Soft constraint K_min <= lambda <= K_max.
    std::vector<std::string> warnings() const;

    long transitions(int from, int to) const { return transition_counts[from * num_classes + to]; }
    long& transitions(int from, int to) { return transition_counts[from * num_classes + to]; }
    long row_total(int from) const;

    // Raw (untruncated) Poisson log-pmf k ln(lambda) - lambda - ln k!.
    double duration_logpmf(int k) const;
    // log (N_{c'c} + alpha) / (sum_c N_{c'c} + C alpha).
    double transition_logprob(int from, int to) const;

    // Adds (sign = +1) or removes (sign = -1) the counts of one labelled sequence.
    void count_sequence(const std::vector<int>& labels, int sign);
};

// Log emission densities logemis[c][tau][t] of frame t (0-based) at
// within-segment index tau (1-based).
class EmissionTable {
public:
    EmissionTable(int num_classes, int max_tau, int frames);

    // fn(c, tau, t) with tau 1-based and t 0-based.
    static EmissionTable from_function(int num_classes, int max_tau, int frames,
                                       const std::function<double(int, int, int)>& fn);

    int num_classes() const { return classes_; }
    int max_tau() const { return max_tau_; }
    int frames() const { return frames_; }

    double operator()(int c, int tau, int t) const { return data_[index(c, tau, t)]; }
    double& operator()(int c, int tau, int t) { return data_[index(c, tau, t)]; }
    double* row(int c, int tau) { return data_.data() + index(c, tau, 0); }
    const double* row(int c, int tau) const { return data_.data() + index(c, tau, 0); }

private:
    std::size_t index(int c, int tau, int t) const {
        return (static_cast<std::size_t>(c) * max_tau_ + (tau - 1)) * frames_ + t;
    }
    int classes_;
    int max_tau_;
    int frames_;
    std::vector<double> data_;
};

// Normalized log forward probabilities. For each end time t in 1..T,
// entries over (k, c) sum to one in probability space; the log of the
// removed mass is kept in log_norm[t], so log_norm[T] is the log marginal
// likelihood of the sequence. Unreachable t carry log_norm[t] = -inf.
struct ForwardLattice {
    int frames = 0;
    int min_duration = 1;
    int max_duration = 1;
    int num_classes = 1;
    std::vector<double> alpha;     // (T + 1) x (K_max - K_min + 1) x C
    std::vector<double> log_norm;  // T + 1

    int durations() const { return max_duration - min_duration + 1; }
    double operator()(int t, int k, int c) const {
        return alpha[(static_cast<std::size_t>(t) * durations() + (k - min_duration)) * num_classes + c];
    }
    double log_likelihood() const { return log_norm[static_cast<std::size_t>(frames)]; }
    bool reachable(int t) const { return log_norm[static_cast<std::size_t>(t)] != kLogZero; }
};

struct Segment {
    int start = 0;   // first frame, 0-based
    int length = 0;
    int label = 0;
    int end() const { return start + length; }
    bool operator==(const Segment&) const = default;
};

// Segment ending at t with length k covers frames t-k+1..t (1-based) and
// scores sum_{tau=1..k} logemis[c][tau][t-k+tau-1]. The first segment's
// class prior is uniform. Throws InfeasibleSequence when T cannot be tiled
// by durations in [K_min, K_max].
ForwardLattice forward_filter(const EmissionTable& emissions, const HsmmParams& params);

// Samples a segmentation from the lattice, last segment first. Returned in
// forward order; the spans tile [0, T).
std::vector<Segment> backward_sample(const ForwardLattice& lattice, const HsmmParams& params,
                                     std::mt19937_64& rng);

// Per-frame labels of a tiling.
std::vector<int> frame_labels(const std::vector<Segment>& segments);
std::vector<int> segment_labels(const std::vector<Segment>& segments);

// feasible[r] is true when r frames can be tiled by durations in [min, max].
std::vector<bool> feasible_lengths(int frames, int min_duration, int max_duration);

// Cuts `frames` into consecutive lengths, each drawn uniformly among the
// durations in [min, max] that leave a tileable remainder. Throws
// InfeasibleSequence if no tiling exists.
std::vector<int> sample_tiling(int frames, int min_duration, int max_duration, std::mt19937_64& rng);

}  // namespace rffhsmm
