#include "rffhsmm/hsmm_ffbs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rffhsmm {

double log_sum_exp(const double* values, std::size_t n) {
    if (n == 0) return kLogZero;
    const double peak = *std::max_element(values, values + n);
    if (peak == kLogZero) return kLogZero;
    if (std::isinf(peak)) return peak;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(values[i] - peak);
    return peak + std::log(sum);
}

HsmmParams HsmmParams::make(int num_classes, int min_duration, int max_duration, double lambda, double alpha) {
    HsmmParams p;
    p.num_classes = num_classes;
    p.min_duration = min_duration;
    p.max_duration = max_duration;
    p.lambda = lambda;
    p.alpha = alpha;
    p.validate();
    p.transition_counts.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
    p.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
    return p;
}

void HsmmParams::validate() const {
    if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
    if (min_duration < 1) throw std::invalid_argument("min_duration (K_min) must be >= 1");
    if (min_duration > max_duration)
        throw std::invalid_argument("min_duration (K_min = " + std::to_string(min_duration) +
                                    ") exceeds max_duration (K_max = " + std::to_string(max_duration) + ")");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
}

std::vector<std::string> HsmmParams::warnings() const {
    std::vector<std::string> out;
    if (lambda < min_duration || lambda > max_duration)
        out.push_back("lambda = " + std::to_string(lambda) + " lies outside [K_min, K_max] = [" +
                      std::to_string(min_duration) + ", " + std::to_string(max_duration) + "]");
    return out;
}

long HsmmParams::row_total(int from) const {
    const auto first = transition_counts.begin() + static_cast<std::ptrdiff_t>(from) * num_classes;
    return std::accumulate(first, first + num_classes, 0L);
}

double HsmmParams::duration_logpmf(int k) const {
    if (k < 0) return kLogZero;
    return k * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0);
}

double HsmmParams::transition_logprob(int from, int to) const {
    return std::log((static_cast<double>(transitions(from, to)) + alpha) /
                    (static_cast<double>(row_total(from)) + num_classes * alpha));
}

void HsmmParams::count_sequence(const std::vector<int>& labels, int sign) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
        class_counts[static_cast<std::size_t>(labels[j])] += sign;
        if (j + 1 < labels.size()) transitions(labels[j], labels[j + 1]) += sign;
    }
}

EmissionTable::EmissionTable(int num_classes, int max_tau, int frames)
    : classes_(num_classes), max_tau_(max_tau), frames_(frames),
      data_(static_cast<std::size_t>(num_classes) * max_tau * frames, 0.0) {
    if (num_classes < 1 || max_tau < 1 || frames < 0) throw std::invalid_argument("EmissionTable: bad shape");
}

EmissionTable EmissionTable::from_function(int num_classes, int max_tau, int frames,
                                           const std::function<double(int, int, int)>& fn) {
    EmissionTable table(num_classes, max_tau, frames);
    for (int c = 0; c < num_classes; ++c)
        for (int tau = 1; tau <= max_tau; ++tau)
            for (int t = 0; t < frames; ++t) table(c, tau, t) = fn(c, tau, t);
    return table;
}

namespace {

std::vector<double> transition_matrix(const HsmmParams& params) {
    const int C = params.num_classes;
    std::vector<double> logp(static_cast<std::size_t>(C) * C);
    for (int from = 0; from < C; ++from)
        for (int to = 0; to < C; ++to) logp[static_cast<std::size_t>(from) * C + to] = params.transition_logprob(from, to);
    return logp;
}

// Index drawn with probability proportional to exp(logw).
std::size_t sample_log_weights(const std::vector<double>& logw, std::mt19937_64& rng) {
    const double peak = *std::max_element(logw.begin(), logw.end());
    std::vector<double> cumulative(logw.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        total += logw[i] == kLogZero ? 0.0 : std::exp(logw[i] - peak);
        cumulative[i] = total;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative.begin());
    if (it == cumulative.end()) {
        // u == total: take the last cell with positive weight
        idx = logw.size() - 1;
        while (idx > 0 && logw[idx] == kLogZero) --idx;
    }
    return idx;
}

}  // namespace

ForwardLattice forward_filter(const EmissionTable& emissions, const HsmmParams& params) {
    params.validate();
    const int T = emissions.frames();
    const int C = params.num_classes;
    const int kmin = params.min_duration;
    const int kmax = params.max_duration;
    if (emissions.num_classes() != C) throw std::invalid_argument("forward_filter: class count mismatch");
    if (T < kmin)
        throw InfeasibleSequence("sequence of " + std::to_string(T) + " frames is shorter than K_min = " +
                                 std::to_string(kmin));
    if (emissions.max_tau() < std::min(kmax, T))
        throw std::invalid_argument("forward_filter: emission table covers too few within-segment indices");

    ForwardLattice lat;
    lat.frames = T;
    lat.min_duration = kmin;
    lat.max_duration = kmax;
    lat.num_classes = C;
    const int K = lat.durations();
    const std::size_t cells_per_t = static_cast<std::size_t>(K) * C;
    lat.alpha.assign(static_cast<std::size_t>(T + 1) * cells_per_t, kLogZero);
    lat.log_norm.assign(static_cast<std::size_t>(T + 1), kLogZero);
    lat.log_norm[0] = 0.0;

    const std::vector<double> log_trans = transition_matrix(params);
    std::vector<double> log_dur(static_cast<std::size_t>(K));
    for (int k = kmin; k <= kmax; ++k) log_dur[k - kmin] = params.duration_logpmf(k);

    std::vector<double> pred(static_cast<std::size_t>(C));
    std::vector<double> marginal(static_cast<std::size_t>(C));
    std::vector<double> scratch(static_cast<std::size_t>(std::max(K, C)));

    // Normalizes the cells ending at t; returns false if t is unreachable.
    auto finalize = [&](int t) {
        double* cells = lat.alpha.data() + static_cast<std::size_t>(t) * cells_per_t;
        const double norm = log_sum_exp(cells, cells_per_t);
        lat.log_norm[t] = norm;
        if (norm == kLogZero) return false;
        for (std::size_t i = 0; i < cells_per_t; ++i) cells[i] -= norm;
        return true;
    };

    for (int s = 0; s < T; ++s) {
        if (s == 0) {
            std::fill(pred.begin(), pred.end(), -std::log(static_cast<double>(C)));
        } else {
            if (!finalize(s)) continue;
            const double* cells = lat.alpha.data() + static_cast<std::size_t>(s) * cells_per_t;
            for (int c = 0; c < C; ++c) {
                for (int k = 0; k < K; ++k) scratch[k] = cells[static_cast<std::size_t>(k) * C + c];
                marginal[c] = log_sum_exp(scratch.data(), static_cast<std::size_t>(K));
            }
            for (int c = 0; c < C; ++c) {
                for (int prev = 0; prev < C; ++prev)
                    scratch[prev] = log_trans[static_cast<std::size_t>(prev) * C + c] + marginal[prev];
                pred[c] = log_sum_exp(scratch.data(), static_cast<std::size_t>(C)) + lat.log_norm[s];
            }
        }

        const int reach = std::min(kmax, T - s);
        if (reach < kmin) continue;
        for (int c = 0; c < C; ++c) {
            double run = 0.0;
            for (int k = 1; k <= reach; ++k) {
                run += emissions(c, k, s + k - 1);
                if (k < kmin) continue;
                lat.alpha[(static_cast<std::size_t>(s + k) * K + (k - kmin)) * C + c] =
                    run + log_dur[k - kmin] + pred[c];
            }
        }
    }
    if (!finalize(T))
        throw InfeasibleSequence("no segmentation of " + std::to_string(T) + " frames into durations within [" +
                                 std::to_string(kmin) + ", " + std::to_string(kmax) + "]");
    return lat;
}

std::vector<Segment> backward_sample(const ForwardLattice& lattice, const HsmmParams& params,
                                     std::mt19937_64& rng) {
    const int T = lattice.frames;
    if (T <= 0 || !lattice.reachable(T)) throw InfeasibleSequence("backward_sample: lattice is infeasible");
    const int C = lattice.num_classes;
    const int kmin = lattice.min_duration;
    const std::vector<double> log_trans = transition_matrix(params);

    std::vector<Segment> out;
    std::vector<double> logw;
    int t = T;
    int next = -1;
    while (t > 0) {
        const int reach = std::min(lattice.max_duration, t);
        if (reach < kmin) throw InfeasibleSequence("backward_sample: stranded at frame " + std::to_string(t));
        logw.assign(static_cast<std::size_t>(reach - kmin + 1) * C, kLogZero);
        for (int k = kmin; k <= reach; ++k)
            for (int c = 0; c < C; ++c) {
                double w = lattice(t, k, c);
                if (next >= 0) w += log_trans[static_cast<std::size_t>(c) * C + next];
                logw[static_cast<std::size_t>(k - kmin) * C + c] = w;
            }
        if (*std::max_element(logw.begin(), logw.end()) == kLogZero)
            throw InfeasibleSequence("backward_sample: no feasible cell at frame " + std::to_string(t));
        const std::size_t pick = sample_log_weights(logw, rng);
        const int k = kmin + static_cast<int>(pick) / C;
        const int c = static_cast<int>(pick) % C;
        out.push_back(Segment{t - k, k, c});
        t -= k;
        next = c;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<int> frame_labels(const std::vector<Segment>& segments) {
    std::vector<int> labels;
    for (const auto& s : segments) labels.insert(labels.end(), static_cast<std::size_t>(s.length), s.label);
    return labels;
}

std::vector<int> segment_labels(const std::vector<Segment>& segments) {
    std::vector<int> labels;
    labels.reserve(segments.size());
    for (const auto& s : segments) labels.push_back(s.label);
    return labels;
}

std::vector<bool> feasible_lengths(int frames, int min_duration, int max_duration) {
    std::vector<bool> ok(static_cast<std::size_t>(std::max(frames, 0) + 1), false);
    ok[0] = true;
    for (int r = 1; r <= frames; ++r)
        for (int k = min_duration; k <= std::min(max_duration, r) && !ok[r]; ++k)
            if (ok[r - k]) ok[r] = true;
    return ok;
}

std::vector<int> sample_tiling(int frames, int min_duration, int max_duration, std::mt19937_64& rng) {
    const auto ok = feasible_lengths(frames, min_duration, max_duration);
    if (frames < 1 || !ok[frames])
        throw InfeasibleSequence(std::to_string(frames) + " frames cannot be tiled by durations in [" +
                                 std::to_string(min_duration) + ", " + std::to_string(max_duration) + "]");
    std::vector<int> lengths;
    std::vector<int> choices;
    int remaining = frames;
    while (remaining > 0) {
        choices.clear();
        for (int k = min_duration; k <= std::min(max_duration, remaining); ++k)
            if (ok[remaining - k]) choices.push_back(k);
        std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
        const int k = choices[pick(rng)];
        lengths.push_back(k);
        remaining -= k;
    }
    return lengths;
}

}  // namespace rffhsmm
