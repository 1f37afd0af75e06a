#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rffhsmm/dataio.hpp"
#include "rffhsmm/evaluation.hpp"
#include "rffhsmm/gibbs_trainer.hpp"

#include <chrono>
#include <cmath>
#include <random>

using namespace rffhsmm;
using Eigen::MatrixXd;

namespace {

SequenceStore sine_vs_constant(int sequences, int length, double noise, std::uint64_t seed) {
    SyntheticSpec spec = SyntheticSpec::from_json(nlohmann::json::parse(R"({
        "dims": 2, "block_length": [20, 20],
        "templates": [
          {"kind": "sine", "amplitude": [1.0, 0.8], "phase": [0.0, 1.0]},
          {"kind": "constant", "offset": [0.3, -0.3]}
        ]})"));
    spec.lengths.assign(static_cast<std::size_t>(sequences), length);
    for (auto& t : spec.templates) t.noise = noise;
    return generate_synthetic(spec, seed);
}

std::vector<int> flat(const std::vector<std::vector<int>>& v) {
    std::vector<int> out;
    for (const auto& x : v) out.insert(out.end(), x.begin(), x.end());
    return out;
}

TrainerConfig small_config() {
    TrainerConfig c;
    c.num_classes = 2;
    c.iterations = 5;
    return c;
}

}  // namespace

TEST_CASE("config validation names the fields") {
    TrainerConfig c;
    c.min_duration = 31;
    try {
        c.validate();
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("K_min") != std::string::npos);
        CHECK(msg.find("K_max") != std::string::npos);
    }
    TrainerConfig d;
    d.num_features = 0;
    d.beta = -1.0;
    try {
        d.validate();
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("M") != std::string::npos);
        CHECK(msg.find("beta") != std::string::npos);
    }
}

TEST_CASE("restart seeds") {
    CHECK(restart_seed(42, 0) == 42);
    CHECK(restart_seed(42, 1) != restart_seed(42, 2));
    CHECK(restart_seed(42, 3) == restart_seed(42, 3));
}

TEST_CASE("sequence of exactly K_min frames") {
    TrainerConfig c = small_config();
    c.num_classes = 5;
    const SequenceList seqs{MatrixXd::Random(3, 15)};
    const TrainerState s = initialize(seqs, c, 1);
    REQUIRE(s.assignments.size() == 1);
    REQUIRE(s.assignments[0].size() == 1);
    CHECK(s.assignments[0][0].length == 15);
    CHECK(s.assignments[0][0].label >= 0);
    CHECK(s.assignments[0][0].label < 5);
}

TEST_CASE("initialization covers every frame and passes the audit") {
    TrainerConfig c;
    std::mt19937_64 rng(1);
    SequenceList seqs;
    for (int n = 0; n < 30; ++n) seqs.push_back(MatrixXd::Random(8, 150 + static_cast<int>(rng() % 30)));
    const TrainerState s = initialize(seqs, c, 3);
    for (std::size_t n = 0; n < seqs.size(); ++n) {
        CHECK(frame_labels(s.assignments[n]).size() == static_cast<std::size_t>(seqs[n].cols()));
        for (const auto& seg : s.assignments[n]) {
            CHECK(seg.length >= c.min_duration);
            CHECK(seg.length <= c.max_duration);
        }
    }
    const AuditReport report = audit(s, seqs);
    CHECK(report.ok());
    CHECK(report.max_stats_deviation <= 1e-6);

    const TrainerState again = initialize(seqs, c, 3);
    CHECK(again.assignments == s.assignments);
    CHECK(again.hsmm.transition_counts == s.hsmm.transition_counts);
}

TEST_CASE("infeasible lengths are reported with ids") {
    TrainerConfig c = small_config();
    const SequenceList seqs{MatrixXd::Zero(1, 40), MatrixXd::Zero(1, 10), MatrixXd::Zero(1, 50), MatrixXd::Zero(1, 3)};
    try {
        initialize(seqs, c, 0);
        FAIL("expected throw");
    } catch (const InfeasibleSequence& e) {
        const std::string msg = e.what();
        CHECK(msg.find('1') != std::string::npos);
        CHECK(msg.find('3') != std::string::npos);
    }
}

TEST_CASE("degenerate lattice leaves assignments unchanged") {
    TrainerConfig c;
    c.num_classes = 1;
    c.min_duration = c.max_duration = 25;
    c.lambda = 25;
    const SequenceList seqs{MatrixXd::Random(2, 25)};
    TrainerState s = initialize(seqs, c, 9);
    const auto before = s.assignments;
    for (int i = 0; i < 3; ++i) gibbs_sweep(s, seqs);
    CHECK(s.assignments == before);
    CHECK(s.loglik_trace.size() == 3);
}

TEST_CASE("remove then re-add restores the state") {
    const auto data = sine_vs_constant(4, 100, 0.1, 5);
    for (Backend b : {Backend::rff, Backend::exact_gp}) {
        TrainerConfig c = small_config();
        c.backend = b;
        TrainerState s = initialize(data.sequences, c, 2);
        const auto ref = s.emissions->empty_clone();
        // reference copy of the statistics via a batch rebuild
        for (std::size_t n = 0; n < data.sequences.size(); ++n)
            for (const auto& seg : s.assignments[n])
                ref->add_segment(seg.label, data.sequences[n].middleCols(seg.start, seg.length));
        const auto counts = s.hsmm.transition_counts;
        const auto classes = s.hsmm.class_counts;
        const auto spans = s.assignments[2];
        remove_sequence(s, data.sequences, 2);
        add_sequence(s, data.sequences, 2, spans);
        CHECK(s.emissions->max_stats_deviation(*ref) <= 1e-6);
        CHECK(s.hsmm.transition_counts == counts);
        CHECK(s.hsmm.class_counts == classes);
        CHECK(s.assignments[2] == spans);
    }
}

TEST_CASE("audit holds after every sweep") {
    const auto data = sine_vs_constant(5, 120, 0.1, 6);
    TrainerConfig c = small_config();
    c.num_classes = 3;
    c.audit = true;
    TrainerState s = initialize(data.sequences, c, 4);
    for (int i = 0; i < 5; ++i) {
        CHECK_NOTHROW(gibbs_sweep(s, data.sequences));
        const AuditReport r = audit(s, data.sequences);
        CHECK(r.ok());
        CHECK(r.counts_match);
    }
    // corrupt the counts: the audit must notice
    s.hsmm.transitions(0, 1) += 1;
    CHECK_FALSE(audit(s, data.sequences).counts_match);
}

TEST_CASE("zero iterations return the initialization") {
    const auto data = sine_vs_constant(3, 100, 0.1, 7);
    TrainerConfig c = small_config();
    c.iterations = 0;
    const auto result = train_single(data.sequences, c, 11);
    const TrainerState init = initialize(data.sequences, c, 11);
    CHECK(result.spans == init.assignments);
    CHECK(result.loglik_trace.empty());
}

TEST_CASE("sine vs constant is recovered") {
    const auto data = sine_vs_constant(5, 200, 0.05, 8);
    TrainerConfig c = small_config();
    c.restarts = 10;
    c.seed = 1;
    const auto result = train(data.sequences, c);
    CHECK(result.restart_logliks.size() == 10);
    CHECK(result.restart_seeds.size() == 10);
    double best = kLogZero;
    for (double l : result.restart_logliks) best = std::max(best, l);
    CHECK(result.final_loglik == best);
    CHECK(result.restart_logliks[static_cast<std::size_t>(result.best_restart)] == best);
    const auto report = evaluate_nhd(flat(result.labels), flat(data.truth));
    INFO("nhd = " << report.nhd);
    CHECK(report.nhd <= 0.1);
}

TEST_CASE("training is deterministic") {
    const auto data = sine_vs_constant(4, 140, 0.1, 9);
    TrainerConfig c = small_config();
    c.num_classes = 3;
    c.restarts = 2;
    c.shuffle = true;
    const auto a = train(data.sequences, c);
    const auto b = train(data.sequences, c);
    CHECK(a.spans == b.spans);
    CHECK(a.loglik_trace == b.loglik_trace);
    c.threads = 3;
    const auto t = train(data.sequences, c);
    CHECK(t.spans == a.spans);
    CHECK(t.loglik_trace == a.loglik_trace);
}

TEST_CASE("phase timers account for the wall clock") {
    const auto data = sine_vs_constant(8, 400, 0.1, 10);
    TrainerConfig c = small_config();
    c.num_classes = 5;
    const auto start = std::chrono::steady_clock::now();
    const auto r = train_single(data.sequences, c, 3);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    INFO("accounted " << r.timing.accounted() << " total " << r.timing.total << " wall " << wall);
    CHECK(std::abs(r.timing.accounted() - r.timing.total) <= 0.05 * r.timing.total);
    CHECK(std::abs(r.timing.total - wall) <= 0.05 * wall);
}

TEST_CASE("exact GP and RFF at M = 2000 track each other") {
    const auto data = sine_vs_constant(2, 100, 0.2, 11);
    TrainerConfig c = small_config();
    c.num_features = 2000;
    const auto rff = train_single(data.sequences, c, 5);
    c.backend = Backend::exact_gp;
    const auto gp = train_single(data.sequences, c, 5);
    REQUIRE(rff.loglik_trace.size() == gp.loglik_trace.size());
    for (std::size_t i = 0; i < gp.loglik_trace.size(); ++i) {
        INFO("sweep " << i << ": rff " << rff.loglik_trace[i] << " gp " << gp.loglik_trace[i]);
        CHECK(std::abs(rff.loglik_trace[i] - gp.loglik_trace[i]) <= 0.05 * std::abs(gp.loglik_trace[i]));
    }
}
