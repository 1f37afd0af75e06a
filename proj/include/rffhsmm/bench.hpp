#pragma once

#include "rffhsmm/dataio.hpp"
#include "rffhsmm/gibbs_trainer.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace rffhsmm {

struct BenchOptions {
    TrainerConfig config;  // restarts is ignored: one chain per trial
    std::vector<int> duplications{1, 10, 20};
    std::vector<Backend> backends{Backend::rff, Backend::exact_gp};
    int trials = 5;
    long max_gp_frames = 10000;  // exact-GP rungs above this are skipped
};

struct BenchPoint {
    int duplication = 1;
    long frames = 0;
    Backend backend = Backend::rff;
    bool skipped = false;
    std::vector<double> seconds;  // end-to-end wall clock per trial
    double mean_seconds = 0.0;
    PhaseTimes mean_phases;
};

struct Speedup {
    long frames = 0;
    double gp_seconds = 0.0;
    double rff_seconds = 0.0;
    double ratio = 0.0;  // gp / rff
};

struct BenchReport {
    nlohmann::json config;
    nlohmann::json environment;
    int trials = 0;
    std::vector<BenchPoint> points;
    std::vector<Speedup> speedups;  // only frame counts where both backends ran

    const BenchPoint* find(long frames, Backend backend) const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
    // gnuplot script plotting time vs frames from the CSV.
    std::string gnuplot_script(const std::string& csv_name) const;
};

nlohmann::json capture_environment(int threads);

// For every duplication factor and backend, trains `trials` chains (seeds
// restart_seed(config.seed, trial), identical across backends) and records
// the wall clock of each full training run. Runs are strictly sequential.
BenchReport run_bench(const SequenceStore& base, const BenchOptions& options, std::ostream* log = nullptr);

}  // namespace rffhsmm
