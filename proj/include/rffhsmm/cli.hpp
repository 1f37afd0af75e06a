#pragma once

#include "rffhsmm/dataio.hpp"
#include "rffhsmm/gibbs_trainer.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace rffhsmm {

// Everything a command needs; echoed verbatim into every artifact.
struct RunConfig {
    TrainerConfig trainer;
    int downsample = 1;
    bool normalize = true;

    std::vector<std::string> inputs;
    std::string synthetic_spec;  // alternative to inputs
    std::uint64_t synthetic_seed = 1;
    std::string delimiter = ",";
    std::vector<int> columns;
    int label_column = -1;
    bool header = false;
    std::string out_dir = "out";

    nlohmann::json to_json() const;
    LoadOptions load_options() const;
};

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInfeasible = 4;

// Loads inputs (files or synthetic spec) and applies downsampling/normalization.
SequenceStore load_corpus(const RunConfig& config);

// Subcommands: train, segment, eval, bench, synth.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rffhsmm
