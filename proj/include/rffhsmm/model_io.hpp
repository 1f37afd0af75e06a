#pragma once

#include "rffhsmm/dataio.hpp"
#include "rffhsmm/emission.hpp"
#include "rffhsmm/gibbs_trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>

namespace rffhsmm {

// Model snapshot, JSON:
// {
//   "format": "rffhsmm-model", "version": 1, "build": {...},
//   "config": {...trainer config...}, "run_config": {...verbatim CLI config...},
//   "preprocessing": {"downsample", "normalized", "mins", "maxs"},
//   "hsmm": {"num_classes", "min_duration", "max_duration", "lambda", "alpha",
//            "transition_counts" (row-major C x C), "class_counts"},
//   "backend": "rff" | "exact-gp",
//   "bank": {"M", "lengthscale", "seed", "omegas", "phases"},            (rff)
//   "classes": [{"class_id", "n_points",
//                "dims": [{"precision" (row-major M x M), "weighted_sum"}]}]  (rff)
//   "classes": [{"class_id", "blocks": [{"times", "values" (D rows)}]}]        (exact-gp)
// }
// Doubles are written in shortest round-trip form, so a reload is bit-exact.
inline constexpr int kSnapshotVersion = 1;

nlohmann::json build_info();

nlohmann::json to_json(const FeatureBank& bank);
FeatureBank feature_bank_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainerConfig& config);
TrainerConfig trainer_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HsmmParams& params);
HsmmParams hsmm_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Preprocessing& record);
Preprocessing preprocessing_from_json(const nlohmann::json& j);

nlohmann::json snapshot_to_json(const TrainerState& state, const Preprocessing& preprocessing,
                                const nlohmann::json& run_config);

struct LoadedModel {
    TrainerConfig config;
    HsmmParams hsmm;
    std::unique_ptr<EmissionBackend> emissions;
    Preprocessing preprocessing;
    nlohmann::json run_config;
};

// Throws std::runtime_error on an unknown format or version.
LoadedModel snapshot_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace rffhsmm
