#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgan/losses.hpp"
#include "acgan/nets.hpp"
#include "acgan/tasks.hpp"
#include "acgan/trainer.hpp"

namespace acgan {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct ModelConfig {
    std::vector<std::size_t> generator_hidden{128, 128};
    std::vector<std::size_t> discriminator_hidden{128, 128};
    std::size_t noise_dim = 0;
    OutputActivation generator_output = OutputActivation::kIdentity;
};

struct EvalConfig {
    std::size_t n_eval = 2000;
    std::size_t n_bins = 50;
    std::size_t ndb_k = 20;
    double alpha = 0.05;
    std::size_t n_per_label = 1000;
    double threshold = 0.0;
    OptimalDConfig optimal_d;
};

/// Everything one experiment needs. Seeds for data, initialization, training
/// and evaluation are all derived from `seed`.
struct RunConfig {
    std::uint64_t seed = 1;
    Task task = GaussModesTask{};
    std::size_t n_samples = 8000;
    ModelConfig model;
    TrainConfig train;
    LossSpec loss;
    EvalConfig eval;
    std::string out_dir = "run";

    void validate() const;
};

/// Parses and validates; unknown keys anywhere are rejected.
RunConfig parse_run_config(const nlohmann::json& j);
/// Effective configuration with every default filled in; parse_run_config accepts it back.
nlohmann::json to_json(const RunConfig& c);

enum class SeedPurpose : std::uint64_t {
    kData = 11,
    kGeneratorInit = 12,
    kDiscriminatorInit = 13,
    kTrain = 14,
    kOptimalD = 15,
    kLogits = 16,
    kOracle = 17,
    kNdb = 18,
};

std::uint64_t derive_seed(std::uint64_t seed, SeedPurpose purpose);

}  // namespace acgan
