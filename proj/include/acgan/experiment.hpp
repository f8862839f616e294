#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgan/config.hpp"
#include "acgan/evalcond.hpp"
#include "acgan/trainer.hpp"

namespace acgan {

ConditionalDataset make_dataset(const RunConfig& cfg);

struct Networks {
    Generator gen;
    Discriminator disc;
};

Networks init_networks(const RunConfig& cfg);

/// Metadata stored in checkpoints so evaluation can reject a mismatched config.
nlohmann::json checkpoint_meta(const RunConfig& cfg);
void check_checkpoint_matches(const nlohmann::json& checkpoint, const RunConfig& cfg);

struct ConditionalityEval {
    OptimalDResult optimal_d;
    PairingLogits logits;
    FourWayHistogram histogram;
    ClassificationReport rates;
    std::optional<double> oracle_accuracy;
    std::optional<RegressionMetrics> regression;
    NdbReport ndb;
};

/// Optimal-discriminator phase on the frozen generator, then the four-way
/// logit statistics, oracle accuracy (when the task has an oracle) and NDB.
ConditionalityEval evaluate_conditionality(const RunConfig& cfg, const ConditionalDataset& data, const Generator& gen,
                                           const Discriminator& disc);

/// NDB of generated samples for the dataset's conditions against the dataset's ys.
NdbReport evaluate_ndb(const RunConfig& cfg, const ConditionalDataset& data, const Generator& gen);

nlohmann::json report_json(const RunConfig& cfg, const ConditionalityEval& ev);

struct RunSummaryInput {
    std::string name;
    nlohmann::json config;  // effective config
    nlohmann::json report;
};

/// Pairs classic and a-contrario runs that share seed and task, and flags
/// whether the a-contrario run has the lower real-a-contrario true-rate.
nlohmann::json summarize_runs(const std::vector<RunSummaryInput>& runs);

}  // namespace acgan
