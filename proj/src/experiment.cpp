#include "acgan/experiment.hpp"

#include <map>

namespace acgan {

ConditionalDataset make_dataset(const RunConfig& cfg) {
    return sample_dataset(cfg.task, cfg.n_samples, derive_seed(cfg.seed, SeedPurpose::kData));
}

Networks init_networks(const RunConfig& cfg) {
    const std::size_t dx = task_x_dim(cfg.task), dy = task_y_dim(cfg.task);
    return {make_generator(dx, dy, cfg.model.noise_dim, cfg.model.generator_hidden, cfg.model.generator_output,
                           derive_seed(cfg.seed, SeedPurpose::kGeneratorInit)),
            make_discriminator(dx, dy, cfg.model.discriminator_hidden,
                               derive_seed(cfg.seed, SeedPurpose::kDiscriminatorInit))};
}

nlohmann::json checkpoint_meta(const RunConfig& cfg) {
    return {{"task", task_to_json(cfg.task)}, {"n_samples", cfg.n_samples}, {"loss", to_json(cfg.loss)}};
}

void check_checkpoint_matches(const nlohmann::json& checkpoint, const RunConfig& cfg) {
    if (!checkpoint.contains("meta") || !checkpoint.at("meta").contains("task")) {
        throw CheckpointError("checkpoint: no task metadata");
    }
    if (checkpoint.at("meta").at("task") != task_to_json(cfg.task)) {
        throw CheckpointError("checkpoint/config task mismatch");
    }
}

ConditionalityEval evaluate_conditionality(const RunConfig& cfg, const ConditionalDataset& data, const Generator& gen,
                                           const Discriminator& disc) {
    ConditionalityEval ev{optimal_discriminator_phase(gen, disc, data, cfg.train, cfg.eval.optimal_d), {}, {}, {}, {},
                          {}, {}};
    ev.logits = collect_logits(ev.optimal_d.disc, gen, data, cfg.eval.n_eval, derive_seed(cfg.seed, SeedPurpose::kLogits),
                               cfg.train.ac_source);
    ev.histogram = build_histogram(ev.logits, cfg.eval.n_bins);
    ev.rates = classification_rates(ev.logits, cfg.eval.threshold);
    if (std::holds_alternative<GaussModesTask>(cfg.task)) {
        ev.oracle_accuracy = oracle_accuracy(gen, cfg.task, cfg.eval.n_per_label, derive_seed(cfg.seed, SeedPurpose::kOracle));
    } else {
        ev.regression = regression_error(std::get<CondRegressionTask>(cfg.task), gen, cfg.eval.n_eval,
                                         derive_seed(cfg.seed, SeedPurpose::kOracle));
    }
    ev.ndb = evaluate_ndb(cfg, data, gen);
    return ev;
}

NdbReport evaluate_ndb(const RunConfig& cfg, const ConditionalDataset& data, const Generator& gen) {
    const std::uint64_t seed = derive_seed(cfg.seed, SeedPurpose::kNdb);
    return ndb_score(data.ys, generate_for_dataset(gen, data, seed), cfg.eval.ndb_k, cfg.eval.alpha, seed);
}

nlohmann::json report_json(const RunConfig& cfg, const ConditionalityEval& ev) {
    nlohmann::json j{{"formulation", to_string(cfg.loss.formulation)},
                     {"seed", cfg.seed},
                     {"classification_rates", to_json(ev.rates)},
                     {"ndb", to_json(ev.ndb)},
                     {"optimal_d",
                      {{"steps", ev.optimal_d.steps},
                       {"plateaued", ev.optimal_d.plateaued},
                       {"final_loss", ev.optimal_d.losses.empty() ? 0.0 : ev.optimal_d.losses.back()}}}};
    j["oracle_accuracy"] = ev.oracle_accuracy ? nlohmann::json(*ev.oracle_accuracy) : nlohmann::json(nullptr);
    if (ev.regression) {
        j["regression"] = {{"rmse", ev.regression->rmse},
                           {"log_rmse", ev.regression->log_rmse},
                           {"abs_rel", ev.regression->abs_rel}};
    }
    return j;
}

nlohmann::json summarize_runs(const std::vector<RunSummaryInput>& runs) {
    auto rows = nlohmann::json::array();
    // (seed, task) -> {baseline, acontrario} run positions
    std::map<std::string, std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> groups;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        const auto formulation = parse_formulation(r.report.at("formulation").get<std::string>());
        const bool ac = formulation == Formulation::kAcontrario || formulation == Formulation::kHingeAcontrario;
        rows.push_back({{"name", r.name},
                        {"formulation", r.report.at("formulation")},
                        {"seed", r.report.at("seed")},
                        {"classification_rates", r.report.at("classification_rates")},
                        {"oracle_accuracy", r.report.value("oracle_accuracy", nlohmann::json(nullptr))},
                        {"ndb_over_k", r.report.at("ndb").at("ndb_over_k")}});
        const std::string key = r.report.at("seed").dump() + "|" + r.config.at("task").dump();
        auto& slot = ac ? groups[key].second : groups[key].first;
        if (!slot) slot = i;
    }
    auto comparisons = nlohmann::json::array();
    for (const auto& [key, pair] : groups) {
        if (!pair.first || !pair.second) continue;
        const auto& base = runs[*pair.first].report;
        const auto& ac = runs[*pair.second].report;
        const double base_rate = base.at("classification_rates").at("real_ac").get<double>();
        const double ac_rate = ac.at("classification_rates").at("real_ac").get<double>();
        nlohmann::json c{{"seed", base.at("seed")},
                         {"baseline", runs[*pair.first].name},
                         {"acontrario", runs[*pair.second].name},
                         {"real_ac_true_rate", {{"baseline", base_rate}, {"acontrario", ac_rate}}},
                         {"acontrario_lower_real_ac_true_rate", ac_rate < base_rate},
                         {"ndb_over_k",
                          {{"baseline", base.at("ndb").at("ndb_over_k")}, {"acontrario", ac.at("ndb").at("ndb_over_k")}}}};
        if (!base.at("oracle_accuracy").is_null() && !ac.at("oracle_accuracy").is_null()) {
            const double b = base.at("oracle_accuracy").get<double>();
            const double a = ac.at("oracle_accuracy").get<double>();
            c["oracle_accuracy"] = {{"baseline", b}, {"acontrario", a}, {"delta", a - b}};
        }
        comparisons.push_back(c);
    }
    return {{"runs", rows}, {"comparisons", comparisons}};
}

}  // namespace acgan
