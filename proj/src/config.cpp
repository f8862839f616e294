#include "acgan/config.hpp"

#include <set>

namespace acgan {

namespace {

void reject_unknown(const nlohmann::json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) {
            throw ConfigError("config: unknown key '" + (section.empty() ? key : section + "." + key) + "'");
        }
    }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, SeedPurpose purpose) {
    std::uint64_t x = seed * 0x100000001b3ULL + static_cast<std::uint64_t>(purpose);
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void RunConfig::validate() const {
    std::visit([](const auto& t) { t.validate(); }, task);
    if (n_samples < 2) throw ConfigError("config: task.n must be at least 2");
    if (model.generator_hidden.empty() || model.discriminator_hidden.empty()) {
        throw ConfigError("config: networks need at least one hidden layer");
    }
    for (auto w : model.generator_hidden) if (w == 0) throw ConfigError("config: hidden widths must be positive");
    for (auto w : model.discriminator_hidden) if (w == 0) throw ConfigError("config: hidden widths must be positive");
    train.validate();
    if (train.batch_size > n_samples) throw ConfigError("config: batch_size exceeds task.n");
    if (eval.n_eval < 2 || eval.n_eval > n_samples) throw ConfigError("config: eval.n_eval must lie in [2, task.n]");
    if (eval.n_bins == 0 || eval.ndb_k == 0 || eval.n_per_label == 0) {
        throw ConfigError("config: eval counts must be positive");
    }
    if (!(eval.alpha > 0.0 && eval.alpha < 1.0)) throw ConfigError("config: eval.alpha must lie in (0, 1)");
    if (out_dir.empty()) throw ConfigError("config: paths.out_dir must not be empty");
}

RunConfig parse_run_config(const nlohmann::json& j) {
    try {
        reject_unknown(j, "", {"seed", "task", "model", "train", "loss", "eval", "paths"});
        RunConfig c;
        c.seed = j.value("seed", c.seed);

        if (j.contains("task")) {
            auto t = j.at("task");
            const auto type = t.value("type", std::string("gauss_modes"));
            if (type == "gauss_modes") {
                reject_unknown(t, "task", {"type", "k", "radius", "sigma", "n"});
            } else {
                reject_unknown(t, "task", {"type", "dim_x", "dim_y", "noise_std", "map_seed", "n"});
            }
            c.n_samples = t.value("n", c.n_samples);
            t.erase("n");
            t["type"] = type;
            c.task = task_from_json(t);
        }

        if (j.contains("model")) {
            const auto& m = j.at("model");
            reject_unknown(m, "model", {"generator_hidden", "discriminator_hidden", "noise_dim", "generator_output"});
            c.model.generator_hidden = m.value("generator_hidden", c.model.generator_hidden);
            c.model.discriminator_hidden = m.value("discriminator_hidden", c.model.discriminator_hidden);
            c.model.noise_dim = m.value("noise_dim", c.model.noise_dim);
            if (m.contains("generator_output")) {
                c.model.generator_output = parse_output_activation(m.at("generator_output").get<std::string>());
            }
        }

        if (j.contains("train")) {
            const auto& t = j.at("train");
            reject_unknown(t, "train", {"epochs", "steps", "batch_size", "lr", "beta1", "beta2", "d_steps_per_g_step",
                                        "checkpoint_every", "ac_source", "log_acontrario", "ema_decay"});
            c.train = train_config_from_json(t);
        }
        c.train.seed = derive_seed(c.seed, SeedPurpose::kTrain);

        const bool regression = std::holds_alternative<CondRegressionTask>(c.task);
        nlohmann::json loss = j.value("loss", nlohmann::json::object());
        reject_unknown(loss, "loss", {"formulation", "lambdas", "gen_loss_mode", "recon_weight"});
        if (!loss.contains("recon_weight")) loss["recon_weight"] = regression ? 10.0 : 0.0;
        c.loss = loss_spec_from_json(loss);
        c.train.loss = c.loss;

        if (j.contains("eval")) {
            const auto& e = j.at("eval");
            reject_unknown(e, "eval", {"n_eval", "n_bins", "ndb_k", "alpha", "n_per_label", "threshold", "optimal_d"});
            c.eval.n_eval = e.value("n_eval", c.eval.n_eval);
            c.eval.n_bins = e.value("n_bins", c.eval.n_bins);
            c.eval.ndb_k = e.value("ndb_k", c.eval.ndb_k);
            c.eval.alpha = e.value("alpha", c.eval.alpha);
            c.eval.n_per_label = e.value("n_per_label", c.eval.n_per_label);
            c.eval.threshold = e.value("threshold", c.eval.threshold);
            if (e.contains("optimal_d")) {
                const auto& o = e.at("optimal_d");
                reject_unknown(o, "eval.optimal_d", {"epochs", "plateau_tol", "plateau_window", "max_epochs"});
                c.eval.optimal_d = optimal_d_config_from_json(o);
            }
        }
        c.eval.optimal_d.seed = derive_seed(c.seed, SeedPurpose::kOptimalD);

        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            reject_unknown(p, "paths", {"out_dir"});
            c.out_dir = p.value("out_dir", c.out_dir);
        }
        c.validate();
        return c;
    } catch (const ConfigError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json task = task_to_json(c.task);
    task["n"] = c.n_samples;
    nlohmann::json train = to_json(c.train);
    train.erase("seed");
    nlohmann::json optimal_d = to_json(c.eval.optimal_d);
    optimal_d.erase("seed");
    return {{"seed", c.seed},
            {"task", task},
            {"model",
             {{"generator_hidden", c.model.generator_hidden},
              {"discriminator_hidden", c.model.discriminator_hidden},
              {"noise_dim", c.model.noise_dim},
              {"generator_output", to_string(c.model.generator_output)}}},
            {"train", train},
            {"loss", to_json(c.loss)},
            {"eval",
             {{"n_eval", c.eval.n_eval},
              {"n_bins", c.eval.n_bins},
              {"ndb_k", c.eval.ndb_k},
              {"alpha", c.eval.alpha},
              {"n_per_label", c.eval.n_per_label},
              {"threshold", c.eval.threshold},
              {"optimal_d", optimal_d}}},
            {"paths", {{"out_dir", c.out_dir}}}};
}

}  // namespace acgan
