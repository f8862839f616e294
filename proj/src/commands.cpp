#include "acgan/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "acgan/experiment.hpp"
#include "acgan/io.hpp"

namespace fs = std::filesystem;

namespace acgan {

RunConfig load_run_config(const fs::path& path, const std::optional<std::string>& out_dir,
                          const std::optional<std::uint64_t>& seed) {
    if (!fs::exists(path)) throw MissingFileError("config file not found: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: malformed JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    if (out_dir) j["paths"]["out_dir"] = *out_dir;
    if (seed) j["seed"] = *seed;
    return parse_run_config(j);
}

namespace {

fs::path out_path(const RunConfig& cfg, const char* name) { return fs::path(cfg.out_dir) / name; }

void write_effective_config(const RunConfig& cfg) { write_json_file(out_path(cfg, kEffectiveConfigFile), to_json(cfg)); }

ConditionalDataset write_dataset(const RunConfig& cfg) {
    ConditionalDataset ds = make_dataset(cfg);
    std::ostringstream ss;
    write_dataset_csv(ds, ss);
    write_text_file(out_path(cfg, kDatasetFile), ss.str());
    return ds;
}

struct LoadedNetworks {
    Generator gen;
    Discriminator disc;
};

LoadedNetworks load_networks(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
    const fs::path path = checkpoint ? *checkpoint : out_path(cfg, kFinalCheckpointFile);
    if (!fs::exists(path)) throw MissingFileError("checkpoint not found: " + path.string());
    const auto j = load_checkpoint(path);
    check_checkpoint_matches(j, cfg);
    try {
        return {generator_from_json(j.at("generator")), discriminator_from_json(j.at("discriminator"))};
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint: malformed document: ") + e.what());
    }
}

}  // namespace

fs::path cmd_gen_data(const RunConfig& cfg) {
    write_dataset(cfg);
    write_effective_config(cfg);
    return out_path(cfg, kDatasetFile);
}

fs::path cmd_train(const RunConfig& cfg) {
    const ConditionalDataset ds = write_dataset(cfg);
    write_effective_config(cfg);
    Networks nets = init_networks(cfg);
    Trainer trainer(std::move(nets.gen), std::move(nets.disc), ds, cfg.train);
    const auto meta = checkpoint_meta(cfg);
    trainer.run([&](const Trainer& t) {
        save_checkpoint(t, fs::path(cfg.out_dir) / ("checkpoint_step_" + std::to_string(t.steps_done()) + ".json"), meta);
    });
    std::ostringstream metrics;
    write_metrics_csv(trainer.log(), metrics);
    write_text_file(out_path(cfg, kMetricsFile), metrics.str());
    save_checkpoint(trainer, out_path(cfg, kFinalCheckpointFile), meta);
    return out_path(cfg, kFinalCheckpointFile);
}

fs::path cmd_eval_conditionality(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
    const auto nets = load_networks(cfg, checkpoint);
    const ConditionalDataset ds = make_dataset(cfg);
    const ConditionalityEval ev = evaluate_conditionality(cfg, ds, nets.gen, nets.disc);
    std::ostringstream hist;
    write_histogram_csv(ev.histogram, hist);
    write_text_file(out_path(cfg, kHistogramFile), hist.str());
    write_json_file(out_path(cfg, kReportFile), report_json(cfg, ev));
    write_effective_config(cfg);
    return out_path(cfg, kReportFile);
}

fs::path cmd_ndb(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
    const auto nets = load_networks(cfg, checkpoint);
    const ConditionalDataset ds = make_dataset(cfg);
    write_json_file(out_path(cfg, kNdbFile), to_json(evaluate_ndb(cfg, ds, nets.gen)));
    return out_path(cfg, kNdbFile);
}

fs::path cmd_report(const fs::path& run_dir, const std::optional<fs::path>& out_dir) {
    if (!fs::is_directory(run_dir)) throw MissingFileError("run directory not found: " + run_dir.string());
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / kReportFile) &&
            fs::exists(entry.path() / kEffectiveConfigFile)) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw MissingFileError("no evaluated runs under " + run_dir.string());
    std::vector<RunSummaryInput> runs;
    for (const auto& d : dirs) {
        runs.push_back({d.filename().string(), read_json_file(d / kEffectiveConfigFile), read_json_file(d / kReportFile)});
    }
    const fs::path out = (out_dir ? *out_dir : run_dir) / kSummaryFile;
    write_json_file(out, summarize_runs(runs));
    return out;
}

fs::path cmd_sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
    if (seeds.empty()) throw ConfigError("sweep: no seeds given");
    std::vector<RunConfig> runs;
    for (auto seed : seeds) {
        for (bool ac : {false, true}) {
            nlohmann::json j = to_json(cfg);
            j["seed"] = seed;
            const bool hinge = cfg.loss.hinge();
            j["loss"]["formulation"] = ac ? (hinge ? "hinge_acontrario" : "acontrario") : (hinge ? "hinge_classic" : "classic");
            if (!ac) {
                j["loss"]["lambdas"] = {cfg.loss.lambdas[0], cfg.loss.lambdas[1], 0.0, 0.0};
            } else if (!cfg.loss.acontrario()) {
                j["loss"]["lambdas"] = LossSpec::strategy(1).lambdas;
            }
            j["paths"]["out_dir"] =
                (fs::path(cfg.out_dir) / ("seed_" + std::to_string(seed) + (ac ? "_acontrario" : "_classic"))).string();
            runs.push_back(parse_run_config(j));
        }
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    const auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            try {
                cmd_train(runs[i]);
                cmd_eval_conditionality(runs[i], std::nullopt);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::max<std::size_t>(1, jobs); ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return cmd_report(cfg.out_dir, std::nullopt);
}

}  // namespace acgan
