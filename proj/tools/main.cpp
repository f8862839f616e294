// acgan: data generation, training, conditionality evaluation and reporting.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "acgan/commands.hpp"
#include "acgan/trainer.hpp"

namespace {

// Single-line JSON error on stderr.
int fail(const std::string& kind, const std::string& message) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
    return 1;
}

struct CommonArgs {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "Run config JSON")->required();
    cmd->add_option("--out", args.out, "Output directory (overrides paths.out_dir)");
    cmd->add_option("--seed", args.seed, "Seed (overrides config seed)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional GAN training with a-contrario pairs and conditionality evaluation"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, ndb_args, sweep_args;
    std::optional<std::string> eval_ckpt, ndb_ckpt;
    std::string run_dir;
    std::optional<std::string> report_out;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t jobs = 1;

    auto* gen = app.add_subcommand("gen-data", "Write the task dataset CSV");
    add_common(gen, gen_args);
    auto* train = app.add_subcommand("train", "Train G and D; write checkpoints and metrics CSV");
    add_common(train, train_args);
    auto* eval = app.add_subcommand("eval-conditionality",
                                    "Optimal-discriminator phase, four-way histogram CSV and report JSON");
    add_common(eval, eval_args);
    eval->add_option("--checkpoint", eval_ckpt, "Checkpoint (default: <out>/checkpoint_final.json)");
    auto* ndb = app.add_subcommand("ndb", "NDB mode-collapse score JSON");
    add_common(ndb, ndb_args);
    ndb->add_option("--checkpoint", ndb_ckpt, "Checkpoint (default: <out>/checkpoint_final.json)");
    auto* report = app.add_subcommand("report", "Summarize baseline vs a-contrario runs under a directory");
    report->add_option("run_dir", run_dir, "Directory whose subdirectories are evaluated runs")->required();
    report->add_option("--out", report_out, "Directory for summary.json (default: run_dir)");
    auto* sweep = app.add_subcommand("sweep", "Train and evaluate both formulations for several seeds, then report");
    add_common(sweep, sweep_args);
    sweep->add_option("--seeds", seeds, "Seeds to run")->delimiter(',');
    sweep->add_option("--jobs", jobs, "Pipelines to run concurrently")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << nlohmann::json{{"error", "usage"}, {"message", e.what()}}.dump() << std::endl;
        return 2;
    }

    try {
        std::filesystem::path written;
        if (*gen) {
            written = acgan::cmd_gen_data(acgan::load_run_config(gen_args.config, gen_args.out, gen_args.seed));
        } else if (*train) {
            written = acgan::cmd_train(acgan::load_run_config(train_args.config, train_args.out, train_args.seed));
        } else if (*eval) {
            written = acgan::cmd_eval_conditionality(
                acgan::load_run_config(eval_args.config, eval_args.out, eval_args.seed), eval_ckpt);
        } else if (*ndb) {
            written = acgan::cmd_ndb(acgan::load_run_config(ndb_args.config, ndb_args.out, ndb_args.seed), ndb_ckpt);
        } else if (*report) {
            std::optional<std::filesystem::path> out;
            if (report_out) out = *report_out;
            written = acgan::cmd_report(run_dir, out);
        } else if (*sweep) {
            written = acgan::cmd_sweep(acgan::load_run_config(sweep_args.config, sweep_args.out, sweep_args.seed),
                                       seeds, jobs);
        }
        std::cout << written.string() << std::endl;
        return 0;
    } catch (const acgan::MissingFileError& e) {
        return fail("missing_file", e.what());
    } catch (const acgan::ConfigError& e) {
        return fail("config", e.what());
    } catch (const acgan::CheckpointError& e) {
        return fail("checkpoint", e.what());
    } catch (const acgan::TrainingError& e) {
        return fail("training", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
}
