#include <gtest/gtest.h>

#include "acgan/config.hpp"

using namespace acgan;

namespace {

nlohmann::json minimal() { return {{"seed", 5}, {"task", {{"type", "gauss_modes"}}}}; }

}  // namespace

TEST(Config, DefaultsApplied) {
    const RunConfig c = parse_run_config(minimal());
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.n_samples, 8000u);
    EXPECT_EQ(c.train.batch_size, 64u);
    EXPECT_EQ(c.train.lr, 2e-4);
    EXPECT_EQ(c.train.beta1, 0.5);
    EXPECT_EQ(c.train.beta2, 0.999);
    EXPECT_EQ(c.loss.formulation, Formulation::kAcontrario);
    EXPECT_EQ(c.loss.lambdas, (std::array<double, 4>{1, 1, 1, 1}));
    EXPECT_EQ(c.loss.gen_mode, GenLossMode::kNonSaturating);
    EXPECT_EQ(c.loss.recon_weight, 0.0);
    EXPECT_EQ(c.eval.ndb_k, 20u);
    EXPECT_EQ(c.eval.alpha, 0.05);
    EXPECT_EQ(c.eval.n_bins, 50u);
    EXPECT_EQ(c.eval.n_per_label, 1000u);
    EXPECT_EQ(c.model.generator_hidden, (std::vector<std::size_t>{128, 128}));
    EXPECT_EQ(c.model.noise_dim, 0u);
}

TEST(Config, RegressionDefaultsReconWeight) {
    const RunConfig c = parse_run_config({{"task", {{"type", "cond_regression"}}}});
    EXPECT_EQ(c.loss.recon_weight, 10.0);
    EXPECT_EQ(task_x_dim(c.task), 4u);
}

TEST(Config, ClassicDefaultsLambdas) {
    auto j = minimal();
    j["loss"] = {{"formulation", "classic"}};
    EXPECT_EQ(parse_run_config(j).loss.lambdas, (std::array<double, 4>{1, 1, 0, 0}));
}

TEST(Config, UnknownKeysRejected) {
    for (const auto& [section, key] : std::vector<std::pair<std::string, std::string>>{
             {"", "sede"}, {"task", "radious"}, {"train", "learning_rate"}, {"loss", "lambda"},
             {"eval", "bins"}, {"paths", "dir"}, {"model", "depth"}}) {
        auto j = minimal();
        if (section.empty()) {
            j[key] = 1;
        } else {
            j[section][key] = 1;
        }
        try {
            parse_run_config(j);
            FAIL() << section << "." << key;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
        }
    }
    auto nested = minimal();
    nested["eval"]["optimal_d"]["epoch"] = 2;
    EXPECT_THROW(parse_run_config(nested), ConfigError);
}

TEST(Config, InvalidValuesRejected) {
    auto j = minimal();
    j["train"] = {{"batch_size", 1}};
    EXPECT_THROW(parse_run_config(j), ConfigError);
    j = minimal();
    j["loss"] = {{"formulation", "classic"}, {"lambdas", {1, 1, 1, 1}}};
    EXPECT_THROW(parse_run_config(j), ConfigError);
    j = minimal();
    j["task"]["type"] = "mnist";
    EXPECT_THROW(parse_run_config(j), ConfigError);
    j = minimal();
    j["train"] = {{"lr", "fast"}};
    EXPECT_THROW(parse_run_config(j), ConfigError);
}

TEST(Config, EffectiveConfigRoundTrips) {
    auto j = minimal();
    j["task"]["n"] = 2400;
    j["train"] = {{"steps", 300}, {"ac_source", "outside_batch"}, {"ema_decay", 0.99}};
    j["loss"] = {{"formulation", "hinge_acontrario"}, {"lambdas", {0.5, 0.5, 0.5, 0}}};
    j["eval"] = {{"optimal_d", {{"plateau_tol", 1e-4}}}};
    j["model"] = {{"noise_dim", 3}, {"generator_output", "tanh"}};
    j["paths"] = {{"out_dir", "somewhere"}};
    const RunConfig c = parse_run_config(j);
    const auto effective = to_json(c);
    const RunConfig back = parse_run_config(effective);
    EXPECT_EQ(to_json(back), effective);
    EXPECT_EQ(back.n_samples, 2400u);
    EXPECT_EQ(back.train.steps, 300u);
    EXPECT_EQ(back.loss, c.loss);
    EXPECT_EQ(back.train.seed, c.train.seed);
    EXPECT_EQ(back.eval.optimal_d.plateau_tol, 1e-4);
}

TEST(Config, SeedsDeriveFromTopLevel) {
    auto a = minimal();
    auto b = minimal();
    b["seed"] = 6;
    const auto ca = parse_run_config(a), cb = parse_run_config(b);
    EXPECT_NE(ca.train.seed, cb.train.seed);
    EXPECT_NE(ca.train.seed, ca.eval.optimal_d.seed);
    EXPECT_NE(derive_seed(1, SeedPurpose::kData), derive_seed(1, SeedPurpose::kGeneratorInit));
}
