#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "acgan/io.hpp"
#include "acgan/tasks.hpp"
#include "acgan/trainer.hpp"

using namespace acgan;

namespace {

const std::vector<std::size_t> kSmall{16, 16};

struct Setup {
    ConditionalDataset data;
    Generator gen;
    Discriminator disc;
    TrainConfig config;
};

Setup gauss_setup(LossSpec loss, std::size_t steps, std::uint64_t seed = 1) {
    Setup s{sample_dataset(GaussModesTask{}, 640, seed),
            make_generator(8, 2, 0, kSmall, OutputActivation::kIdentity, seed + 10),
            make_discriminator(8, 2, kSmall, seed + 20),
            {}};
    s.config.steps = steps;
    s.config.batch_size = 32;
    s.config.seed = seed;
    s.config.loss = loss;
    s.config.lr = 1e-3;
    return s;
}

// y = +1 for every real row; G emits exactly -1.
Setup separable_setup() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    ConditionalDataset ds;
    ds.xs = Tensor({6400, 1});
    ds.ys = Tensor({6400, 1});
    for (std::size_t i = 0; i < 6400; ++i) {
        ds.xs[i] = n(rng);
        ds.ys[i] = 1.0 + 0.1 * n(rng);
    }
    Generator gen = make_generator(1, 1, 0, kSmall, OutputActivation::kIdentity, 1);
    for (auto& p : gen.params) std::fill(p.values().begin(), p.values().end(), 0.0);
    gen.params.back()[0] = -1.0;
    Setup s{std::move(ds), std::move(gen), make_discriminator(1, 1, kSmall, 2), {}};
    s.config.batch_size = 64;
    s.config.loss = LossSpec::classic();
    s.config.lr = 1e-3;
    s.config.seed = 4;
    return s;
}

std::string metrics_csv(const RunLog& log) {
    std::ostringstream out;
    write_metrics_csv(log, out);
    return out.str();
}

}  // namespace

TEST(Trainer, AdamZeroGradientIsFixedPoint) {
    std::vector<Tensor> params{Tensor({2, 2}, {1.0, -2.0, 3.0, 0.5})};
    const auto before = params;
    AdamState st = AdamState::zeros_like(params);
    const std::vector<Tensor> grads{Tensor({2, 2}, 0.0)};
    for (int i = 0; i < 5; ++i) adam_step(params, grads, st, 1e-3, 0.5, 0.999);
    EXPECT_EQ(params, before);
    EXPECT_EQ(st.step, 5u);
}

TEST(Trainer, AdamFirstStepIsSignedLr) {
    std::vector<Tensor> params{Tensor({4}, {0.0, 1.0, -1.0, 2.0})};
    const auto before = params;
    AdamState st = AdamState::zeros_like(params);
    const std::vector<Tensor> grads{Tensor({4}, {0.3, -5.0, 1e-3, -2e-2})};
    const double lr = 2e-4;
    adam_step(params, grads, st, lr, 0.5, 0.999);
    for (std::size_t i = 0; i < 4; ++i) {
        const double g = grads[0][i];
        const double expected = -lr * (g > 0 ? 1.0 : -1.0) * std::abs(g) / (std::abs(g) + kAdamEpsilon);
        EXPECT_NEAR(params[0][i] - before[0][i], expected, 1e-15);
        EXPECT_NEAR(params[0][i] - before[0][i], -lr * (g > 0 ? 1.0 : -1.0), lr * 1e-5);
    }
}

TEST(Trainer, AdamShapeMismatch) {
    std::vector<Tensor> params{Tensor({2})};
    AdamState st = AdamState::zeros_like(params);
    const std::vector<Tensor> grads{Tensor({3})};
    EXPECT_THROW(adam_step(params, grads, st, 1e-3, 0.5, 0.999), ShapeError);
}

TEST(Trainer, ConfigValidation) {
    TrainConfig c;
    c.lr = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.beta2 = 1.0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.batch_size = 1;
    EXPECT_THROW(c.validate(), Error);
    TrainConfig d;
    d.steps = 17;
    d.ac_source = AcSource::kOutsideBatch;
    const auto back = train_config_from_json(to_json(d));
    EXPECT_EQ(back.steps, d.steps);
    EXPECT_EQ(back.ac_source, AcSource::kOutsideBatch);
}

TEST(Trainer, ZeroEpochsIsNoOp) {
    auto s = gauss_setup(LossSpec{}, 0);
    s.config.steps.reset();
    s.config.epochs = 0;
    const auto r = train(s.gen, s.disc, s.data, s.config);
    EXPECT_EQ(r.gen.params, s.gen.params);
    EXPECT_EQ(r.disc.params, s.disc.params);
    EXPECT_TRUE(r.log.steps.empty());
}

TEST(Trainer, IdenticalRunsAreIdentical) {
    auto s = gauss_setup(LossSpec{}, 40);
    const auto a = train(s.gen, s.disc, s.data, s.config);
    const auto b = train(s.gen, s.disc, s.data, s.config);
    EXPECT_EQ(a.gen.params, b.gen.params);
    EXPECT_EQ(a.disc.params, b.disc.params);
    EXPECT_EQ(metrics_csv(a.log), metrics_csv(b.log));
}

TEST(Trainer, LogsEveryStepWithEpochSnapshots) {
    auto s = gauss_setup(LossSpec{}, 45);
    const auto r = train(s.gen, s.disc, s.data, s.config);
    ASSERT_EQ(r.log.steps.size(), 45u);
    for (std::size_t i = 0; i < 45; ++i) EXPECT_EQ(r.log.steps[i].step, i + 1);
    EXPECT_EQ(r.log.epochs.size(), 2u);  // 20 batches per epoch
    const std::string csv = metrics_csv(r.log);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "step,d_real_cond,d_gen_cond,d_real_ac,d_gen_ac,d_total,g_adv,g_recon,g_total,grad_norm_G,grad_norm_D");
}

TEST(Trainer, EpochCountSetsSteps) {
    auto s = gauss_setup(LossSpec{}, 0);
    s.config.steps.reset();
    s.config.epochs = 2;
    EXPECT_EQ(train(s.gen, s.disc, s.data, s.config).log.steps.size(), 40u);
    s.config.d_steps_per_g_step = 2;
    EXPECT_EQ(train(s.gen, s.disc, s.data, s.config).log.steps.size(), 20u);
}

TEST(Trainer, ClassicRunStillLogsAcontrarioTerms) {
    auto s = gauss_setup(LossSpec::classic(), 5);
    const auto r = train(s.gen, s.disc, s.data, s.config);
    for (const auto& rec : r.log.steps) {
        EXPECT_GT(rec.losses.d_real_ac, 0.0);
        EXPECT_GT(rec.losses.d_gen_ac, 0.0);
        EXPECT_NEAR(rec.losses.d_total, rec.losses.d_real_cond + rec.losses.d_gen_cond, 1e-12);
    }
}

TEST(Trainer, ReducedAcontrarioMatchesClassicBitForBit) {
    LossSpec reduced;
    reduced.lambdas = {1, 1, 0, 0};
    auto a = gauss_setup(reduced, 60);
    auto b = gauss_setup(LossSpec::classic(), 60);
    b.config.log_acontrario = false;
    const auto ra = train(a.gen, a.disc, a.data, a.config);
    const auto rb = train(b.gen, b.disc, b.data, b.config);
    EXPECT_EQ(ra.gen.params, rb.gen.params);
    EXPECT_EQ(ra.disc.params, rb.disc.params);
    for (std::size_t i = 0; i < ra.log.steps.size(); ++i) {
        EXPECT_EQ(ra.log.steps[i].losses.d_total, rb.log.steps[i].losses.d_total);
        EXPECT_EQ(ra.log.steps[i].losses.g_total, rb.log.steps[i].losses.g_total);
    }
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
    for (const auto& loss : {LossSpec{}, LossSpec::classic()}) {
        auto s = gauss_setup(loss, 50);
        s.config.ema_decay = 0.9;
        Generator g = make_generator(8, 2, 2, kSmall, OutputActivation::kIdentity, 5);
        Trainer full(g, s.disc, s.data, s.config);
        full.run();
        Trainer first(g, s.disc, s.data, s.config);
        for (int i = 0; i < 23; ++i) first.step();
        const auto doc = nlohmann::json::parse(first.checkpoint().dump());
        Trainer resumed = Trainer::resume(doc, s.data, s.config);
        EXPECT_EQ(resumed.steps_done(), 23u);
        resumed.run();
        EXPECT_EQ(resumed.generator().params, full.generator().params);
        EXPECT_EQ(resumed.ema_generator().params, full.ema_generator().params);
        EXPECT_EQ(resumed.discriminator().params, full.discriminator().params);
        for (std::size_t i = 0; i < resumed.log().steps.size(); ++i) {
            EXPECT_EQ(resumed.log().steps[i].losses.d_total, full.log().steps[i + 23].losses.d_total);
        }
    }
}

TEST(Trainer, CheckpointFileRoundTrip) {
    auto s = gauss_setup(LossSpec{}, 10);
    Trainer t(s.gen, s.disc, s.data, s.config);
    t.run();
    const auto path = std::filesystem::temp_directory_path() / "acgan_trainer_test" / "ckpt.json";
    save_checkpoint(t, path, {{"note", "x"}});
    const auto j = load_checkpoint(path);
    EXPECT_EQ(generator_from_json(j.at("generator")).params, t.generator().params);
    EXPECT_EQ(discriminator_from_json(j.at("discriminator")).params, t.discriminator().params);
    EXPECT_EQ(j.at("step"), 10);
    EXPECT_EQ(j.at("meta").at("note"), "x");

    auto bad = j;
    bad["format_version"] = kCheckpointFormatVersion + 1;
    write_json_file(path, bad);
    try {
        load_checkpoint(path);
        FAIL() << "expected CheckpointError";
    } catch (const CheckpointError& e) {
        EXPECT_NE(std::string(e.what()).find("format_version"), std::string::npos);
    }
    write_text_file(path, "{\"format_version\": 1,");
    EXPECT_THROW(load_checkpoint(path), Error);
    std::filesystem::remove_all(path.parent_path());
}

TEST(Trainer, OptimalPhaseLeavesGeneratorUntouched) {
    auto s = gauss_setup(LossSpec{}, 20);
    const auto trained = train(s.gen, s.disc, s.data, s.config);
    const auto before = checksum(trained.gen.params);
    OptimalDConfig phase;
    phase.seed = 9;
    const auto r = optimal_discriminator_phase(trained.gen, trained.disc, s.data, s.config, phase);
    EXPECT_EQ(checksum(trained.gen.params), before);
    EXPECT_EQ(r.steps, 20u);
    EXPECT_NE(r.disc.params, trained.disc.params);
}

TEST(Trainer, OptimalPhaseSeparatesToyAndConverges) {
    auto s = separable_setup();
    OptimalDConfig phase;
    phase.epochs = 5;
    phase.seed = 7;
    const auto r = optimal_discriminator_phase(s.gen, s.disc, s.data, s.config, phase);
    ASSERT_EQ(r.losses.size(), 500u);
    // 100-step moving average never rises between consecutive windows.
    for (std::size_t w = 1; w < 5; ++w) {
        double prev = 0.0, cur = 0.0;
        for (std::size_t i = 0; i < 100; ++i) {
            prev += r.losses[(w - 1) * 100 + i];
            cur += r.losses[w * 100 + i];
        }
        EXPECT_LE(cur, prev) << "window " << w;
    }
    const Tensor fake = generate(s.gen, s.data.xs);
    const Tensor real_logit = discriminate(r.disc, s.data.xs, s.data.ys, DiscOutput::kLogit);
    const Tensor fake_logit = discriminate(r.disc, s.data.xs, fake, DiscOutput::kLogit);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < s.data.size(); ++i) correct += (real_logit[i] > 0) + (fake_logit[i] < 0);
    EXPECT_GE(correct / (2.0 * static_cast<double>(s.data.size())), 0.99);
}

TEST(Trainer, OptimalPhasePlateauStops) {
    auto s = separable_setup();
    OptimalDConfig phase;
    phase.plateau_tol = 1e-2;
    phase.plateau_window = 50;
    phase.max_epochs = 20;
    phase.seed = 7;
    const auto r = optimal_discriminator_phase(s.gen, s.disc, s.data, s.config, phase);
    EXPECT_TRUE(r.plateaued);
    EXPECT_LT(r.steps, 2000u);
    EXPECT_GE(r.steps, 100u);
}

TEST(Trainer, GradientTelemetryFiniteAndNonzero) {
    auto s = gauss_setup(LossSpec{}, 100);
    const auto r = train(s.gen, s.disc, s.data, s.config);
    for (const auto& rec : r.log.steps) {
        EXPECT_TRUE(std::isfinite(rec.grad_norm_g));
        EXPECT_GT(rec.grad_norm_g, 0.0);
        EXPECT_GT(rec.grad_norm_d, 0.0);
    }
}

TEST(Trainer, NonFiniteDataAbortsNamingTheTerm) {
    auto s = gauss_setup(LossSpec{}, 3);
    s.data.ys[0] = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < s.data.size(); ++i) s.data.ys.at(i, 1) = std::numeric_limits<double>::infinity();
    try {
        train(s.gen, s.disc, s.data, s.config);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite loss term"), std::string::npos);
    }
}
