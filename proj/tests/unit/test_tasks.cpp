#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "acgan/pairing.hpp"
#include "acgan/tasks.hpp"

using namespace acgan;

TEST(Tasks, SameSeedSameCsvBytes) {
    const auto csv = [](std::uint64_t seed) {
        std::ostringstream out;
        write_dataset_csv(sample_dataset(GaussModesTask{}, 500, seed), out);
        return out.str();
    };
    EXPECT_EQ(csv(4), csv(4));
    EXPECT_NE(csv(4), csv(5));
    const auto reg = [] {
        std::ostringstream out;
        write_dataset_csv(sample_dataset(CondRegressionTask{}, 300, 2), out);
        return out.str();
    };
    EXPECT_EQ(reg(), reg());
}

TEST(Tasks, StratifiedLabels) {
    const auto ds = sample_dataset(GaussModesTask{}, 8000, 1);
    ASSERT_TRUE(ds.labels);
    std::vector<int> counts(8, 0);
    for (int l : *ds.labels) counts[l]++;
    for (int c : counts) EXPECT_EQ(c, 1000);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t c = 0; c < 8; ++c) {
            EXPECT_EQ(ds.xs.at(i, c), static_cast<int>(c) == (*ds.labels)[i] ? 1.0 : 0.0);
        }
    }
}

TEST(Tasks, ModeMeansNearCenters) {
    const GaussModesTask task;
    const auto ds = sample_dataset(task, 8000, 2);
    const auto centers = task.centers();
    std::vector<std::array<double, 2>> sums(8, {0.0, 0.0});
    for (std::size_t i = 0; i < ds.size(); ++i) {
        sums[(*ds.labels)[i]][0] += ds.ys.at(i, 0);
        sums[(*ds.labels)[i]][1] += ds.ys.at(i, 1);
    }
    const double bound = 3 * task.sigma / std::sqrt(1000.0);
    for (std::size_t c = 0; c < 8; ++c) {
        EXPECT_NEAR(sums[c][0] / 1000, centers[c][0], bound);
        EXPECT_NEAR(sums[c][1] / 1000, centers[c][1], bound);
    }
}

TEST(Tasks, CentersOnCircle) {
    const GaussModesTask task{5, 3.0, 0.1};
    for (const auto& c : task.centers()) EXPECT_NEAR(std::hypot(c[0], c[1]), 3.0, 1e-12);
    EXPECT_THROW((GaussModesTask{8, 1.0, 0.25}).validate(), Error);
}

TEST(Tasks, OracleFixedPointAndTieBreak) {
    const GaussModesTask task;
    const auto centers = task.centers();
    EXPECT_EQ(oracle_classify(task, centers[3]), 3);
    // Two modes at (4, 0) and (-4, ~0): points near the origin tie exactly in double.
    const GaussModesTask two{2, 4.0, 0.25};
    for (double y : {0.0, 1e-9, -1e-9}) {
        const std::array<double, 2> p{0.0, y};
        EXPECT_EQ(oracle_classify(two, p), 0) << y;
    }
}

TEST(Tasks, OracleMatchesBruteForceTable) {
    const GaussModesTask task;
    const auto centers = task.centers();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int n = 0; n < 10000; ++n) {
        const std::array<double, 2> y{u(rng), u(rng)};
        int best = 0;
        double best_d = 1e300;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double d = (y[0] - centers[c][0]) * (y[0] - centers[c][0]) + (y[1] - centers[c][1]) * (y[1] - centers[c][1]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        ASSERT_EQ(oracle_classify(task, y), best);
    }
}

TEST(Tasks, RealDataOracleAccuracy) {
    const GaussModesTask task;
    const auto ds = sample_dataset(task, 8000, 3);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        hits += oracle_classify(task, ds.ys.row(i).values()) == (*ds.labels)[i];
    }
    EXPECT_GE(hits / 8000.0, 0.999);
}

TEST(Tasks, RegressionMapReproducible) {
    const CondRegressionTask a, b;
    EXPECT_EQ(a.weights(), b.weights());
    EXPECT_EQ(a.bias(), b.bias());
    CondRegressionTask c;
    c.map_seed = 8;
    EXPECT_NE(a.weights(), c.weights());
}

TEST(Tasks, RegressionNoiseLevel) {
    const CondRegressionTask task;
    const auto ds = sample_dataset(task, 20000, 5);
    const Tensor clean = task.noiseless(ds.xs);
    double ss = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) ss += (ds.ys[i] - clean[i]) * (ds.ys[i] - clean[i]);
    EXPECT_NEAR(std::sqrt(ss / clean.size()), task.noise_std, 0.002);
}

TEST(Tasks, RegressionMetricsIdentity) {
    const CondRegressionTask task;
    const auto ds = sample_dataset(task, 100, 5);
    const Tensor clean = task.noiseless(ds.xs);
    const auto m = regression_metrics(clean, clean);
    EXPECT_EQ(m.rmse, 0.0);
    EXPECT_EQ(m.log_rmse, 0.0);
    EXPECT_EQ(m.abs_rel, 0.0);
}

TEST(Tasks, RegressionMetricsHandValue) {
    const auto m = regression_metrics(Tensor::matrix(1, 2, {0.0, 0.0}), Tensor::matrix(1, 2, {3.0, 4.0}));
    EXPECT_NEAR(m.rmse, 3.535534, 1e-6);
    EXPECT_NEAR(m.rmse, std::sqrt(12.5), 1e-15);
}

// Second, one-pass implementation of the three metrics.
TEST(Tasks, RegressionMetricsDoubleImplementation) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 2.0);
    Tensor pred({400, 3}), target({400, 3});
    for (auto& v : pred.values()) v = n(rng);
    for (auto& v : target.values()) v = n(rng);
    double se = 0, sle = 0, rel = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = pred[i], t = target[i];
        se += (p - t) * (p - t);
        const double lp = std::log1p(std::abs(p)), lt = std::log1p(std::abs(t));
        sle += (lp - lt) * (lp - lt);
        rel += std::abs(p - t) / (1 + std::abs(t));
    }
    const double count = static_cast<double>(pred.size());
    const auto m = regression_metrics(pred, target);
    EXPECT_NEAR(m.rmse, std::sqrt(se / count), 1e-10);
    EXPECT_NEAR(m.log_rmse, std::sqrt(sle / count), 1e-10);
    EXPECT_NEAR(m.abs_rel, rel / count, 1e-10);
}

TEST(Tasks, TaskJsonRoundTrip) {
    const Task g = GaussModesTask{6, 5.0, 0.3};
    const Task r = CondRegressionTask{3, 2, 0.1, 11};
    EXPECT_EQ(task_to_json(task_from_json(task_to_json(g))), task_to_json(g));
    EXPECT_EQ(task_to_json(task_from_json(task_to_json(r))), task_to_json(r));
    EXPECT_EQ(task_x_dim(g), 6u);
    EXPECT_EQ(task_y_dim(r), 2u);
}
