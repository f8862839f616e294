#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "acgan/evalcond.hpp"

using namespace acgan;

namespace {

PairingLogits filled(std::vector<double> v) {
    PairingLogits l;
    for (auto& arr : l.values) arr = v;
    return l;
}

// Generator whose output is exactly centers[argmax(x)] for one-hot x.
Generator centroid_generator(const GaussModesTask& task, bool ignore_condition) {
    const std::vector<std::size_t> hidden{task.k};
    Generator gen = make_generator(task.k, 2, 0, hidden, OutputActivation::kIdentity, 0);
    const auto centers = task.centers();
    // Hidden layer copies the one-hot input; output layer maps it to centers.
    Tensor& w0 = gen.params[0];
    Tensor& w1 = gen.params[2];
    std::fill(w0.values().begin(), w0.values().end(), 0.0);
    for (std::size_t i = 0; i < task.k; ++i) w0.at(i, i) = 1.0;
    for (std::size_t i = 0; i < task.k; ++i) {
        const auto& c = centers[ignore_condition ? 0 : i];
        w1.at(i, 0) = c[0];
        w1.at(i, 1) = c[1];
    }
    return gen;
}

Tensor gaussian_cloud(std::size_t n, double cx, double cy, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sd);
    Tensor t({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        t.at(i, 0) = cx + g(rng);
        t.at(i, 1) = cy + g(rng);
    }
    return t;
}

}  // namespace

TEST(Evalcond, HistogramConservesCounts) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    PairingLogits l;
    for (std::size_t p = 0; p < 4; ++p) {
        for (int i = 0; i < 300 + 7 * static_cast<int>(p); ++i) l.values[p].push_back(n(rng) + p);
    }
    const auto h = build_histogram(l, 50);
    EXPECT_EQ(h.bins(), 50u);
    for (std::size_t p = 0; p < 4; ++p) {
        EXPECT_EQ(std::accumulate(h.counts[p].begin(), h.counts[p].end(), std::size_t{0}), l.values[p].size());
        EXPECT_EQ(h.n[p], l.values[p].size());
    }
    for (std::size_t i = 0; i + 1 < h.edges.size(); ++i) EXPECT_LT(h.edges[i], h.edges[i + 1]);
    double lo = 1e300, hi = -1e300;
    for (const auto& arr : l.values) {
        lo = std::min(lo, *std::min_element(arr.begin(), arr.end()));
        hi = std::max(hi, *std::max_element(arr.begin(), arr.end()));
    }
    EXPECT_LE(h.edges.front(), lo);
    EXPECT_GE(h.edges.back(), hi);
}

TEST(Evalcond, DegenerateHistogram) {
    const auto h = build_histogram(filled(std::vector<double>(40, 2.5)), 50);
    ASSERT_EQ(h.bins(), 1u);
    EXPECT_EQ(h.edges[1] - h.edges[0], 1.0);
    for (std::size_t p = 0; p < 4; ++p) EXPECT_EQ(h.counts[p][0], 40u);
}

TEST(Evalcond, UniformLogitsBinomialCounts) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(100000);
    for (auto& x : v) x = u(rng);
    const auto h = build_histogram(filled(v), 10);
    // three binomial standard deviations, sqrt(N p (1 - p)) with N = 1e5, p = 0.1
    const double tol = 3 * std::sqrt(1e5 * 0.09);
    for (auto c : h.counts[0]) EXPECT_NEAR(static_cast<double>(c), 1e4, tol);
}

TEST(Evalcond, HistogramCsvHeader) {
    std::ostringstream out;
    write_histogram_csv(build_histogram(filled({0.0, 1.0}), 2), out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "bin_lo,bin_hi,count_real_cond,count_gen_cond,count_real_ac,count_gen_ac");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, 2);
}

TEST(Evalcond, ClassificationRates) {
    EXPECT_EQ(classification_rates(filled({1.0, 1.0, 1.0}))[Pairing::kGenAc], 1.0);
    EXPECT_EQ(classification_rates(filled({-1.0, 1.0}))[Pairing::kRealAc], 0.5);
    EXPECT_EQ(classification_rates(filled({-1.0, -2.0}))[Pairing::kRealCond], 0.0);
}

TEST(Evalcond, RatesInvariantUnderSigmoid) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 3.0);
    PairingLogits l, p;
    for (std::size_t k = 0; k < 4; ++k) {
        for (int i = 0; i < 500; ++i) {
            const double v = n(rng) + static_cast<double>(k) - 1.5;
            l.values[k].push_back(v);
            p.values[k].push_back(1.0 / (1.0 + std::exp(-v)));
        }
    }
    const auto a = classification_rates(l, 0.0);
    const auto b = classification_rates(p, 0.5);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(a.true_rate[k], b.true_rate[k]);
}

TEST(Evalcond, ZeroDiscriminatorLogitsAreZero) {
    const auto ds = sample_dataset(GaussModesTask{}, 400, 1);
    const std::vector<std::size_t> hidden{8, 8};
    Discriminator d = make_discriminator(8, 2, hidden, 1);
    for (auto& p : d.params) std::fill(p.values().begin(), p.values().end(), 0.0);
    const Generator gen = make_generator(8, 2, 0, hidden, OutputActivation::kIdentity, 2);
    const auto l = collect_logits(d, gen, ds, 100, 5);
    for (const auto& arr : l.values) {
        ASSERT_EQ(arr.size(), 100u);
        for (double v : arr) EXPECT_EQ(v, 0.0);
    }
}

TEST(Evalcond, CollectLogitsDeterministicAndDirect) {
    const auto ds = sample_dataset(GaussModesTask{}, 400, 1);
    const std::vector<std::size_t> hidden{8, 8};
    const Discriminator d = make_discriminator(8, 2, hidden, 3);
    const Generator gen = make_generator(8, 2, 0, hidden, OutputActivation::kIdentity, 4);
    const auto a = collect_logits(d, gen, ds, ds.size(), 5);
    const auto b = collect_logits(d, gen, ds, ds.size(), 5);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(a.values[k], b.values[k]);
    // With n_eval = N the real-cond array is a permutation of D over every row.
    std::vector<double> direct;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        direct.push_back(discriminate(d, ds.xs.row(i), ds.ys.row(i), DiscOutput::kLogit).item());
    }
    auto got = a[Pairing::kRealCond];
    std::sort(got.begin(), got.end());
    std::sort(direct.begin(), direct.end());
    EXPECT_EQ(got, direct);
    EXPECT_THROW(collect_logits(d, gen, ds, 1, 5), Error);
    EXPECT_THROW(collect_logits(d, gen, ds, ds.size() + 1, 5), Error);
}

TEST(Evalcond, OracleCentroidGenerator) {
    for (std::size_t k : {3u, 8u, 12u}) {
        const GaussModesTask task{k, 4.0 * static_cast<double>(k) / 8.0 + 2.0, 0.25};
        EXPECT_EQ(oracle_accuracy(centroid_generator(task, false), task, 200, k), 1.0);
        EXPECT_NEAR(oracle_accuracy(centroid_generator(task, true), task, 200, k), 1.0 / static_cast<double>(k), 1e-12);
    }
}

TEST(Evalcond, OracleAtInitMatchesRecomputation) {
    const GaussModesTask task;
    const std::vector<std::size_t> hidden{128, 128};
    Generator gen = make_generator(8, 2, 0, hidden, OutputActivation::kIdentity, 21);
    for (auto& p : gen.params) {
        std::mt19937_64 rng(p.size());
        std::normal_distribution<double> n(0.0, 0.3);
        for (auto& v : p.values()) v = n(rng);
    }
    const double acc = oracle_accuracy(gen, task, 1000, 3);
    std::size_t hits = 0;
    for (int label = 0; label < 8; ++label) {
        const std::vector<int> labels{label};
        const Tensor y = generate(gen, task.one_hot(labels));
        hits += oracle_classify(task, y.values()) == label;
    }
    // Without noise input G is deterministic per label, so the estimate is exact.
    EXPECT_EQ(acc, hits / 8.0);
}

TEST(Evalcond, OracleRejectsRegression) {
    const std::vector<std::size_t> hidden{4, 4};
    const Generator gen = make_generator(4, 2, 0, hidden, OutputActivation::kIdentity, 1);
    EXPECT_THROW(oracle_accuracy(gen, CondRegressionTask{}, 10, 1), Error);
}

TEST(Evalcond, TwoProportionByHand) {
    // p1 = 0.6, p2 = 0.4, n = 100 each: pooled 0.5, se = sqrt(0.25 * 0.02) = 0.0707107
    const auto r = two_proportion_z_test(60, 100, 40, 100);
    EXPECT_NEAR(r.z, 0.2 / std::sqrt(0.005), 1e-12);
    EXPECT_NEAR(r.p_value, std::erfc(r.z / std::sqrt(2.0)), 1e-12);
    const auto same = two_proportion_z_test(0, 50, 0, 70);
    EXPECT_EQ(same.z, 0.0);
    EXPECT_EQ(same.p_value, 1.0);
}

TEST(Evalcond, NdbIdenticalSetsIsZero) {
    const Tensor real = gaussian_cloud(2000, 0.0, 0.0, 1.0, 1);
    const auto r = ndb_score(real, real, 20, 0.05, 3);
    EXPECT_EQ(r.ndb_over_k, 0.0);
    EXPECT_EQ(r.bins.size(), 20u);
}

TEST(Evalcond, NdbFarClustersIsOne) {
    const Tensor a = gaussian_cloud(100, 0.0, 0.0, 0.1, 1);
    const Tensor b = gaussian_cloud(100, 50.0, 50.0, 0.1, 2);
    Tensor real({200, 2});
    std::copy(a.values().begin(), a.values().end(), real.values().begin());
    std::copy(b.values().begin(), b.values().end(), real.values().begin() + 200);
    // Real points split across both clusters; generated points only in B.
    const Tensor gen_only_b = gaussian_cloud(200, 50.0, 50.0, 0.1, 3);
    const auto r = ndb_score(real, gen_only_b, 2, 0.05, 4);
    EXPECT_EQ(r.ndb_over_k, 1.0);
    for (const auto& bin : r.bins) EXPECT_TRUE(bin.significant);
}

TEST(Evalcond, NdbCollapsedGenerator) {
    const GaussModesTask task;
    const auto ds = sample_dataset(task, 8000, 5);
    const auto c0 = task.centers()[0];
    const Tensor collapsed = gaussian_cloud(8000, c0[0], c0[1], task.sigma, 6);
    EXPECT_GE(ndb_score(ds.ys, collapsed, 8, 0.05, 7).ndb_over_k, 0.75);
}

TEST(Evalcond, NdbCountMatchesFlags) {
    const Tensor real = gaussian_cloud(1000, 0.0, 0.0, 1.0, 1);
    const Tensor gen = gaussian_cloud(1000, 0.5, 0.0, 1.0, 2);
    const auto r = ndb_score(real, gen, 10, 0.05, 3);
    const auto sig = std::count_if(r.bins.begin(), r.bins.end(), [](const NdbBin& b) { return b.significant; });
    EXPECT_EQ(r.ndb_over_k, static_cast<double>(sig) / 10.0);
    const auto j = to_json(r);
    EXPECT_EQ(j.at("k"), 10);
    EXPECT_EQ(j.at("per_bin").size(), 10u);
}

TEST(Evalcond, NdbBootstrapFalsePositiveRate) {
    double total = 0.0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const Tensor real = gaussian_cloud(2000, 0.0, 0.0, 1.0, 1000 + rep);
        const Tensor gen = gaussian_cloud(2000, 0.0, 0.0, 1.0, 5000 + rep);
        total += ndb_score(real, gen, 20, 0.05, rep).ndb_over_k;
    }
    EXPECT_LE(total / 100.0, 2 * 0.05);
}

TEST(Evalcond, NdbRejectsTooManyBins) {
    Tensor few({10, 2}, 0.0);
    for (std::size_t i = 0; i < 3; ++i) few.at(i, 0) = static_cast<double>(i);
    EXPECT_THROW(ndb_score(few, few, 5, 0.05, 1), Error);
}

TEST(Evalcond, KMeansSeparatesClusters) {
    const Tensor a = gaussian_cloud(50, -10.0, 0.0, 0.1, 1);
    const Tensor b = gaussian_cloud(50, 10.0, 0.0, 0.1, 2);
    Tensor pts({100, 2});
    std::copy(a.values().begin(), a.values().end(), pts.values().begin());
    std::copy(b.values().begin(), b.values().end(), pts.values().begin() + 100);
    const auto r = kmeans(pts, 2, kKMeansIterations, 3);
    for (std::size_t i = 1; i < 50; ++i) EXPECT_EQ(r.assignment[i], r.assignment[0]);
    for (std::size_t i = 51; i < 100; ++i) EXPECT_EQ(r.assignment[i], r.assignment[50]);
    EXPECT_NE(r.assignment[0], r.assignment[50]);
}
