#include "acgan/evalcond.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "acgan/io.hpp"

namespace acgan {

namespace {

Tensor sample_noise(std::size_t rows, std::size_t dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor z({rows, dim});
    for (double& v : z.values()) v = normal(rng);
    return z;
}

Tensor run_generator(const Generator& gen, const Tensor& x, Rng& rng) {
    if (gen.noise_dim == 0) return generate(gen, x);
    Tensor z = sample_noise(x.rows(), gen.noise_dim, rng);
    return generate(gen, x, &z);
}

}  // namespace

Tensor generate_for_dataset(const Generator& gen, const ConditionalDataset& data, std::uint64_t seed) {
    Rng rng(seed);
    return run_generator(gen, data.xs, rng);
}

PairingLogits collect_logits(const Discriminator& disc, const Generator& gen, const ConditionalDataset& data,
                             std::size_t n_eval, std::uint64_t seed, AcSource source) {
    if (n_eval < 2) throw Error("collect_logits: n_eval must be at least 2");
    if (n_eval > data.size()) throw Error("collect_logits: n_eval exceeds dataset size");
    Rng rng(seed);
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(n_eval);

    Rng ac_rng(seed ^ 0xac);
    PairBatch batch = make_pair_batch(data, rows, ac_rng, source);
    const Tensor y_gen = run_generator(gen, data.xs.gather_rows(batch.idx), rng);
    const FourPairings pairs = assemble_pairings(data, batch, y_gen);

    PairingLogits out;
    for (Pairing p : kAllPairings) {
        const Tensor logits = discriminate(disc, pairs[p].x, pairs[p].y, DiscOutput::kLogit);
        out[p].assign(logits.values().begin(), logits.values().end());
    }
    return out;
}

FourWayHistogram build_histogram(const PairingLogits& logits, std::size_t n_bins) {
    if (n_bins == 0) throw Error("build_histogram: n_bins must be positive");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& arr : logits.values) {
        if (arr.empty()) throw Error("build_histogram: empty logit array");
        for (double v : arr) {
            if (!std::isfinite(v)) throw Error("build_histogram: non-finite logit");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    FourWayHistogram h;
    if (lo == hi) {
        h.edges = {lo - 0.5, lo + 0.5};
    } else {
        h.edges.resize(n_bins + 1);
        const double width = (hi - lo) / static_cast<double>(n_bins);
        for (std::size_t i = 0; i <= n_bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
        h.edges.back() = hi;
    }
    const std::size_t bins = h.bins();
    for (std::size_t p = 0; p < 4; ++p) {
        h.counts[p].assign(bins, 0);
        h.n[p] = logits.values[p].size();
        for (double v : logits.values[p]) {
            // First edge strictly greater than v, minus one; top edge inclusive.
            auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
            std::size_t b = static_cast<std::size_t>(it - h.edges.begin());
            b = b == 0 ? 0 : b - 1;
            h.counts[p][std::min(b, bins - 1)] += 1;
        }
    }
    return h;
}

void write_histogram_csv(const FourWayHistogram& h, std::ostream& out) {
    out << "bin_lo,bin_hi,count_real_cond,count_gen_cond,count_real_ac,count_gen_ac\n";
    for (std::size_t b = 0; b < h.bins(); ++b) {
        out << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]);
        for (std::size_t p = 0; p < 4; ++p) out << ',' << h.counts[p][b];
        out << '\n';
    }
}

ClassificationReport classification_rates(const PairingLogits& logits, double threshold) {
    ClassificationReport r;
    for (std::size_t p = 0; p < 4; ++p) {
        const auto& arr = logits.values[p];
        if (arr.empty()) throw Error("classification_rates: empty logit array");
        const auto hits = std::count_if(arr.begin(), arr.end(), [&](double v) { return v > threshold; });
        r.true_rate[p] = static_cast<double>(hits) / static_cast<double>(arr.size());
    }
    return r;
}

double oracle_accuracy(const Generator& gen, const Task& task, std::size_t n_per_label, std::uint64_t seed) {
    const auto* gm = std::get_if<GaussModesTask>(&task);
    if (!gm) throw Error("oracle_accuracy: task has no oracle classifier");
    if (n_per_label == 0) throw Error("oracle_accuracy: n_per_label must be positive");
    Rng rng(seed);
    std::size_t correct = 0;
    for (std::size_t label = 0; label < gm->k; ++label) {
        const std::vector<int> labels(n_per_label, static_cast<int>(label));
        const Tensor y = run_generator(gen, gm->one_hot(labels), rng);
        for (std::size_t i = 0; i < n_per_label; ++i) {
            const std::array<double, 2> pt{y.at(i, 0), y.at(i, 1)};
            correct += oracle_classify(*gm, pt) == static_cast<int>(label) ? 1 : 0;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n_per_label * gm->k);
}

std::size_t nearest_centroid(std::span<const std::vector<double>> centroids, std::span<const double> point) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        double d = 0.0;
        for (std::size_t j = 0; j < point.size(); ++j) {
            const double diff = point[j] - centroids[c][j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

KMeansResult kmeans(const Tensor& points, std::size_t k, std::size_t iterations, std::uint64_t seed) {
    const std::size_t n = points.rows(), dim = points.cols();
    if (k == 0) throw Error("kmeans: k must be positive");
    {
        std::set<std::vector<double>> distinct;
        for (std::size_t i = 0; i < n && distinct.size() <= k; ++i) {
            const auto row = points.values().subspan(i * dim, dim);
            distinct.emplace(row.begin(), row.end());
        }
        if (distinct.size() < k) throw Error("kmeans: k exceeds the number of distinct points");
    }
    const auto row = [&](std::size_t i) { return points.values().subspan(i * dim, dim); };
    Rng rng(seed);

    // k-means++ seeding.
    KMeansResult res;
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    {
        auto r = row(first(rng));
        res.centroids.emplace_back(r.begin(), r.end());
    }
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (res.centroids.size() < k) {
        const auto& last = res.centroids.back();
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = 0.0;
            auto r = row(i);
            for (std::size_t j = 0; j < dim; ++j) d += (r[j] - last[j]) * (r[j] - last[j]);
            d2[i] = std::min(d2[i], d);
            total += d2[i];
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            target -= d2[i];
            if (target < 0.0 && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        while (d2[pick] == 0.0 && pick > 0) --pick;
        auto r = row(pick);
        res.centroids.emplace_back(r.begin(), r.end());
    }

    res.assignment.assign(n, 0);
    for (std::size_t it = 0; it < iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest_centroid(res.centroids, row(i));
            changed = changed || c != res.assignment[i];
            res.assignment[i] = c;
        }
        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto r = row(i);
            for (std::size_t j = 0; j < dim; ++j) sums[res.assignment[i]][j] += r[j];
            ++counts[res.assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < dim; ++j) res.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
        }
        if (!changed && it > 0) break;
    }
    for (std::size_t i = 0; i < n; ++i) res.assignment[i] = nearest_centroid(res.centroids, row(i));
    return res;
}

TwoProportionResult two_proportion_z_test(std::size_t hits_a, std::size_t n_a, std::size_t hits_b, std::size_t n_b) {
    if (n_a == 0 || n_b == 0) throw Error("two_proportion_z_test: empty sample");
    const double pa = static_cast<double>(hits_a) / static_cast<double>(n_a);
    const double pb = static_cast<double>(hits_b) / static_cast<double>(n_b);
    const double pooled = static_cast<double>(hits_a + hits_b) / static_cast<double>(n_a + n_b);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n_a) + 1.0 / static_cast<double>(n_b)));
    if (se == 0.0) return {0.0, 1.0};
    const double z = (pa - pb) / se;
    const boost::math::normal_distribution<double> normal;
    return {z, 2.0 * boost::math::cdf(boost::math::complement(normal, std::fabs(z)))};
}

NdbReport ndb_score(const Tensor& real, const Tensor& gen, std::size_t k, double alpha, std::uint64_t seed) {
    if (real.ndim() != 2 || gen.ndim() != 2 || real.cols() != gen.cols()) {
        throw ShapeError("ndb: sample shapes " + shape_str(real.shape()) + " and " + shape_str(gen.shape()));
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("ndb: alpha must lie in (0, 1)");
    if (real.rows() < 10 * k || gen.rows() < 10 * k) throw Error("ndb: need at least 10*k samples in each set");
    const KMeansResult km = kmeans(real, k, kKMeansIterations, seed);

    std::vector<std::size_t> real_counts(k, 0), gen_counts(k, 0);
    for (auto a : km.assignment) ++real_counts[a];
    const std::size_t dim = gen.cols();
    for (std::size_t i = 0; i < gen.rows(); ++i) {
        ++gen_counts[nearest_centroid(km.centroids, gen.values().subspan(i * dim, dim))];
    }

    NdbReport rep;
    rep.k = k;
    rep.alpha = alpha;
    std::size_t significant = 0;
    for (std::size_t b = 0; b < k; ++b) {
        const auto t = two_proportion_z_test(real_counts[b], real.rows(), gen_counts[b], gen.rows());
        NdbBin bin;
        bin.real_proportion = static_cast<double>(real_counts[b]) / static_cast<double>(real.rows());
        bin.gen_proportion = static_cast<double>(gen_counts[b]) / static_cast<double>(gen.rows());
        bin.z = t.z;
        bin.p_value = t.p_value;
        bin.significant = t.p_value < alpha;
        significant += bin.significant ? 1 : 0;
        rep.bins.push_back(bin);
    }
    rep.ndb_over_k = static_cast<double>(significant) / static_cast<double>(k);
    return rep;
}

nlohmann::json to_json(const ClassificationReport& r) {
    nlohmann::json j;
    for (Pairing p : kAllPairings) j[std::string(to_string(p))] = r[p];
    return j;
}

nlohmann::json to_json(const NdbReport& r) {
    auto bins = nlohmann::json::array();
    for (const auto& b : r.bins) {
        bins.push_back({{"real_proportion", b.real_proportion},
                        {"gen_proportion", b.gen_proportion},
                        {"z", b.z},
                        {"p_value", b.p_value},
                        {"significant", b.significant}});
    }
    return {{"k", r.k}, {"alpha", r.alpha}, {"ndb_over_k", r.ndb_over_k}, {"per_bin", bins}};
}

}  // namespace acgan
