#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgan/nets.hpp"
#include "acgan/pairing.hpp"
#include "acgan/tasks.hpp"

namespace acgan {

/// Pre-activation discriminator outputs f(x, y), one array per pairing.
struct PairingLogits {
    std::array<std::vector<double>, 4> values;

    std::vector<double>& operator[](Pairing p) { return values[static_cast<std::size_t>(p)]; }
    const std::vector<double>& operator[](Pairing p) const { return values[static_cast<std::size_t>(p)]; }
};

/// Evaluates D on the four pairings of n_eval dataset rows (chosen by a
/// seeded shuffle). A-contrario partners use the training derangement sampler.
PairingLogits collect_logits(const Discriminator& disc, const Generator& gen, const ConditionalDataset& data,
                             std::size_t n_eval, std::uint64_t seed, AcSource source = AcSource::kWithinBatch);

struct FourWayHistogram {
    std::vector<double> edges;  // n_bins + 1, strictly increasing
    std::array<std::vector<std::size_t>, 4> counts;
    std::array<std::size_t, 4> n{};

    std::size_t bins() const { return edges.size() - 1; }
};

/// Shared equal-width bins over the global min/max of all four arrays. The
/// top edge is inclusive. All-equal input yields one unit-width bin.
FourWayHistogram build_histogram(const PairingLogits& logits, std::size_t n_bins = 50);

void write_histogram_csv(const FourWayHistogram& h, std::ostream& out);

struct ClassificationReport {
    std::array<double, 4> true_rate{};  // fraction with logit > threshold

    double operator[](Pairing p) const { return true_rate[static_cast<std::size_t>(p)]; }
};

ClassificationReport classification_rates(const PairingLogits& logits, double threshold = 0.0);

/// Fraction of generated points whose nearest-center label equals the
/// conditioning label, n_per_label samples for each of the task's labels.
double oracle_accuracy(const Generator& gen, const Task& task, std::size_t n_per_label, std::uint64_t seed);

struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> assignment;
};

/// Lloyd iterations from k-means++ seeding; an emptied cluster keeps its centroid.
KMeansResult kmeans(const Tensor& points, std::size_t k, std::size_t iterations, std::uint64_t seed);
std::size_t nearest_centroid(std::span<const std::vector<double>> centroids, std::span<const double> point);

struct TwoProportionResult {
    double z = 0.0;
    double p_value = 1.0;
};

/// Pooled two-proportion z-test, two-sided. Zero pooled variance yields z = 0.
TwoProportionResult two_proportion_z_test(std::size_t hits_a, std::size_t n_a, std::size_t hits_b, std::size_t n_b);

struct NdbBin {
    double real_proportion = 0.0;
    double gen_proportion = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

struct NdbReport {
    std::size_t k = 0;
    double alpha = 0.05;
    std::vector<NdbBin> bins;
    double ndb_over_k = 0.0;
};

inline constexpr std::size_t kKMeansIterations = 50;

/// Number of statistically different bins over k-means bins fitted on the real samples.
NdbReport ndb_score(const Tensor& real, const Tensor& gen, std::size_t k = 20, double alpha = 0.05,
                    std::uint64_t seed = 0);

/// Samples y_G for the dataset's conditions (rows in order) with seeded noise.
Tensor generate_for_dataset(const Generator& gen, const ConditionalDataset& data, std::uint64_t seed);

nlohmann::json to_json(const ClassificationReport& r);
nlohmann::json to_json(const NdbReport& r);

}  // namespace acgan
