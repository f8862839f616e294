#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acgan/tensor.hpp"

namespace acgan {

using Rng = std::mt19937_64;

/// Rows of xs are conditions, rows of ys the data they condition.
struct ConditionalDataset {
    Tensor xs;
    Tensor ys;
    std::optional<std::vector<int>> labels;
    std::uint64_t seed = 0;

    std::size_t size() const { return xs.rows(); }
    std::size_t x_dim() const { return xs.cols(); }
    std::size_t y_dim() const { return ys.cols(); }
    void validate() const;
};

void write_dataset_csv(const ConditionalDataset& ds, std::ostream& out);
ConditionalDataset read_dataset_csv(std::istream& in);

/// Where the shuffled a-contrario conditions come from.
enum class AcSource {
    kWithinBatch,   // derangement of the batch's own conditions
    kOutsideBatch,  // conditions drawn from dataset rows outside the batch
};

std::string_view to_string(AcSource s);
AcSource parse_ac_source(std::string_view s);

/// One training batch. ac_idx[i] is the dataset row supplying the a-contrario
/// condition for position i; within a batch it equals idx[ac_perm[i]].
struct PairBatch {
    std::vector<std::size_t> idx;
    std::vector<std::size_t> ac_perm;  // empty for AcSource::kOutsideBatch
    std::vector<std::size_t> ac_idx;
};

/// Uniformly random permutation of 0..n-1 without fixed points (rejection sampling).
std::vector<std::size_t> make_ac_permutation(std::size_t batch_size, Rng& rng);

/// Derangement that also avoids pairing two positions whose conditions are
/// equal by value. Falls back to swap repair when rejection is unlikely to
/// succeed; if no such derangement exists, the positional guarantee still holds.
std::vector<std::size_t> make_conditional_derangement(const ConditionalDataset& ds,
                                                      std::span<const std::size_t> idx, Rng& rng);

/// Number of positions i whose partner has the same condition value.
std::size_t count_condition_collisions(const ConditionalDataset& ds, std::span<const std::size_t> idx,
                                       std::span<const std::size_t> ac_idx);

/// Epoch-wise shuffled batches without replacement; trailing partial batch dropped.
class BatchSampler {
public:
    BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);

    std::vector<std::size_t> next(const ConditionalDataset& ds);
    std::size_t batches_per_epoch() const { return n_ / batch_; }

    std::string save_state() const;
    void load_state(std::string_view state);

private:
    void reshuffle();

    std::size_t n_;
    std::size_t batch_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

PairBatch draw_pair_batch(const ConditionalDataset& ds, BatchSampler& sampler, Rng& ac_rng,
                          AcSource source = AcSource::kWithinBatch);

/// A-contrario partners for an explicit index set.
PairBatch make_pair_batch(const ConditionalDataset& ds, std::vector<std::size_t> idx, Rng& ac_rng,
                          AcSource source = AcSource::kWithinBatch);

enum class Pairing { kRealCond = 0, kGenCond = 1, kRealAc = 2, kGenAc = 3 };
inline constexpr std::array<Pairing, 4> kAllPairings{Pairing::kRealCond, Pairing::kGenCond,
                                                     Pairing::kRealAc, Pairing::kGenAc};
std::string_view to_string(Pairing p);

struct TensorPair {
    Tensor x;
    Tensor y;
};

struct FourPairings {
    TensorPair real_cond;
    TensorPair gen_cond;
    TensorPair real_ac;
    TensorPair gen_ac;

    const TensorPair& operator[](Pairing p) const;
};

/// (x,y), (x,y_G), (x~,y), (x~,y_G) for the batch; y_G must be row-aligned with batch.idx.
FourPairings assemble_pairings(const ConditionalDataset& ds, const PairBatch& batch, const Tensor& y_gen);

}  // namespace acgan
