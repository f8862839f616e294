#include "acgan/pairing.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "acgan/io.hpp"

namespace acgan {

void ConditionalDataset::validate() const {
    if (xs.ndim() != 2 || ys.ndim() != 2) throw ShapeError("dataset: xs and ys must be 2-D");
    if (xs.rows() != ys.rows()) {
        throw ShapeError("dataset: xs " + shape_str(xs.shape()) + " and ys " + shape_str(ys.shape()) +
                         " have different row counts");
    }
    if (xs.rows() < 2) throw Error("dataset: at least 2 rows required");
    if (labels && labels->size() != xs.rows()) throw Error("dataset: label count does not match rows");
}

void write_dataset_csv(const ConditionalDataset& ds, std::ostream& out) {
    ds.validate();
    const std::size_t dx = ds.x_dim(), dy = ds.y_dim();
    for (std::size_t j = 0; j < dx; ++j) out << (j ? "," : "") << "x_" << j;
    for (std::size_t j = 0; j < dy; ++j) out << ",y_" << j;
    if (ds.labels) out << ",label";
    out << "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < dx; ++j) out << (j ? "," : "") << format_double(ds.xs.at(i, j));
        for (std::size_t j = 0; j < dy; ++j) out << "," << format_double(ds.ys.at(i, j));
        if (ds.labels) out << "," << (*ds.labels)[i];
        out << "\n";
    }
}

ConditionalDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("dataset csv: missing header");
    const auto header = split(line, ',');
    std::size_t dx = 0, dy = 0;
    bool has_label = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto h = header[c];
        const std::string want_x = "x_" + std::to_string(dx);
        const std::string want_y = "y_" + std::to_string(dy);
        if (dy == 0 && !has_label && h == want_x) {
            ++dx;
        } else if (!has_label && h == want_y) {
            ++dy;
        } else if (h == "label" && c + 1 == header.size()) {
            has_label = true;
        } else {
            throw Error("dataset csv: unexpected column '" + std::string(h) + "'");
        }
    }
    if (dx == 0 || dy == 0) throw Error("dataset csv: need at least one x_ and one y_ column");
    std::vector<double> xs, ys;
    std::vector<int> labels;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) {
            throw Error("dataset csv: row " + std::to_string(n + 1) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
        }
        for (std::size_t j = 0; j < dx; ++j) xs.push_back(parse_double(cells[j]));
        for (std::size_t j = 0; j < dy; ++j) ys.push_back(parse_double(cells[dx + j]));
        if (has_label) labels.push_back(std::stoi(std::string(cells.back())));
        ++n;
    }
    if (n == 0) throw Error("dataset csv: no rows");
    ConditionalDataset ds;
    ds.xs = Tensor({n, dx}, std::move(xs));
    ds.ys = Tensor({n, dy}, std::move(ys));
    if (has_label) ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

std::string_view to_string(AcSource s) {
    return s == AcSource::kWithinBatch ? "within_batch" : "outside_batch";
}

AcSource parse_ac_source(std::string_view s) {
    if (s == "within_batch") return AcSource::kWithinBatch;
    if (s == "outside_batch") return AcSource::kOutsideBatch;
    throw Error("unknown a-contrario source '" + std::string(s) + "'");
}

std::vector<std::size_t> make_ac_permutation(std::size_t batch_size, Rng& rng) {
    if (batch_size < 2) throw Error("make_ac_permutation: batch size must be at least 2");
    std::vector<std::size_t> perm(batch_size);
    while (true) {
        for (std::size_t i = 0; i < batch_size; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        bool fixed = false;
        for (std::size_t i = 0; i < batch_size && !fixed; ++i) fixed = perm[i] == i;
        if (!fixed) return perm;
    }
}

namespace {

// Equivalence class id per position: equal ids mean equal condition values.
std::vector<std::size_t> condition_keys(const ConditionalDataset& ds, std::span<const std::size_t> idx) {
    std::vector<std::size_t> keys(idx.size());
    if (ds.labels) {
        for (std::size_t i = 0; i < idx.size(); ++i) keys[i] = static_cast<std::size_t>((*ds.labels)[idx[i]]);
        return keys;
    }
    std::map<std::vector<double>, std::size_t> ids;
    const std::size_t c = ds.x_dim();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto row = ds.xs.values().subspan(idx[i] * c, c);
        auto [it, inserted] = ids.try_emplace(std::vector<double>(row.begin(), row.end()), ids.size());
        keys[i] = it->second;
    }
    return keys;
}

bool same_condition(const ConditionalDataset& ds, std::size_t a, std::size_t b) {
    if (ds.labels) return (*ds.labels)[a] == (*ds.labels)[b];
    const std::size_t c = ds.x_dim();
    const auto ra = ds.xs.values().subspan(a * c, c);
    const auto rb = ds.xs.values().subspan(b * c, c);
    return std::equal(ra.begin(), ra.end(), rb.begin());
}

constexpr int kRejectionTries = 16;

}  // namespace

std::vector<std::size_t> make_conditional_derangement(const ConditionalDataset& ds,
                                                      std::span<const std::size_t> idx, Rng& rng) {
    const std::size_t n = idx.size();
    const auto keys = condition_keys(ds, idx);
    const auto conflicts = [&](const std::vector<std::size_t>& p, std::size_t i) { return keys[p[i]] == keys[i]; };

    std::vector<std::size_t> perm = make_ac_permutation(n, rng);
    if (std::set<std::size_t>(keys.begin(), keys.end()).size() == n) return perm;

    for (int t = 0; t < kRejectionTries; ++t) {
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) ok = !conflicts(perm, i);
        if (ok) return perm;
        perm = make_ac_permutation(n, rng);
    }

    // Swap repair: exchange partners of a colliding position with a random
    // position when the exchange clears both and keeps the derangement.
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t budget = 64 * n * n;
    for (std::size_t iter = 0; iter < budget; ++iter) {
        std::size_t i = n;
        for (std::size_t k = 0; k < n; ++k) {
            if (conflicts(perm, k)) {
                i = k;
                break;
            }
        }
        if (i == n) return perm;
        const std::size_t j = pick(rng);
        if (j == i || perm[j] == i || perm[i] == j) continue;
        if (keys[perm[j]] == keys[i] || keys[perm[i]] == keys[j]) continue;
        std::swap(perm[i], perm[j]);
    }
    // Infeasible (one condition holds more than half the batch): keep the
    // positional derangement with whatever collisions remain.
    return perm;
}

std::size_t count_condition_collisions(const ConditionalDataset& ds, std::span<const std::size_t> idx,
                                       std::span<const std::size_t> ac_idx) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) n += same_condition(ds, idx[i], ac_idx[i]) ? 1 : 0;
    return n;
}

BatchSampler::BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : n_(dataset_size), batch_(batch_size), rng_(seed) {
    if (batch_ < 2) throw Error("batch size must be at least 2");
    if (batch_ > n_) throw Error("batch size exceeds dataset size");
    order_.resize(n_);
    reshuffle();
}

void BatchSampler::reshuffle() {
    for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next(const ConditionalDataset& ds) {
    if (ds.size() != n_) throw Error("batch sampler: dataset size changed");
    if (cursor_ + batch_ > n_) reshuffle();
    const auto first = order_.begin() + static_cast<std::ptrdiff_t>(cursor_);
    if (ds.labels) {
        // Guarantee two distinct labels by pulling a differently labelled row
        // from the rest of the epoch order.
        const auto& lab = *ds.labels;
        const int l0 = lab[*first];
        const bool single = std::all_of(first, first + static_cast<std::ptrdiff_t>(batch_),
                                        [&](std::size_t r) { return lab[r] == l0; });
        if (single) {
            for (std::size_t k = 0; k < n_; ++k) {
                if (k >= cursor_ && k < cursor_ + batch_) continue;
                if (lab[order_[k]] != l0) {
                    std::swap(order_[cursor_ + batch_ - 1], order_[k]);
                    break;
                }
            }
        }
    }
    std::vector<std::size_t> idx(first, first + static_cast<std::ptrdiff_t>(batch_));
    cursor_ += batch_;
    return idx;
}

std::string BatchSampler::save_state() const {
    std::ostringstream ss;
    ss << rng_ << " " << cursor_;
    for (auto i : order_) ss << " " << i;
    return ss.str();
}

void BatchSampler::load_state(std::string_view state) {
    std::istringstream ss{std::string(state)};
    ss >> rng_ >> cursor_;
    for (auto& i : order_) ss >> i;
    if (!ss) throw Error("batch sampler: malformed saved state");
}

PairBatch make_pair_batch(const ConditionalDataset& ds, std::vector<std::size_t> idx, Rng& ac_rng,
                          AcSource source) {
    PairBatch b;
    b.idx = std::move(idx);
    const std::size_t n = b.idx.size();
    if (source == AcSource::kWithinBatch) {
        b.ac_perm = make_conditional_derangement(ds, b.idx, ac_rng);
        b.ac_idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) b.ac_idx[i] = b.idx[b.ac_perm[i]];
        return b;
    }
    if (ds.size() < 2 * n) throw Error("outside-batch a-contrario sampling needs at least twice the batch size");
    std::vector<bool> used(ds.size(), false);
    for (auto i : b.idx) used[i] = true;
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    b.ac_idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (int tries = 0;; ++tries) {
            r = pick(ac_rng);
            if (used[r]) continue;
            if (tries < 1000 && same_condition(ds, r, b.idx[i])) continue;
            break;
        }
        used[r] = true;
        b.ac_idx[i] = r;
    }
    return b;
}

PairBatch draw_pair_batch(const ConditionalDataset& ds, BatchSampler& sampler, Rng& ac_rng, AcSource source) {
    return make_pair_batch(ds, sampler.next(ds), ac_rng, source);
}

std::string_view to_string(Pairing p) {
    switch (p) {
        case Pairing::kRealCond: return "real_cond";
        case Pairing::kGenCond: return "gen_cond";
        case Pairing::kRealAc: return "real_ac";
        case Pairing::kGenAc: return "gen_ac";
    }
    return "";
}

const TensorPair& FourPairings::operator[](Pairing p) const {
    switch (p) {
        case Pairing::kRealCond: return real_cond;
        case Pairing::kGenCond: return gen_cond;
        case Pairing::kRealAc: return real_ac;
        case Pairing::kGenAc: return gen_ac;
    }
    return real_cond;
}

FourPairings assemble_pairings(const ConditionalDataset& ds, const PairBatch& batch, const Tensor& y_gen) {
    const std::size_t n = batch.idx.size();
    if (batch.ac_idx.size() != n) throw ShapeError("assemble_pairings: a-contrario indices misaligned with batch");
    if (y_gen.ndim() != 2 || y_gen.rows() != n || y_gen.cols() != ds.y_dim()) {
        throw ShapeError("assemble_pairings: y_G shape " + shape_str(y_gen.shape()) + " does not match batch (" +
                         std::to_string(n) + "," + std::to_string(ds.y_dim()) + ")");
    }
    Tensor x = ds.xs.gather_rows(batch.idx);
    Tensor y = ds.ys.gather_rows(batch.idx);
    Tensor x_ac = ds.xs.gather_rows(batch.ac_idx);
    return FourPairings{{x, y}, {x, y_gen}, {x_ac, y}, {x_ac, y_gen}};
}

}  // namespace acgan
