#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgan/losses.hpp"
#include "acgan/nets.hpp"
#include "acgan/pairing.hpp"

namespace acgan {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr double kAdamEpsilon = 1e-8;

class TrainingError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

struct TrainConfig {
    std::size_t epochs = 16;
    std::optional<std::size_t> steps;  // overrides epochs when set
    std::size_t batch_size = 64;
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    std::uint64_t seed = 0;
    LossSpec loss;
    std::size_t d_steps_per_g_step = 1;
    std::size_t checkpoint_every = 0;  // 0 disables periodic checkpoints
    AcSource ac_source = AcSource::kWithinBatch;
    // Evaluation-only a-contrario terms are logged even when lambda3 = lambda4 = 0.
    bool log_acontrario = true;
    double ema_decay = 0.0;  // 0 disables the generator EMA

    void validate() const;
    std::size_t total_steps(std::size_t batches_per_epoch) const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;

    static AdamState zeros_like(std::span<const Tensor> params);
};

/// Bias-corrected Adam with epsilon 1e-8, applied in place.
void adam_step(std::vector<Tensor>& params, std::span<const Tensor> grads, AdamState& state, double lr,
               double beta1, double beta2);

/// Mean absolute gradient value over every parameter element.
double mean_abs_grad(std::span<const Tensor> grads);

struct StepRecord {
    std::size_t step = 0;
    LossBreakdown losses;
    double grad_norm_g = 0.0;
    double grad_norm_d = 0.0;
};

struct EpochSnapshot {
    std::size_t epoch = 0;
    std::size_t step = 0;
    std::uint64_t g_checksum = 0;
    std::uint64_t d_checksum = 0;
    std::uint64_t rng_fingerprint = 0;
};

struct RunLog {
    std::vector<StepRecord> steps;
    std::vector<EpochSnapshot> epochs;
};

void write_metrics_csv(const RunLog& log, std::ostream& out);
void write_metrics_header(std::ostream& out);
void write_metrics_row(const StepRecord& rec, std::ostream& out);

/// Owns both networks, both optimizers, and every RNG stream of a run, so a
/// checkpoint taken at any step resumes bit-identically.
class Trainer {
public:
    Trainer(Generator gen, Discriminator disc, const ConditionalDataset& data, TrainConfig config);

    /// Runs one alternation (d_steps_per_g_step D updates, then one G update).
    const StepRecord& step();
    /// Runs until total_steps() has been reached.
    void run(const std::function<void(const Trainer&)>& on_checkpoint = {});

    std::size_t steps_done() const { return step_; }
    std::size_t total_steps() const;
    const Generator& generator() const { return gen_; }
    const Generator& ema_generator() const { return ema_ ? *ema_ : gen_; }
    const Discriminator& discriminator() const { return disc_; }
    const RunLog& log() const { return log_; }
    const TrainConfig& config() const { return config_; }

    nlohmann::json checkpoint(const nlohmann::json& meta = {}) const;
    /// Restores a checkpoint written by checkpoint(); the log restarts empty.
    static Trainer resume(const nlohmann::json& checkpoint, const ConditionalDataset& data, TrainConfig config);

private:
    std::optional<Tensor> draw_noise(std::size_t rows);

    Generator gen_;
    Discriminator disc_;
    const ConditionalDataset* data_;
    TrainConfig config_;
    AdamState adam_g_;
    AdamState adam_d_;
    BatchSampler sampler_;
    Rng ac_rng_;
    Rng noise_rng_;
    std::optional<Generator> ema_;
    std::size_t step_ = 0;
    RunLog log_;
};

struct TrainResult {
    Generator gen;
    Discriminator disc;
    RunLog log;
};

TrainResult train(Generator gen, Discriminator disc, const ConditionalDataset& data, const TrainConfig& config);

struct DiscStepResult {
    LossBreakdown losses;
    double grad_norm = 0.0;
    Tensor y_gen;
};

/// One discriminator update against a fixed generator on the given batch.
DiscStepResult discriminator_update(const Generator& gen, Discriminator& disc, AdamState& adam,
                                    const ConditionalDataset& data, const PairBatch& batch,
                                    const std::optional<Tensor>& z, const TrainConfig& config);

struct OptimalDConfig {
    std::size_t epochs = 1;
    // When set, keep training past `epochs` until the 100-step mean loss moves
    // by less than this between consecutive windows, or max_epochs is reached.
    std::optional<double> plateau_tol;
    std::size_t plateau_window = 100;
    std::size_t max_epochs = 20;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const OptimalDConfig& c);
OptimalDConfig optimal_d_config_from_json(const nlohmann::json& j);

struct OptimalDResult {
    Discriminator disc;
    std::vector<double> losses;
    std::size_t steps = 0;
    bool plateaued = false;
};

/// Trains D alone against a frozen generator using config.loss. Throws
/// TrainingError if the generator's parameters change.
OptimalDResult optimal_discriminator_phase(const Generator& frozen, Discriminator disc,
                                           const ConditionalDataset& data, const TrainConfig& config,
                                           const OptimalDConfig& phase);

void save_checkpoint(const Trainer& trainer, const std::filesystem::path& path, const nlohmann::json& meta = {});
nlohmann::json load_checkpoint(const std::filesystem::path& path);
/// Validates format_version and structure of a checkpoint document.
void check_checkpoint(const nlohmann::json& j);

}  // namespace acgan
