#include "acgan/trainer.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "acgan/io.hpp"

namespace acgan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent streams so that switching evaluation-only work on or off never
// perturbs batch order or noise.
enum Stream : std::uint64_t { kBatchStream = 1, kAcStream = 2, kNoiseStream = 3, kPhaseStream = 4 };

std::uint64_t stream_seed(std::uint64_t seed, Stream s) { return splitmix64(seed * 8 + s); }

template <typename T>
std::string rng_state(const T& rng) {
    std::ostringstream ss;
    ss << rng;
    return ss.str();
}

template <typename T>
void set_rng_state(T& rng, const std::string& s) {
    std::istringstream ss(s);
    ss >> rng;
    if (!ss) throw CheckpointError("checkpoint: malformed rng state");
}

std::uint64_t fingerprint(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void check_finite(const LossBreakdown& b) {
    const std::pair<const char*, double> terms[] = {
        {"d_real_cond", b.d_real_cond}, {"d_gen_cond", b.d_gen_cond}, {"d_real_ac", b.d_real_ac},
        {"d_gen_ac", b.d_gen_ac},       {"d_total", b.d_total},       {"g_adv", b.g_adv},
        {"g_recon", b.g_recon},         {"g_total", b.g_total}};
    for (const auto& [name, v] : terms) {
        if (!std::isfinite(v)) throw TrainingError(std::string("non-finite loss term ") + name);
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw Error("train: lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw Error("train: betas must lie in [0, 1)");
    if (batch_size < 2) throw Error("train: batch_size must be at least 2");
    if (d_steps_per_g_step < 1) throw Error("train: d_steps_per_g_step must be at least 1");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw Error("train: ema_decay must lie in [0, 1)");
    loss.validate();
}

std::size_t TrainConfig::total_steps(std::size_t batches_per_epoch) const {
    if (steps) return *steps;
    return epochs * (batches_per_epoch / d_steps_per_g_step);
}

nlohmann::json to_json(const TrainConfig& c) {
    nlohmann::json j{{"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"lr", c.lr},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"seed", c.seed},
                     {"d_steps_per_g_step", c.d_steps_per_g_step},
                     {"checkpoint_every", c.checkpoint_every},
                     {"ac_source", to_string(c.ac_source)},
                     {"log_acontrario", c.log_acontrario},
                     {"ema_decay", c.ema_decay}};
    j["steps"] = c.steps ? nlohmann::json(*c.steps) : nlohmann::json(nullptr);
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    if (j.contains("steps") && !j.at("steps").is_null()) c.steps = j.at("steps").get<std::size_t>();
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.seed = j.value("seed", c.seed);
    c.d_steps_per_g_step = j.value("d_steps_per_g_step", c.d_steps_per_g_step);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    if (j.contains("ac_source")) c.ac_source = parse_ac_source(j.at("ac_source").get<std::string>());
    c.log_acontrario = j.value("log_acontrario", c.log_acontrario);
    c.ema_decay = j.value("ema_decay", c.ema_decay);
    return c;
}

AdamState AdamState::zeros_like(std::span<const Tensor> params) {
    AdamState s;
    for (const auto& p : params) {
        s.m.emplace_back(p.shape(), 0.0);
        s.v.emplace_back(p.shape(), 0.0);
    }
    return s;
}

void adam_step(std::vector<Tensor>& params, std::span<const Tensor> grads, AdamState& state, double lr,
               double beta1, double beta2) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam: parameter, gradient and moment counts differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].shape() != params[i].shape() || state.m[i].shape() != params[i].shape()) {
            throw ShapeError("adam: parameter " + std::to_string(i) + " shape " + shape_str(params[i].shape()) +
                             " vs gradient " + shape_str(grads[i].shape()));
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].values();
        auto g = grads[i].values();
        auto m = state.m[i].values();
        auto v = state.v[i].values();
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
            const double mhat = m[k] / c1;
            const double vhat = v[k] / c2;
            p[k] -= lr * mhat / (std::sqrt(vhat) + kAdamEpsilon);
        }
    }
}

double mean_abs_grad(std::span<const Tensor> grads) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& g : grads) {
        for (double v : g.values()) s += std::fabs(v);
        n += g.size();
    }
    return n ? s / static_cast<double>(n) : 0.0;
}

void write_metrics_header(std::ostream& out) {
    out << "step,d_real_cond,d_gen_cond,d_real_ac,d_gen_ac,d_total,g_adv,g_recon,g_total,grad_norm_G,grad_norm_D\n";
}

void write_metrics_row(const StepRecord& r, std::ostream& out) {
    const auto& b = r.losses;
    out << r.step;
    for (double v : {b.d_real_cond, b.d_gen_cond, b.d_real_ac, b.d_gen_ac, b.d_total, b.g_adv, b.g_recon, b.g_total,
                     r.grad_norm_g, r.grad_norm_d}) {
        out << ',' << format_double(v);
    }
    out << '\n';
}

void write_metrics_csv(const RunLog& log, std::ostream& out) {
    write_metrics_header(out);
    for (const auto& r : log.steps) write_metrics_row(r, out);
}

DiscStepResult discriminator_update(const Generator& gen, Discriminator& disc, AdamState& adam,
                                    const ConditionalDataset& data, const PairBatch& batch,
                                    const std::optional<Tensor>& z, const TrainConfig& config) {
    const LossSpec& spec = config.loss;
    const bool with_ac = spec.acontrario() || config.log_acontrario;

    Graph g;
    auto gp = bind_params(g, gen.params, false);
    auto dp = bind_params(g, disc.params, true);
    Var x = g.constant(data.xs.gather_rows(batch.idx));
    Var y = g.constant(data.ys.gather_rows(batch.idx));
    std::optional<Var> zv;
    if (z) zv = g.constant(*z);
    Var y_gen = gen_forward(gen, gp, x, zv);

    const auto out = [&](Var xx, Var yy) {
        Var logit = disc_forward(disc, dp, xx, yy, DiscOutput::kLogit);
        return spec.hinge() ? logit : sigmoid(logit);
    };
    DiscOutputs outs{out(x, y), out(x, y_gen), std::nullopt, std::nullopt};
    if (with_ac) {
        Var x_ac = g.constant(data.xs.gather_rows(batch.ac_idx));
        outs.real_ac = out(x_ac, y);
        outs.gen_ac = out(x_ac, y_gen);
    }
    // Classic runs see the a-contrario pairs only through zero-weight terms.
    LossSpec effective = spec;
    if (!spec.acontrario()) effective.lambdas[2] = effective.lambdas[3] = 0.0;
    DiscLoss loss = d_loss_total(outs, effective);
    check_finite(loss.breakdown);
    g.backward(loss.total);

    std::vector<Tensor> grads;
    grads.reserve(dp.size());
    for (Var v : dp) grads.push_back(g.grad(v));
    const double norm = mean_abs_grad(grads);
    adam_step(disc.params, grads, adam, config.lr, config.beta1, config.beta2);
    return {loss.breakdown, norm, y_gen.value()};
}

Trainer::Trainer(Generator gen, Discriminator disc, const ConditionalDataset& data, TrainConfig config)
    : gen_(std::move(gen)),
      disc_(std::move(disc)),
      data_(&data),
      config_(std::move(config)),
      adam_g_(AdamState::zeros_like(gen_.params)),
      adam_d_(AdamState::zeros_like(disc_.params)),
      sampler_(data.size(), config_.batch_size, stream_seed(config_.seed, kBatchStream)),
      ac_rng_(stream_seed(config_.seed, kAcStream)),
      noise_rng_(stream_seed(config_.seed, kNoiseStream)) {
    config_.validate();
    data.validate();
    if (gen_.x_dim != data.x_dim() || gen_.y_dim != data.y_dim()) throw ShapeError("trainer: generator does not fit dataset");
    if (disc_.x_dim != data.x_dim() || disc_.y_dim != data.y_dim()) {
        throw ShapeError("trainer: discriminator does not fit dataset");
    }
    if (config_.ema_decay > 0.0) ema_ = gen_;
}

std::size_t Trainer::total_steps() const { return config_.total_steps(sampler_.batches_per_epoch()); }

std::optional<Tensor> Trainer::draw_noise(std::size_t rows) {
    if (gen_.noise_dim == 0) return std::nullopt;
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor z({rows, gen_.noise_dim});
    for (double& v : z.values()) v = normal(noise_rng_);
    return z;
}

const StepRecord& Trainer::step() {
    const ConditionalDataset& data = *data_;
    StepRecord rec;
    PairBatch batch;
    std::optional<Tensor> z;
    for (std::size_t k = 0; k < config_.d_steps_per_g_step; ++k) {
        batch = draw_pair_batch(data, sampler_, ac_rng_, config_.ac_source);
        z = draw_noise(batch.idx.size());
        auto d = discriminator_update(gen_, disc_, adam_d_, data, batch, z, config_);
        rec.losses = d.losses;
        rec.grad_norm_d = d.grad_norm;
    }

    // Generator update on the last batch; D enters as constants.
    Graph g;
    auto gp = bind_params(g, gen_.params, true);
    auto dp = bind_params(g, disc_.params, false);
    Var x = g.constant(data.xs.gather_rows(batch.idx));
    std::optional<Var> zv;
    if (z) zv = g.constant(*z);
    Var y_gen = gen_forward(gen_, gp, x, zv);
    std::optional<Var> y_true;
    if (config_.loss.recon_weight > 0.0) y_true = g.constant(data.ys.gather_rows(batch.idx));
    Var logit = disc_forward(disc_, dp, x, y_gen, DiscOutput::kLogit);
    GenLoss gl = config_.loss.hinge()
                     ? g_loss_hinge(logit, y_gen, y_true, config_.loss.recon_weight)
                     : g_loss(sigmoid(logit), config_.loss.gen_mode, y_gen, y_true, config_.loss.recon_weight);
    rec.losses.g_adv = gl.adv;
    rec.losses.g_recon = gl.recon;
    rec.losses.g_total = gl.total.value().item();
    check_finite(rec.losses);
    g.backward(gl.total);
    std::vector<Tensor> grads;
    grads.reserve(gp.size());
    for (Var v : gp) grads.push_back(g.grad(v));
    rec.grad_norm_g = mean_abs_grad(grads);
    adam_step(gen_.params, grads, adam_g_, config_.lr, config_.beta1, config_.beta2);

    if (ema_) {
        const double a = config_.ema_decay;
        for (std::size_t i = 0; i < gen_.params.size(); ++i) {
            auto e = ema_->params[i].values();
            auto p = gen_.params[i].values();
            for (std::size_t k = 0; k < e.size(); ++k) e[k] = a * e[k] + (1.0 - a) * p[k];
        }
    }

    rec.step = ++step_;
    log_.steps.push_back(rec);
    const std::size_t per_epoch = sampler_.batches_per_epoch() / config_.d_steps_per_g_step;
    if (per_epoch > 0 && step_ % per_epoch == 0) {
        log_.epochs.push_back({step_ / per_epoch, step_, checksum(gen_.params), checksum(disc_.params),
                               fingerprint(sampler_.save_state() + rng_state(ac_rng_) + rng_state(noise_rng_))});
    }
    return log_.steps.back();
}

void Trainer::run(const std::function<void(const Trainer&)>& on_checkpoint) {
    const std::size_t total = total_steps();
    while (step_ < total) {
        step();
        if (on_checkpoint && config_.checkpoint_every > 0 && step_ % config_.checkpoint_every == 0) {
            on_checkpoint(*this);
        }
    }
}

nlohmann::json Trainer::checkpoint(const nlohmann::json& meta) const {
    const auto adam_json = [](const AdamState& s) {
        return nlohmann::json{{"step", s.step}, {"m", params_to_json(s.m)}, {"v", params_to_json(s.v)}};
    };
    nlohmann::json j{{"format_version", kCheckpointFormatVersion},
                     {"seed", config_.seed},
                     {"step", step_},
                     {"generator", to_json(gen_)},
                     {"discriminator", to_json(disc_)},
                     {"adam_g", adam_json(adam_g_)},
                     {"adam_d", adam_json(adam_d_)},
                     {"rng", {{"sampler", sampler_.save_state()},
                              {"ac", rng_state(ac_rng_)},
                              {"noise", rng_state(noise_rng_)}}}};
    j["ema_generator"] = ema_ ? to_json(*ema_) : nlohmann::json(nullptr);
    if (!meta.is_null()) j["meta"] = meta;
    return j;
}

void check_checkpoint(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("format_version")) throw CheckpointError("checkpoint: missing format_version");
    const auto& v = j.at("format_version");
    if (!v.is_number_integer() || v.get<int>() != kCheckpointFormatVersion) {
        throw CheckpointError("checkpoint: unsupported format_version " + v.dump() + " (expected " +
                              std::to_string(kCheckpointFormatVersion) + ")");
    }
    for (const char* key : {"seed", "step", "generator", "discriminator"}) {
        if (!j.contains(key)) throw CheckpointError(std::string("checkpoint: missing '") + key + "'");
    }
}

Trainer Trainer::resume(const nlohmann::json& j, const ConditionalDataset& data, TrainConfig config) {
    check_checkpoint(j);
    try {
        Trainer t(generator_from_json(j.at("generator")), discriminator_from_json(j.at("discriminator")), data,
                  std::move(config));
        const auto load_adam = [](const nlohmann::json& a, AdamState& s) {
            s.step = a.at("step").get<std::uint64_t>();
            s.m = params_from_json(a.at("m"));
            s.v = params_from_json(a.at("v"));
        };
        load_adam(j.at("adam_g"), t.adam_g_);
        load_adam(j.at("adam_d"), t.adam_d_);
        t.sampler_.load_state(j.at("rng").at("sampler").get<std::string>());
        set_rng_state(t.ac_rng_, j.at("rng").at("ac").get<std::string>());
        set_rng_state(t.noise_rng_, j.at("rng").at("noise").get<std::string>());
        if (j.contains("ema_generator") && !j.at("ema_generator").is_null()) {
            t.ema_ = generator_from_json(j.at("ema_generator"));
        }
        t.step_ = j.at("step").get<std::size_t>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint: malformed document: ") + e.what());
    }
}

TrainResult train(Generator gen, Discriminator disc, const ConditionalDataset& data, const TrainConfig& config) {
    Trainer t(std::move(gen), std::move(disc), data, config);
    t.run();
    return {t.generator(), t.discriminator(), t.log()};
}

nlohmann::json to_json(const OptimalDConfig& c) {
    nlohmann::json j{{"epochs", c.epochs}, {"plateau_window", c.plateau_window}, {"max_epochs", c.max_epochs},
                     {"seed", c.seed}};
    j["plateau_tol"] = c.plateau_tol ? nlohmann::json(*c.plateau_tol) : nlohmann::json(nullptr);
    return j;
}

OptimalDConfig optimal_d_config_from_json(const nlohmann::json& j) {
    OptimalDConfig c;
    c.epochs = j.value("epochs", c.epochs);
    if (j.contains("plateau_tol") && !j.at("plateau_tol").is_null()) c.plateau_tol = j.at("plateau_tol").get<double>();
    c.plateau_window = j.value("plateau_window", c.plateau_window);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.seed = j.value("seed", c.seed);
    if (c.epochs == 0 || c.plateau_window == 0) throw Error("optimal_d: epochs and plateau_window must be positive");
    return c;
}

OptimalDResult optimal_discriminator_phase(const Generator& frozen, Discriminator disc, const ConditionalDataset& data,
                                           const TrainConfig& config, const OptimalDConfig& phase) {
    config.validate();
    const std::uint64_t before = checksum(frozen.params);
    BatchSampler sampler(data.size(), config.batch_size, stream_seed(phase.seed, kPhaseStream));
    Rng ac_rng(stream_seed(phase.seed, kAcStream));
    Rng noise_rng(stream_seed(phase.seed, kNoiseStream));
    AdamState adam = AdamState::zeros_like(disc.params);
    TrainConfig cfg = config;
    cfg.log_acontrario = false;

    OptimalDResult result;
    const std::size_t per_epoch = sampler.batches_per_epoch();
    const std::size_t min_steps = phase.epochs * per_epoch;
    const std::size_t max_steps = phase.plateau_tol ? std::max(min_steps, phase.max_epochs * per_epoch) : min_steps;
    const std::size_t w = phase.plateau_window;
    const auto window_mean = [&](std::size_t end) {
        double s = 0.0;
        for (std::size_t i = end - w; i < end; ++i) s += result.losses[i];
        return s / static_cast<double>(w);
    };
    while (result.steps < max_steps) {
        PairBatch batch = draw_pair_batch(data, sampler, ac_rng, cfg.ac_source);
        std::optional<Tensor> z;
        if (frozen.noise_dim > 0) {
            std::normal_distribution<double> normal(0.0, 1.0);
            z = Tensor({batch.idx.size(), frozen.noise_dim});
            for (double& v : z->values()) v = normal(noise_rng);
        }
        auto r = discriminator_update(frozen, disc, adam, data, batch, z, cfg);
        result.losses.push_back(r.losses.d_total);
        ++result.steps;
        if (phase.plateau_tol && result.steps >= min_steps && result.steps >= 2 * w) {
            if (std::fabs(window_mean(result.steps) - window_mean(result.steps - w)) < *phase.plateau_tol) {
                result.plateaued = true;
                break;
            }
        }
    }
    if (checksum(frozen.params) != before) throw TrainingError("optimal discriminator phase mutated the generator");
    result.disc = std::move(disc);
    return result;
}

void save_checkpoint(const Trainer& trainer, const std::filesystem::path& path, const nlohmann::json& meta) {
    write_json_file(path, trainer.checkpoint(meta));
}

nlohmann::json load_checkpoint(const std::filesystem::path& path) {
    auto j = read_json_file(path);
    check_checkpoint(j);
    return j;
}

}  // namespace acgan
