#include "acgan/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace acgan {

void GaussModesTask::validate() const {
    if (k < 2) throw Error("gauss_modes: k must be at least 2");
    if (!(sigma > 0.0) || !(radius > 0.0)) throw Error("gauss_modes: radius and sigma must be positive");
    const double min_dist = 2.0 * radius * std::sin(std::numbers::pi / static_cast<double>(k));
    if (!(min_dist > 4.0 * sigma)) throw Error("gauss_modes: modes closer than 4 sigma");
}

std::vector<std::array<double, 2>> GaussModesTask::centers() const {
    std::vector<std::array<double, 2>> c(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
        c[i] = {radius * std::cos(a), radius * std::sin(a)};
    }
    return c;
}

Tensor GaussModesTask::one_hot(std::span<const int> labels) const {
    Tensor x({labels.size(), k}, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) throw Error("gauss_modes: label out of range");
        x.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return x;
}

void CondRegressionTask::validate() const {
    if (dim_x == 0 || dim_y == 0) throw Error("cond_regression: dimensions must be positive");
    if (noise_std < 0.0) throw Error("cond_regression: noise_std must be non-negative");
}

Tensor CondRegressionTask::weights() const {
    Rng rng(map_seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim_x)));
    Tensor w({dim_x, dim_y});
    for (double& v : w.values()) v = normal(rng);
    return w;
}

Tensor CondRegressionTask::bias() const {
    Rng rng(map_seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 0.1);
    Tensor b({dim_y});
    for (double& v : b.values()) v = normal(rng);
    return b;
}

Tensor CondRegressionTask::noiseless(const Tensor& x) const {
    if (x.ndim() != 2 || x.cols() != dim_x) throw ShapeError("cond_regression: x shape " + shape_str(x.shape()));
    const Tensor w = weights();
    const Tensor b = bias();
    Tensor y({x.rows(), dim_y});
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < dim_y; ++j) {
            double s = b[j];
            for (std::size_t p = 0; p < dim_x; ++p) s += x.at(i, p) * w.at(p, j);
            y.at(i, j) = std::tanh(s);
        }
    }
    return y;
}

std::size_t task_x_dim(const Task& task) {
    return std::visit([](const auto& t) { return t.x_dim(); }, task);
}

std::size_t task_y_dim(const Task& task) {
    return std::visit([](const auto& t) { return t.y_dim(); }, task);
}

nlohmann::json task_to_json(const Task& task) {
    if (const auto* g = std::get_if<GaussModesTask>(&task)) {
        return {{"type", "gauss_modes"}, {"k", g->k}, {"radius", g->radius}, {"sigma", g->sigma}};
    }
    const auto& r = std::get<CondRegressionTask>(task);
    return {{"type", "cond_regression"},
            {"dim_x", r.dim_x},
            {"dim_y", r.dim_y},
            {"noise_std", r.noise_std},
            {"map_seed", r.map_seed}};
}

Task task_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "gauss_modes") {
        GaussModesTask g;
        g.k = j.value("k", g.k);
        g.radius = j.value("radius", g.radius);
        g.sigma = j.value("sigma", g.sigma);
        g.validate();
        return g;
    }
    if (type == "cond_regression") {
        CondRegressionTask r;
        r.dim_x = j.value("dim_x", r.dim_x);
        r.dim_y = j.value("dim_y", r.dim_y);
        r.noise_std = j.value("noise_std", r.noise_std);
        r.map_seed = j.value("map_seed", r.map_seed);
        r.validate();
        return r;
    }
    throw Error("unknown task type '" + type + "'");
}

namespace {

ConditionalDataset sample_gauss(const GaussModesTask& task, std::size_t n, std::uint64_t seed) {
    task.validate();
    Rng rng(seed);
    std::vector<int> labels;
    labels.reserve(n);
    for (std::size_t l = 0; l < task.k; ++l) {
        const std::size_t count = n / task.k + (l < n % task.k ? 1 : 0);
        labels.insert(labels.end(), count, static_cast<int>(l));
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    const auto centers = task.centers();
    std::normal_distribution<double> normal(0.0, task.sigma);
    Tensor ys({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = centers[static_cast<std::size_t>(labels[i])];
        ys.at(i, 0) = c[0] + normal(rng);
        ys.at(i, 1) = c[1] + normal(rng);
    }
    ConditionalDataset ds;
    ds.xs = task.one_hot(labels);
    ds.ys = std::move(ys);
    ds.labels = std::move(labels);
    ds.seed = seed;
    return ds;
}

ConditionalDataset sample_regression(const CondRegressionTask& task, std::size_t n, std::uint64_t seed) {
    task.validate();
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor xs({n, task.dim_x});
    for (double& v : xs.values()) v = normal(rng);
    Tensor ys = task.noiseless(xs);
    if (task.noise_std > 0.0) {
        std::normal_distribution<double> noise(0.0, task.noise_std);
        for (double& v : ys.values()) v += noise(rng);
    }
    ConditionalDataset ds;
    ds.xs = std::move(xs);
    ds.ys = std::move(ys);
    ds.seed = seed;
    return ds;
}

}  // namespace

ConditionalDataset sample_dataset(const Task& task, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw Error("sample_dataset: n must be at least 2");
    if (const auto* g = std::get_if<GaussModesTask>(&task)) return sample_gauss(*g, n, seed);
    return sample_regression(std::get<CondRegressionTask>(task), n, seed);
}

int oracle_classify(const GaussModesTask& task, std::span<const double> y) {
    if (y.size() != 2) throw ShapeError("oracle_classify: y must be 2-D point");
    const auto centers = task.centers();
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < centers.size(); ++l) {
        const double dx = y[0] - centers[l][0];
        const double dy = y[1] - centers[l][1];
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(l);
        }
    }
    return best;
}

RegressionMetrics regression_metrics(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw ShapeError("regression_metrics: shapes " + shape_str(pred.shape()) + " and " +
                         shape_str(target.shape()));
    }
    double se = 0.0, sle = 0.0, rel = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        se += d * d;
        const double dl = std::log1p(std::fabs(pred[i])) - std::log1p(std::fabs(target[i]));
        sle += dl * dl;
        rel += std::fabs(d) / (1.0 + std::fabs(target[i]));
    }
    const double n = static_cast<double>(pred.size());
    return {std::sqrt(se / n), std::sqrt(sle / n), rel / n};
}

RegressionMetrics regression_error(const CondRegressionTask& task, const Generator& gen, std::size_t n_eval,
                                   std::uint64_t seed) {
    if (n_eval == 0) throw Error("regression_error: n_eval must be positive");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor x({n_eval, task.dim_x});
    for (double& v : x.values()) v = normal(rng);
    Tensor pred;
    if (gen.noise_dim > 0) {
        Tensor z({n_eval, gen.noise_dim});
        for (double& v : z.values()) v = normal(rng);
        pred = generate(gen, x, &z);
    } else {
        pred = generate(gen, x);
    }
    return regression_metrics(pred, task.noiseless(x));
}

}  // namespace acgan
