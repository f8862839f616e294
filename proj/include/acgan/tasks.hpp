#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgan/nets.hpp"
#include "acgan/pairing.hpp"

namespace acgan {

/// K Gaussian modes evenly spaced on a circle; the condition is the one-hot label.
struct GaussModesTask {
    std::size_t k = 8;
    double radius = 4.0;
    double sigma = 0.25;

    void validate() const;
    std::size_t x_dim() const { return k; }
    std::size_t y_dim() const { return 2; }
    std::vector<std::array<double, 2>> centers() const;
    Tensor one_hot(std::span<const int> labels) const;
};

/// y = tanh(W x + b) + noise with W, b fixed by map_seed; x ~ N(0, I).
struct CondRegressionTask {
    std::size_t dim_x = 4;
    std::size_t dim_y = 2;
    double noise_std = 0.05;
    std::uint64_t map_seed = 7;

    void validate() const;
    std::size_t x_dim() const { return dim_x; }
    std::size_t y_dim() const { return dim_y; }
    Tensor weights() const;  // (dim_x, dim_y)
    Tensor bias() const;     // (dim_y)
    Tensor noiseless(const Tensor& x) const;
};

using Task = std::variant<GaussModesTask, CondRegressionTask>;

std::size_t task_x_dim(const Task& task);
std::size_t task_y_dim(const Task& task);
nlohmann::json task_to_json(const Task& task);
Task task_from_json(const nlohmann::json& j);

/// Deterministic in (task, n, seed). GaussModes rows are stratified by label
/// (n/K each, remainder to the lowest labels) and then shuffled.
ConditionalDataset sample_dataset(const Task& task, std::size_t n, std::uint64_t seed);

/// Nearest center; ties go to the lowest label.
int oracle_classify(const GaussModesTask& task, std::span<const double> y);

struct RegressionMetrics {
    double rmse = 0.0;
    double log_rmse = 0.0;  // distance in log(1 + |y|) space
    double abs_rel = 0.0;   // mean |pred - target| / (1 + |target|)
};

RegressionMetrics regression_metrics(const Tensor& pred, const Tensor& target);

/// Metrics of G against the noiseless map on n_eval fresh inputs.
RegressionMetrics regression_error(const CondRegressionTask& task, const Generator& gen, std::size_t n_eval,
                                   std::uint64_t seed);

}  // namespace acgan
