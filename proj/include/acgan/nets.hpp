#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgan/autodiff.hpp"
#include "acgan/tensor.hpp"

namespace acgan {

enum class OutputActivation { kIdentity, kTanh, kSigmoid, kSoftmax };

std::string_view to_string(OutputActivation a);
OutputActivation parse_output_activation(std::string_view s);

inline constexpr double kHiddenSlope = 0.2;
inline constexpr double kInitStd = 0.02;

/// Fully connected stack; widths include the input and output layers.
struct MlpSpec {
    std::vector<std::size_t> widths;
    double hidden_slope = kHiddenSlope;
    OutputActivation output = OutputActivation::kIdentity;

    void validate() const;
    std::size_t input_dim() const { return widths.front(); }
    std::size_t output_dim() const { return widths.back(); }
    std::size_t param_count() const;

    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Weights ~ N(0, 0.02^2) stored (in, out); biases zero. Layout is W0, b0, W1, b1, ...
std::vector<Tensor> init_params(const MlpSpec& spec, std::uint64_t seed);

/// Registers params as graph leaves; trainable=false gives constants (frozen network).
std::vector<Var> bind_params(Graph& g, std::span<const Tensor> params, bool trainable);

/// Pre-activation output of the final layer.
Var mlp_logits(const MlpSpec& spec, std::span<const Var> params, Var input);
Var mlp_forward(const MlpSpec& spec, std::span<const Var> params, Var input);

struct Generator {
    MlpSpec spec;
    std::vector<Tensor> params;
    std::size_t x_dim = 0;
    std::size_t y_dim = 0;
    std::size_t noise_dim = 0;  // 0 disables z
};

enum class DiscOutput { kProb, kLogit };

/// D(x, y) = sigmoid(f(x, y)) with x and y concatenated at the input layer.
struct Discriminator {
    MlpSpec spec;
    std::vector<Tensor> params;
    std::size_t x_dim = 0;
    std::size_t y_dim = 0;
};

Generator make_generator(std::size_t x_dim, std::size_t y_dim, std::size_t noise_dim,
                         std::span<const std::size_t> hidden, OutputActivation output,
                         std::uint64_t seed);
Discriminator make_discriminator(std::size_t x_dim, std::size_t y_dim,
                                 std::span<const std::size_t> hidden, std::uint64_t seed);

Var gen_forward(const Generator& gen, std::span<const Var> params, Var x, std::optional<Var> z);
Var disc_forward(const Discriminator& disc, std::span<const Var> params, Var x, Var y, DiscOutput mode);

/// Graph-free evaluation helpers for frozen networks.
Tensor generate(const Generator& gen, const Tensor& x, const Tensor* z = nullptr);
Tensor discriminate(const Discriminator& disc, const Tensor& x, const Tensor& y, DiscOutput mode);

nlohmann::json to_json(const Generator& gen);
nlohmann::json to_json(const Discriminator& disc);
Generator generator_from_json(const nlohmann::json& j);
Discriminator discriminator_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(std::span<const Tensor> params);
std::vector<Tensor> params_from_json(const nlohmann::json& j);

}  // namespace acgan
