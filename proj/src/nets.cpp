#include "acgan/nets.hpp"

#include <random>

namespace acgan {

std::string_view to_string(OutputActivation a) {
    switch (a) {
        case OutputActivation::kIdentity: return "identity";
        case OutputActivation::kTanh: return "tanh";
        case OutputActivation::kSigmoid: return "sigmoid";
        case OutputActivation::kSoftmax: return "softmax";
    }
    return "identity";
}

OutputActivation parse_output_activation(std::string_view s) {
    if (s == "identity") return OutputActivation::kIdentity;
    if (s == "tanh") return OutputActivation::kTanh;
    if (s == "sigmoid") return OutputActivation::kSigmoid;
    if (s == "softmax") return OutputActivation::kSoftmax;
    throw Error("unknown output activation '" + std::string(s) + "'");
}

void MlpSpec::validate() const {
    if (widths.size() < 3) throw Error("mlp spec needs input, at least one hidden layer, and output");
    for (auto w : widths) {
        if (w == 0) throw Error("mlp layer widths must be positive");
    }
}

std::size_t MlpSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) n += widths[i] * widths[i + 1] + widths[i + 1];
    return n;
}

std::vector<Tensor> init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, kInitStd);
    std::vector<Tensor> params;
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        Tensor w({spec.widths[i], spec.widths[i + 1]});
        for (double& v : w.values()) v = normal(rng);
        params.push_back(std::move(w));
        params.emplace_back(Shape{spec.widths[i + 1]}, 0.0);
    }
    return params;
}

std::vector<Var> bind_params(Graph& g, std::span<const Tensor> params, bool trainable) {
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& p : params) vars.push_back(trainable ? g.param(p) : g.constant(p));
    return vars;
}

Var mlp_logits(const MlpSpec& spec, std::span<const Var> params, Var input) {
    const std::size_t layers = spec.widths.size() - 1;
    if (params.size() != 2 * layers) throw Error("mlp: expected " + std::to_string(2 * layers) + " params");
    const auto& in = input.value();
    if (in.ndim() != 2 || in.dim(1) != spec.input_dim()) {
        throw ShapeError("mlp: input shape " + shape_str(in.shape()) + " does not match input width " +
                         std::to_string(spec.input_dim()));
    }
    Var h = input;
    for (std::size_t l = 0; l < layers; ++l) {
        h = add(matmul(h, params[2 * l]), params[2 * l + 1]);
        if (l + 1 < layers) h = leaky_relu(h, spec.hidden_slope);
    }
    return h;
}

Var mlp_forward(const MlpSpec& spec, std::span<const Var> params, Var input) {
    Var h = mlp_logits(spec, params, input);
    switch (spec.output) {
        case OutputActivation::kIdentity: return h;
        case OutputActivation::kTanh: return tanh(h);
        case OutputActivation::kSigmoid: return sigmoid(h);
        case OutputActivation::kSoftmax: return softmax_rows(h);
    }
    return h;
}

namespace {

std::vector<std::size_t> layer_widths(std::size_t in, std::span<const std::size_t> hidden, std::size_t out) {
    std::vector<std::size_t> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
}

}  // namespace

Generator make_generator(std::size_t x_dim, std::size_t y_dim, std::size_t noise_dim,
                         std::span<const std::size_t> hidden, OutputActivation output,
                         std::uint64_t seed) {
    Generator gen;
    gen.spec.widths = layer_widths(x_dim + noise_dim, hidden, y_dim);
    gen.spec.output = output;
    gen.x_dim = x_dim;
    gen.y_dim = y_dim;
    gen.noise_dim = noise_dim;
    gen.params = init_params(gen.spec, seed);
    return gen;
}

Discriminator make_discriminator(std::size_t x_dim, std::size_t y_dim,
                                 std::span<const std::size_t> hidden, std::uint64_t seed) {
    Discriminator disc;
    disc.spec.widths = layer_widths(x_dim + y_dim, hidden, 1);
    disc.spec.output = OutputActivation::kSigmoid;
    disc.x_dim = x_dim;
    disc.y_dim = y_dim;
    disc.params = init_params(disc.spec, seed);
    return disc;
}

Var gen_forward(const Generator& gen, std::span<const Var> params, Var x, std::optional<Var> z) {
    const auto& xv = x.value();
    if (xv.ndim() != 2 || xv.dim(1) != gen.x_dim) {
        throw ShapeError("generator: x shape " + shape_str(xv.shape()) + ", expected (B," +
                         std::to_string(gen.x_dim) + ")");
    }
    if (gen.noise_dim == 0) {
        if (z) throw ShapeError("generator: z supplied but noise is disabled");
        return mlp_forward(gen.spec, params, x);
    }
    if (!z) throw ShapeError("generator: z required when noise_dim > 0");
    const auto& zv = z->value();
    if (zv.ndim() != 2 || zv.dim(0) != xv.dim(0) || zv.dim(1) != gen.noise_dim) {
        throw ShapeError("generator: z shape " + shape_str(zv.shape()) + " does not match x " +
                         shape_str(xv.shape()));
    }
    return mlp_forward(gen.spec, params, concat({x, *z}, 1));
}

Var disc_forward(const Discriminator& disc, std::span<const Var> params, Var x, Var y, DiscOutput mode) {
    const auto& xv = x.value();
    const auto& yv = y.value();
    if (xv.ndim() != 2 || yv.ndim() != 2 || xv.dim(0) != yv.dim(0) || xv.dim(1) != disc.x_dim ||
        yv.dim(1) != disc.y_dim) {
        throw ShapeError("discriminator: x " + shape_str(xv.shape()) + " and y " + shape_str(yv.shape()) +
                         " do not match (B," + std::to_string(disc.x_dim) + ") and (B," +
                         std::to_string(disc.y_dim) + ")");
    }
    Var logit = mlp_logits(disc.spec, params, concat({x, y}, 1));
    return mode == DiscOutput::kLogit ? logit : sigmoid(logit);
}

Tensor generate(const Generator& gen, const Tensor& x, const Tensor* z) {
    Graph g;
    auto p = bind_params(g, gen.params, false);
    std::optional<Var> zv;
    if (z) zv = g.constant(*z);
    return gen_forward(gen, p, g.constant(x), zv).value();
}

Tensor discriminate(const Discriminator& disc, const Tensor& x, const Tensor& y, DiscOutput mode) {
    Graph g;
    auto p = bind_params(g, disc.params, false);
    return disc_forward(disc, p, g.constant(x), g.constant(y), mode).value();
}

nlohmann::json params_to_json(std::span<const Tensor> params) {
    auto arr = nlohmann::json::array();
    for (const auto& t : params) {
        arr.push_back({{"shape", t.shape()}, {"values", t.storage()}});
    }
    return arr;
}

std::vector<Tensor> params_from_json(const nlohmann::json& j) {
    std::vector<Tensor> out;
    for (const auto& item : j) {
        out.emplace_back(item.at("shape").get<Shape>(), item.at("values").get<std::vector<double>>());
    }
    return out;
}

namespace {

nlohmann::json spec_to_json(const MlpSpec& s) {
    return {{"widths", s.widths}, {"hidden_slope", s.hidden_slope}, {"output_activation", to_string(s.output)}};
}

MlpSpec spec_from_json(const nlohmann::json& j) {
    MlpSpec s;
    s.widths = j.at("widths").get<std::vector<std::size_t>>();
    s.hidden_slope = j.at("hidden_slope").get<double>();
    s.output = parse_output_activation(j.at("output_activation").get<std::string>());
    s.validate();
    return s;
}

void check_params(const MlpSpec& spec, const std::vector<Tensor>& params) {
    auto expect = init_params(spec, 0);
    if (expect.size() != params.size()) throw Error("checkpoint: parameter count does not match spec");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (expect[i].shape() != params[i].shape()) {
            throw Error("checkpoint: parameter " + std::to_string(i) + " has shape " +
                        shape_str(params[i].shape()) + ", spec requires " + shape_str(expect[i].shape()));
        }
    }
}

}  // namespace

nlohmann::json to_json(const Generator& gen) {
    return {{"spec", spec_to_json(gen.spec)},
            {"x_dim", gen.x_dim},
            {"y_dim", gen.y_dim},
            {"noise_dim", gen.noise_dim},
            {"params", params_to_json(gen.params)}};
}

nlohmann::json to_json(const Discriminator& disc) {
    return {{"spec", spec_to_json(disc.spec)},
            {"x_dim", disc.x_dim},
            {"y_dim", disc.y_dim},
            {"params", params_to_json(disc.params)}};
}

Generator generator_from_json(const nlohmann::json& j) {
    Generator g;
    g.spec = spec_from_json(j.at("spec"));
    g.x_dim = j.at("x_dim").get<std::size_t>();
    g.y_dim = j.at("y_dim").get<std::size_t>();
    g.noise_dim = j.at("noise_dim").get<std::size_t>();
    g.params = params_from_json(j.at("params"));
    if (g.spec.input_dim() != g.x_dim + g.noise_dim || g.spec.output_dim() != g.y_dim) {
        throw Error("checkpoint: generator dimensions disagree with its spec");
    }
    check_params(g.spec, g.params);
    return g;
}

Discriminator discriminator_from_json(const nlohmann::json& j) {
    Discriminator d;
    d.spec = spec_from_json(j.at("spec"));
    d.x_dim = j.at("x_dim").get<std::size_t>();
    d.y_dim = j.at("y_dim").get<std::size_t>();
    d.params = params_from_json(j.at("params"));
    if (d.spec.input_dim() != d.x_dim + d.y_dim || d.spec.output_dim() != 1) {
        throw Error("checkpoint: discriminator dimensions disagree with its spec");
    }
    check_params(d.spec, d.params);
    return d;
}

}  // namespace acgan
