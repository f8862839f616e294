#include "acgan/losses.hpp"

#include "acgan/tensor.hpp"

namespace acgan {

std::string_view to_string(Formulation f) {
    switch (f) {
        case Formulation::kClassic: return "classic";
        case Formulation::kAcontrario: return "acontrario";
        case Formulation::kHingeClassic: return "hinge_classic";
        case Formulation::kHingeAcontrario: return "hinge_acontrario";
    }
    return "";
}

std::string_view to_string(GenLossMode m) {
    return m == GenLossMode::kMinmax ? "minmax" : "non_saturating";
}

Formulation parse_formulation(std::string_view s) {
    if (s == "classic") return Formulation::kClassic;
    if (s == "acontrario") return Formulation::kAcontrario;
    if (s == "hinge_classic") return Formulation::kHingeClassic;
    if (s == "hinge_acontrario") return Formulation::kHingeAcontrario;
    throw Error("unknown loss formulation '" + std::string(s) + "'");
}

GenLossMode parse_gen_loss_mode(std::string_view s) {
    if (s == "minmax") return GenLossMode::kMinmax;
    if (s == "non_saturating") return GenLossMode::kNonSaturating;
    throw Error("unknown generator loss mode '" + std::string(s) + "'");
}

bool LossSpec::hinge() const {
    return formulation == Formulation::kHingeClassic || formulation == Formulation::kHingeAcontrario;
}

bool LossSpec::acontrario() const {
    return formulation == Formulation::kAcontrario || formulation == Formulation::kHingeAcontrario;
}

void LossSpec::validate() const {
    bool any = false;
    for (double l : lambdas) {
        if (!(l >= 0.0)) throw Error("loss: lambdas must be non-negative");
        any = any || l > 0.0;
    }
    if (!any) throw Error("loss: at least one lambda must be positive");
    if (!acontrario() && (lambdas[2] != 0.0 || lambdas[3] != 0.0)) {
        throw Error("loss: classic formulations require lambda3 = lambda4 = 0");
    }
    if (!(recon_weight >= 0.0)) throw Error("loss: recon_weight must be non-negative");
}

LossSpec LossSpec::strategy(int which) {
    LossSpec s;
    switch (which) {
        case 1: s.lambdas = {1.0, 1.0, 1.0, 1.0}; break;
        case 2: s.lambdas = {1.0, 0.33, 0.33, 0.33}; break;
        case 3: s.lambdas = {0.5, 0.5, 0.5, 0.0}; break;
        default: throw Error("loss: unknown weighting strategy " + std::to_string(which));
    }
    return s;
}

LossSpec LossSpec::classic() {
    LossSpec s;
    s.formulation = Formulation::kClassic;
    s.lambdas = {1.0, 1.0, 0.0, 0.0};
    return s;
}

nlohmann::json to_json(const LossSpec& spec) {
    return {{"formulation", to_string(spec.formulation)},
            {"lambdas", spec.lambdas},
            {"gen_loss_mode", to_string(spec.gen_mode)},
            {"recon_weight", spec.recon_weight}};
}

LossSpec loss_spec_from_json(const nlohmann::json& j) {
    LossSpec s;
    if (j.contains("formulation")) s.formulation = parse_formulation(j.at("formulation").get<std::string>());
    if (!s.acontrario()) s.lambdas = {1.0, 1.0, 0.0, 0.0};
    if (j.contains("lambdas")) s.lambdas = j.at("lambdas").get<std::array<double, 4>>();
    if (j.contains("gen_loss_mode")) s.gen_mode = parse_gen_loss_mode(j.at("gen_loss_mode").get<std::string>());
    if (j.contains("recon_weight")) s.recon_weight = j.at("recon_weight").get<double>();
    s.validate();
    return s;
}

Var real_term(Var p) { return neg(mean(log(p))); }

Var fake_term(Var p) { return neg(mean(log(scalar_add(neg(p), 1.0)))); }

Var hinge_real_term(Var logit) { return neg(mean(min_elem(scalar_add(logit, -1.0), 0.0))); }

Var hinge_fake_term(Var logit) { return neg(mean(min_elem(scalar_add(neg(logit), -1.0), 0.0))); }

Var d_loss_classic(Var p_real, Var p_fake) { return add(real_term(p_real), fake_term(p_fake)); }

Var d_loss_acontrario(Var p_real_ac, Var p_gen_ac) { return add(fake_term(p_real_ac), fake_term(p_gen_ac)); }

DiscLoss d_loss_total(const DiscOutputs& out, const LossSpec& spec) {
    const bool h = spec.hinge();
    const auto positive = [&](Var v) { return h ? hinge_real_term(v) : real_term(v); };
    const auto negative = [&](Var v) { return h ? hinge_fake_term(v) : fake_term(v); };

    std::array<std::optional<Var>, 4> terms{positive(out.real_cond), negative(out.gen_cond), std::nullopt,
                                            std::nullopt};
    if (out.real_ac) terms[2] = negative(*out.real_ac);
    if (out.gen_ac) terms[3] = negative(*out.gen_ac);

    DiscLoss result{};
    auto& b = result.breakdown;
    double* fields[4] = {&b.d_real_cond, &b.d_gen_cond, &b.d_real_ac, &b.d_gen_ac};
    std::optional<Var> total;
    for (std::size_t i = 0; i < 4; ++i) {
        if (!terms[i]) {
            if (spec.lambdas[i] > 0.0) throw Error("loss: lambda" + std::to_string(i + 1) + " > 0 but no input given");
            continue;
        }
        *fields[i] = terms[i]->value().item();
        if (spec.lambdas[i] <= 0.0) continue;
        Var weighted = spec.lambdas[i] == 1.0 ? *terms[i] : scalar_mul(*terms[i], spec.lambdas[i]);
        total = total ? add(*total, weighted) : weighted;
    }
    result.total = *total;
    b.d_total = result.total.value().item();
    return result;
}

namespace {

GenLoss with_recon(Var adv, Var y_gen, std::optional<Var> y_true, double recon_weight) {
    GenLoss g{adv, adv.value().item(), 0.0};
    if (recon_weight > 0.0) {
        if (!y_true) throw Error("g_loss: recon_weight > 0 requires y_true");
        Var recon = mean(abs(sub(y_gen, *y_true)));
        g.recon = recon.value().item();
        g.total = add(adv, scalar_mul(recon, recon_weight));
    }
    return g;
}

}  // namespace

GenLoss g_loss(Var p_fake_cond, GenLossMode mode, Var y_gen, std::optional<Var> y_true, double recon_weight) {
    Var adv = mode == GenLossMode::kMinmax ? neg(fake_term(p_fake_cond)) : real_term(p_fake_cond);
    return with_recon(adv, y_gen, y_true, recon_weight);
}

GenLoss g_loss_hinge(Var logit_gen_cond, Var y_gen, std::optional<Var> y_true, double recon_weight) {
    return with_recon(neg(mean(logit_gen_cond)), y_gen, y_true, recon_weight);
}

HingeLosses hinge_losses(Var logit_real, Var logit_gen, Var logit_real_ac, Var logit_gen_ac, Var logit_gen_for_g) {
    Var d = add(add(hinge_real_term(logit_real), hinge_fake_term(logit_gen)),
                add(hinge_fake_term(logit_real_ac), hinge_fake_term(logit_gen_ac)));
    return {d, neg(mean(logit_gen_for_g))};
}

}  // namespace acgan
