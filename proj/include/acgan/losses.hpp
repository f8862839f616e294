#pragma once

#include <array>
#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

#include "acgan/autodiff.hpp"

namespace acgan {

enum class Formulation { kClassic, kAcontrario, kHingeClassic, kHingeAcontrario };
enum class GenLossMode { kMinmax, kNonSaturating };

std::string_view to_string(Formulation f);
std::string_view to_string(GenLossMode m);
Formulation parse_formulation(std::string_view s);
GenLossMode parse_gen_loss_mode(std::string_view s);

/// Active adversarial objective. lambdas weight (real-cond, gen-cond, real-ac, gen-ac).
struct LossSpec {
    Formulation formulation = Formulation::kAcontrario;
    std::array<double, 4> lambdas{1.0, 1.0, 1.0, 1.0};
    GenLossMode gen_mode = GenLossMode::kNonSaturating;
    double recon_weight = 0.0;

    void validate() const;
    bool hinge() const;
    bool acontrario() const;

    /// Weighting strategies: 1 equal, 2 true/fake balanced, 3 without the gen-ac term.
    static LossSpec strategy(int which);
    static LossSpec classic();

    friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

nlohmann::json to_json(const LossSpec& spec);
LossSpec loss_spec_from_json(const nlohmann::json& j);

/// Unweighted per-pairing terms plus the weighted totals of one step.
struct LossBreakdown {
    double d_real_cond = 0.0;
    double d_gen_cond = 0.0;
    double d_real_ac = 0.0;
    double d_gen_ac = 0.0;
    double d_total = 0.0;
    double g_adv = 0.0;
    double g_recon = 0.0;
    double g_total = 0.0;
};

// Cross-entropy terms in descent form, on probabilities.
Var real_term(Var p);  // -E[log p]
Var fake_term(Var p);  // -E[log(1 - p)]

// Hinge terms on raw logits.
Var hinge_real_term(Var logit);  // -E[min(0, -1 + l)]
Var hinge_fake_term(Var logit);  // -E[min(0, -1 - l)]

Var d_loss_classic(Var p_real, Var p_fake);
Var d_loss_acontrario(Var p_real_ac, Var p_gen_ac);

/// Discriminator outputs on the four pairings: probabilities for the
/// cross-entropy formulations, logits for the hinge ones.
struct DiscOutputs {
    Var real_cond;
    Var gen_cond;
    std::optional<Var> real_ac;
    std::optional<Var> gen_ac;
};

struct DiscLoss {
    Var total;
    LossBreakdown breakdown;  // d_* fields filled; terms without inputs are 0
};

/// Weighted sum of the terms whose lambda is positive. Terms with a zero
/// weight are still evaluated for logging but never enter the gradient path.
DiscLoss d_loss_total(const DiscOutputs& out, const LossSpec& spec);

struct GenLoss {
    Var total;
    double adv = 0.0;
    double recon = 0.0;
};

/// minmax: E[log(1 - p)]; non-saturating: -E[log p]; plus recon_weight * mean|y_G - y_true|.
GenLoss g_loss(Var p_fake_cond, GenLossMode mode, Var y_gen, std::optional<Var> y_true, double recon_weight);

/// Generator hinge objective -E[l] plus the same reconstruction term.
GenLoss g_loss_hinge(Var logit_gen_cond, Var y_gen, std::optional<Var> y_true, double recon_weight);

struct HingeLosses {
    Var d;
    Var g;
};

HingeLosses hinge_losses(Var logit_real, Var logit_gen, Var logit_real_ac, Var logit_gen_ac, Var logit_gen_for_g);

}  // namespace acgan
