#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nnstab/activations.hpp"
#include "nnstab/model.hpp"

namespace nnstab {

// ---- two-layer -------------------------------------------------------------

/// ρ = c_x²((B'² + B B'')/m^{2c−1} + B'' c_y/m^c)
double rho_two_layer(double c_x, double c_y, const ActivationSpec& act, int m, double c);

/// −(c_x³ B' B'' m^{1/2−2c} dist + c_x² B'' √(2c₀) m^{−c})
double curvature_lower_bound_two_layer(double c_x, const ActivationSpec& act, int m, double c, double dist,
                                       double c0);
/// Same expression with B_σ in place of B_σ'' in the constant term.
double curvature_lower_bound_two_layer_alt(double c_x, const ActivationSpec& act, int m, double c, double dist,
                                           double c0);

/// b̃ = c_x² B''(2 B' c_x/m^{c−1/2} + √(2c₀))
double b_tilde(double c_x, const ActivationSpec& act, int m, double c, double c0);

struct TwoLayerConstants {
    double rho;
    double b_tilde;
    double c1, c2, c3;
};
TwoLayerConstants two_layer_constants(double c_x, double c_y, const ActivationSpec& act, int m, double c,
                                      double c0);

/// ε_t along a pair of trajectories at distance dist.
double eps_t_two_layer(double c_x, const ActivationSpec& act, int m, double c, double eta, double rho, int t_max,
                       double c0, double dist);

// ---- three-layer -----------------------------------------------------------

struct ThreeLayerBasic {
    double b1, b2, rho_hat;
};
ThreeLayerBasic three_layer_constants(double c_x, const ActivationSpec& act, double c0);

struct RhoCw {
    double rho_w;
    double c_w;
};
/// Smoothness ρ_W and curvature coefficient C_W as functions of ||W^{(2)}||.
RhoCw rho_w_and_c_w(double w2_norm, int m, double c, double c_x, const ActivationSpec& act, double c0);
/// −C_W(B' B m^{1−2c}||W^{(2)}|| + √(2c₀))
double curvature_lower_bound_three_layer(double c_w, double w2_norm, const ActivationSpec& act, int m, double c,
                                         double c0);

double b_cal_t(double eta, int t_max, double w0_norm);        // √(ηT) + ||W₀||
double c_t_n(double eta, int t_max, int n);                   // ηT + η³T²/n²
double c3_t(double b1, double eta, int t_max, int m, double c, double c0);
/// Constant multiplying the width factor inside ε̃_t (not defined in closed form
/// by the source): max{2B'²c_x·max(1, √(2c₀)), B' B}.
double b3_constant(double c_x, const ActivationSpec& act, double c0);
double eps_t_three_layer(double c3t, double b3, double eta, int t_max, double w0_norm, int m, double c,
                         double rho_hat, double c0, double dist);

enum class FormulaVariant { appendix, main_text };

/// Ĉ_W at a point of norm w_norm.
double c_hat_w(double b1, int m, double c, double w_norm, double eta, int t_max, double c0, double w0_norm,
               FormulaVariant variant = FormulaVariant::appendix);
/// B̂_W. The appendix form uses dist = ||W − W₀|| and ||W₀||; the main-text form
/// uses ||W|| = w_norm only.
double b_hat_w(double c_x, const ActivationSpec& act, int m, double c, double eta, int t_max, double c0,
               double w0_norm, double dist, double w_norm, FormulaVariant variant = FormulaVariant::appendix);

struct ThreeLayerConstants {
    double b1, b2, rho_hat;
    double b_cal_t;
    double c_t_n;
    double c_hat_w;
    double b_hat_w;
    double c3_t;
};
ThreeLayerConstants three_layer_all(double c_x, const ActivationSpec& act, double c0, int m, double c, double eta,
                                    int t_max, int n, double w0_norm, double wstar_norm, double wstar_dist,
                                    FormulaVariant variant = FormulaVariant::appendix);

// ---- stability / generalization -------------------------------------------

/// 2eηT√(2c₀ρ(ρηT + 2))/n; pass ρ̂ for three-layer networks.
double uniform_stability_bound(double eta, int t_max, int n, double rho, double c0);

/// (4e²η²ρ²t/n² + 4eηρ/n) Σ_{j<t} L_S(W_j)
double generalization_bound(double eta, double rho, int t, int n, const std::vector<double>& risk_history);

/// ρ/(2n) Σ dist² + √(2ρ L_S Σ dist²/n) from final-iterate distances.
double stability_gen_bound(double rho, int n, double sum_sq_dist, double train_risk);

/// ηT m^{1−2c}/n · L(W*) + Λ (two-layer) or ηT/n · L(W*) + Λ (three-layer), constant 1.
double excess_risk_bound(Architecture arch, double eta, int t_max, int n, int m, double c, double pop_risk_min,
                         double approx_error);
/// Λ_{1/ηT} ≤ ||W* − W₀||²/(2ηT)
double approx_error_surrogate(double wstar_dist, double eta, int t_max);

// ---- width conditions ------------------------------------------------------

enum class ConditionId { eq4, eq5, eq6, eq7 };
std::string to_string(ConditionId id);

struct WidthConditionReport {
    ConditionId id;
    double required_m;
    int actual_m;
    bool satisfied;
    bool heuristic;  // constant 1 in place of an unspecified ≳ constant
    std::vector<std::pair<std::string, double>> terms;
};

struct WidthInputs {
    Architecture arch = Architecture::two_layer;
    double eta = 0.1;
    int t_max = 100;
    int n = 100;
    double c = 0.5;
    int m = 16;
    double c_x = 1.0;
    double c_y = 1.0;
    ActivationSpec act = certified_bounds(ActivationKind::sigmoid);
    double c0 = 0.5;
    double w0_norm = 0.0;
    double wstar_dist = 0.0;  // ||W* − W₀||
    double wstar_norm = 0.0;  // ||W*||
};

/// eq4 + eq5 for two-layer, eq6 + eq7 for three-layer networks.
std::vector<WidthConditionReport> width_conditions(const WidthInputs& in);
bool all_satisfied(const std::vector<WidthConditionReport>& reports);

// ---- (c, μ) regions ---------------------------------------------------------

enum class Region { pink_infeasible, blue_over_necessary, blue_dotted_under_sufficient };
std::string to_string(Region r);

struct RegionVerdict {
    Architecture arch;
    double c;
    double mu;
    Region region;
    std::optional<double> smallest_width_exponent;  // absent in the pink region
    std::optional<double> eta_t_low;
    std::optional<double> eta_t_high;  // absent: unbounded
};

RegionVerdict classify_region(Architecture arch, double c, double mu);

/// Grid of c values: two-layer 1/2 + k/40 (k = 0..20); three-layer skips c = 1/2
/// and uses 1/2 + (k+1)/42 (k = 0..20). μ = k/20.
std::vector<RegionVerdict> region_grid(Architecture arch, int points = 21);
void write_region_csv(std::ostream& out, const std::vector<RegionVerdict>& grid);

nlohmann::ordered_json to_json(const WidthConditionReport& r);
nlohmann::ordered_json to_json(const RegionVerdict& v);

}  // namespace nnstab
