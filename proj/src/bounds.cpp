#include "nnstab/bounds.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace nnstab {

namespace {

constexpr double kE = std::numbers::e;
// Slack for boundary comparisons in the region classifier, so that grid points
// lying exactly on a line are classified as the closed-form inequality says.
constexpr double kBoundaryTol = 1e-12;

double mpow(int m, double e) { return std::pow(static_cast<double>(m), e); }

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

double rho_two_layer(double c_x, double c_y, const ActivationSpec& act, int m, double c) {
    const double b = act.b_sigma, b1 = act.b_sigma1, b2 = act.b_sigma2;
    return c_x * c_x * ((b1 * b1 + b * b2) / mpow(m, 2 * c - 1) + b2 * c_y / mpow(m, c));
}

double curvature_lower_bound_two_layer(double c_x, const ActivationSpec& act, int m, double c, double dist,
                                       double c0) {
    const double b1 = act.b_sigma1, b2 = act.b_sigma2;
    return -(c_x * c_x * c_x * b1 * b2 * mpow(m, 0.5 - 2 * c) * dist +
             c_x * c_x * b2 * std::sqrt(2 * c0) * mpow(m, -c));
}

double curvature_lower_bound_two_layer_alt(double c_x, const ActivationSpec& act, int m, double c, double dist,
                                           double c0) {
    return -(c_x * c_x * c_x * act.b_sigma1 * act.b_sigma2 * mpow(m, 0.5 - 2 * c) * dist +
             c_x * c_x * act.b_sigma * std::sqrt(2 * c0) * mpow(m, -c));
}

double b_tilde(double c_x, const ActivationSpec& act, int m, double c, double c0) {
    return c_x * c_x * act.b_sigma2 * (2 * act.b_sigma1 * c_x / mpow(m, c - 0.5) + std::sqrt(2 * c0));
}

TwoLayerConstants two_layer_constants(double c_x, double c_y, const ActivationSpec& act, int m, double c,
                                      double c0) {
    const double b1 = act.b_sigma1, b2 = act.b_sigma2;
    const double s = std::sqrt(2 * c0);
    const double p = 4 * c - 1;
    return {rho_two_layer(c_x, c_y, act, m, c), b_tilde(c_x, act, m, c, c0),
            std::pow(8 * kE * c_x * c_x * b1 * b2 * s, 2 / p), std::pow(4 * s * c_x * c_x * b1 * b2, 3 / p),
            std::pow(8 * s * c_x * b2, 1 / c)};
}

double eps_t_two_layer(double c_x, const ActivationSpec& act, int m, double c, double eta, double rho, int t_max,
                       double c0, double dist) {
    const double b1 = act.b_sigma1, b2 = act.b_sigma2;
    const double lip = c_x * b1 / mpow(m, c - 0.5);
    return c_x * c_x * b2 / mpow(m, c) *
           (lip * (1 + eta * rho) * dist + lip * std::sqrt(2 * eta * t_max * c0) + std::sqrt(2 * c0));
}

ThreeLayerBasic three_layer_constants(double c_x, const ActivationSpec& act, double c0) {
    const double b = act.b_sigma, b1 = act.b_sigma1, b2 = act.b_sigma2;
    const double cx2 = c_x * c_x;
    const double B1 = std::max({b1 * b1 * b2 * cx2, b1 * b2 * cx2, 2 * b2 * b * c_x, b2 * b * b, 2 * b2 * b2 * c_x});
    const double B2 = std::max({b1 * b1 * b1 * b1 * cx2, b1 * b1 * b2 * b2, b2 * b, std::sqrt(2 * c0)});
    return {B1, B2, 4 * B2 * (1 + 2 * B1)};
}

RhoCw rho_w_and_c_w(double w2_norm, int m, double c, double c_x, const ActivationSpec& act, double c0) {
    const double b = act.b_sigma, b1 = act.b_sigma1, b2 = act.b_sigma2;
    const double cx2 = c_x * c_x;
    const double w = w2_norm;
    const double c_w = b1 * b1 * b2 * cx2 * mpow(m, -3 * c) * w * w +
                       (b1 * b2 * cx2 * mpow(m, 0.5 - 2 * c) + 2 * b2 * b1 * b * c_x * mpow(m, 0.5 - 3 * c)) * w +
                       b2 * b * b * mpow(m, 1 - 3 * c) + 2 * b1 * b1 * c_x * mpow(m, 0.5 - 2 * c);
    const double rho_w = std::pow(b1, 4) * cx2 * mpow(m, 1 - 4 * c) * w * w + b1 * b1 * b * b * mpow(m, 2 - 4 * c) +
                         c_w * (b1 * b * mpow(m, 1 - 2 * c) * w + std::sqrt(2 * c0));
    return {rho_w, c_w};
}

double curvature_lower_bound_three_layer(double c_w, double w2_norm, const ActivationSpec& act, int m, double c,
                                         double c0) {
    return -c_w * (act.b_sigma1 * act.b_sigma * mpow(m, 1 - 2 * c) * w2_norm + std::sqrt(2 * c0));
}

double b_cal_t(double eta, int t_max, double w0_norm) { return std::sqrt(eta * t_max) + w0_norm; }

double c_t_n(double eta, int t_max, int n) {
    const double T = t_max;
    return eta * T + eta * eta * eta * T * T / (double(n) * n);
}

double c3_t(double b1, double eta, int t_max, int m, double c, double c0) {
    const double et = eta * t_max;
    return 4 * b1 *
           (2 * c0 * et * mpow(m, -3 * c) + (mpow(m, 0.5 - 2 * c) + mpow(m, 0.5 - 3 * c)) * std::sqrt(2 * c0 * et) +
            mpow(m, 1 - 3 * c) + mpow(m, 0.5 - 2 * c));
}

double b3_constant(double c_x, const ActivationSpec& act, double c0) {
    const double b1 = act.b_sigma1;
    return std::max(2 * b1 * b1 * c_x * std::max(1.0, std::sqrt(2 * c0)), b1 * act.b_sigma);
}

double eps_t_three_layer(double c3t, double b3, double eta, int t_max, double w0_norm, int m, double c,
                         double rho_hat, double c0, double dist) {
    const double et = eta * t_max;
    const double width = (std::sqrt(et) + w0_norm) / mpow(m, 2 * c - 0.5) + mpow(m, 1 - 2 * c);
    const double spread = (1 + eta * rho_hat) * dist + 2 * (std::sqrt(2 * c0 * et) + w0_norm);
    return c3t * (b3 * width * spread + std::sqrt(2 * c0));
}

double c_hat_w(double b1, int m, double c, double w_norm, double eta, int t_max, double c0, double w0_norm,
               FormulaVariant variant) {
    const double et = eta * t_max;
    const double w = w_norm;
    if (variant == FormulaVariant::main_text) {
        return 4 * b1 * (mpow(m, -3 * c) * (w * w + 2 * c0 * et) + mpow(m, 0.5 - 2 * c) * (w + std::sqrt(2 * c0 * et)));
    }
    return 4 * b1 *
           (mpow(m, -3 * c) * (w * w + 4 * c0 * et + 2 * w0_norm * w0_norm) +
            mpow(m, 0.5 - 2 * c) * (w + std::sqrt(2 * c0 * et) + w0_norm));
}

double b_hat_w(double c_x, const ActivationSpec& act, int m, double c, double eta, int t_max, double c0,
               double w0_norm, double dist, double w_norm, FormulaVariant variant) {
    const double b = act.b_sigma, b1 = act.b_sigma1;
    const double s = std::sqrt(2 * c0 * eta * t_max);
    const double k1 = b1 * b1 * c_x / mpow(m, 2 * c - 0.5);
    const double k2 = b1 * b / mpow(m, 2 * c - 1);
    if (variant == FormulaVariant::main_text) {
        return (k1 * (s + w_norm) + k2) * (2 * s + w_norm) + std::sqrt(2 * c0);
    }
    return (k1 * (2 * s + dist) + k2) * (2 * s + w0_norm + dist) + std::sqrt(2 * c0);
}

ThreeLayerConstants three_layer_all(double c_x, const ActivationSpec& act, double c0, int m, double c, double eta,
                                    int t_max, int n, double w0_norm, double wstar_norm, double wstar_dist,
                                    FormulaVariant variant) {
    const auto basic = three_layer_constants(c_x, act, c0);
    return {basic.b1,
            basic.b2,
            basic.rho_hat,
            b_cal_t(eta, t_max, w0_norm),
            c_t_n(eta, t_max, n),
            c_hat_w(basic.b1, m, c, wstar_norm, eta, t_max, c0, w0_norm, variant),
            b_hat_w(c_x, act, m, c, eta, t_max, c0, w0_norm, wstar_dist, wstar_norm, variant),
            c3_t(basic.b1, eta, t_max, m, c, c0)};
}

double uniform_stability_bound(double eta, int t_max, int n, double rho, double c0) {
    require_positive(n, "n");
    const double et = eta * t_max;
    return 2 * eta * kE * t_max * std::sqrt(2 * c0 * rho * (rho * et + 2)) / n;
}

double generalization_bound(double eta, double rho, int t, int n, const std::vector<double>& risk_history) {
    if (t < 0 || static_cast<std::size_t>(t) > risk_history.size()) {
        throw std::invalid_argument("generalization_bound: risk history shorter than t");
    }
    const double nn = n;
    const double coef = 4 * kE * kE * eta * eta * rho * rho * t / (nn * nn) + 4 * kE * eta * rho / nn;
    const double sum = std::accumulate(risk_history.begin(), risk_history.begin() + t, 0.0);
    return coef * sum;
}

double stability_gen_bound(double rho, int n, double sum_sq_dist, double train_risk) {
    return rho / (2.0 * n) * sum_sq_dist + std::sqrt(2 * rho * train_risk * sum_sq_dist / n);
}

double excess_risk_bound(Architecture arch, double eta, int t_max, int n, int m, double c, double pop_risk_min,
                         double approx_error) {
    const double width = arch == Architecture::two_layer ? mpow(m, 1 - 2 * c) : 1.0;
    return eta * t_max * width / n * pop_risk_min + approx_error;
}

double approx_error_surrogate(double wstar_dist, double eta, int t_max) {
    return wstar_dist * wstar_dist / (2 * eta * t_max);
}

std::string to_string(ConditionId id) {
    switch (id) {
        case ConditionId::eq4: return "eq4";
        case ConditionId::eq5: return "eq5";
        case ConditionId::eq6: return "eq6";
        case ConditionId::eq7: return "eq7";
    }
    return "?";
}

namespace {

WidthConditionReport finish(ConditionId id, int m, bool heuristic, std::vector<std::pair<std::string, double>> terms) {
    double req = 0.0;
    for (const auto& t : terms) req += t.second;
    return {id, req, m, static_cast<double>(m) >= req, heuristic, std::move(terms)};
}

}  // namespace

std::vector<WidthConditionReport> width_conditions(const WidthInputs& in) {
    const double et = in.eta * in.t_max;
    const double n = in.n;
    const double c = in.c;
    std::vector<WidthConditionReport> out;
    if (in.arch == Architecture::two_layer) {
        if (c < 0.5 || c > 1) throw std::invalid_argument("width_conditions: c outside [1/2, 1]");
        const auto k = two_layer_constants(in.c_x, in.c_y, in.act, in.m, c, in.c0);
        const double rho = k.rho;
        const double p = 4 * c - 1;
        const double inner = et * et * (1 + in.eta * rho) * std::sqrt(rho * (rho * et + 2)) / n;
        out.push_back(finish(ConditionId::eq4, in.m, false,
                             {{"C1*(...)^(2/(4c-1))", k.c1 * std::pow(inner, 2 / p)},
                              {"C2*(eta*T)^(3/(4c-1))", k.c2 * std::pow(et, 3 / p)},
                              {"C3*(eta*T)^(1/c)", k.c3 * std::pow(et, 1 / c)}}));
        const double T = in.t_max;
        const double bracket = kE * kE * std::pow(in.eta, 3) * rho * rho * T * T / (n * n) +
                               kE * in.eta * in.eta * T * rho / n + 1;
        const double base = k.b_tilde * T * (std::sqrt(et) + in.wstar_dist) * bracket;
        out.push_back(finish(ConditionId::eq5, in.m, true, {{"(b~*T*(...)*(...))^(1/c)", std::pow(base, 1 / c)}}));
        return out;
    }
    if (c <= 0.5 || c > 1) throw std::invalid_argument("width_conditions: three-layer c must lie in (1/2, 1]");
    const double bt = b_cal_t(in.eta, in.t_max, in.w0_norm);
    const double w0 = in.w0_norm;
    out.push_back(finish(
        ConditionId::eq6, in.m, true,
        {{"(eta*T)^4", std::pow(et, 4)},
         {"(eta*T)^(1/(4c-2))", std::pow(et, 1 / (4 * c - 2))},
         {"|W0|^(4/(8c-3))", std::pow(w0, 4 / (8 * c - 3))},
         {"|W0|^(1/(6c-3))", std::pow(w0, 1 / (6 * c - 3))},
         {"((eta*T*B_T)^2+(eta*T)^3.5*B_T/n)^(1/(5c-1/2))",
          std::pow(et * et * bt * bt + std::pow(et, 3.5) * bt / n, 1 / (5 * c - 0.5))},
         {"((eta*T)^1.5*B_T^2+(eta*T)^3*B_T/n)^(1/(4c-1))",
          std::pow(std::pow(et, 1.5) * bt * bt + std::pow(et, 3) * bt / n, 1 / (4 * c - 1))},
         {"((eta*T)^2*B_T+(eta*T)^3.5/n)^(1/(5c-1))",
          std::pow(et * et * bt + std::pow(et, 3.5) / n, 1 / (5 * c - 1))},
         {"((eta*T)^1.5*B_T+(eta*T)^3/n)^(1/(4c-3/2))",
          std::pow(std::pow(et, 1.5) * bt + std::pow(et, 3) / n, 1 / (4 * c - 1.5))}}));
    const double ctn = c_t_n(in.eta, in.t_max, in.n);
    const double x = bt + in.wstar_norm;
    out.push_back(finish(ConditionId::eq7, in.m, true,
                         {{"(C_Tn*X^4)^(1/(5c-1/2))", std::pow(ctn * std::pow(x, 4), 1 / (5 * c - 0.5))},
                          {"(C_Tn*X^3)^(1/(4c-1))", std::pow(ctn * std::pow(x, 3), 1 / (4 * c - 1))},
                          {"(C_Tn*X^2)^(1/(4c-3/2))", std::pow(ctn * x * x, 1 / (4 * c - 1.5))},
                          {"(C_Tn*X)^(1/(2c-1/2))", std::pow(ctn * x, 1 / (2 * c - 0.5))}}));
    return out;
}

bool all_satisfied(const std::vector<WidthConditionReport>& reports) {
    for (const auto& r : reports) {
        if (!r.satisfied) return false;
    }
    return true;
}

std::string to_string(Region r) {
    switch (r) {
        case Region::pink_infeasible: return "pink_infeasible";
        case Region::blue_over_necessary: return "blue_over_necessary";
        case Region::blue_dotted_under_sufficient: return "blue_dotted_under_sufficient";
    }
    return "?";
}

RegionVerdict classify_region(Architecture arch, double c, double mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("classify_region: mu outside [0, 1]");
    RegionVerdict v{arch, c, mu, Region::pink_infeasible, {}, {}, {}};
    const double tol = kBoundaryTol;
    if (arch == Architecture::two_layer) {
        if (!(c >= 0.5 && c <= 1.0)) throw std::invalid_argument("classify_region: c outside [1/2, 1]");
        const bool pink = c / 3 + mu <= 0.5 + tol || (c < 0.75 - tol && c + mu < 1 - tol);
        if (pink) return v;
        const double denom = 6 * mu + 2 * c - 3;
        v.smallest_width_exponent = 3 / (2 * denom);
        v.region = denom >= 1.5 - tol ? Region::blue_dotted_under_sufficient : Region::blue_over_necessary;
        v.eta_t_low = c / denom;
        if (c < 0.75 - tol) v.eta_t_high = c / (3 - 4 * c);
        return v;
    }
    if (!(c > 0.5 && c <= 1.0)) throw std::invalid_argument("classify_region: three-layer c outside (1/2, 1]");
    if (mu < 0.5 - tol) return v;
    v.eta_t_high = 0.5;
    if (c >= 9.0 / 16 - tol) {
        v.smallest_width_exponent = 2 / (8 * mu - 3);
        v.region = mu >= 5.0 / 8 - tol ? Region::blue_dotted_under_sufficient : Region::blue_over_necessary;
        v.eta_t_low = 1 / (2 * (8 * mu - 3));
    } else {
        const double denom = 2 * mu + 4 * c - 3;
        v.smallest_width_exponent = 1 / (2 * denom);
        v.region = denom >= 0.5 - tol ? Region::blue_dotted_under_sufficient : Region::blue_over_necessary;
        v.eta_t_low = (2 * c - 1) / denom;
    }
    return v;
}

std::vector<RegionVerdict> region_grid(Architecture arch, int points) {
    if (points < 2) throw std::invalid_argument("region_grid: need at least two points per axis");
    std::vector<RegionVerdict> grid;
    grid.reserve(std::size_t(points) * points);
    const double steps = points - 1;
    for (int i = 0; i < points; ++i) {
        const double c = arch == Architecture::two_layer ? 0.5 + 0.5 * i / steps : 0.5 + 0.5 * (i + 1) / points;
        for (int j = 0; j < points; ++j) grid.push_back(classify_region(arch, c, j / steps));
    }
    return grid;
}

namespace {

void put_opt(std::ostream& out, const std::optional<double>& v, const char* missing) {
    if (v) {
        out << *v;
    } else {
        out << missing;
    }
}

}  // namespace

void write_region_csv(std::ostream& out, const std::vector<RegionVerdict>& grid) {
    out << "# nnstab-region v1\n";
    out << "arch,c,mu,region,exponent,eta_t_low,eta_t_high\n";
    out.precision(17);
    for (const auto& v : grid) {
        out << to_string(v.arch) << "," << v.c << "," << v.mu << "," << to_string(v.region) << ",";
        put_opt(out, v.smallest_width_exponent, "");
        out << ",";
        put_opt(out, v.eta_t_low, "");
        out << ",";
        put_opt(out, v.eta_t_high, v.region == Region::pink_infeasible ? "" : "inf");
        out << "\n";
    }
}

nlohmann::ordered_json to_json(const WidthConditionReport& r) {
    nlohmann::ordered_json j;
    j["condition"] = to_string(r.id);
    j["required_m"] = r.required_m;
    j["actual_m"] = r.actual_m;
    j["satisfied"] = r.satisfied;
    j["heuristic_constant"] = r.heuristic;
    auto terms = nlohmann::ordered_json::array();
    for (const auto& [name, value] : r.terms) terms.push_back({{"term", name}, {"value", value}});
    j["terms"] = std::move(terms);
    return j;
}

nlohmann::ordered_json to_json(const RegionVerdict& v) {
    nlohmann::ordered_json j;
    j["arch"] = to_string(v.arch);
    j["c"] = v.c;
    j["mu"] = v.mu;
    j["region"] = to_string(v.region);
    j["smallest_width_exponent"] = v.smallest_width_exponent ? nlohmann::ordered_json(*v.smallest_width_exponent)
                                                             : nlohmann::ordered_json(nullptr);
    j["eta_t_low"] = v.eta_t_low ? nlohmann::ordered_json(*v.eta_t_low) : nlohmann::ordered_json(nullptr);
    if (v.eta_t_high) {
        j["eta_t_high"] = *v.eta_t_high;
    } else if (v.region == Region::pink_infeasible) {
        j["eta_t_high"] = nullptr;
    } else {
        j["eta_t_high"] = "unbounded";
    }
    return j;
}

}  // namespace nnstab
