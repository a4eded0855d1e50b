#include "nnstab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "nnstab/rng.hpp"

namespace nnstab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

CheckResult make_check(std::string id, double worst_violation, double tolerance, std::string location,
                       long samples) {
    return {std::move(id), worst_violation <= tolerance, worst_violation, std::move(location), tolerance, samples};
}

VectorXd fd_gradient(const ScalarField& f, const VectorXd& x, double step) {
    if (!(step > 0)) throw std::invalid_argument("fd_gradient: step must be positive");
    VectorXd g(x.size());
    VectorXd y = x;
    for (Index i = 0; i < x.size(); ++i) {
        y[i] = x[i] + step;
        const double fp = f(y);
        y[i] = x[i] - step;
        const double fm = f(y);
        y[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) throw std::runtime_error("fd_gradient: non-finite evaluation");
        g[i] = (fp - fm) / (2 * step);
    }
    return g;
}

MatrixXd fd_jacobian_sym(const VectorField& g, const VectorXd& x, double step) {
    if (!(step > 0)) throw std::invalid_argument("fd_jacobian_sym: step must be positive");
    const Index p = x.size();
    MatrixXd j(p, p);
    VectorXd y = x;
    for (Index i = 0; i < p; ++i) {
        y[i] = x[i] + step;
        const VectorXd gp = g(y);
        y[i] = x[i] - step;
        const VectorXd gm = g(y);
        y[i] = x[i];
        if (!gp.allFinite() || !gm.allFinite()) throw std::runtime_error("fd_jacobian_sym: non-finite evaluation");
        j.col(i) = (gp - gm) / (2 * step);
    }
    return 0.5 * (j + j.transpose());
}

ExtremeEigs extreme_eigs(const MatrixXd& h) {
    if (h.rows() != h.cols() || h.rows() == 0) throw std::invalid_argument("extreme_eigs: need a square matrix");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument("extreme_eigs: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("extreme_eigs: eigensolver failed");
    const auto& ev = es.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

double power_iteration(const MatrixXd& h, int max_iter, double tol) {
    if (h.rows() != h.cols() || h.rows() == 0) throw std::invalid_argument("power_iteration: need a square matrix");
    VectorXd v = VectorXd::LinSpaced(h.rows(), 1.0, 2.0).normalized();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const VectorXd w = h * v;
        const double next = v.dot(w);
        const double nrm = w.norm();
        if (nrm == 0.0) return 0.0;
        v = w / nrm;
        if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
        lambda = next;
    }
    return lambda;
}

namespace {

VectorXd sample_ball(Rng& rng, Index p, double radius) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    VectorXd v(p);
    for (Index i = 0; i < p; ++i) v[i] = normal(rng);
    const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(p));
    return v * (r / v.norm());
}

Example pick_example(const Instance& inst, Rng& rng) {
    const Index n = inst.train.size();
    std::uniform_int_distribution<Index> pick(0, 2 * n - 1);
    const Index k = pick(rng);
    return k < n ? inst.train.example(k) : inst.replacements.example(k - n);
}

std::string where(const Instance& inst, const std::string& extra) {
    std::ostringstream os;
    os << to_string(inst.spec.net.arch) << " m=" << inst.spec.net.m << " c=" << inst.spec.net.c
       << " seed=" << inst.seed;
    if (!extra.empty()) os << " " << extra;
    return os.str();
}

std::string id_prefix(const Instance& inst) {
    return inst.spec.net.arch == Architecture::two_layer ? "two_layer." : "three_layer.";
}

double ball_radius(const Instance& inst) { return std::sqrt(2 * inst.eta * inst.spec.t_max * inst.c0); }

}  // namespace

CheckResult check_gradients(const Instance& inst, int samples, std::uint64_t seed, double tol) {
    Rng rng(substream_seed(seed, 101));
    const Network& net = inst.net;
    const double radius = std::max(ball_radius(inst), 0.1);
    double worst = 0.0;
    std::string loc;
    for (int s = 0; s < samples; ++s) {
        const Params w = inst.w0 + sample_ball(rng, net.param_dim(), radius);
        const Example z = pick_example(inst, rng);
        const VectorXd g = net.grad_f(w, z.x);
        const VectorXd fd = fd_gradient([&](const VectorXd& p) { return net.forward(p, z.x); }, w);
        const VectorXd gl = loss_grad(net, w, z);
        const VectorXd fdl = fd_gradient([&](const VectorXd& p) { return pointwise_loss(net, p, z); }, w);
        const double e1 = (g - fd).norm() / (fd.norm() + 1e-10);
        const double e2 = (gl - fdl).norm() / (fdl.norm() + 1e-10);
        if (std::max(e1, e2) > worst) {
            worst = std::max(e1, e2);
            loc = where(inst, "sample=" + std::to_string(s));
        }
    }
    return make_check(id_prefix(inst) + "gradient_fd", worst, tol, loc, samples);
}

CheckResult check_hessians(const Instance& inst, int samples, std::uint64_t seed) {
    Rng rng(substream_seed(seed, 102));
    const Network& net = inst.net;
    const double radius = std::max(ball_radius(inst), 0.1);
    double worst = -1.0;  // max over samples of deviation / (1e-4 (1 + ||H||)) − 1
    std::string loc;
    for (int s = 0; s < samples; ++s) {
        const Params w = inst.w0 + sample_ball(rng, net.param_dim(), radius);
        const Example z = pick_example(inst, rng);
        const MatrixXd h = loss_hessian(net, w, z);
        const MatrixXd fd = fd_jacobian_sym([&](const VectorXd& p) { return loss_grad(net, p, z); }, w);
        const auto eg = extreme_eigs(h);
        const double norm = std::max(std::abs(eg.lambda_min), std::abs(eg.lambda_max));
        const double ratio = (h - fd).cwiseAbs().maxCoeff() / (1e-4 * (1 + norm)) - 1;
        if (ratio > worst) {
            worst = ratio;
            loc = where(inst, "sample=" + std::to_string(s));
        }
    }
    return make_check(id_prefix(inst) + "hessian_fd", worst, 0.0, loc, samples);
}

EnvelopeChecks check_eig_envelopes(const Instance& inst, const Trajectory& traj, int samples_per_regime,
                                   std::uint64_t seed) {
    Rng rng(substream_seed(seed, 103));
    const Network& net = inst.net;
    const auto& act = net.activation();
    const int m = inst.spec.net.m;
    const double c = inst.spec.net.c;
    const bool three = inst.spec.net.arch == Architecture::three_layer;
    const double radius = ball_radius(inst);
    double worst_up = -std::numeric_limits<double>::infinity();
    double worst_lo = -std::numeric_limits<double>::infinity();
    std::string loc_up, loc_lo;
    long count = 0;
    for (int regime = 0; regime < 3; ++regime) {
        for (int s = 0; s < samples_per_regime; ++s) {
            Params w;
            if (regime == 0) {
                w = inst.w0 + sample_ball(rng, net.param_dim(), 0.05 * radius);
            } else if (regime == 1) {
                w = traj.snapshots[s % traj.snapshots.size()].second;
            } else {
                w = inst.w0 + sample_ball(rng, net.param_dim(), radius);
            }
            const Example z = pick_example(inst, rng);
            const auto eg = extreme_eigs(loss_hessian(net, w, z));
            const double dist = (w - inst.w0).norm();
            double upper, lower;
            if (three) {
                const double w2 = second_layer_norm(inst.spec.net, w);
                const auto rc = rho_w_and_c_w(w2, m, c, inst.spec.c_x, act, inst.c0);
                upper = rc.rho_w;
                lower = curvature_lower_bound_three_layer(rc.c_w, w2, act, m, c, inst.c0);
            } else {
                upper = inst.rho;
                lower = curvature_lower_bound_two_layer(inst.spec.c_x, act, m, c, dist, inst.c0);
            }
            // Violations normalised by the bound's magnitude.
            const double vu = (eg.lambda_max - upper) / std::abs(upper);
            const double vl = (lower - eg.lambda_min) / std::max(std::abs(lower), 1e-300);
            const std::string tag = "regime=" + std::to_string(regime) + " sample=" + std::to_string(s);
            if (vu > worst_up) {
                worst_up = vu;
                loc_up = where(inst, tag);
            }
            if (vl > worst_lo) {
                worst_lo = vl;
                loc_lo = where(inst, tag);
            }
            ++count;
        }
    }
    // The tolerance only absorbs eigensolver round-off.
    return {make_check(id_prefix(inst) + "lambda_max_envelope", worst_up, 1e-10, loc_up, count),
            make_check(id_prefix(inst) + "lambda_min_envelope", worst_lo, 1e-10, loc_lo, count)};
}

CheckResult check_self_bounding(const Instance& inst, const Trajectory& traj) {
    const Network& net = inst.net;
    double worst = -std::numeric_limits<double>::infinity();
    std::string loc;
    long count = 0;
    for (const auto& [t, w] : traj.snapshots) {
        for (Index i = 0; i < inst.train.size(); ++i) {
            const Example z = inst.train.example(i);
            const double r = net.forward(w, z.x) - z.y;
            const double loss = 0.5 * r * r;
            const double g2 = (r * net.grad_f(w, z.x)).squaredNorm();
            const double v = (g2 - 2 * inst.rho * loss) / std::max(2 * inst.rho * loss, 1e-300);
            if (loss > 0 && v > worst) {
                worst = v;
                loc = where(inst, "t=" + std::to_string(t) + " i=" + std::to_string(i));
            }
            ++count;
        }
    }
    if (!std::isfinite(worst)) worst = -1.0;
    return make_check(id_prefix(inst) + "self_bounding", worst, 1e-12, loc, count);
}

std::vector<CheckResult> check_trajectory_laws(const Instance& inst, const Trajectory& traj) {
    const double eta = inst.eta;
    const double rho = inst.rho;
    const int steps = traj.steps();
    const bool three = inst.spec.net.arch == Architecture::three_layer;
    const double tol = 1e-12;  // relative round-off allowance
    double mono = -std::numeric_limits<double>::infinity(), lemma = mono, dev = mono, refined = mono, crude = mono;
    std::string l_mono, l_lemma, l_dev, l_ref, l_crude;
    const double l0 = traj.risks.front();
    const double m_pow = std::pow(static_cast<double>(inst.spec.net.m), 2 * inst.spec.net.c - 1);
    for (int t = 0; t <= steps; ++t) {
        if (t < steps) {
            const double lt = traj.risks[t], ln = traj.risks[t + 1];
            const double scale = std::max(lt, 1e-300);
            const double v = (ln - lt) / scale;
            if (v > mono) {
                mono = v;
                l_mono = where(inst, "t=" + std::to_string(t));
            }
            const double g = traj.grad_norms[t];
            const double target = lt - eta * (1 - eta * rho / 2) * g * g;
            const double vl = (ln - target) / scale;
            if (vl > lemma) {
                lemma = vl;
                l_lemma = where(inst, "t=" + std::to_string(t));
            }
        }
        const double d = traj.deviations[t];
        const double b = std::sqrt(2 * eta * t * l0);
        const double vd = t == 0 ? d : (d - b) / b;
        if (vd > dev) {
            dev = vd;
            l_dev = where(inst, "t=" + std::to_string(t));
        }
        if (three && t > 0) {
            const double br = std::sqrt(2 * inst.c0 * eta * t);
            const double vr = (d - br) / br;
            if (vr > refined) {
                refined = vr;
                l_ref = where(inst, "t=" + std::to_string(t));
            }
            const double bc = eta * t * m_pow;
            const double vc = (d - bc) / bc;
            if (vc > crude) {
                crude = vc;
                l_crude = where(inst, "t=" + std::to_string(t));
            }
        }
    }
    const std::string p = id_prefix(inst);
    std::vector<CheckResult> out;
    out.push_back(make_check(p + "monotone_descent", steps > 0 ? mono : -1.0, tol, l_mono, steps));
    out.push_back(make_check(p + "descent_lemma", steps > 0 ? lemma : -1.0, tol, l_lemma, steps));
    out.push_back(make_check(p + "deviation_bound", dev, tol, l_dev, steps + 1));
    if (three) {
        out.push_back(make_check(p + "refined_deviation", steps > 0 ? refined : -1.0, tol, l_ref, steps));
        out.push_back(make_check(p + "crude_deviation", steps > 0 ? crude : -1.0, tol, l_crude, steps));
    }
    if (traj.diverged) out.push_back(make_check(p + "no_divergence", 1.0, 0.0, where(inst, traj.diagnostic), 1));
    return out;
}

SuiteConfig default_suite() {
    SuiteConfig cfg;
    for (int m : {16, 64, 256}) {
        SuiteCase sc;
        sc.problem.net = {Architecture::two_layer, m, 0.5, 5};
        sc.problem.n = 50;
        sc.problem.t_max = 200;
        sc.problem.snapshot_stride = 20;
        sc.eig_samples = m >= 256 ? 4 : 10;
        sc.fd_samples = m >= 256 ? 1 : 3;
        cfg.cases.push_back(sc);
    }
    SuiteCase three;
    three.problem.net = {Architecture::three_layer, 8, 0.75, 3};
    three.problem.n = 20;
    three.problem.t_max = 100;
    three.problem.snapshot_stride = 10;
    three.problem.init_std = 0.05;
    three.eig_samples = 10;
    cfg.cases.push_back(three);
    return cfg;
}

std::vector<CheckResult> run_case(const SuiteCase& sc) {
    std::vector<CheckResult> out;
    for (const std::uint64_t seed : sc.seeds) {
        const Instance inst = make_instance(sc.problem, seed);
        const Trajectory traj = gd_run(inst.net, inst.train, inst.w0, inst.gd);
        if (sc.fd_samples > 0) {
            out.push_back(check_gradients(inst, sc.fd_samples, seed));
            if (inst.net.param_dim() <= inst.net.hessian_cap()) out.push_back(check_hessians(inst, sc.fd_samples, seed));
        }
        if (sc.eig_samples > 0 && inst.net.param_dim() <= inst.net.hessian_cap()) {
            auto env = check_eig_envelopes(inst, traj, sc.eig_samples, seed);
            out.push_back(std::move(env.upper));
            out.push_back(std::move(env.lower));
        }
        out.push_back(check_self_bounding(inst, traj));
        for (auto& r : check_trajectory_laws(inst, traj)) out.push_back(std::move(r));
        if (sc.stability) {
            StabilityOptions opts;
            opts.workers = sc.stability_workers;
            opts.check_coercivity = true;
            opts.holdout = 0;
            const auto rep = paired_stability_run(inst, opts);
            const auto& co = *rep.coercivity;
            out.push_back(make_check(id_prefix(inst) + "almost_coercivity", -co.worst_slack, co.tolerance,
                                     where(inst, "i=" + std::to_string(co.worst_index) +
                                                     " t=" + std::to_string(co.worst_step)),
                                     co.checks));
            if (rep.certified) {
                out.push_back(make_check(id_prefix(inst) + "uniform_stability",
                                         (rep.uniform_max - rep.theoretical_uniform) / rep.theoretical_uniform, 0.0,
                                         where(inst, ""), static_cast<long>(rep.per_index_distance.size())));
            }
        }
    }
    return out;
}

std::vector<CheckResult> run_suite(const SuiteConfig& config) {
    std::vector<CheckResult> out;
    for (const auto& sc : config.cases) {
        for (auto& r : run_case(sc)) out.push_back(std::move(r));
    }
    return out;
}

nlohmann::ordered_json to_json(const CheckResult& r) {
    return {{"check_id", r.check_id},         {"passed", r.passed},     {"worst_violation", r.worst_violation},
            {"tolerance", r.tolerance},       {"samples", r.samples},   {"location", r.location}};
}

void print_table(std::ostream& out, const std::vector<CheckResult>& results) {
    out << std::left << std::setw(36) << "check" << std::setw(6) << "ok" << std::setw(14) << "worst"
        << std::setw(10) << "tol" << "location\n";
    for (const auto& r : results) {
        std::ostringstream w, t;
        w << std::setprecision(4) << r.worst_violation;
        t << std::setprecision(2) << r.tolerance;
        out << std::left << std::setw(36) << r.check_id << std::setw(6) << (r.passed ? "yes" : "NO") << std::setw(14)
            << w.str() << std::setw(10) << t.str() << r.location << "\n";
    }
}

}  // namespace nnstab
