#include "nnstab/stability_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "nnstab/rng.hpp"

namespace nnstab {

using Eigen::Index;
using Eigen::VectorXd;

void parallel_for(int count, int workers, const std::function<void(int)>& body) {
    if (count <= 0) return;
    workers = std::clamp(workers, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

void ProblemSpec::validate() const {
    net.validate();
    if (n < 1) throw std::invalid_argument("n must be positive");
    if (t_max < 0) throw std::invalid_argument("t_max must be nonnegative");
    if (!(c_x > 0) || !(c_y > 0)) throw std::invalid_argument("c_x and c_y must be positive");
    if (!(noise_std >= 0) || !(teacher_std >= 0) || !(init_std >= 0)) {
        throw std::invalid_argument("standard deviations must be nonnegative");
    }
    if (eta && !(*eta > 0)) throw std::invalid_argument("eta must be positive");
    if (mu && !(*mu >= 0 && *mu <= 1)) throw std::invalid_argument("mu must lie in [0, 1]");
    if (snapshot_stride < 0) throw std::invalid_argument("snapshot_stride must be nonnegative");
}

Instance make_instance(const ProblemSpec& spec, std::uint64_t seed) {
    spec.validate();
    const ActivationSpec act = certified_bounds(spec.activation);
    const OutputSigns signs =
        spec.random_signs ? OutputSigns::random(spec.net.m, seed) : OutputSigns::balanced(spec.net.m);
    TeacherSpec teacher = make_teacher(spec.net, act, signs, spec.teacher_std,
                                       spec.teacher_per_seed ? seed : spec.teacher_seed, spec.mu);
    GenConfig gen{spec.net.d, spec.c_x, spec.c_y, spec.noise_std, 3.0, substream_seed(seed, kStreamTrain)};
    Dataset train = sample_dataset(gen, &teacher, spec.n);
    GenConfig rgen = gen;
    rgen.seed = substream_seed(seed, kStreamReplace);
    Dataset repl = sample_dataset(rgen, &teacher, spec.n);

    Network net(spec.net, act, signs);
    Params w0 = init_params(spec.net, InitConfig{spec.init_std}, seed);
    // c₀ must cover every example any of the n + 1 runs will see.
    const double c0 = std::max(certify_c0(net, w0, train), certify_c0(net, w0, repl));
    train.c0 = c0;
    repl.c0 = c0;

    double rho;
    if (spec.net.arch == Architecture::two_layer) {
        rho = rho_two_layer(spec.c_x, spec.c_y, act, spec.net.m, spec.net.c);
    } else {
        rho = three_layer_constants(spec.c_x, act, c0).rho_hat;
    }
    const double limit = max_safe_stepsize(spec.net.arch, rho);
    const double eta = spec.eta.value_or(limit);
    GDConfig gd;
    gd.eta = eta;
    gd.t_max = spec.t_max;
    gd.snapshot_stride = spec.snapshot_stride;
    gd.strict = spec.strict;
    gd.eta_limit = limit;
    return {spec, seed, std::move(net), std::move(teacher), gen, std::move(train), std::move(repl),
            std::move(w0), c0, rho, eta, gd};
}

WidthInputs width_inputs(const Instance& inst) {
    WidthInputs in;
    in.arch = inst.spec.net.arch;
    in.eta = inst.eta;
    in.t_max = inst.spec.t_max;
    in.n = inst.spec.n;
    in.c = inst.spec.net.c;
    in.m = inst.spec.net.m;
    in.c_x = inst.spec.c_x;
    in.c_y = inst.spec.c_y;
    in.act = inst.net.activation();
    in.c0 = inst.c0;
    in.w0_norm = inst.w0.norm();
    in.wstar_dist = (inst.teacher.params - inst.w0).norm();
    in.wstar_norm = inst.teacher.params.norm();
    return in;
}

Dataset perturb(const Dataset& data, Index i, const Example& z) {
    if (i < 0 || i >= data.size()) throw std::out_of_range("perturb: index out of range");
    if (z.x.size() != data.dim()) throw std::invalid_argument("perturb: dimension mismatch");
    if (z.x.norm() > data.c_x * (1 + 1e-12) || std::abs(z.y) > data.c_y) {
        throw std::invalid_argument("perturb: replacement violates the data envelope");
    }
    Dataset out = data;
    out.set_example(i, z);
    return out;
}

namespace {

struct PairResult {
    double distance = 0.0;
    std::vector<double> path;
    CoercivityStats stats;
};

constexpr double kCoercivityTol = 1e-9;
constexpr double kGradRoundoff = 1e-12;

}  // namespace

StabilityReport paired_stability_run(const Instance& inst, const StabilityOptions& opts) {
    const Network& net = inst.net;
    const int n = static_cast<int>(inst.train.size());
    const int t_max = inst.spec.t_max;
    const bool three = inst.spec.net.arch == Architecture::three_layer;
    const bool need_path = opts.check_coercivity || opts.record_path_distances;

    std::vector<Params> base_w;
    std::vector<VectorXd> base_g;
    StepObserver base_obs;
    if (need_path) {
        base_w.reserve(t_max + 1);
        if (opts.check_coercivity) base_g.reserve(t_max + 1);
        base_obs = [&](int, const Params& w, const RiskAndGrad& rg) {
            base_w.push_back(w);
            if (opts.check_coercivity) base_g.push_back(rg.grad);
        };
    }
    const Trajectory base = gd_run(net, inst.train, inst.w0, inst.gd, base_obs);

    // Constants for ε_t / ε̃_t.
    const auto& act = net.activation();
    const int m = inst.spec.net.m;
    const double c = inst.spec.net.c;
    const double eta = inst.eta;
    double c3t = 0.0, b3 = 0.0;
    if (three) {
        c3t = c3_t(three_layer_constants(inst.spec.c_x, act, inst.c0).b1, eta, t_max, m, c, inst.c0);
        b3 = b3_constant(inst.spec.c_x, act, inst.c0);
    }
    const double w0_norm = inst.w0.norm();
    const double coef = three ? 2 * eta * (1 - 4 * eta * inst.rho) : 2 * eta * (1 - eta * inst.rho / 2);

    std::vector<PairResult> results(n);
    parallel_for(n, opts.workers, [&](int i) {
        PairResult& res = results[i];
        const Example zi = inst.train.example(i);
        const Example zp = inst.replacements.example(i);
        const Dataset si = perturb(inst.train, i, zp);
        res.stats.tolerance = kCoercivityTol;
        res.stats.worst_slack = std::numeric_limits<double>::infinity();
        StepObserver obs;
        if (need_path) {
            obs = [&](int t, const Params& w, const RiskAndGrad& rg) {
                if (static_cast<std::size_t>(t) >= base_w.size()) return;
                const VectorXd dw = base_w[t] - w;
                const double dist = dw.norm();
                if (opts.record_path_distances) res.path.push_back(dist);
                if (!opts.check_coercivity) return;
                // ∇L_{S∖i} at both iterates.
                const VectorXd ga = base_g[t] - loss_grad(net, base_w[t], zi) / n;
                const VectorXd gb = rg.grad - loss_grad(net, w, zp) / n;
                const VectorXd dg = ga - gb;
                const double eps = three ? eps_t_three_layer(c3t, b3, eta, t_max, w0_norm, m, c, inst.rho, inst.c0, dist)
                                         : eps_t_two_layer(inst.spec.c_x, act, m, c, eta, inst.rho, t_max, inst.c0, dist);
                const VectorXd resid = dw - eta * dg;
                const double lhs = dw.dot(dg);
                const double g2 = dg.squaredNorm();
                const double r2 = resid.squaredNorm();
                const double rhs = coef * g2 - eps * r2;
                // Round-off allowance: Δ∇ is a difference of two separately
                // accumulated gradients, so it carries an error of order δ.
                const double delta = kGradRoundoff * (ga.norm() + gb.norm());
                const double gn = std::sqrt(g2);
                const double allowance = dist * delta + std::abs(coef) * (2 * gn + delta) * delta +
                                         eps * (2 * std::sqrt(r2) + eta * delta) * eta * delta;
                const double scale = dist * gn + std::abs(coef) * g2 + eps * r2 + allowance;
                const double slack = scale > 0 ? (lhs - rhs + allowance) / scale : 0.0;
                ++res.stats.checks;
                if (slack < -kCoercivityTol) ++res.stats.violations;
                if (slack < res.stats.worst_slack) {
                    res.stats.worst_slack = slack;
                    res.stats.worst_index = i;
                    res.stats.worst_step = t;
                }
            };
        }
        const Trajectory tr = gd_run(net, si, inst.w0, inst.gd, obs);
        res.distance = (tr.final_params - base.final_params).norm();
    });

    StabilityReport rep;
    rep.rho = inst.rho;
    rep.eta = eta;
    rep.c0 = inst.c0;
    rep.per_index_distance.resize(n);
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = results[i].distance;
        rep.per_index_distance[i] = d;
        sum_sq += d * d;
        rep.uniform_max = std::max(rep.uniform_max, d);
    }
    rep.on_average_sq = sum_sq / n;
    rep.theoretical_uniform = uniform_stability_bound(eta, t_max, n, inst.rho, inst.c0);
    rep.train_risk = base.risks.back();
    rep.theoretical_gen_gap = stability_gen_bound(inst.rho, n, sum_sq, rep.train_risk);
    rep.generalization_bound = generalization_bound(eta, inst.rho, base.steps(), n, base.risks);
    rep.width_reports = width_conditions(width_inputs(inst));
    rep.certified = all_satisfied(rep.width_reports) && !base.diverged;

    GenConfig hgen = inst.gen;
    hgen.seed = substream_seed(inst.seed, kStreamHoldout);
    if (opts.holdout >= 2) {
        const auto mc = holdout_risk(net, base.final_params, sample_dataset(hgen, &inst.teacher, opts.holdout));
        rep.test_risk = mc.estimate;
        rep.test_risk_se = mc.std_error;
        rep.empirical_gen_gap = rep.test_risk - rep.train_risk;
    }
    if (opts.check_coercivity) {
        CoercivityStats total;
        total.tolerance = kCoercivityTol;
        total.worst_slack = std::numeric_limits<double>::infinity();
        for (const auto& r : results) {
            total.checks += r.stats.checks;
            total.violations += r.stats.violations;
            if (r.stats.worst_slack < total.worst_slack) {
                total.worst_slack = r.stats.worst_slack;
                total.worst_index = r.stats.worst_index;
                total.worst_step = r.stats.worst_step;
            }
        }
        rep.coercivity = total;
    }
    if (opts.record_path_distances) {
        rep.path_distances.reserve(n);
        for (auto& r : results) rep.path_distances.push_back(std::move(r.path));
    }
    return rep;
}

double noise_risk_floor(double noise_std, double trunc) {
    if (noise_std == 0.0) return 0.0;
    const double k = trunc;
    const double phi = std::exp(-0.5 * k * k) / std::sqrt(2 * std::numbers::pi);
    const double mass = std::erf(k / std::sqrt(2.0));  // 2Φ(k) − 1
    return 0.5 * noise_std * noise_std * (1 - 2 * k * phi / mass);
}

ExcessSummary excess_risk_experiment(const ProblemSpec& spec, const std::vector<std::uint64_t>& seeds,
                                     Index holdout, int workers) {
    ExcessSummary out;
    out.runs.resize(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), workers, [&](int s) {
        const Instance inst = make_instance(spec, seeds[s]);
        const Trajectory traj = gd_run(inst.net, inst.train, inst.w0, inst.gd);
        GenConfig hgen = inst.gen;
        hgen.seed = substream_seed(inst.seed, kStreamHoldout);
        const Dataset pool = sample_dataset(hgen, &inst.teacher, holdout);
        const int n = spec.n;

        ExcessRecord rec;
        rec.seed = seeds[s];
        for (const auto& [t, w] : traj.snapshots) {
            if (t == 0) continue;
            const auto mc = holdout_risk(inst.net, w, pool);
            const double tr = traj.risks[t];
            rec.points.push_back({t, tr, mc.estimate, mc.std_error, mc.estimate - tr,
                                  generalization_bound(inst.eta, inst.rho, t, n, traj.risks)});
        }
        rec.final_train = traj.risks.back();
        rec.final_test = holdout_risk(inst.net, traj.final_params, pool).estimate;
        rec.generalization_gap = rec.final_test - rec.final_train;
        rec.optimization_gap = rec.final_train - empirical_risk(inst.net, inst.teacher.params, inst.train);
        const double wdist = (inst.teacher.params - inst.w0).norm();
        rec.approx_surrogate = approx_error_surrogate(wdist, inst.eta, std::max(spec.t_max, 1));
        rec.pop_risk_min = noise_risk_floor(spec.noise_std, inst.gen.noise_trunc);
        rec.excess_bound = excess_risk_bound(spec.net.arch, inst.eta, spec.t_max, n, spec.net.m, spec.net.c,
                                             rec.pop_risk_min, rec.approx_surrogate);
        rec.certified = all_satisfied(width_conditions(width_inputs(inst))) && !traj.diverged;
        out.runs[s] = std::move(rec);
    });

    if (out.runs.empty()) return out;
    const std::size_t k = out.runs.front().points.size();
    for (std::size_t j = 0; j < k; ++j) {
        double sum = 0.0, sum2 = 0.0, bsum = 0.0;
        std::size_t cnt = 0;
        for (const auto& r : out.runs) {
            if (j >= r.points.size()) continue;
            sum += r.points[j].gap;
            sum2 += r.points[j].gap * r.points[j].gap;
            bsum += r.points[j].bound;
            ++cnt;
        }
        const double mean = sum / cnt;
        const double var = cnt > 1 ? std::max(0.0, (sum2 - cnt * mean * mean) / (cnt - 1)) : 0.0;
        out.ts.push_back(out.runs.front().points[j].t);
        out.mean_gap.push_back(mean);
        out.se_gap.push_back(std::sqrt(var / cnt));
        out.mean_bound.push_back(bsum / cnt);
    }
    return out;
}

nlohmann::ordered_json to_json(const ProblemSpec& s) {
    nlohmann::ordered_json j;
    j["arch"] = to_string(s.net.arch);
    j["m"] = s.net.m;
    j["c"] = s.net.c;
    j["d"] = s.net.d;
    j["activation"] = to_string(s.activation);
    j["signs"] = s.random_signs ? "random" : "balanced";
    j["n"] = s.n;
    j["c_x"] = s.c_x;
    j["c_y"] = s.c_y;
    j["noise_std"] = s.noise_std;
    j["teacher_std"] = s.teacher_std;
    j["mu"] = s.mu ? nlohmann::ordered_json(*s.mu) : nlohmann::ordered_json(nullptr);
    j["init_std"] = s.init_std;
    j["eta"] = s.eta ? nlohmann::ordered_json(*s.eta) : nlohmann::ordered_json("auto");
    j["t_max"] = s.t_max;
    j["strict"] = s.strict;
    j["snapshot_stride"] = s.snapshot_stride;
    j["teacher_per_seed"] = s.teacher_per_seed;
    j["teacher_seed"] = s.teacher_seed;
    return j;
}

nlohmann::ordered_json to_json(const StabilityReport& r) {
    nlohmann::ordered_json j;
    j["rho"] = r.rho;
    j["eta"] = r.eta;
    j["c0"] = r.c0;
    j["certified"] = r.certified;
    j["on_average_sq"] = r.on_average_sq;
    j["uniform_max"] = r.uniform_max;
    j["theoretical_uniform"] = r.theoretical_uniform;
    j["theoretical_gen_gap"] = r.theoretical_gen_gap;
    j["generalization_bound"] = r.generalization_bound;
    j["empirical_gen_gap"] = r.empirical_gen_gap;
    j["train_risk"] = r.train_risk;
    j["test_risk"] = r.test_risk;
    j["test_risk_se"] = r.test_risk_se;
    auto wr = nlohmann::ordered_json::array();
    for (const auto& w : r.width_reports) wr.push_back(to_json(w));
    j["width_conditions"] = std::move(wr);
    if (r.coercivity) {
        const auto& c = *r.coercivity;
        j["coercivity"] = {{"checks", c.checks},         {"violations", c.violations},
                           {"worst_slack", c.worst_slack}, {"worst_index", c.worst_index},
                           {"worst_step", c.worst_step},   {"tolerance", c.tolerance}};
    }
    j["per_index_distance"] = r.per_index_distance;
    return j;
}

nlohmann::ordered_json to_json(const ExcessRecord& r) {
    nlohmann::ordered_json j;
    j["seed"] = r.seed;
    j["certified"] = r.certified;
    j["final_train"] = r.final_train;
    j["final_test"] = r.final_test;
    j["generalization_gap"] = r.generalization_gap;
    j["optimization_gap"] = r.optimization_gap;
    j["approx_surrogate"] = r.approx_surrogate;
    j["pop_risk_min"] = r.pop_risk_min;
    j["excess_bound"] = r.excess_bound;
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"t", p.t},
                       {"train_risk", p.train_risk},
                       {"test_risk", p.test_risk},
                       {"test_se", p.test_se},
                       {"gap", p.gap},
                       {"bound", p.bound}});
    }
    j["points"] = std::move(pts);
    return j;
}

}  // namespace nnstab
