// Acceptance run: one PASS/FAIL line per criterion, with timings.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>

#include "nnstab/bounds.hpp"
#include "nnstab/rng.hpp"
#include "nnstab/stability_lab.hpp"
#include "nnstab/verify.hpp"

using namespace nnstab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= budget_s;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << "  " << std::setw(2) << id << "  " << name << "  [" << std::fixed
              << std::setprecision(1) << secs << "s / " << budget_s << "s]  " << out.detail
              << (in_time ? "" : "  (over time budget)") << std::endl;
    std::cout.unsetf(std::ios::fixed);
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

// Random small configuration for the finite-difference criteria.
ProblemSpec random_spec(Architecture arch, Rng& rng) {
    std::uniform_int_distribution<int> m_dist(1, 32), d_dist(1, 8), coin(0, 1);
    std::uniform_real_distribution<double> c_dist(0.5, 1.0);
    ProblemSpec p;
    double c = c_dist(rng);
    if (arch == Architecture::three_layer && c <= 0.5) c = 0.75;
    p.net = NetworkConfig{arch, m_dist(rng), c, d_dist(rng)};
    p.activation = coin(rng) ? ActivationKind::sigmoid : ActivationKind::tanh;
    p.random_signs = coin(rng) == 1;
    p.n = 6;
    p.t_max = 5;
    p.noise_std = 0.2;
    p.init_std = 0.3;
    p.teacher_std = 0.5;
    return p;
}

Outcome fd_criterion(bool hessian, int configs) {
    Rng rng(substream_seed(hessian ? 2 : 1, 900));
    double worst2 = -1e300, worst3 = -1e300;
    int count = 0;
    std::string where;
    bool ok = true;
    for (auto arch : {Architecture::two_layer, Architecture::three_layer}) {
        for (int k = 0; k < configs; ++k) {
            const ProblemSpec p = random_spec(arch, rng);
            const std::uint64_t seed = 1000 + k;
            const Instance inst = make_instance(p, seed);
            const CheckResult r = hessian ? check_hessians(inst, 1, seed) : check_gradients(inst, 1, seed, 1e-5);
            double& w = arch == Architecture::two_layer ? worst2 : worst3;
            if (r.worst_violation > w) w = r.worst_violation;
            if (!r.passed) {
                ok = false;
                where = r.location;
            }
            ++count;
        }
    }
    std::ostringstream os;
    os << count << " configurations; worst " << (hessian ? "(dev/(1e-4(1+||H||)) - 1)" : "rel. error")
       << " two-layer " << fmt(worst2) << ", three-layer " << fmt(worst3);
    if (!ok) os << "; failed at " << where;
    return {ok, os.str()};
}

ProblemSpec certified_two_layer() {
    ProblemSpec p;
    p.net = NetworkConfig{Architecture::two_layer, 1024, 0.75, 5};
    p.n = 50;
    p.t_max = 100;
    p.eta = 1.0;
    p.noise_std = 0.05;
    p.teacher_std = 0.5;
    p.init_std = 0.1;
    p.snapshot_stride = 10;
    return p;
}

ProblemSpec three_layer_coercive() {
    ProblemSpec p;
    p.net = NetworkConfig{Architecture::three_layer, 16, 0.75, 3};
    p.n = 20;
    p.t_max = 100;
    p.eta = 0.005;
    p.noise_std = 0.05;
    p.teacher_std = 0.1;
    p.init_std = 0.05;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main() {
    std::cout << "acceptance: 12 criteria" << std::endl;

    criterion(1, "gradient exactness (closed form vs central differences)", 30,
              [] { return fd_criterion(false, 50); });

    criterion(2, "Hessian exactness (assembled loss Hessian vs FD of the gradient)", 120,
              [] { return fd_criterion(true, 20); });

    criterion(3, "two-layer eigenvalue envelopes (lambda_max <= rho, lambda_min >= lower bound)", 300, [] {
        long samples = 0;
        bool ok = true;
        double wu = -1e300, wl = -1e300;
        std::string where;
        for (int m : {16, 64, 256}) {
            const int per_regime = m == 16 ? 67 : m == 64 ? 34 : 12;
            for (double c : {0.5, 0.75, 1.0}) {
                ProblemSpec p;
                p.net = NetworkConfig{Architecture::two_layer, m, c, 5};
                p.n = 50;
                p.t_max = 200;
                p.noise_std = 0.1;
                p.snapshot_stride = 20;
                const Instance inst = make_instance(p, 7);
                const Trajectory traj = gd_run(inst.net, inst.train, inst.w0, inst.gd);
                const auto env = check_eig_envelopes(inst, traj, per_regime, 7);
                samples += env.upper.samples;
                wu = std::max(wu, env.upper.worst_violation);
                wl = std::max(wl, env.lower.worst_violation);
                // zero violations: the relative tolerance only covers eigensolver round-off
                if (!env.upper.passed || !env.lower.passed) {
                    ok = false;
                    where = env.upper.passed ? env.lower.location : env.upper.location;
                }
            }
        }
        std::ostringstream os;
        os << samples << " samples; worst relative excess upper " << fmt(wu) << ", lower " << fmt(wl);
        if (!ok) os << "; violated at " << where;
        return Outcome{ok && samples >= 1000, os.str()};
    });

    criterion(4, "three-layer eigenvalue envelopes (rho_W, -C_W(...))", 300, [] {
        long samples = 0;
        bool ok = true;
        double wu = -1e300, wl = -1e300;
        std::string where;
        for (int m : {8, 16}) {
            ProblemSpec p;
            p.net = NetworkConfig{Architecture::three_layer, m, 0.75, 3};
            p.n = 20;
            p.t_max = 100;
            p.noise_std = 0.05;
            p.init_std = 0.05;
            p.snapshot_stride = 10;
            const Instance inst = make_instance(p, 11);
            const Trajectory traj = gd_run(inst.net, inst.train, inst.w0, inst.gd);
            const auto env = check_eig_envelopes(inst, traj, 34, 11);
            samples += env.upper.samples;
            wu = std::max(wu, env.upper.worst_violation);
            wl = std::max(wl, env.lower.worst_violation);
            if (!env.upper.passed || !env.lower.passed) {
                ok = false;
                where = env.upper.passed ? env.lower.location : env.upper.location;
            }
        }
        std::ostringstream os;
        os << samples << " samples; worst relative excess upper " << fmt(wu) << ", lower " << fmt(wl);
        if (!ok) os << "; violated at " << where;
        return Outcome{ok && samples >= 200, os.str()};
    });

    // Criteria 5 and 6 share the strict-mode runs.
    struct LawRun {
        Instance inst;
        Trajectory traj;
    };
    std::vector<LawRun> law_runs;
    auto law_spec = [](Architecture arch) {
        ProblemSpec p;
        if (arch == Architecture::two_layer) {
            p.net = NetworkConfig{Architecture::two_layer, 32, 0.5, 5};
            p.n = 50;
            p.t_max = 200;
        } else {
            p.net = NetworkConfig{Architecture::three_layer, 8, 0.75, 3};
            p.n = 20;
            p.t_max = 100;
            p.init_std = 0.05;
        }
        p.noise_std = 0.1;
        p.snapshot_stride = 10;
        p.strict = true;
        return p;
    };

    criterion(5, "trajectory laws (monotone descent, deviation, refined three-layer deviation)", 300, [&] {
        bool ok = true;
        double mono = -1e300, dev = -1e300, ref = -1e300;
        std::string where;
        int runs = 0;
        for (auto arch : {Architecture::two_layer, Architecture::three_layer}) {
            for (std::uint64_t seed = 1; seed <= 20; ++seed) {
                Instance inst = make_instance(law_spec(arch), seed);
                Trajectory traj = gd_run(inst.net, inst.train, inst.w0, inst.gd);
                if (traj.diverged) {
                    ok = false;
                    where = "diverged: " + traj.diagnostic;
                }
                for (const auto& r : check_trajectory_laws(inst, traj)) {
                    const auto& id = r.check_id;
                    double* slot = nullptr;
                    if (id.ends_with("monotone_descent")) slot = &mono;
                    if (id.ends_with("deviation_bound")) slot = &dev;
                    if (id.ends_with("refined_deviation")) slot = &ref;
                    if (!slot) continue;
                    *slot = std::max(*slot, r.worst_violation);
                    if (r.worst_violation > 0.0) {  // exact: no tolerance
                        ok = false;
                        where = id + " at " + r.location;
                    }
                }
                law_runs.push_back({std::move(inst), std::move(traj)});
                ++runs;
            }
        }
        std::ostringstream os;
        os << runs << " strict runs; worst relative excess: descent " << fmt(mono) << ", deviation " << fmt(dev)
           << ", refined " << fmt(ref);
        if (!ok) os << "; " << where;
        return Outcome{ok, os.str()};
    });

    criterion(6, "self-bounding ||grad l||^2 <= 2 rho l on trajectory points", 300, [&] {
        bool ok = !law_runs.empty();
        long points = 0;
        double worst = -1e300;
        std::string where;
        for (const auto& lr : law_runs) {
            const auto r = check_self_bounding(lr.inst, lr.traj);
            points += r.samples;
            worst = std::max(worst, r.worst_violation);
            if (r.worst_violation > 0.0) {
                ok = false;
                where = r.location;
            }
        }
        std::ostringstream os;
        os << points << " (W_t, z) points; worst relative excess " << fmt(worst);
        if (!ok) os << "; violated at " << where;
        return Outcome{ok, os.str()};
    });

    // Criteria 7 and 8 share the certified two-layer paired runs.
    std::vector<StabilityReport> two_layer_reports;

    criterion(7, "almost co-coercivity along paired runs at certified widths", 600, [&] {
        bool ok = true;
        long checks = 0, violations = 0;
        double worst = 1e300;
        std::string note;
        for (auto arch : {Architecture::two_layer, Architecture::three_layer}) {
            const ProblemSpec p = arch == Architecture::two_layer ? certified_two_layer() : three_layer_coercive();
            for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                const Instance inst = make_instance(p, seed);
                StabilityOptions opts;
                opts.check_coercivity = true;
                opts.holdout = 0;
                auto rep = paired_stability_run(inst, opts);
                if (!rep.certified) {
                    ok = false;
                    note = to_string(arch) + " seed " + std::to_string(seed) + " not certified by the width conditions";
                }
                checks += rep.coercivity->checks;
                violations += rep.coercivity->violations;
                worst = std::min(worst, rep.coercivity->worst_slack);
                if (arch == Architecture::two_layer) two_layer_reports.push_back(std::move(rep));
            }
        }
        ok = ok && violations == 0;
        std::ostringstream os;
        os << "20 paired runs (two-layer m=1024 c=0.75, three-layer m=16 c=0.75); " << checks << " checks, "
           << violations << " violations; min normalised slack " << fmt(worst);
        if (!note.empty()) os << "; " << note;
        return Outcome{ok, os.str()};
    });

    criterion(8, "uniform stability inequality on a certified two-layer configuration", 900, [&] {
        if (two_layer_reports.empty()) return Outcome{false, "no certified paired runs available"};
        bool ok = true;
        double worst_ratio = 0.0;
        long indices = 0;
        for (const auto& rep : two_layer_reports) {
            ok = ok && rep.certified;
            for (double d : rep.per_index_distance) {
                worst_ratio = std::max(worst_ratio, d / rep.theoretical_uniform);
                ok = ok && d <= rep.theoretical_uniform;
                ++indices;
            }
        }
        std::ostringstream os;
        os << two_layer_reports.size() << " seeds x 50 indices (" << indices
           << " distances), n=" << certified_two_layer().n << ", T=" << certified_two_layer().t_max << "; max distance/bound " << fmt(worst_ratio);
        return Outcome{ok, os.str()};
    });

    criterion(9, "stability trend: decreasing in n and in the scaling c", 1800, [] {
        auto mean_stability = [](ProblemSpec p) {
            double sum = 0.0;
            const int seeds = 10;
            for (std::uint64_t s = 1; s <= seeds; ++s) {
                StabilityOptions opts;
                opts.holdout = 0;
                sum += paired_stability_run(make_instance(p, s), opts).on_average_sq;
            }
            return sum / seeds;
        };
        ProblemSpec base;
        base.net = NetworkConfig{Architecture::two_layer, 32, 0.5, 5};
        base.eta = 1.0;
        base.t_max = 100;
        base.noise_std = 0.1;
        std::vector<double> by_n, by_c;
        for (int n : {50, 100, 200, 400}) {
            ProblemSpec p = base;
            p.n = n;
            by_n.push_back(mean_stability(p));
        }
        for (double c : {0.5, 0.75, 1.0}) {
            ProblemSpec p = base;
            p.n = 50;
            p.net.c = c;
            by_c.push_back(mean_stability(p));
        }
        bool ok = true;
        std::ostringstream os;
        os << "n=50,100,200,400:";
        for (std::size_t k = 0; k < by_n.size(); ++k) {
            os << " " << fmt(by_n[k]);
            if (k > 0) ok = ok && by_n[k] < by_n[k - 1];
        }
        os << "; c=0.5,0.75,1:";
        for (std::size_t k = 0; k < by_c.size(); ++k) {
            os << " " << fmt(by_c[k]);
            if (k > 0) ok = ok && by_c[k] < by_c[k - 1];
        }
        os << " (m=32, eta=1, T=100, 10 seeds)";
        return Outcome{ok, os.str()};
    });

    criterion(10, "generalization gap below the bound on certified configurations", 900, [] {
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
        const auto sum = excess_risk_experiment(certified_two_layer(), seeds, 10000, 1);
        bool ok = !sum.ts.empty();
        for (const auto& r : sum.runs) ok = ok && r.certified;
        double worst = -1e300;
        std::size_t at = 0;
        for (std::size_t j = 0; j < sum.ts.size(); ++j) {
            if (sum.mean_gap[j] - sum.mean_bound[j] > worst) {
                worst = sum.mean_gap[j] - sum.mean_bound[j];
                at = j;
            }
            ok = ok && sum.mean_gap[j] <= sum.mean_bound[j];
        }
        std::ostringstream os;
        os << sum.ts.size() << " recorded t, 10 seeds, 10^4 held-out points; final mean gap "
           << fmt(sum.mean_gap.back()) << " (se " << fmt(sum.se_gap.back()) << ") vs bound "
           << fmt(sum.mean_bound.back()) << "; max(gap - bound) " << fmt(worst) << " at t=" << sum.ts[at]
           << " (gap " << fmt(sum.mean_gap[at]) << ", se " << fmt(sum.se_gap[at]) << ", bound "
           << fmt(sum.mean_bound[at]) << ")";
        return Outcome{ok, os.str()};
    });

    criterion(11, "region classifier fixtures and grid structure", 1, [] {
        bool ok = true;
        ok = ok && classify_region(Architecture::two_layer, 0.5, 0.1).region == Region::pink_infeasible;
        ok = ok && classify_region(Architecture::two_layer, 1.0, 0.75).region == Region::blue_dotted_under_sufficient;
        ok = ok && classify_region(Architecture::two_layer, 0.5, 0.5).region == Region::blue_over_necessary;
        ok = ok && classify_region(Architecture::three_layer, 0.6, 0.4).region == Region::pink_infeasible;
        ok = ok &&
             classify_region(Architecture::three_layer, 0.75, 0.7).region == Region::blue_dotted_under_sufficient;
        std::ostringstream os;
        for (auto arch : {Architecture::two_layer, Architecture::three_layer}) {
            const auto grid = region_grid(arch);
            int counts[3] = {0, 0, 0};
            for (const auto& v : grid) ++counts[static_cast<int>(v.region)];
            ok = ok && grid.size() == 441 && counts[0] > 0 && counts[1] > 0 && counts[2] > 0;
            os << to_string(arch) << " " << grid.size() << " points (pink " << counts[0] << ", over " << counts[1]
               << ", dotted " << counts[2] << ") ";
        }
        return Outcome{ok, os.str()};
    });

    criterion(12, "determinism: reruns give byte-identical outputs", 600, [] {
        const fs::path work = fs::temp_directory_path() / "nnstab_acceptance_determinism";
        fs::remove_all(work);
        fs::create_directories(work);
        {
            std::ofstream cfg(work / "run.ini");
            cfg << "[network]\nm = 8\nd = 3\n[data]\nn = 12\nnoise_std = 0.1\n[train]\nt_max = 40\n"
                   "snapshot_stride = 10\n[run]\nseeds = 1-2\nholdout = 1000\nworkers = 2\n"
                   "[stability]\ncheck_coercivity = true\n[verify]\neig_samples = 3\nfd_samples = 1\n"
                   "stability = true\n[sweep]\nm = 4, 8\nc = 0.5, 1.0\nbudget = 16\n";
        }
        const std::string cli = NNSTAB_CLI;
        const char* commands[] = {"verify", "train", "stability", "region", "sweep"};
        for (const char* pass : {"a", "b"}) {
            for (const char* cmd : commands) {
                const std::string line = "\"" + cli + "\" " + cmd + " --config \"" + (work / "run.ini").string() +
                                         "\" --out-dir \"" + (work / pass).string() + "\" > /dev/null 2>&1";
                const int rc = std::system(line.c_str());
                if (rc != 0) return Outcome{false, std::string(cmd) + " exited with status " + std::to_string(rc)};
            }
        }
        int files = 0;
        for (const auto& entry : fs::directory_iterator(work / "a")) {
            const fs::path other = work / "b" / entry.path().filename();
            if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) {
                return Outcome{false, entry.path().filename().string() + " differs between reruns"};
            }
            ++files;
        }
        fs::remove_all(work);
        return Outcome{files >= 10, std::to_string(files) + " CSV/JSON files identical across two full reruns"};
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
