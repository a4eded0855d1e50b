// nnstab command-line front end: verify | train | stability | region | sweep.
//
// Exit codes: 0 success, 1 a check or bound failed, 2 usage/config error,
// 3 runtime failure.

#include <filesystem>
#include <map>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "nnstab/config.hpp"
#include "nnstab/verify.hpp"

namespace fs = std::filesystem;
using namespace nnstab;
using json = nlohmann::ordered_json;

namespace {

struct Common {
    std::string config;
    std::string out_dir = "out";
    std::string seeds;
    int workers = -1;
    std::optional<bool> strict;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ExperimentConfig resolve(const Common& c) {
    ExperimentConfig cfg;
    if (!c.config.empty()) cfg = load_config(c.config);
    if (!c.seeds.empty()) cfg.seeds = parse_seed_list(c.seeds);
    if (c.workers >= 0) cfg.workers = c.workers;
    if (c.strict) cfg.problem.strict = *c.strict;
    cfg.validate();
    return cfg;
}

int worker_count(const ExperimentConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

fs::path prepare(const Common& c) {
    fs::path dir(c.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

json envelope(const char* command, const ExperimentConfig& cfg) {
    json j;
    j["command"] = command;
    j["format"] = "nnstab v1";
    j["config"] = to_json(cfg);
    return j;
}

int cmd_verify(const Common& c, bool use_default) {
    const auto cfg = resolve(c);
    SuiteConfig suite;
    if (use_default || c.config.empty()) {
        suite = default_suite();
        for (auto& sc : suite.cases) sc.seeds = cfg.seeds;
    } else {
        SuiteCase sc;
        sc.problem = cfg.problem;
        sc.seeds = cfg.seeds;
        sc.eig_samples = cfg.eig_samples;
        sc.fd_samples = cfg.fd_samples;
        sc.stability = cfg.verify_stability;
        sc.stability_workers = worker_count(cfg);
        suite.cases.push_back(sc);
    }
    const auto results = run_suite(suite);
    print_table(std::cout, results);
    json j = envelope("verify", cfg);
    j["suite"] = use_default || c.config.empty() ? "default" : "config";
    auto arr = json::array();
    bool ok = true;
    for (const auto& r : results) {
        arr.push_back(to_json(r));
        ok = ok && r.passed;
    }
    j["results"] = std::move(arr);
    j["all_passed"] = ok;
    write_json(prepare(c) / "verify.json", j);
    return ok ? 0 : 1;
}

int cmd_train(const Common& c) {
    const auto cfg = resolve(c);
    const fs::path dir = prepare(c);
    json j = envelope("train", cfg);
    auto runs = json::array();
    bool ok = true;
    for (const auto seed : cfg.seeds) {
        const Instance inst = make_instance(cfg.problem, seed);
        const Trajectory traj = gd_run(inst.net, inst.train, inst.w0, inst.gd);
        const fs::path csv = dir / ("trajectory_seed" + std::to_string(seed) + ".csv");
        std::ofstream out(csv);
        out << "# nnstab-trajectory v1 seed=" << seed << "\n";
        write_trajectory_csv(out, traj);
        const auto laws = check_trajectory_laws(inst, traj);
        json r;
        r["seed"] = seed;
        r["eta"] = inst.eta;
        r["rho"] = inst.rho;
        r["c0"] = inst.c0;
        r["steps"] = traj.steps();
        r["initial_risk"] = traj.risks.front();
        r["final_risk"] = traj.risks.back();
        r["final_deviation"] = traj.deviations.back();
        r["diverged"] = traj.diverged;
        r["diagnostic"] = traj.diagnostic;
        r["trajectory_csv"] = csv.filename().string();
        r["teacher_hash"] = params_hash(inst.teacher.params);
        auto checks = json::array();
        for (const auto& l : laws) {
            checks.push_back(to_json(l));
            ok = ok && l.passed;
        }
        r["checks"] = std::move(checks);
        runs.push_back(std::move(r));
        std::cout << "seed " << seed << ": L_S " << traj.risks.front() << " -> " << traj.risks.back() << " ("
                  << traj.steps() << " steps, eta " << inst.eta << ")\n";
    }
    j["runs"] = std::move(runs);
    write_json(dir / "train.json", j);
    return ok ? 0 : 1;
}

int cmd_stability(const Common& c) {
    const auto cfg = resolve(c);
    const fs::path dir = prepare(c);
    StabilityOptions opts;
    opts.workers = worker_count(cfg);
    opts.check_coercivity = cfg.check_coercivity;
    opts.record_path_distances = cfg.path_distances;
    opts.holdout = cfg.holdout;
    json j = envelope("stability", cfg);
    auto runs = json::array();
    std::ofstream csv(dir / "stability.csv");
    csv << "# nnstab-stability v1\nseed,index,distance,uniform_bound\n";
    csv.precision(17);
    bool ok = true;
    for (const auto seed : cfg.seeds) {
        const Instance inst = make_instance(cfg.problem, seed);
        const auto rep = paired_stability_run(inst, opts);
        for (std::size_t i = 0; i < rep.per_index_distance.size(); ++i) {
            csv << seed << "," << i << "," << rep.per_index_distance[i] << "," << rep.theoretical_uniform << "\n";
        }
        if (cfg.path_distances) {
            std::ofstream p(dir / ("paths_seed" + std::to_string(seed) + ".csv"));
            p << "# nnstab-paths v1 seed=" << seed << "\nindex,t,distance\n";
            p.precision(17);
            for (std::size_t i = 0; i < rep.path_distances.size(); ++i) {
                for (std::size_t t = 0; t < rep.path_distances[i].size(); ++t) {
                    p << i << "," << t << "," << rep.path_distances[i][t] << "\n";
                }
            }
        }
        json r = to_json(rep);
        r["seed"] = seed;
        const bool bound_ok = !rep.certified || rep.uniform_max <= rep.theoretical_uniform;
        const bool co_ok = !rep.coercivity || rep.coercivity->violations == 0;
        r["uniform_bound_holds"] = rep.uniform_max <= rep.theoretical_uniform;
        ok = ok && bound_ok && co_ok;
        runs.push_back(std::move(r));
        std::cout << "seed " << seed << ": on-average " << rep.on_average_sq << ", max " << rep.uniform_max
                  << " (bound " << rep.theoretical_uniform << (rep.certified ? ", certified" : ", not certified")
                  << ")\n";
    }
    j["runs"] = std::move(runs);
    write_json(dir / "stability.json", j);
    return ok ? 0 : 1;
}

int cmd_region(const Common& c) {
    const auto cfg = resolve(c);
    const fs::path dir = prepare(c);
    const auto grid = region_grid(cfg.region_arch, cfg.region_points);
    std::ofstream csv(dir / "region.csv");
    write_region_csv(csv, grid);
    json j = envelope("region", cfg);
    std::map<std::string, int> counts;
    for (const auto& v : grid) ++counts[to_string(v.region)];
    j["counts"] = counts;
    write_json(dir / "region.json", j);
    for (const auto& [k, n] : counts) std::cout << k << ": " << n << "\n";
    return 0;
}

// One sweep row key, used to resume an interrupted sweep.
std::string sweep_key(int m, double c, int n, int t, std::uint64_t seed) {
    std::ostringstream os;
    os.precision(17);
    os << m << "," << c << "," << n << "," << t << "," << seed;
    return os.str();
}

const char* kSweepHeader =
    "m,c,n,t_max,seed,eta,rho,c0,certified,on_average_sq,uniform_max,uniform_bound,train_risk,test_risk,gen_gap";

int cmd_sweep(const Common& c) {
    const auto cfg = resolve(c);
    const fs::path dir = prepare(c);
    const auto& sw = cfg.sweep;
    const std::vector<int> ms = sw.m.empty() ? std::vector<int>{cfg.problem.net.m} : sw.m;
    const std::vector<double> cs = sw.c.empty() ? std::vector<double>{cfg.problem.net.c} : sw.c;
    const std::vector<int> ns = sw.n.empty() ? std::vector<int>{cfg.problem.n} : sw.n;
    const std::vector<int> ts = sw.t_max.empty() ? std::vector<int>{cfg.problem.t_max} : sw.t_max;
    const long total = long(ms.size()) * long(cs.size()) * long(ns.size()) * long(ts.size()) * long(cfg.seeds.size());
    if (total > sw.budget) {
        throw UsageError("sweep of " + std::to_string(total) + " runs exceeds sweep.budget = " +
                         std::to_string(sw.budget));
    }

    const fs::path csv_path = dir / "sweep.csv";
    std::set<std::string> done;
    if (fs::exists(csv_path)) {
        std::ifstream in(csv_path);
        std::string line;
        std::getline(in, line);
        if (line != "# nnstab-sweep v1") throw UsageError(csv_path.string() + " exists but is not a sweep table");
        std::getline(in, line);
        if (line != kSweepHeader) throw UsageError(csv_path.string() + " has a different column layout");
        while (std::getline(in, line)) {
            std::size_t pos = 0;
            for (int k = 0; k < 5 && pos != std::string::npos; ++k) pos = line.find(',', pos + 1);
            if (pos != std::string::npos) done.insert(line.substr(0, pos));
        }
    } else {
        std::ofstream out(csv_path);
        out << "# nnstab-sweep v1\n" << kSweepHeader << "\n";
    }
    std::ofstream out(csv_path, std::ios::app);
    out.precision(17);

    StabilityOptions opts;
    opts.workers = worker_count(cfg);
    opts.holdout = cfg.holdout;
    long ran = 0, skipped = 0;
    for (int m : ms) {
        for (double cv : cs) {
            for (int n : ns) {
                for (int t : ts) {
                    for (const auto seed : cfg.seeds) {
                        const std::string key = sweep_key(m, cv, n, t, seed);
                        if (done.count(key)) {
                            ++skipped;
                            continue;
                        }
                        ProblemSpec p = cfg.problem;
                        p.net.m = m;
                        p.net.c = cv;
                        p.n = n;
                        p.t_max = t;
                        const Instance inst = make_instance(p, seed);
                        const auto rep = paired_stability_run(inst, opts);
                        out << key << "," << rep.eta << "," << rep.rho << "," << rep.c0 << ","
                            << (rep.certified ? 1 : 0) << "," << rep.on_average_sq << "," << rep.uniform_max << ","
                            << rep.theoretical_uniform << "," << rep.train_risk << "," << rep.test_risk << ","
                            << rep.empirical_gen_gap << "\n";
                        out.flush();
                        ++ran;
                    }
                }
            }
        }
    }
    json j = envelope("sweep", cfg);
    j["runs"] = total;
    write_json(dir / "sweep.json", j);
    std::cout << "sweep: " << ran << " runs, " << skipped << " resumed from an earlier partial table\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nnstab: stability and generalization experiments for shallow networks"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "INI experiment config")->check(CLI::ExistingFile);
        sub->add_option("--out-dir", common.out_dir, "output directory");
        sub->add_option("--seeds", common.seeds, "seed list, e.g. 1-10 or 1,4,9");
        sub->add_option("--workers", common.workers, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
        auto* strict = sub->add_flag_callback("--strict", [&] { common.strict = true; }, "enforce admissible step");
        auto* loose = sub->add_flag_callback("--no-strict", [&] { common.strict = false; }, "allow any step size");
        strict->excludes(loose);
    };
    auto* verify = app.add_subcommand("verify", "run the property/envelope check suite");
    bool default_suite_flag = false;
    verify->add_flag("--default-suite", default_suite_flag, "ignore the config problem and run the built-in suite");
    auto* train = app.add_subcommand("train", "run gradient descent and write trajectories");
    auto* stability = app.add_subcommand("stability", "paired leave-one-out stability runs");
    auto* region = app.add_subcommand("region", "classify the (c, mu) grid");
    auto* sweep = app.add_subcommand("sweep", "stability over a grid of widths / scalings / sizes");
    for (auto* s : {verify, train, stability, region, sweep}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        if (*verify) return cmd_verify(common, default_suite_flag);
        if (*train) return cmd_train(common);
        if (*stability) return cmd_stability(common);
        if (*region) return cmd_region(common);
        if (*sweep) return cmd_sweep(common);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
