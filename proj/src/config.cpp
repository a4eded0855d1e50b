#include "nnstab/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace nnstab {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"network", {"arch", "m", "c", "d", "activation", "signs"}},
        {"data", {"n", "c_x", "c_y", "noise_std", "teacher_std", "mu", "teacher_seed", "teacher_per_seed"}},
        {"train", {"eta", "t_max", "init_std", "strict", "snapshot_stride"}},
        {"run", {"seeds", "workers", "holdout"}},
        {"stability", {"check_coercivity", "path_distances"}},
        {"verify", {"eig_samples", "fd_samples", "stability"}},
        {"sweep", {"m", "c", "n", "t_max", "budget"}},
        {"region", {"arch", "points"}},
    };
    return keys;
}

template <class T>
T as(const pt::ptree& section, const std::string& key, const std::string& where) {
    const std::string raw = boost::trim_copy(section.get<std::string>(key));
    std::istringstream is(raw);
    T value{};
    is >> value;
    if (!is || !(is >> std::ws).eof()) throw ConfigError(where + "." + key + ": cannot parse '" + raw + "'");
    return value;
}

bool as_bool(const pt::ptree& section, const std::string& key, const std::string& where) {
    const std::string raw = boost::to_lower_copy(boost::trim_copy(section.get<std::string>(key)));
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    throw ConfigError(where + "." + key + ": expected a boolean, got '" + raw + "'");
}

template <class T>
std::vector<T> as_list(const pt::ptree& section, const std::string& key, const std::string& where) {
    std::vector<std::string> parts;
    const std::string raw = section.get<std::string>(key);
    boost::split(parts, raw, boost::is_any_of(","));
    std::vector<T> out;
    for (auto& p : parts) {
        boost::trim(p);
        if (p.empty()) continue;
        std::istringstream is(p);
        T v{};
        is >> v;
        if (!is || !(is >> std::ws).eof()) throw ConfigError(where + "." + key + ": cannot parse '" + p + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(where + "." + key + ": empty list");
    return out;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::string> parts;
    boost::split(parts, text, boost::is_any_of(","));
    std::vector<std::uint64_t> seeds;
    for (auto& p : parts) {
        boost::trim(p);
        if (p.empty()) continue;
        const auto dash = p.find('-');
        try {
            if (dash != std::string::npos) {
                const auto lo = std::stoull(p.substr(0, dash));
                const auto hi = std::stoull(p.substr(dash + 1));
                if (hi < lo || hi - lo > 100000) throw ConfigError("bad seed range '" + p + "'");
                for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
            } else {
                std::size_t used = 0;
                seeds.push_back(std::stoull(p, &used));
                if (used != p.size()) throw ConfigError("bad seed '" + p + "'");
            }
        } catch (const std::logic_error&) {
            throw ConfigError("bad seed '" + p + "'");
        }
    }
    if (seeds.empty()) throw ConfigError("empty seed list");
    return seeds;
}

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    const auto& known = known_keys();
    for (const auto& [name, section] : tree) {
        const auto it = known.find(name);
        if (it == known.end()) {
            if (section.empty()) throw ConfigError("key '" + name + "' outside any section");
            throw ConfigError("unknown section [" + name + "]");
        }
        for (const auto& [key, value] : section) {
            if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name + "]");
        }
    }

    ExperimentConfig cfg;
    auto& p = cfg.problem;
    auto get = [&](const std::string& name) -> const pt::ptree* {
        const auto opt = tree.get_child_optional(name);
        return opt ? &*opt : nullptr;
    };
    try {
        if (const auto* s = get("network")) {
            if (s->count("arch")) p.net.arch = parse_architecture(boost::trim_copy(s->get<std::string>("arch")));
            if (s->count("m")) p.net.m = as<int>(*s, "m", "network");
            if (s->count("c")) p.net.c = as<double>(*s, "c", "network");
            if (s->count("d")) p.net.d = as<int>(*s, "d", "network");
            if (s->count("activation")) p.activation = parse_activation(boost::trim_copy(s->get<std::string>("activation")));
            if (s->count("signs")) {
                const auto v = boost::trim_copy(s->get<std::string>("signs"));
                if (v != "balanced" && v != "random") throw ConfigError("network.signs: expected balanced or random");
                p.random_signs = v == "random";
            }
        }
        if (const auto* s = get("data")) {
            if (s->count("n")) p.n = as<int>(*s, "n", "data");
            if (s->count("c_x")) p.c_x = as<double>(*s, "c_x", "data");
            if (s->count("c_y")) p.c_y = as<double>(*s, "c_y", "data");
            if (s->count("noise_std")) p.noise_std = as<double>(*s, "noise_std", "data");
            if (s->count("teacher_std")) p.teacher_std = as<double>(*s, "teacher_std", "data");
            if (s->count("mu")) {
                const auto v = boost::trim_copy(s->get<std::string>("mu"));
                if (v != "none") p.mu = as<double>(*s, "mu", "data");
            }
            if (s->count("teacher_seed")) p.teacher_seed = as<std::uint64_t>(*s, "teacher_seed", "data");
            if (s->count("teacher_per_seed")) p.teacher_per_seed = as_bool(*s, "teacher_per_seed", "data");
        }
        if (const auto* s = get("train")) {
            if (s->count("eta")) {
                const auto v = boost::trim_copy(s->get<std::string>("eta"));
                if (v == "auto") {
                    p.eta.reset();
                } else {
                    p.eta = as<double>(*s, "eta", "train");
                }
            }
            if (s->count("t_max")) p.t_max = as<int>(*s, "t_max", "train");
            if (s->count("init_std")) p.init_std = as<double>(*s, "init_std", "train");
            if (s->count("strict")) p.strict = as_bool(*s, "strict", "train");
            if (s->count("snapshot_stride")) p.snapshot_stride = as<int>(*s, "snapshot_stride", "train");
        }
        if (const auto* s = get("run")) {
            if (s->count("seeds")) cfg.seeds = parse_seed_list(s->get<std::string>("seeds"));
            if (s->count("workers")) cfg.workers = as<int>(*s, "workers", "run");
            if (s->count("holdout")) cfg.holdout = as<long>(*s, "holdout", "run");
        }
        if (const auto* s = get("stability")) {
            if (s->count("check_coercivity")) cfg.check_coercivity = as_bool(*s, "check_coercivity", "stability");
            if (s->count("path_distances")) cfg.path_distances = as_bool(*s, "path_distances", "stability");
        }
        if (const auto* s = get("verify")) {
            if (s->count("eig_samples")) cfg.eig_samples = as<int>(*s, "eig_samples", "verify");
            if (s->count("fd_samples")) cfg.fd_samples = as<int>(*s, "fd_samples", "verify");
            if (s->count("stability")) cfg.verify_stability = as_bool(*s, "stability", "verify");
        }
        if (const auto* s = get("sweep")) {
            if (s->count("m")) cfg.sweep.m = as_list<int>(*s, "m", "sweep");
            if (s->count("c")) cfg.sweep.c = as_list<double>(*s, "c", "sweep");
            if (s->count("n")) cfg.sweep.n = as_list<int>(*s, "n", "sweep");
            if (s->count("t_max")) cfg.sweep.t_max = as_list<int>(*s, "t_max", "sweep");
            if (s->count("budget")) cfg.sweep.budget = as<long>(*s, "budget", "sweep");
        }
        if (const auto* s = get("region")) {
            if (s->count("arch")) cfg.region_arch = parse_architecture(boost::trim_copy(s->get<std::string>("arch")));
            if (s->count("points")) cfg.region_points = as<int>(*s, "points", "region");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    try {
        problem.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (workers < 0) throw ConfigError("run.workers must be nonnegative");
    if (holdout < 0) throw ConfigError("run.holdout must be nonnegative");
    if (eig_samples < 0 || fd_samples < 0) throw ConfigError("verify sample counts must be nonnegative");
    if (region_points < 2) throw ConfigError("region.points must be at least 2");
    if (sweep.budget < 1) throw ConfigError("sweep.budget must be positive");
    for (double c : sweep.c) {
        NetworkConfig probe = problem.net;
        probe.c = c;
        try {
            probe.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("sweep.c: ") + e.what());
        }
    }
    for (int m : sweep.m) {
        if (m < 1) throw ConfigError("sweep.m entries must be positive");
    }
    for (int n : sweep.n) {
        if (n < 1) throw ConfigError("sweep.n entries must be positive");
    }
    for (int t : sweep.t_max) {
        if (t < 0) throw ConfigError("sweep.t_max entries must be nonnegative");
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["problem"] = to_json(cfg.problem);
    j["seeds"] = cfg.seeds;
    j["holdout"] = cfg.holdout;
    j["check_coercivity"] = cfg.check_coercivity;
    j["eig_samples"] = cfg.eig_samples;
    j["fd_samples"] = cfg.fd_samples;
    j["verify_stability"] = cfg.verify_stability;
    j["sweep"] = {{"m", cfg.sweep.m}, {"c", cfg.sweep.c}, {"n", cfg.sweep.n}, {"t_max", cfg.sweep.t_max},
                  {"budget", cfg.sweep.budget}};
    j["region"] = {{"arch", to_string(cfg.region_arch)}, {"points", cfg.region_points}};
    return j;
}

}  // namespace nnstab
