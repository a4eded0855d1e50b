#pragma once

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnstab/stability_lab.hpp"

namespace nnstab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SweepGrid {
    std::vector<int> m;
    std::vector<double> c;
    std::vector<int> n;
    std::vector<int> t_max;
    long budget = 2000;  // maximum number of runs (grid points × seeds)
};

/// Resolved experiment configuration. Every key has a default.
struct ExperimentConfig {
    ProblemSpec problem;
    std::vector<std::uint64_t> seeds{1};
    int workers = 0;  // 0: hardware concurrency
    Eigen::Index holdout = 10000;
    bool check_coercivity = false;
    bool path_distances = false;
    int eig_samples = 10;
    int fd_samples = 3;
    bool verify_stability = false;
    SweepGrid sweep;
    Architecture region_arch = Architecture::two_layer;
    int region_points = 21;

    /// Re-validates ranges, including the strict step-size rule when eta is fixed.
    void validate() const;
};

/// INI-style file: [section] headers and key = value lines; '#' or ';' comments.
/// Sections: network, data, train, run, stability, verify, sweep, region.
/// Unknown sections or keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

}  // namespace nnstab
