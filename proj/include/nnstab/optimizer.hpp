#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "nnstab/loss.hpp"
#include "nnstab/model.hpp"

namespace nnstab {

struct GDConfig {
    double eta = 0.1;
    int t_max = 100;
    int snapshot_stride = 0;  // 0: keep only W₀ and W_T
    bool strict = true;
    /// Admissible step (1/(2ρ) or 1/(8ρ̂)); required in strict mode.
    std::optional<double> eta_limit;
    int divergence_window = 5;
};

struct Trajectory {
    std::vector<std::pair<int, Params>> snapshots;
    // Indexed by t = 0..T (entry t refers to W_t).
    std::vector<double> risks;
    std::vector<double> deviations;
    std::vector<double> grad_norms;
    Params final_params;
    bool diverged = false;
    std::string diagnostic;

    int steps() const { return static_cast<int>(risks.size()) - 1; }
};

/// W − η g. Throws std::runtime_error on a non-finite gradient.
Params gd_step(const Params& params, const Eigen::VectorXd& grad, double eta);

/// Called after the risk and gradient at W_t are known.
using StepObserver = std::function<void(int t, const Params& w, const RiskAndGrad& rg)>;

Trajectory gd_run(const Network& net, const Dataset& data, const Params& w0, const GDConfig& config,
                  const StepObserver& observer = {});
/// Initialises W₀ from the seed.
Trajectory gd_run(const Network& net, const Dataset& data, const InitConfig& init, std::uint64_t seed,
                  const GDConfig& config);

/// 1/(2ρ) for two-layer, 1/(8ρ̂) for three-layer networks.
double max_safe_stepsize(Architecture arch, double rho_or_rho_hat);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace nnstab
