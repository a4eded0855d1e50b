#include "nnstab/optimizer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nnstab {

Params gd_step(const Params& params, const Eigen::VectorXd& grad, double eta) {
    if (!grad.allFinite()) throw std::runtime_error("gd_step: non-finite gradient");
    if (grad.size() != params.size()) throw std::invalid_argument("gd_step: dimension mismatch");
    return params - eta * grad;
}

double max_safe_stepsize(Architecture arch, double rho_or_rho_hat) {
    if (!(rho_or_rho_hat > 0.0)) throw std::invalid_argument("smoothness constant must be positive");
    return arch == Architecture::two_layer ? 1.0 / (2.0 * rho_or_rho_hat) : 1.0 / (8.0 * rho_or_rho_hat);
}

Trajectory gd_run(const Network& net, const Dataset& data, const Params& w0, const GDConfig& config,
                  const StepObserver& observer) {
    if (!(config.eta >= 0.0) || config.t_max < 0) throw std::invalid_argument("gd_run: invalid config");
    if (config.strict) {
        if (!config.eta_limit) throw std::invalid_argument("gd_run: strict mode needs an admissible step bound");
        if (config.eta > *config.eta_limit) {
            std::ostringstream msg;
            msg << "gd_run: eta " << config.eta << " exceeds admissible step " << *config.eta_limit;
            throw std::invalid_argument(msg.str());
        }
    }
    Trajectory traj;
    traj.risks.reserve(config.t_max + 1);
    traj.deviations.reserve(config.t_max + 1);
    traj.grad_norms.reserve(config.t_max + 1);
    traj.snapshots.emplace_back(0, w0);

    Params w = w0;
    int increases = 0;
    for (int t = 0;; ++t) {
        const RiskAndGrad rg = risk_and_grad(net, w, data);
        traj.risks.push_back(rg.risk);
        traj.deviations.push_back((w - w0).norm());
        traj.grad_norms.push_back(rg.grad.norm());
        if (observer) observer(t, w, rg);
        if (!std::isfinite(rg.risk) || !rg.grad.allFinite()) {
            std::ostringstream msg;
            msg << "non-finite risk or gradient at step " << t << " (risk " << rg.risk << ")";
            throw std::runtime_error(msg.str());
        }
        if (t > 0) {
            increases = rg.risk > traj.risks[t - 1] ? increases + 1 : 0;
            if (config.strict && increases >= config.divergence_window) {
                traj.diverged = true;
                std::ostringstream msg;
                msg << "risk increased for " << increases << " consecutive steps ending at t=" << t;
                traj.diagnostic = msg.str();
                break;
            }
        }
        if (t == config.t_max) break;
        w = gd_step(w, rg.grad, config.eta);
        if (config.snapshot_stride > 0 && (t + 1) % config.snapshot_stride == 0 && t + 1 < config.t_max) {
            traj.snapshots.emplace_back(t + 1, w);
        }
    }
    const int last = traj.steps();
    if (traj.snapshots.back().first != last) traj.snapshots.emplace_back(last, w);
    traj.final_params = std::move(w);
    return traj;
}

Trajectory gd_run(const Network& net, const Dataset& data, const InitConfig& init, std::uint64_t seed,
                  const GDConfig& config) {
    return gd_run(net, data, init_params(net.config(), init, seed), config);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t,risk,deviation,grad_norm\n";
    out.precision(17);
    for (std::size_t t = 0; t < traj.risks.size(); ++t) {
        out << t << "," << traj.risks[t] << "," << traj.deviations[t] << "," << traj.grad_norms[t] << "\n";
    }
}

}  // namespace nnstab
