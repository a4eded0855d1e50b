#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "nnstab/stability_lab.hpp"

namespace nnstab {

struct CheckResult {
    std::string check_id;
    bool passed;
    double worst_violation;  // ≤ 0 means the inequality held everywhere
    std::string location;
    double tolerance;
    long samples = 0;
};

CheckResult make_check(std::string id, double worst_violation, double tolerance, std::string location,
                       long samples);

using ScalarField = std::function<double(const Eigen::VectorXd&)>;
using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central differences; throws on non-finite evaluations.
Eigen::VectorXd fd_gradient(const ScalarField& f, const Eigen::VectorXd& x, double step = 1e-5);
/// Central differences of a gradient field, symmetrised.
Eigen::MatrixXd fd_jacobian_sym(const VectorField& g, const Eigen::VectorXd& x, double step = 1e-5);

struct ExtremeEigs {
    double lambda_min;
    double lambda_max;
};
/// Dense symmetric eigensolver; throws if H is asymmetric beyond 1e-10 (relative).
ExtremeEigs extreme_eigs(const Eigen::MatrixXd& h);
/// Largest-magnitude eigenvalue by power iteration (for matrices too large to
/// decompose); deterministic start vector.
double power_iteration(const Eigen::MatrixXd& h, int max_iter = 1000, double tol = 1e-10);

// Individual checks on one realised instance. Samples are drawn
// deterministically from `seed`.

/// ∇f and ∇ℓ against central differences (norm-relative error).
CheckResult check_gradients(const Instance& inst, int samples, std::uint64_t seed, double tol = 1e-5);
/// ∇²ℓ against differences of ∇ℓ; tolerance 1e-4·(1 + ||H||).
CheckResult check_hessians(const Instance& inst, int samples, std::uint64_t seed);

struct EnvelopeChecks {
    CheckResult upper;  // λ_max ≤ ρ (or ρ_W)
    CheckResult lower;  // λ_min ≥ curvature bound
};
/// W drawn near W₀, from the trajectory snapshots, and uniformly in the ball
/// ||W − W₀|| ≤ √(2ηTc₀); z drawn from S ∪ S'.
EnvelopeChecks check_eig_envelopes(const Instance& inst, const Trajectory& traj, int samples_per_regime,
                                   std::uint64_t seed);
/// ||∇ℓ||² ≤ 2ρℓ at every snapshot for every training example.
CheckResult check_self_bounding(const Instance& inst, const Trajectory& traj);
/// Monotone descent, descent lemma, deviation laws.
std::vector<CheckResult> check_trajectory_laws(const Instance& inst, const Trajectory& traj);

struct SuiteCase {
    ProblemSpec problem;
    std::vector<std::uint64_t> seeds{1};
    int eig_samples = 20;  // sampled (W, z) pairs per regime
    int fd_samples = 3;
    bool stability = false;  // paired runs (co-coercivity + uniform stability)
    int stability_workers = 1;
};

struct SuiteConfig {
    std::vector<SuiteCase> cases;
};

/// The desk-scale default suite: two-layer m ∈ {16, 64, 256}, d = 5, n = 50, T = 200,
/// plus a small three-layer case.
SuiteConfig default_suite();

std::vector<CheckResult> run_suite(const SuiteConfig& config);
std::vector<CheckResult> run_case(const SuiteCase& sc);

nlohmann::ordered_json to_json(const CheckResult& r);
void print_table(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace nnstab
