#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "nnstab/bounds.hpp"
#include "nnstab/datagen.hpp"
#include "nnstab/loss.hpp"
#include "nnstab/model.hpp"
#include "nnstab/optimizer.hpp"

namespace nnstab {

/// Everything needed to instantiate one experiment for a given seed.
struct ProblemSpec {
    NetworkConfig net;
    ActivationKind activation = ActivationKind::sigmoid;
    bool random_signs = false;
    int n = 50;
    double c_x = 1.0;
    double c_y = 1.0;
    double noise_std = 0.0;
    double teacher_std = 1.0;
    std::optional<double> mu;  // norm budget for the teacher
    double init_std = 0.1;
    std::optional<double> eta;  // unset: max_safe_stepsize
    int t_max = 100;
    bool strict = true;
    int snapshot_stride = 0;
    bool teacher_per_seed = false;  // default: one teacher shared by all seeds
    std::uint64_t teacher_seed = 12345;

    void validate() const;
};

/// A realised problem: training set S, replacement examples z'_1..z'_n, W₀,
/// certified c₀ and the resolved step size.
struct Instance {
    ProblemSpec spec;
    std::uint64_t seed;
    Network net;
    TeacherSpec teacher;
    GenConfig gen;
    Dataset train;
    Dataset replacements;
    Params w0;
    double c0;
    double rho;  // ρ (two-layer) or ρ̂ (three-layer)
    double eta;
    GDConfig gd;
};

Instance make_instance(const ProblemSpec& spec, std::uint64_t seed);

/// Width-condition inputs matching an instance.
WidthInputs width_inputs(const Instance& inst);

/// S with example i replaced by z; throws on bad index or envelope violation.
Dataset perturb(const Dataset& data, Eigen::Index i, const Example& z);

struct CoercivityStats {
    long checks = 0;
    long violations = 0;
    double worst_slack = 0.0;  // min over checks of (lhs − rhs), normalised
    int worst_index = -1;
    int worst_step = -1;
    double tolerance = 0.0;
};

struct StabilityOptions {
    int workers = 1;
    bool check_coercivity = false;
    bool record_path_distances = false;
    Eigen::Index holdout = 10000;
};

struct StabilityReport {
    std::vector<double> per_index_distance;
    double on_average_sq = 0.0;
    double uniform_max = 0.0;
    double theoretical_uniform = 0.0;
    double theoretical_gen_gap = 0.0;   // from measured distances
    double generalization_bound = 0.0;  // coefficient × Σ L_S(W_j)
    double empirical_gen_gap = 0.0;
    double train_risk = 0.0;
    double test_risk = 0.0;
    double test_risk_se = 0.0;
    bool certified = false;
    std::vector<WidthConditionReport> width_reports;
    std::optional<CoercivityStats> coercivity;
    std::vector<std::vector<double>> path_distances;  // [i][t], when requested
    double rho = 0.0, eta = 0.0, c0 = 0.0;
};

StabilityReport paired_stability_run(const Instance& inst, const StabilityOptions& opts = {});

struct GapPoint {
    int t;
    double train_risk;
    double test_risk;
    double test_se;
    double gap;
    double bound;
};

struct ExcessRecord {
    std::uint64_t seed;
    std::vector<GapPoint> points;  // at every snapshot
    double final_train = 0.0;
    double final_test = 0.0;
    double generalization_gap = 0.0;
    double optimization_gap = 0.0;  // L_S(W_T) − L_S(W*)
    double approx_surrogate = 0.0;  // ||W* − W₀||²/(2ηT)
    double pop_risk_min = 0.0;      // L(W*) surrogate
    double excess_bound = 0.0;
    bool certified = false;
};

struct ExcessSummary {
    std::vector<ExcessRecord> runs;
    std::vector<int> ts;
    std::vector<double> mean_gap, se_gap, mean_bound;
};

ExcessSummary excess_risk_experiment(const ProblemSpec& spec, const std::vector<std::uint64_t>& seeds,
                                     Eigen::Index holdout = 10000, int workers = 1);

/// ½·Var of the truncated Gaussian label noise.
double noise_risk_floor(double noise_std, double trunc);

nlohmann::ordered_json to_json(const ProblemSpec& spec);
nlohmann::ordered_json to_json(const StabilityReport& r);
nlohmann::ordered_json to_json(const ExcessRecord& r);

/// Runs body(i) for i in [0, count) on `workers` threads.
void parallel_for(int count, int workers, const std::function<void(int)>& body);

}  // namespace nnstab
