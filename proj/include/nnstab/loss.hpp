#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "nnstab/model.hpp"

namespace nnstab {

struct Example {
    Eigen::VectorXd x;
    double y = 0.0;
};

/// Training set S with envelope constants: ||x|| ≤ c_x, |y| ≤ c_y, and
/// c_0 ≥ max_i max{ℓ(0; z_i), ℓ(W₀; z_i)} once certified.
struct Dataset {
    RowMatrix x;        // n × d
    Eigen::VectorXd y;  // n
    double c_x = 1.0;
    double c_y = 1.0;
    double c0 = 0.0;
    int clipped = 0;  // labels clipped to [-c_y, c_y] during generation

    Eigen::Index size() const { return y.size(); }
    Eigen::Index dim() const { return x.cols(); }
    Example example(Eigen::Index i) const;
    void set_example(Eigen::Index i, const Example& z);
    /// Throws if any example breaks the c_x / c_y envelope.
    void check_envelope() const;
};

double pointwise_loss(const Network& net, const Params& params, const Example& z);
double empirical_risk(const Network& net, const Params& params, const Dataset& data);

Eigen::VectorXd loss_grad(const Network& net, const Params& params, const Example& z);
Eigen::VectorXd risk_grad(const Network& net, const Params& params, const Dataset& data);

struct RiskAndGrad {
    double risk;
    Eigen::VectorXd grad;
};
RiskAndGrad risk_and_grad(const Network& net, const Params& params, const Dataset& data);

/// ∇f∇fᵀ + (f − y)∇²f.
Eigen::MatrixXd loss_hessian(const Network& net, const Params& params, const Example& z);

/// max_i max{ℓ(0; z_i), ℓ(W₀; z_i)}.
double certify_c0(const Network& net, const Params& w0, const Dataset& data);

/// Draws n fresh examples for a given seed.
using Sampler = std::function<Dataset(Eigen::Index n, std::uint64_t seed)>;

struct McEstimate {
    double estimate;
    double std_error;
};
McEstimate population_risk_mc(const Network& net, const Params& params, const Sampler& sampler,
                              Eigen::Index n_mc, std::uint64_t seed);
/// Same estimate on an already drawn held-out pool.
McEstimate holdout_risk(const Network& net, const Params& params, const Dataset& pool);

}  // namespace nnstab
