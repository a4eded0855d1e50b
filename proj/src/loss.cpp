#include "nnstab/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nnstab {

using Eigen::Index;
using Eigen::VectorXd;

Example Dataset::example(Index i) const {
    if (i < 0 || i >= size()) throw std::out_of_range("example index out of range");
    return {x.row(i).transpose(), y[i]};
}

void Dataset::set_example(Index i, const Example& z) {
    if (i < 0 || i >= size()) throw std::out_of_range("example index out of range");
    if (z.x.size() != dim()) throw std::invalid_argument("example dimension mismatch");
    x.row(i) = z.x.transpose();
    y[i] = z.y;
}

void Dataset::check_envelope() const {
    if (x.rows() != y.size()) throw std::invalid_argument("dataset: x/y row mismatch");
    // One ulp of slack for points generated exactly on the sphere.
    const double tol_x = c_x * (1.0 + 1e-12);
    for (Index i = 0; i < size(); ++i) {
        if (x.row(i).norm() > tol_x) {
            throw std::invalid_argument("example " + std::to_string(i) + " violates ||x|| <= c_x");
        }
        if (std::abs(y[i]) > c_y) {
            throw std::invalid_argument("example " + std::to_string(i) + " violates |y| <= c_y");
        }
    }
}

double pointwise_loss(const Network& net, const Params& params, const Example& z) {
    const double r = net.forward(params, z.x) - z.y;
    return 0.5 * r * r;
}

double empirical_risk(const Network& net, const Params& params, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("empirical risk of an empty dataset");
    const VectorXd r = net.forward_batch(params, data.x) - data.y;
    return 0.5 * r.squaredNorm() / static_cast<double>(data.size());
}

VectorXd loss_grad(const Network& net, const Params& params, const Example& z) {
    const double r = net.forward(params, z.x) - z.y;
    return r * net.grad_f(params, z.x);
}

RiskAndGrad risk_and_grad(const Network& net, const Params& params, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("risk gradient of an empty dataset");
    const double inv_n = 1.0 / static_cast<double>(data.size());
    const VectorXd r = net.forward_batch(params, data.x) - data.y;
    return {0.5 * r.squaredNorm() * inv_n, net.weighted_grad_sum(params, data.x, r * inv_n)};
}

VectorXd risk_grad(const Network& net, const Params& params, const Dataset& data) {
    return risk_and_grad(net, params, data).grad;
}

Eigen::MatrixXd loss_hessian(const Network& net, const Params& params, const Example& z) {
    const double r = net.forward(params, z.x) - z.y;
    const VectorXd g = net.grad_f(params, z.x);
    Eigen::MatrixXd h = g * g.transpose();
    if (r != 0.0) h.noalias() += r * net.hessian_f(params, z.x);
    return h;
}

double certify_c0(const Network& net, const Params& w0, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("certify_c0: empty dataset");
    const VectorXd r0 = net.forward_batch(Params::Zero(net.param_dim()), data.x) - data.y;
    const VectorXd rw = net.forward_batch(w0, data.x) - data.y;
    return 0.5 * std::max(r0.cwiseAbs2().maxCoeff(), rw.cwiseAbs2().maxCoeff());
}

McEstimate holdout_risk(const Network& net, const Params& params, const Dataset& pool) {
    const Index n = pool.size();
    if (n < 2) throw std::invalid_argument("holdout pool too small");
    const VectorXd r = net.forward_batch(params, pool.x) - pool.y;
    const VectorXd losses = 0.5 * r.cwiseAbs2();
    const double mean = losses.mean();
    const double var = (losses.array() - mean).square().sum() / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

McEstimate population_risk_mc(const Network& net, const Params& params, const Sampler& sampler,
                              Index n_mc, std::uint64_t seed) {
    if (n_mc < 100) throw std::invalid_argument("population_risk_mc: n_mc must be at least 100");
    const Dataset pool = sampler(n_mc, seed);
    if (pool.size() != n_mc || pool.dim() != net.config().d) {
        throw std::invalid_argument("population_risk_mc: sampler does not match the network");
    }
    return holdout_risk(net, params, pool);
}

}  // namespace nnstab
