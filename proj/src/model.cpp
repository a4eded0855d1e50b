#include "nnstab/model.hpp"

#include <cmath>
#include <stdexcept>

#include "nnstab/rng.hpp"

namespace nnstab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Architecture parse_architecture(std::string_view name) {
    if (name == "two_layer" || name == "two-layer" || name == "2") return Architecture::two_layer;
    if (name == "three_layer" || name == "three-layer" || name == "3") return Architecture::three_layer;
    throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

std::string to_string(Architecture arch) {
    return arch == Architecture::two_layer ? "two_layer" : "three_layer";
}

void NetworkConfig::validate() const {
    if (m < 1) throw std::invalid_argument("width m must be positive");
    if (d < 1) throw std::invalid_argument("input dimension d must be positive");
    if (!std::isfinite(c) || c > 1.0) throw std::invalid_argument("scaling c must lie in [1/2, 1]");
    if (arch == Architecture::two_layer && c < 0.5) {
        throw std::invalid_argument("two-layer scaling c must lie in [1/2, 1]");
    }
    if (arch == Architecture::three_layer && c <= 0.5) {
        throw std::invalid_argument("three-layer scaling c must lie in (1/2, 1]; c = 1/2 is excluded");
    }
}

Index NetworkConfig::param_dim() const {
    const Index md = Index(m) * d;
    return arch == Architecture::two_layer ? md : md + Index(m) * m;
}

OutputSigns OutputSigns::balanced(int m) {
    if (m < 1) throw std::invalid_argument("OutputSigns: m must be positive");
    VectorXd a(m);
    for (int k = 0; k < m; ++k) a[k] = (k % 2 == 0) ? 1.0 : -1.0;
    return OutputSigns(std::move(a));
}

OutputSigns OutputSigns::random(int m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("OutputSigns: m must be positive");
    Rng rng(substream_seed(seed, kStreamSigns));
    VectorXd a(m);
    for (int k = 0; k < m; ++k) a[k] = (rng() >> 63) ? 1.0 : -1.0;
    return OutputSigns(std::move(a));
}

OutputSigns OutputSigns::from_values(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("OutputSigns: empty");
    VectorXd a(static_cast<Index>(values.size()));
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k] != 1.0 && values[k] != -1.0) {
            throw std::invalid_argument("OutputSigns: entries must be exactly +1 or -1");
        }
        a[static_cast<Index>(k)] = values[k];
    }
    return OutputSigns(std::move(a));
}

Params TwoLayerParams::flatten() const {
    Params p(w.size());
    Eigen::Map<RowMatrix>(p.data(), w.rows(), w.cols()) = w;
    return p;
}

TwoLayerParams TwoLayerParams::unflatten(const NetworkConfig& config, const Params& flat) {
    if (config.arch != Architecture::two_layer || flat.size() != config.param_dim()) {
        throw std::invalid_argument("TwoLayerParams: dimension mismatch");
    }
    return {Eigen::Map<const RowMatrix>(flat.data(), config.m, config.d)};
}

Params ThreeLayerParams::flatten() const {
    Params p(w1.size() + w2.size());
    Eigen::Map<RowMatrix>(p.data(), w1.rows(), w1.cols()) = w1;
    Eigen::Map<RowMatrix>(p.data() + w1.size(), w2.rows(), w2.cols()) = w2;
    return p;
}

ThreeLayerParams ThreeLayerParams::unflatten(const NetworkConfig& config, const Params& flat) {
    if (config.arch != Architecture::three_layer || flat.size() != config.param_dim()) {
        throw std::invalid_argument("ThreeLayerParams: dimension mismatch");
    }
    const Index md = Index(config.m) * config.d;
    return {Eigen::Map<const RowMatrix>(flat.data(), config.m, config.d),
            Eigen::Map<const RowMatrix>(flat.data() + md, config.m, config.m)};
}

double second_layer_norm(const NetworkConfig& config, const Params& params) {
    if (config.arch == Architecture::two_layer) return 0.0;
    const Index md = Index(config.m) * config.d;
    return params.segment(md, Index(config.m) * config.m).norm();
}

Params init_params(const NetworkConfig& config, const InitConfig& init, std::uint64_t seed) {
    config.validate();
    if (!(init.stddev >= 0.0)) throw std::invalid_argument("init stddev must be nonnegative");
    Params p = Params::Zero(config.param_dim());
    if (init.stddev == 0.0) return p;
    Rng rng(substream_seed(seed, kStreamInit));
    std::normal_distribution<double> normal(0.0, init.stddev);
    for (Index i = 0; i < p.size(); ++i) p[i] = normal(rng);
    return p;
}

namespace {

struct Activated {
    MatrixXd value, d1, d2;
};

// Takes an evaluated matrix: coefficient access on a product expression would
// recompute the product for every entry.
Activated activate(ActivationKind kind, const MatrixXd& pre) {
    Activated out{MatrixXd(pre.rows(), pre.cols()), MatrixXd(pre.rows(), pre.cols()),
                  MatrixXd(pre.rows(), pre.cols())};
    for (Index j = 0; j < pre.cols(); ++j) {
        for (Index i = 0; i < pre.rows(); ++i) {
            const auto v = activation_eval_unchecked(kind, pre(i, j));
            out.value(i, j) = v.value;
            out.d1(i, j) = v.d1;
            out.d2(i, j) = v.d2;
        }
    }
    return out;
}

}  // namespace

Network::Network(NetworkConfig config, ActivationSpec activation, OutputSigns signs)
    : config_(config), activation_(activation), signs_(std::move(signs)) {
    config_.validate();
    if (signs_.size() != config_.m) throw std::invalid_argument("output signs length must equal m");
    scale_ = std::pow(static_cast<double>(config_.m), -config_.c);
}

void Network::check_dims(const Params& params, Index input_dim) const {
    if (params.size() != param_dim()) {
        throw std::invalid_argument("parameter vector has dimension " + std::to_string(params.size()) +
                                    ", expected " + std::to_string(param_dim()));
    }
    if (input_dim != config_.d) {
        throw std::invalid_argument("input has dimension " + std::to_string(input_dim) + ", expected " +
                                    std::to_string(config_.d));
    }
}

double Network::forward(const Params& params, const Eigen::Ref<const VectorXd>& x) const {
    check_dims(params, x.size());
    const int m = config_.m;
    const auto& a = signs_.values();
    Eigen::Map<const RowMatrix> w1(params.data(), m, config_.d);
    const auto h = activate(activation_.kind, w1 * x);
    if (config_.arch == Architecture::two_layer) {
        return scale_ * a.dot(h.value.col(0));
    }
    Eigen::Map<const RowMatrix> w2(params.data() + w1.size(), m, m);
    const auto g = activate(activation_.kind, scale_ * (w2 * h.value.col(0)));
    return scale_ * a.dot(g.value.col(0));
}

VectorXd Network::grad_f(const Params& params, const Eigen::Ref<const VectorXd>& x) const {
    check_dims(params, x.size());
    const int m = config_.m;
    const int d = config_.d;
    const auto& a = signs_.values();
    Eigen::Map<const RowMatrix> w1(params.data(), m, d);
    const auto h = activate(activation_.kind, w1 * x);
    VectorXd grad(param_dim());
    Eigen::Map<RowMatrix> g1(grad.data(), m, d);

    if (config_.arch == Architecture::two_layer) {
        // ∂f/∂w_k = (a_k/m^c) σ'(w_k·x) x
        g1.noalias() = (scale_ * a.cwiseProduct(h.d1.col(0))) * x.transpose();
        return grad;
    }

    Eigen::Map<const RowMatrix> w2(params.data() + w1.size(), m, m);
    const auto g = activate(activation_.kind, scale_ * (w2 * h.value.col(0)));
    // beta_i = m^{-2c} a_i σ'(z_i)
    const VectorXd beta = scale_ * scale_ * a.cwiseProduct(g.d1.col(0));
    Eigen::Map<RowMatrix> g2(grad.data() + w1.size(), m, m);
    g2.noalias() = beta * h.value.col(0).transpose();
    const VectorXd back = (w2.transpose() * beta).cwiseProduct(h.d1.col(0));
    g1.noalias() = back * x.transpose();
    return grad;
}

MatrixXd Network::hessian_f(const Params& params, const Eigen::Ref<const VectorXd>& x) const {
    check_dims(params, x.size());
    const Index p = param_dim();
    if (p > hessian_cap_) {
        throw std::length_error("Hessian dimension " + std::to_string(p) + " exceeds cap " +
                                std::to_string(hessian_cap_));
    }
    const int m = config_.m;
    const int d = config_.d;
    const auto& a = signs_.values();
    Eigen::Map<const RowMatrix> w1(params.data(), m, d);
    const auto h = activate(activation_.kind, w1 * x);
    const MatrixXd xxT = x * x.transpose();
    MatrixXd hess = MatrixXd::Zero(p, p);

    if (config_.arch == Architecture::two_layer) {
        for (int k = 0; k < m; ++k) {
            hess.block(Index(k) * d, Index(k) * d, d, d) = (scale_ * a[k] * h.d2(k, 0)) * xxT;
        }
        return hess;
    }

    Eigen::Map<const RowMatrix> w2(params.data() + w1.size(), m, m);
    const VectorXd hv = h.value.col(0);
    const auto g = activate(activation_.kind, scale_ * (w2 * hv));
    const VectorXd alpha = scale_ * a;
    const VectorXd curv = alpha.cwiseProduct(g.d2.col(0));   // α_i σ''(z_i)
    const VectorXd slope = alpha.cwiseProduct(g.d1.col(0));  // α_i σ'(z_i)
    // J_ik = ∂z_i/∂u_k = m^{-c} W2_ik σ'(u_k)
    const MatrixXd jac = scale_ * (MatrixXd(w2) * h.d1.col(0).asDiagonal());
    const VectorXd v = scale_ * (w2.transpose() * slope);

    // W1–W1 block: kron(M, x xᵀ)
    MatrixXd mix = jac.transpose() * curv.asDiagonal() * jac;
    mix.diagonal() += v.cwiseProduct(h.d2.col(0));
    for (int k = 0; k < m; ++k) {
        for (int l = 0; l < m; ++l) {
            hess.block(Index(k) * d, Index(l) * d, d, d) = mix(k, l) * xxT;
        }
    }

    // W2–W2 block: δ_ij α_i σ''(z_i) m^{-2c} h_k h_l
    const Index off = Index(m) * d;
    const MatrixXd hhT = (scale_ * scale_) * (hv * hv.transpose());
    for (int i = 0; i < m; ++i) {
        hess.block(off + Index(i) * m, off + Index(i) * m, m, m) = curv[i] * hhT;
    }

    // W2–W1 cross block
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < m; ++k) {
            const Index row = off + Index(i) * m + k;
            for (int l = 0; l < m; ++l) {
                double coef = curv[i] * scale_ * hv[k] * jac(i, l);
                if (k == l) coef += slope[i] * scale_ * h.d1(k, 0);
                if (coef == 0.0) continue;
                hess.block(row, Index(l) * d, 1, d) = coef * x.transpose();
                hess.block(Index(l) * d, row, d, 1) = coef * x;
            }
        }
    }
    return hess;
}

VectorXd Network::forward_batch(const Params& params, const Eigen::Ref<const RowMatrix>& inputs) const {
    check_dims(params, inputs.cols());
    const int m = config_.m;
    const auto& a = signs_.values();
    Eigen::Map<const RowMatrix> w1(params.data(), m, config_.d);
    const auto h = activate(activation_.kind, inputs * w1.transpose());  // n × m
    if (config_.arch == Architecture::two_layer) {
        return scale_ * (h.value * a);
    }
    Eigen::Map<const RowMatrix> w2(params.data() + w1.size(), m, m);
    const auto g = activate(activation_.kind, scale_ * (h.value * w2.transpose()));
    return scale_ * (g.value * a);
}

VectorXd Network::weighted_grad_sum(const Params& params, const Eigen::Ref<const RowMatrix>& inputs,
                                    const Eigen::Ref<const VectorXd>& weights) const {
    check_dims(params, inputs.cols());
    if (weights.size() != inputs.rows()) throw std::invalid_argument("weights length must equal batch size");
    const int m = config_.m;
    const int d = config_.d;
    const auto& a = signs_.values();
    Eigen::Map<const RowMatrix> w1(params.data(), m, d);
    const auto h = activate(activation_.kind, inputs * w1.transpose());
    VectorXd grad(param_dim());
    Eigen::Map<RowMatrix> g1(grad.data(), m, d);

    if (config_.arch == Architecture::two_layer) {
        const MatrixXd coef = scale_ * (weights.asDiagonal() * h.d1 * a.asDiagonal());  // n × m
        g1.noalias() = coef.transpose() * inputs;
        return grad;
    }

    Eigen::Map<const RowMatrix> w2(params.data() + w1.size(), m, m);
    const auto g = activate(activation_.kind, scale_ * (h.value * w2.transpose()));
    const MatrixXd beta = (scale_ * scale_) * (weights.asDiagonal() * g.d1 * a.asDiagonal());  // n × m
    Eigen::Map<RowMatrix> g2(grad.data() + w1.size(), m, m);
    g2.noalias() = beta.transpose() * h.value;
    const MatrixXd back = (beta * w2).cwiseProduct(h.d1);
    g1.noalias() = back.transpose() * inputs;
    return grad;
}

}  // namespace nnstab
