#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nnstab/activations.hpp"

namespace nnstab {

enum class Architecture { two_layer, three_layer };

Architecture parse_architecture(std::string_view name);
std::string to_string(Architecture arch);

/// Width m, scaling c, input dimension d.
/// Two-layer networks admit c ∈ [1/2, 1]; three-layer networks c ∈ (1/2, 1].
struct NetworkConfig {
    Architecture arch = Architecture::two_layer;
    int m = 16;
    double c = 0.5;
    int d = 5;

    void validate() const;
    /// md (two-layer) or md + m² (three-layer).
    Eigen::Index param_dim() const;
};

/// Fixed ±1 output weights.
class OutputSigns {
public:
    /// Alternating +1, -1, +1, ... (exactly balanced for even m).
    static OutputSigns balanced(int m);
    static OutputSigns random(int m, std::uint64_t seed);
    static OutputSigns from_values(std::vector<double> values);

    const Eigen::VectorXd& values() const { return a_; }
    int size() const { return static_cast<int>(a_.size()); }

private:
    explicit OutputSigns(Eigen::VectorXd a) : a_(std::move(a)) {}
    Eigen::VectorXd a_;
};

// Flattened parameters. Layout: first-layer weights row-major by neuron
// (index s*d + j), then for three-layer networks W2 row-major (md + i*m + k).
using Params = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TwoLayerParams {
    RowMatrix w;  // m × d

    Params flatten() const;
    static TwoLayerParams unflatten(const NetworkConfig& config, const Params& flat);
};

struct ThreeLayerParams {
    RowMatrix w1;  // m × d
    RowMatrix w2;  // m × m

    Params flatten() const;
    static ThreeLayerParams unflatten(const NetworkConfig& config, const Params& flat);
};

/// Frobenius norm of the second-layer block (zero for two-layer networks).
double second_layer_norm(const NetworkConfig& config, const Params& params);

struct InitConfig {
    double stddev = 0.1;  // 0 gives W₀ = 0
};

/// I.i.d. Gaussian initialisation, deterministic per seed.
Params init_params(const NetworkConfig& config, const InitConfig& init, std::uint64_t seed);

/// Scaled network f_W(x) with fixed output signs.
///
///   two-layer:   f_W(x) = m^{-c} Σ_k a_k σ(w_k·x)
///   three-layer: f_W(x) = m^{-c} Σ_i a_i σ(m^{-c} Σ_s W2_is σ(W1_s·x))
class Network {
public:
    Network(NetworkConfig config, ActivationSpec activation, OutputSigns signs);

    const NetworkConfig& config() const { return config_; }
    const ActivationSpec& activation() const { return activation_; }
    const OutputSigns& signs() const { return signs_; }
    Eigen::Index param_dim() const { return config_.param_dim(); }

    double forward(const Params& params, const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd grad_f(const Params& params, const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Dense Hessian of f_W(x); throws if param_dim() exceeds hessian_cap().
    Eigen::MatrixXd hessian_f(const Params& params, const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Outputs for every row of inputs (n × d).
    Eigen::VectorXd forward_batch(const Params& params, const Eigen::Ref<const RowMatrix>& inputs) const;

    /// Σ_i weights_i ∇f_W(x_i), computed with batched matrix products.
    Eigen::VectorXd weighted_grad_sum(const Params& params, const Eigen::Ref<const RowMatrix>& inputs,
                                      const Eigen::Ref<const Eigen::VectorXd>& weights) const;

    Eigen::Index hessian_cap() const { return hessian_cap_; }
    void set_hessian_cap(Eigen::Index cap) { hessian_cap_ = cap; }

private:
    void check_dims(const Params& params, Eigen::Index input_dim) const;

    NetworkConfig config_;
    ActivationSpec activation_;
    OutputSigns signs_;
    double scale_;  // m^{-c}
    Eigen::Index hessian_cap_ = 2000;
};

}  // namespace nnstab
