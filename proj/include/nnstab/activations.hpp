#pragma once

#include <string>
#include <string_view>

namespace nnstab {

enum class ActivationKind { sigmoid, tanh };

/// Uniform bounds on |σ|, |σ'| and |σ''| over the whole real line.
struct ActivationSpec {
    ActivationKind kind = ActivationKind::sigmoid;
    double b_sigma = 0.0;
    double b_sigma1 = 0.0;
    double b_sigma2 = 0.0;
};

struct ActivationValue {
    double value;
    double d1;
    double d2;
};

/// Analytic suprema: sigmoid (1, 1/4, 1/(6√3)), tanh (1, 1, 4/(3√3)).
ActivationSpec certified_bounds(ActivationKind kind);

/// Throws std::invalid_argument for a non-finite argument.
ActivationValue activation_eval(const ActivationSpec& spec, double a);

// Unchecked hot-path variant used by the network code.
ActivationValue activation_eval_unchecked(ActivationKind kind, double a) noexcept;

/// "sigmoid" or "tanh". Anything else (including "relu", which is not twice
/// differentiable) is a configuration error.
ActivationKind parse_activation(std::string_view name);
std::string to_string(ActivationKind kind);

}  // namespace nnstab
