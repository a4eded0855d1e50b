#include "nnstab/activations.hpp"

#include <cmath>
#include <stdexcept>

namespace nnstab {

ActivationSpec certified_bounds(ActivationKind kind) {
    const double sqrt3 = std::sqrt(3.0);
    switch (kind) {
        case ActivationKind::sigmoid:
            // σ'' = s(1-s)(1-2s) peaks at s = (3 ± √3)/6.
            return {kind, 1.0, 0.25, 1.0 / (6.0 * sqrt3)};
        case ActivationKind::tanh:
            // tanh'' = -2 t (1 - t²) peaks at t = 1/√3.
            return {kind, 1.0, 1.0, 4.0 / (3.0 * sqrt3)};
    }
    throw std::invalid_argument("unsupported activation kind");
}

ActivationValue activation_eval_unchecked(ActivationKind kind, double a) noexcept {
    if (kind == ActivationKind::sigmoid) {
        // Evaluate on the side where exp does not overflow.
        double s;
        if (a >= 0.0) {
            s = 1.0 / (1.0 + std::exp(-a));
        } else {
            const double e = std::exp(a);
            s = e / (1.0 + e);
        }
        const double d1 = s * (1.0 - s);
        return {s, d1, d1 * (1.0 - 2.0 * s)};
    }
    const double t = std::tanh(a);
    const double d1 = 1.0 - t * t;
    return {t, d1, -2.0 * t * d1};
}

ActivationValue activation_eval(const ActivationSpec& spec, double a) {
    if (!std::isfinite(a)) {
        throw std::invalid_argument("activation_eval: non-finite argument");
    }
    return activation_eval_unchecked(spec.kind, a);
}

ActivationKind parse_activation(std::string_view name) {
    if (name == "sigmoid") return ActivationKind::sigmoid;
    if (name == "tanh") return ActivationKind::tanh;
    if (name == "relu") {
        throw std::invalid_argument("activation 'relu' is not twice differentiable");
    }
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string to_string(ActivationKind kind) {
    return kind == ActivationKind::sigmoid ? "sigmoid" : "tanh";
}

}  // namespace nnstab
