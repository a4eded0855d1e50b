#include <doctest.h>

#include <cmath>
#include <limits>

#include "nnstab/activations.hpp"

using namespace nnstab;

namespace {
double sig(double a) { return 1.0 / (1.0 + std::exp(-a)); }
}

TEST_CASE("values at zero") {
    const auto s = activation_eval(certified_bounds(ActivationKind::sigmoid), 0.0);
    CHECK(s.value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.d1 == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.d2 == doctest::Approx(0.0));
    const auto t = activation_eval(certified_bounds(ActivationKind::tanh), 0.0);
    CHECK(t.value == 0.0);
    CHECK(t.d1 == 1.0);
    CHECK(t.d2 == 0.0);
}

TEST_CASE("sigmoid derivatives vs finite differences") {
    const auto spec = certified_bounds(ActivationKind::sigmoid);
    for (double a : {-3.0, -0.7, 2.0, 5.0}) {
        const double h = 1e-5;
        const auto v = activation_eval(spec, a);
        const double d1 = (sig(a + h) - sig(a - h)) / (2 * h);
        const double d2 = (activation_eval(spec, a + h).d1 - activation_eval(spec, a - h).d1) / (2 * h);
        CHECK(std::abs(v.value - sig(a)) <= 1e-15);
        CHECK(std::abs(v.d1 - d1) / std::abs(d1) < 1e-6);
        CHECK(std::abs(v.d2 - d2) / std::abs(d2) < 1e-6);
    }
}

TEST_CASE("tanh derivatives vs finite differences") {
    const auto spec = certified_bounds(ActivationKind::tanh);
    for (double a : {-1.3, 0.4, 2.0}) {
        const double h = 1e-5;
        const auto v = activation_eval(spec, a);
        CHECK(std::abs(v.d1 - (std::tanh(a + h) - std::tanh(a - h)) / (2 * h)) < 1e-9);
        const double d2 = (activation_eval(spec, a + h).d1 - activation_eval(spec, a - h).d1) / (2 * h);
        CHECK(std::abs(v.d2 - d2) < 1e-9);
    }
}

TEST_CASE("certified bounds match a dense grid search") {
    for (auto kind : {ActivationKind::sigmoid, ActivationKind::tanh}) {
        const auto spec = certified_bounds(kind);
        double m0 = 0, m1 = 0, m2 = 0;
        for (long k = -500000; k <= 500000; ++k) {
            const auto v = activation_eval(spec, k * 1e-4);
            m0 = std::max(m0, std::abs(v.value));
            m1 = std::max(m1, std::abs(v.d1));
            m2 = std::max(m2, std::abs(v.d2));
        }
        CHECK(m0 <= spec.b_sigma);
        CHECK(m1 <= spec.b_sigma1);
        CHECK(m2 <= spec.b_sigma2 * (1 + 1e-12));
        CHECK(m1 == doctest::Approx(spec.b_sigma1).epsilon(1e-8));
        CHECK(m2 == doctest::Approx(spec.b_sigma2).epsilon(1e-6));
    }
    const auto s = certified_bounds(ActivationKind::sigmoid);
    CHECK(s.b_sigma == 1.0);
    CHECK(s.b_sigma1 == 0.25);
    CHECK(s.b_sigma2 == doctest::Approx(0.096225).epsilon(1e-5));
    CHECK(certified_bounds(ActivationKind::tanh).b_sigma1 == 1.0);
    CHECK(certified_bounds(ActivationKind::tanh).b_sigma2 == doctest::Approx(4.0 / (3.0 * std::sqrt(3.0))));
}

TEST_CASE("non-finite input and bad names are rejected") {
    const auto spec = certified_bounds(ActivationKind::sigmoid);
    CHECK_THROWS(activation_eval(spec, std::numeric_limits<double>::quiet_NaN()));
    CHECK_THROWS(activation_eval(spec, std::numeric_limits<double>::infinity()));
    CHECK_THROWS(parse_activation("relu"));
    CHECK_THROWS(parse_activation("softplus"));
    CHECK(parse_activation("tanh") == ActivationKind::tanh);
    CHECK(to_string(parse_activation("sigmoid")) == "sigmoid");
}
