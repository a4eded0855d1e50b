#include <doctest.h>

#include <cmath>
#include <random>

#include "nnstab/datagen.hpp"
#include "nnstab/loss.hpp"
#include "nnstab/verify.hpp"

using namespace nnstab;
using Eigen::VectorXd;

namespace {

Network net2(int m = 6, int d = 3) {
    return Network(NetworkConfig{Architecture::two_layer, m, 0.5, d}, certified_bounds(ActivationKind::sigmoid),
                   OutputSigns::balanced(m));
}

Dataset small_data(int n, int d, std::uint64_t seed) {
    GenConfig g;
    g.d = d;
    g.noise_std = 0.3;
    g.seed = seed;
    return sample_dataset(g, nullptr, n);
}

}  // namespace

TEST_CASE("pointwise loss") {
    const auto net = net2();
    const Params w = init_params(net.config(), InitConfig{0.5}, 3);
    const Dataset data = small_data(5, 3, 1);
    const Example z = data.example(2);
    const double r = net.forward(w, z.x) - z.y;
    CHECK(pointwise_loss(net, w, z) == 0.5 * r * r);
    CHECK(pointwise_loss(net, Params::Zero(18), Example{VectorXd::Zero(3), 1.0}) == 0.5);
    CHECK(pointwise_loss(net, w, Example{z.x, net.forward(w, z.x)}) == 0.0);
}

TEST_CASE("empirical risk") {
    const auto net = net2();
    Dataset two;
    two.x = RowMatrix::Zero(2, 3);
    two.y = VectorXd(2);
    two.y << 1.0, -1.0;
    CHECK(empirical_risk(net, Params::Zero(18), two) == 0.5);

    const Params w = init_params(net.config(), InitConfig{0.5}, 4);
    const Dataset data = small_data(7, 3, 2);
    double sum = 0;
    for (int i = 0; i < 7; ++i) sum += pointwise_loss(net, w, data.example(i));
    CHECK(empirical_risk(net, w, data) == doctest::Approx(sum / 7).epsilon(1e-15));
    CHECK(risk_and_grad(net, w, data).risk == doctest::Approx(sum / 7).epsilon(1e-15));
}

TEST_CASE("loss gradients") {
    const auto net = net2();
    const Params w = init_params(net.config(), InitConfig{0.5}, 5);
    const Dataset data = small_data(4, 3, 3);
    const Example z = data.example(0);
    CHECK(loss_grad(net, w, Example{z.x, net.forward(w, z.x)}).norm() == 0.0);

    const VectorXd fd = fd_gradient([&](const VectorXd& p) { return pointwise_loss(net, p, z); }, w);
    const VectorXd g = loss_grad(net, w, z);
    CHECK((g - fd).norm() / g.norm() < 1e-6);

    Dataset dup;
    dup.x = RowMatrix(3, 3);
    dup.y = VectorXd::Constant(3, z.y);
    for (int i = 0; i < 3; ++i) dup.x.row(i) = z.x.transpose();
    CHECK((risk_grad(net, w, dup) - g).norm() < 1e-15 * (1 + g.norm()));

    VectorXd mean = VectorXd::Zero(w.size());
    for (int i = 0; i < 4; ++i) mean += loss_grad(net, w, data.example(i)) / 4.0;
    CHECK((risk_grad(net, w, data) - mean).norm() < 1e-14);
}

TEST_CASE("loss Hessian") {
    const auto net = net2(4, 3);
    const Params w = init_params(net.config(), InitConfig{0.5}, 6);
    const Dataset data = small_data(2, 3, 4);
    const Example z = data.example(1);
    const auto psd = extreme_eigs(loss_hessian(net, w, Example{z.x, net.forward(w, z.x)}));
    CHECK(psd.lambda_min >= -1e-15);
    const Eigen::MatrixXd h0 = loss_hessian(net, Params::Zero(12), z);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(h0);
    lu.setThreshold(1e-12);
    CHECK(lu.rank() <= 1);
}

TEST_CASE("c0 certification and envelopes") {
    const auto net = net2();
    Dataset data = small_data(10, 3, 5);
    CHECK_NOTHROW(data.check_envelope());
    const Params w = init_params(net.config(), InitConfig{0.3}, 1);
    const double c0 = certify_c0(net, w, data);
    for (int i = 0; i < 10; ++i) {
        CHECK(pointwise_loss(net, w, data.example(i)) <= c0);
        CHECK(pointwise_loss(net, Params::Zero(18), data.example(i)) <= c0);
    }
    data.y[0] = 2.0;
    CHECK_THROWS(data.check_envelope());
}

TEST_CASE("Monte Carlo population risk") {
    const auto net = net2();
    GenConfig g;
    g.d = 3;
    SUBCASE("constant predictor against unit labels") {
        Sampler ones = [](Eigen::Index n, std::uint64_t) {
            Dataset d;
            d.x = RowMatrix::Zero(n, 3);
            d.y = VectorXd::Ones(n);
            return d;
        };
        const auto est = population_risk_mc(net, Params::Zero(18), ones, 137, 1);
        CHECK(est.estimate == 0.5);
        CHECK(est.std_error == 0.0);
    }
    SUBCASE("noiseless teacher") {
        const auto teacher = make_teacher(net.config(), net.activation(), net.signs(), 1.0, 7);
        const auto est = population_risk_mc(net, teacher.params, make_sampler(g, &teacher), 1000, 3);
        CHECK(est.estimate == doctest::Approx(0.0));
        CHECK(est.std_error == doctest::Approx(0.0));
    }
    SUBCASE("standard error shrinks like 1/sqrt(n)") {
        g.noise_std = 0.5;
        const Sampler s = make_sampler(g, nullptr);
        double se1 = 0, se2 = 0;
        for (std::uint64_t k = 0; k < 20; ++k) {
            se1 += population_risk_mc(net, Params::Zero(18), s, 2000, k).std_error;
            se2 += population_risk_mc(net, Params::Zero(18), s, 4000, 100 + k).std_error;
        }
        CHECK(se2 / se1 == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.05));
    }
    CHECK_THROWS(population_risk_mc(net, Params::Zero(18), make_sampler(g, nullptr), 50, 1));
    const auto a = population_risk_mc(net, Params::Zero(18), make_sampler(g, nullptr), 500, 9);
    const auto b = population_risk_mc(net, Params::Zero(18), make_sampler(g, nullptr), 500, 9);
    CHECK(a.estimate == b.estimate);
}
