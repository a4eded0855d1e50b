#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nnstab/verify.hpp"

using namespace nnstab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("finite-difference gradient") {
    const VectorXd x = VectorXd::LinSpaced(6, -2, 3);
    const VectorXd g = fd_gradient([](const VectorXd& v) { return 0.5 * v.squaredNorm(); }, x);
    CHECK((g - x).norm() < 1e-9);

    auto f = [](const VectorXd& v) { return std::sin(v[0]) * std::exp(v[1]); };
    VectorXd p(2);
    p << 0.7, -0.3;
    VectorXd exact(2);
    exact << std::cos(0.7) * std::exp(-0.3), std::sin(0.7) * std::exp(-0.3);
    const double e1 = (fd_gradient(f, p, 1e-2) - exact).norm();
    const double e2 = (fd_gradient(f, p, 5e-3) - exact).norm();
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
    CHECK_THROWS(fd_gradient([](const VectorXd&) { return std::nan(""); }, p));
}

TEST_CASE("extreme eigenvalues") {
    const auto id = extreme_eigs(MatrixXd::Identity(4, 4));
    CHECK(id.lambda_min == doctest::Approx(1.0));
    CHECK(id.lambda_max == doctest::Approx(1.0));
    VectorXd dg(3);
    dg << -2, 0, 5;
    const auto d = extreme_eigs(dg.asDiagonal().toDenseMatrix());
    CHECK(d.lambda_min == doctest::Approx(-2.0));
    CHECK(d.lambda_max == doctest::Approx(5.0));
    const VectorXd v = VectorXd::LinSpaced(5, 1, 2);
    const auto r1 = extreme_eigs(v * v.transpose());
    CHECK(r1.lambda_min == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r1.lambda_max == doctest::Approx(v.squaredNorm()));
    MatrixXd asym = MatrixXd::Identity(2, 2);
    asym(0, 1) = 1;
    CHECK_THROWS(extreme_eigs(asym));
    CHECK(power_iteration(dg.asDiagonal().toDenseMatrix()) == doctest::Approx(5.0).epsilon(1e-8));
}

TEST_CASE("empty suite") { CHECK(run_suite(SuiteConfig{}).empty()); }

TEST_CASE("a small case passes every check") {
    SuiteCase sc;
    sc.problem.net = {Architecture::two_layer, 12, 0.75, 3};
    sc.problem.n = 15;
    sc.problem.t_max = 60;
    sc.problem.snapshot_stride = 10;
    sc.problem.noise_std = 0.1;
    sc.eig_samples = 5;
    sc.stability = true;
    const auto results = run_case(sc);
    CHECK(results.size() >= 8);
    for (const auto& r : results) {
        INFO(r.check_id << " " << r.worst_violation << " " << r.location);
        CHECK(r.passed);
    }
    std::ostringstream os;
    print_table(os, results);
    CHECK(os.str().find("two_layer.gradient_fd") != std::string::npos);
}

TEST_CASE("three-layer case passes every check") {
    SuiteCase sc;
    sc.problem.net = {Architecture::three_layer, 5, 0.75, 2};
    sc.problem.n = 10;
    sc.problem.t_max = 40;
    sc.problem.snapshot_stride = 10;
    sc.problem.init_std = 0.05;
    sc.eig_samples = 5;
    for (const auto& r : run_case(sc)) {
        INFO(r.check_id << " " << r.worst_violation << " " << r.location);
        CHECK(r.passed);
    }
}

TEST_CASE("oversized step is reported, not fatal") {
    SuiteCase sc;
    sc.problem.net = {Architecture::two_layer, 4, 0.5, 2};
    sc.problem.n = 20;
    sc.problem.t_max = 30;
    sc.problem.noise_std = 0.3;
    sc.problem.teacher_std = 3.0;
    sc.problem.init_std = 2.0;
    sc.problem.strict = false;
    sc.problem.eta = 400.0;
    sc.eig_samples = 0;
    sc.fd_samples = 0;
    std::vector<CheckResult> results;
    REQUIRE_NOTHROW(results = run_case(sc));
    bool descent_failed = false;
    for (const auto& r : results) {
        if (r.check_id == "two_layer.monotone_descent") descent_failed = !r.passed;
    }
    CHECK(descent_failed);
}
