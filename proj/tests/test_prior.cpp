#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ghbs/prior.hpp"

using namespace ghbs;

TEST_SUITE("prior") {

TEST_CASE("default intervals match the calibrated prior ranges") {
    const PriorBox box;
    CHECK(box.intervals[0].first == 1.8e6);   // c
    CHECK(box.intervals[0].second == 2.4e6);
    CHECK(box.intervals[1].first == 0.5);     // alpha_res_l
    CHECK(box.intervals[1].second == 0.6);
    CHECK(box.intervals[2].first == 0.2);     // delta_alpha_res
    CHECK(box.intervals[2].second == 0.3);
    CHECK(box.intervals[3].first == 1.6e-3);  // lambda_dot_star
    CHECK(box.intervals[3].second == 1.9e-3);
    CHECK(box.intervals[4].first == 0.75);    // m_alpha
    CHECK(box.intervals[4].second == 1.05);
    CHECK(box.intervals[5].first == 0.3);     // beta_star
    CHECK(box.intervals[5].second == 0.45);
    CHECK(box.intervals[6].first == 0.01);    // lambda_star
    CHECK(box.intervals[6].second == 0.011);
    CHECK(box.intervals[7].first == 0.67);    // m_beta
    CHECK(box.intervals[7].second == 0.74);
}

TEST_CASE("corner and midpoint mappings") {
    const PriorBox box;
    SUBCASE("all -1 maps to the minima") {
        const PlasticParams pp = box.to_physical(Eigen::VectorXd::Constant(kParamDim, -1.0));
        CHECK(pp.c == doctest::Approx(1.8e6));
        CHECK(pp.lambda_star == doctest::Approx(0.01));
    }
    SUBCASE("all +1 maps to the maxima") {
        const PlasticParams pp = box.to_physical(Eigen::VectorXd::Constant(kParamDim, 1.0));
        CHECK(pp.c == doctest::Approx(2.4e6));
        CHECK(pp.lambda_star == doctest::Approx(0.011));
    }
    SUBCASE("zero maps to the midpoints") {
        const PlasticParams pp = box.to_physical(Eigen::VectorXd::Zero(kParamDim));
        CHECK(pp.c == doctest::Approx(2.1e6));
        CHECK(pp.beta_star == doctest::Approx(0.375));
        CHECK(pp.m_beta == doctest::Approx(0.705));
    }
}

TEST_CASE("to_physical and to_normalized are mutual inverses") {
    const PriorBox box;
    Rng rng(6);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd x(kParamDim);
        for (int i = 0; i < kParamDim; ++i) x[i] = rng.uniform(-0.999, 0.999);
        const Eigen::VectorXd back = box.to_normalized(box.to_physical(x));
        CHECK((back - x).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("points outside the cube are rejected strictly") {
    const PriorBox box;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(kParamDim);
    x[3] = 1.0 + 1e-6;
    CHECK_THROWS_AS(box.to_physical(x), OutOfBox);
    PlasticParams pp;
    pp.c = 1.8e6 - 1.0;
    CHECK_THROWS_AS(box.to_normalized(pp), OutOfBox);
}

TEST_CASE("array round trip preserves the inference ordering") {
    PlasticParams pp;
    pp.c = 2e6;
    pp.m_beta = 0.7;
    const auto a = to_array(pp);
    CHECK(a[0] == pp.c);
    CHECK(a[7] == pp.m_beta);
    const PlasticParams back = from_array(a);
    CHECK(back.c == pp.c);
    CHECK(back.lambda_star == pp.lambda_star);
}

TEST_CASE("prior sampling: reproducible, in-box, centered") {
    const PriorBox box;
    Rng rng_a(42), rng_b(42);
    const int n = 10000;
    const Eigen::MatrixXd pts = box.sample_prior(rng_a, n);
    const Eigen::MatrixXd pts2 = box.sample_prior(rng_b, n);
    REQUIRE(pts.rows() == n);
    REQUIRE(pts.cols() == kParamDim);
    CHECK((pts - pts2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(pts.minCoeff() >= -1.0);
    CHECK(pts.maxCoeff() <= 1.0);
    for (int d = 0; d < kParamDim; ++d) {
        // CLT bound: the mean of n uniforms on [-1,1] has sd = 1/sqrt(3n).
        CHECK(std::abs(pts.col(d).mean()) < 3.0 / std::sqrt(3.0 * n));
    }
}

TEST_CASE("kde on an axis-aligned marginal approximates Uniform(-1,1)") {
    const PriorBox box;
    Rng rng(9);
    const Eigen::MatrixXd pts = box.sample_prior(rng, 5000);
    const Eigen::MatrixXd y = pts.col(0);  // W1 = e1
    const KdeEstimate kde = KdeEstimate::fit(y);
    CHECK(kde.dim() == 1);
    CHECK(kde.eval(Eigen::VectorXd::Constant(1, 0.0)) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(kde.eval(Eigen::VectorXd::Constant(1, 0.5)) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("kde of a projected prior integrates to one") {
    const PriorBox box;
    Rng rng(10);
    const Eigen::MatrixXd pts = box.sample_prior(rng, 5000);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(kParamDim, 1.0 / std::sqrt(8.0));
    const Eigen::MatrixXd y = pts * w;  // bell-shaped sum of uniforms
    const KdeEstimate kde = KdeEstimate::fit(y);
    // Trapezoid quadrature over the full support.
    const double lim = std::sqrt(8.0) + 1.0;
    const int n = 2000;
    double integral = 0.0;
    double prev = kde.eval(Eigen::VectorXd::Constant(1, -lim));
    for (int i = 1; i <= n; ++i) {
        const double t = -lim + 2.0 * lim * i / n;
        const double cur = kde.eval(Eigen::VectorXd::Constant(1, t));
        integral += 0.5 * (prev + cur) * (2.0 * lim / n);
        prev = cur;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("kde is nonnegative and vanishes far from the data") {
    Rng rng(11);
    Eigen::MatrixXd y(500, 2);
    for (int i = 0; i < 500; ++i) {
        y(i, 0) = rng.uniform(-1.0, 1.0);
        y(i, 1) = rng.uniform(-1.0, 1.0);
    }
    const KdeEstimate kde = KdeEstimate::fit(y);
    Eigen::VectorXd far(2);
    far << 100.0, 0.0;
    CHECK(kde.eval(far) < 1e-10);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd pt(2);
        pt << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
        CHECK(kde.eval(pt) >= 0.0);
    }
}

TEST_CASE("kde bandwidth follows Scott's rule") {
    Rng rng(12);
    Eigen::MatrixXd y(4000, 1);
    for (int i = 0; i < 4000; ++i) y(i, 0) = rng.normal();
    const KdeEstimate kde = KdeEstimate::fit(y);
    double mean = y.col(0).mean();
    const double sd = std::sqrt((y.col(0).array() - mean).square().sum() / (y.rows() - 1));
    const double scott = sd * std::pow(double(y.rows()), -1.0 / 5.0);
    CHECK(kde.bandwidth()[0] == doctest::Approx(scott).epsilon(1e-10));
    // Scaling knob multiplies the bandwidth directly.
    const KdeEstimate wide = KdeEstimate::fit(y, 2.0);
    CHECK(wide.bandwidth()[0] == doctest::Approx(2.0 * scott).epsilon(1e-10));
}

TEST_CASE("kde dimension mismatch is rejected") {
    Rng rng(13);
    Eigen::MatrixXd y(200, 2);
    for (int i = 0; i < 200; ++i) {
        y(i, 0) = rng.uniform(-1.0, 1.0);
        y(i, 1) = rng.uniform(-1.0, 1.0);
    }
    const KdeEstimate kde = KdeEstimate::fit(y);
    CHECK_THROWS_AS(kde.eval(Eigen::VectorXd::Zero(3)), DimensionMismatch);
}

}  // TEST_SUITE
