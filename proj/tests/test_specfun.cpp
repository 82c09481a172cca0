#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "hfe/specfun.hpp"
#include "support/oracles.hpp"

using namespace hfe;
using Catch::Approx;

TEST_CASE("gamma: known values and pole rejection") {
    CHECK(gamma_fn(1.0) == Approx(1.0).epsilon(1e-14));
    CHECK(gamma_fn(4.0) == Approx(6.0).epsilon(1e-14));
    CHECK(gamma_fn(0.5) == Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
    CHECK_THROWS_AS(gamma_fn(0.0), std::domain_error);
    CHECK_THROWS_AS(gamma_fn(-3.0), std::domain_error);
    CHECK_NOTHROW(gamma_fn(-2.5));
    // relative accuracy across the working range
    for (double x : {0.1, 0.9, 2.3, 7.7, 19.5, 50.0}) {
        CHECK(gamma_fn(x) == Approx(std::tgamma(x)).epsilon(1e-13));
    }
}

TEST_CASE("mittag_leffler: classical reductions") {
    CHECK(mittag_leffler(1, 1, 1) == Approx(std::exp(1.0)).epsilon(1e-14));
    CHECK(mittag_leffler(2, 1, -1) == Approx(std::cos(1.0)).epsilon(1e-14));
    // E_{1/2,1}(-x) = e^{x^2} erfc(x): the series is cross-checked against the
    // direct std::erfc route
    CHECK(mittag_leffler(0.5, 1, -1) == Approx(oracles::kE_05_1_m1).epsilon(1e-13));
    CHECK(mittag_leffler(0.5, 1, -1) == Approx(std::exp(1.0) * std::erfc(1.0)).epsilon(1e-13));
    CHECK(mittag_leffler(0.5, 1.5, -1) == Approx(oracles::kE_05_15_m1).epsilon(1e-13));
}

TEST_CASE("mittag_leffler: E_{a,b}(0) = 1/Gamma(b)") {
    for (double a : {0.2, 0.5, 0.8, 1.0, 1.6, 2.0}) {
        for (double b : {0.3, 0.7, 1.0, 1.5, 2.5}) {
            CHECK(mittag_leffler(a, b, 0.0) == Approx(1.0 / gamma_fn(b)).epsilon(1e-14));
        }
    }
}

TEST_CASE("mittag_leffler: matches exp on a=b=1 for |x| <= 5") {
    for (double x = -5.0; x <= 5.0; x += 0.25) {
        CHECK(mittag_leffler(1, 1, x) == Approx(std::exp(x)).margin(1e-10 * std::exp(std::fabs(x))));
    }
}

TEST_CASE("mittag_leffler: asymptotic branch beyond |z| = 15") {
    CHECK(mittag_leffler(0.5, 1, -20) == Approx(oracles::kE_05_1_m20).epsilon(1e-9));
    CHECK(mittag_leffler(0.6, 1, -25) == Approx(oracles::kE_06_1_m25).epsilon(1e-7));
    CHECK(mittag_leffler(0.6, 0.8, -30) == Approx(oracles::kE_06_08_m30).epsilon(1e-6));
    CHECK(mittag_leffler(0.5, 1, 16) == Approx(oracles::kE_05_1_p16).epsilon(1e-9));
    CHECK(mittag_leffler(1.0, 1.0, 20) == Approx(std::exp(20.0)).epsilon(1e-10));
}

TEST_CASE("mittag_leffler: domain and convergence errors") {
    CHECK_THROWS_AS(mittag_leffler(0.0, 1, 1), std::domain_error);
    CHECK_THROWS_AS(mittag_leffler(2.5, 1, 1), std::domain_error);
    CHECK_THROWS_AS(mittag_leffler(0.5, 0.0, 1), std::domain_error);
    CHECK_THROWS_AS(mittag_leffler(0.5, 1, 1, SeriesControl{3, 1e-30}), std::runtime_error);
}

TEST_CASE("mainardi_density: Levy-Smirnov closed form at mu = 1/2") {
    // xi_{1/2}(theta) = e^{-theta^2/4}/sqrt(pi)
    for (double th : {0.2, 0.7, 1.0, 1.9, 3.0}) {
        const double closed = std::exp(-th * th / 4.0) / std::sqrt(std::numbers::pi);
        CHECK(mainardi_density(0.5, th) == Approx(closed).margin(1e-8));
    }
    CHECK(mainardi_density(0.5, 1.0) == Approx(oracles::kXi_05_1).epsilon(1e-12));
    CHECK(mainardi_density(0.5, 3.0) == Approx(oracles::kXi_05_3).epsilon(1e-12));
}

TEST_CASE("mainardi_density: frozen high-precision spot values") {
    CHECK(mainardi_density(0.3, 0.5) == Approx(oracles::kXi_03_05).epsilon(1e-12));
    CHECK(mainardi_density(0.7, 1.2) == Approx(oracles::kXi_07_12).epsilon(1e-12));
    CHECK(mainardi_density(0.6, 0.8) == Approx(oracles::kXi_06_08).epsilon(1e-12));
    CHECK(mainardi_density(0.9, 1.1, SeriesControl{4000, 1e-19}) ==
          Approx(oracles::kXi_09_11).epsilon(1e-11));
}

TEST_CASE("mainardi_density: nonnegative on a theta grid for mu in {0.1..0.9}") {
    const SeriesControl ctl{4000, 1e-19};
    for (int m = 1; m <= 9; ++m) {
        const double mu = 0.1 * m;
        for (double th = 0.02; th < 2.5; th += 0.02) {
            CAPTURE(mu, th);
            CHECK(mainardi_density(mu, th, ctl) >= 0.0);
        }
    }
}

TEST_CASE("mainardi_density: normalization by independent Simpson quadrature") {
    const SeriesControl ctl{4000, 1e-19};
    for (double mu : {0.3, 0.5, 0.7}) {
        const double theta_max = detail::mainardi_theta_max(mu);
        const double mass = oracles::simpson(
            [&](double th) { return th <= 0.0 ? 1.0 / gamma_fn(1.0 - mu) : mainardi_density(mu, th, ctl); },
            0.0, theta_max, 20000);
        CHECK(mass == Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("mainardi_density: first moment of xi_{0.6} equals 1/Gamma(1.6)") {
    const SeriesControl ctl{4000, 1e-19};
    const double theta_max = detail::mainardi_theta_max(0.6);
    const double m1 = oracles::simpson(
        [&](double th) { return th <= 0.0 ? 0.0 : th * mainardi_density(0.6, th, ctl); }, 0.0,
        theta_max, 20000);
    CHECK(m1 == Approx(oracles::kInvGamma16).margin(2e-7));
    CHECK(m1 == Approx(1.0 / gamma_fn(1.6)).margin(2e-7));
}

TEST_CASE("mainardi_density: domain errors carry theta and the term count") {
    CHECK_THROWS_AS(mainardi_density(0.5, 0.0), std::domain_error);
    CHECK_THROWS_AS(mainardi_density(1.0, 1.0), std::domain_error);
    try {
        mainardi_density(0.9, 1.5, SeriesControl{40, 1e-19});
        FAIL("expected nonconvergence");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("40") != std::string::npos);
        CHECK(msg.find("1.5") != std::string::npos);
    }
}

TEST_CASE("density_nodes: moment identities") {
    const SeriesControl ctl{4000, 1e-19};
    // first moment: sum w mu theta xi = 1/Gamma(mu)
    for (double mu : {0.5, 0.9}) {
        auto rule = density_nodes(mu, 200);
        double s = 0.0;
        for (const auto& nd : rule) s += nd.weight * mu * nd.theta * mainardi_density(mu, nd.theta, ctl);
        CHECK(s == Approx(1.0 / gamma_fn(mu)).margin(1e-6));
    }
    // zeroth moment: sum w xi = 1
    for (double mu : {0.3, 0.5, 0.7, 0.9}) {
        auto rule = density_nodes(mu, 200);
        double s = 0.0;
        for (const auto& nd : rule) s += nd.weight * mainardi_density(mu, nd.theta, ctl);
        CHECK(s == Approx(1.0).margin(1e-6));
    }
    // r = 0,1,2 against Gamma(1+r)/Gamma(1+mu r) with the default rule size
    for (double mu : {0.4, 0.6, 0.8}) {
        auto rule = density_nodes(mu, 400);
        for (int r = 0; r <= 2; ++r) {
            double s = 0.0;
            for (const auto& nd : rule) {
                s += nd.weight * std::pow(nd.theta, r) * mainardi_density(mu, nd.theta, ctl);
            }
            CHECK(s == Approx(gamma_fn(1.0 + r) / gamma_fn(1.0 + mu * r)).margin(1e-5));
        }
    }
}

TEST_CASE("density_nodes: deterministic and validated") {
    auto r1 = density_nodes(0.5, 200);
    auto r2 = density_nodes(0.5, 200);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].theta == r2[i].theta);
        CHECK(r1[i].weight == r2[i].weight);
    }
    CHECK_THROWS_AS(density_nodes(0.5, 4), std::domain_error);
}
