#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nlcd/profiles.hpp"
#include "oracles.hpp"

using namespace nlcd;

TEST_CASE("erfcx matches erfc where both are representable") {
    for (double z : {0.0, 0.5, 1.0, 3.0, 8.0, 15.0, 19.9}) {
        double direct = std::exp(z * z) * std::erfc(z);
        CHECK(detail::erfcx(z) == Catch::Approx(direct).epsilon(1e-14));
    }
    // continuity across the series switch at z = 20
    CHECK(detail::erfcx(19.999999) == Catch::Approx(detail::erfcx(20.000001)).epsilon(1e-12));
    // asymptotic magnitude ~ 1/(z sqrt(pi))
    CHECK(detail::erfcx(50.0) == Catch::Approx(1.0 / (50.0 * std::sqrt(std::numbers::pi))).epsilon(1e-3));
}

TEST_CASE("heat profile point values and symmetry") {
    HeatProfile p{1.0, 1.0};
    CHECK(heat_eval(p, 1.0, 0.0) ==
          Catch::Approx(1.0 / std::sqrt(4.0 * std::numbers::pi)).epsilon(1e-15));
    HeatProfile p2{2.0, 1.0};
    for (double x : {-1.0, 0.3, 2.0})
        CHECK(heat_eval(p2, 1.0, x) == Catch::Approx(2.0 * heat_eval(p, 1.0, x)).epsilon(1e-15));
    for (double x : {0.1, 1.0, 5.0}) CHECK(heat_eval(p, 2.0, x) == heat_eval(p, 2.0, -x));
    CHECK_THROWS_AS(heat_eval(p, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(HeatProfile(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("burgers profile carries mass M") {
    for (double M : {0.5, 2.0, 6.0}) {
        BurgersProfile p{M, 1.0};
        for (double t : {0.5, 1.0, 4.0}) {
            double width = std::sqrt(2.0 * t);
            double m = oracles::simpson([&](double x) { return burgers_eval(p, t, x); },
                                        -30.0 * width, 30.0 * width, 400000);
            CHECK(m == Catch::Approx(M).margin(1e-8));
        }
    }
    CHECK_THROWS_AS(BurgersProfile(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(burgers_eval(BurgersProfile(1.0, 1.0), -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("burgers profile linearizes to the heat kernel as M -> 0") {
    double M = 1e-4;
    BurgersProfile b{M, 1.0};
    HeatProfile h{M, 1.0};
    for (double x = -3.0; x <= 3.0; x += 0.25) {
        double ratio = burgers_eval(b, 1.0, x) / heat_eval(h, 1.0, x);
        CHECK(ratio == Catch::Approx(1.0).margin(1e-3));
    }
}

TEST_CASE("burgers profile is asymmetric for M >= 1") {
    BurgersProfile p{1.0, 1.0};
    double worst = 0.0;
    for (double x = 0.1; x <= 4.0; x += 0.1)
        worst = std::max(worst, std::abs(burgers_eval(p, 1.0, x) - burgers_eval(p, 1.0, -x)));
    CHECK(worst > 1e-3);
}

TEST_CASE("PDE residuals decay at second order") {
    for (Profile p : {Profile::heat(1.5, 0.8), Profile::burgers(2.0, 1.0)}) {
        double r1 = profile_residual(p, 1.0, 0.04);
        double r2 = profile_residual(p, 1.0, 0.02);
        double r3 = profile_residual(p, 1.0, 0.01);
        CHECK(r1 / r2 > 3.2);
        CHECK(r1 / r2 < 4.8);
        CHECK(r2 / r3 > 3.2);
        CHECK(r2 / r3 < 4.8);
    }
    // pointwise residual at (1, 0.7) refines at the same rate
    Profile b = Profile::burgers(2.0, 1.0);
    auto point_res = [&](double h) {
        double wt = (b.eval(1.0 + h, 0.7) - b.eval(1.0 - h, 0.7)) / (2.0 * h);
        double wxx = (b.eval(1.0, 0.7 + h) - 2.0 * b.eval(1.0, 0.7) + b.eval(1.0, 0.7 - h)) / (h * h);
        double wr = b.eval(1.0, 0.7 + h), wl = b.eval(1.0, 0.7 - h);
        return std::abs(wt - wxx + (wr * wr - wl * wl) / (2.0 * h));
    };
    double ratio = point_res(0.02) / point_res(0.01);
    CHECK(ratio > 3.2);
    CHECK(ratio < 4.8);
    // zero-mass profile solves exactly
    CHECK(profile_residual(Profile::burgers(0.0, 1.0), 1.0, 0.01) == 0.0);
}

TEST_CASE("profiles are exactly self-similar") {
    Profile h = Profile::heat(1.0, 1.0);
    for (double lambda : {0.3, 1.0, 2.0, 7.0})
        CHECK(self_similarity_check(h, 1.0, lambda) <= 1e-14);
    Profile b = Profile::burgers(2.0, 1.0);
    CHECK(self_similarity_check(b, 1.0, 1.0) == 0.0);
    for (double lambda : {0.5, 2.0, 10.0})
        CHECK(self_similarity_check(b, 1.0, lambda) <= 1e-12);
}

TEST_CASE("norms decay at the exact self-similar rate") {
    // ||w(t)||_p t^{(1-1/p)/2} is constant in t
    Profile b = Profile::burgers(2.0, 1.0);
    auto norm_p = [&](double t, double p) {
        double width = std::sqrt(2.0 * t);
        if (std::isinf(p)) {
            double sup = 0.0;
            for (double x = -12.0 * width; x <= 12.0 * width; x += width / 400.0)
                sup = std::max(sup, std::abs(b.eval(t, x)));
            return sup;
        }
        double integral =
            oracles::simpson([&](double x) { return std::pow(std::abs(b.eval(t, x)), p); },
                             -25.0 * width, 25.0 * width, 400000);
        return std::pow(integral, 1.0 / p);
    };
    for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
        double ref = norm_p(1.0, p);
        for (double t : {0.5, 4.0}) {
            double factor = std::isinf(p) ? std::sqrt(t) : std::pow(t, 0.5 * (1.0 - 1.0 / p));
            CHECK(norm_p(t, p) * factor == Catch::Approx(ref).margin(1e-8));
        }
    }
}

TEST_CASE("closed form tracks a fine-grid viscous integration") {
    // start the reference scheme on the closed form at t = 1, march to t = 2
    const double A = 1.0, M = 2.0, h = 0.01;
    BurgersProfile p{M, A};
    const double x_lo = -10.0, x_hi = 14.0;
    auto n = static_cast<std::size_t>((x_hi - x_lo) / h);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = burgers_eval(p, 1.0, x_lo + (static_cast<double>(i) + 0.5) * h);
    std::vector<double> evolved = oracles::burgers_ftcs(std::move(w), h, A, 1.0, 2.0);
    double sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = x_lo + (static_cast<double>(i) + 0.5) * h;
        sup = std::max(sup, std::abs(evolved[i] - burgers_eval(p, 2.0, x)));
    }
    CHECK(sup <= 5e-4);
}
