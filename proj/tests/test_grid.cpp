#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nlcd/grid.hpp"
#include "nlcd/solver.hpp"
#include "oracles.hpp"

using namespace nlcd;

namespace {

SolutionStore analytic_store(const Grid& g, const std::vector<double>& times,
                             const std::function<double(double, double)>& u) {
    SolutionStore store;
    store.times = times;
    for (double t : times)
        store.snapshots.push_back(sample_field(g, [&](double x) { return u(t, x); }));
    return store;
}

} // namespace

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(Grid(-1.0, 0.0, 16), std::invalid_argument);
    CHECK_THROWS_AS(Grid(-1.0, 0.1, 4), std::invalid_argument);
    Grid g = Grid::symmetric(5.0, 100);
    CHECK(g.dx == Catch::Approx(0.1));
    CHECK(g.x_center(0) == Catch::Approx(-4.95));
    CHECK(g.x_center(99) == Catch::Approx(4.95));
    CHECK(g.half_width() == Catch::Approx(5.0));
}

TEST_CASE("lp_norm on constants and a Gaussian") {
    Grid g(-0.5, 1.0 / 64.0, 64); // total length 1
    Field f(g, std::vector<double>(64, 2.0));
    CHECK(lp_norm(f, 1.0) == Catch::Approx(2.0).epsilon(1e-13));
    CHECK(lp_norm(f, std::numeric_limits<double>::infinity()) == Catch::Approx(2.0));
    CHECK_THROWS_AS(lp_norm(f, 0.5), std::invalid_argument);

    Grid gg = Grid::symmetric(20.0, 4000); // dx = 0.01
    Field gauss = sample_field(gg, [](double x) { return oracles::gauss_density(x); });
    double l2_expected = std::sqrt(
        oracles::simpson([](double x) { return std::pow(oracles::gauss_density(x), 2); }, -20.0,
                         20.0, 400000));
    CHECK(l2_expected == Catch::Approx(std::pow(4.0 * std::numbers::pi, -0.25)).epsilon(1e-10));
    CHECK(lp_norm(gauss, 2.0) == Catch::Approx(l2_expected).margin(1e-4));
}

TEST_CASE("mass") {
    Grid g = Grid::symmetric(20.0, 4000);
    CHECK(mass(Field(g)) == 0.0);
    Field ind = sample_field(g, [](double x) { return std::abs(x) < 1.0 ? 0.5 : 0.0; });
    CHECK(mass(ind) == Catch::Approx(1.0).margin(1e-12));
    Field gauss = sample_field(g, [](double x) { return oracles::gauss_density(x); });
    double m_expected =
        oracles::simpson([](double x) { return oracles::gauss_density(x); }, -20.0, 20.0, 400000);
    CHECK(mass(gauss) == Catch::Approx(m_expected).margin(1e-10));
}

TEST_CASE("interpolate") {
    Grid g = Grid::symmetric(4.0, 16);
    Field f(g);
    for (std::size_t i = 0; i < g.n; ++i) f.values[i] = static_cast<double>(i);
    CHECK(interpolate(f, g.x_center(5)) == 5.0);
    CHECK(interpolate(f, -100.0) == 0.0);
    CHECK(interpolate(f, 100.0) == 0.0);
    // midpoint of centers holding 1 and 3
    Field h(g);
    h.values[7] = 1.0;
    h.values[8] = 3.0;
    CHECK(interpolate(h, 0.5 * (g.x_center(7) + g.x_center(8))) == Catch::Approx(2.0));
    // exact on affine data between the outermost centers
    Field affine = sample_field(g, [](double x) { return 3.0 * x + 2.0; });
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> xs(g.x_center(0), g.x_center(g.n - 1));
    for (int k = 0; k < 100; ++k) {
        double x = xs(rng);
        CHECK(interpolate(affine, x) == Catch::Approx(3.0 * x + 2.0).margin(1e-12));
    }
}

TEST_CASE("tail_mass") {
    Grid g = Grid::symmetric(20.0, 4000);
    Field inside = sample_field(g, [](double x) { return std::abs(x) <= 1.0 ? 1.0 : 0.0; });
    CHECK(tail_mass(inside, 2.0) == 0.0);
    CHECK_THROWS_AS(tail_mass(inside, 25.0), std::invalid_argument);

    // constant c on [-2R, 2R]: tail beyond R is 2 c R
    double R = 3.0, c = 0.7;
    Field flat = sample_field(g, [&](double x) { return std::abs(x) <= 2.0 * R ? c : 0.0; });
    CHECK(tail_mass(flat, R) == Catch::Approx(2.0 * c * R).margin(2.0 * c * g.dx));

    Field gauss = sample_field(g, [](double x) { return oracles::gauss_density(x); });
    CHECK(tail_mass(gauss, 2.0) == Catch::Approx(oracles::gauss_two_sided_tail(2.0)).margin(1e-4));
}

TEST_CASE("lp_norm homogeneity and Holder interpolation") {
    Grid g = Grid::symmetric(6.0, 512);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        Field f(g);
        for (double& v : f.values) v = unif(rng);
        double cmul = unif(rng);
        Field cf(g);
        for (std::size_t i = 0; i < g.n; ++i) cf.values[i] = cmul * f.values[i];
        for (double p : {1.0, 2.0, 3.5, std::numeric_limits<double>::infinity()}) {
            double lhs = lp_norm(cf, p);
            double rhs = std::abs(cmul) * lp_norm(f, p);
            CHECK(lhs == Catch::Approx(rhs).epsilon(1e-14).margin(1e-300));
        }
        // ||f||_p <= ||f||_{2p}^theta ||f||_1^{1-theta}, theta = 2(p-1)/(2p-1)
        for (double p : {1.5, 2.0, 4.0}) {
            double theta = 2.0 * (p - 1.0) / (2.0 * p - 1.0);
            double lhs = lp_norm(f, p);
            double rhs = std::pow(lp_norm(f, 2.0 * p), theta) * std::pow(lp_norm(f, 1.0), 1.0 - theta);
            CHECK(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("rescale is the identity at lambda 1") {
    Grid g = Grid::symmetric(10.0, 512);
    auto store = analytic_store(g, {0.0, 1.0, 2.0},
                                [](double, double x) { return std::exp(-x * x); });
    Field r = rescale(store, 1.0, 1.0, g);
    for (std::size_t i = 0; i < g.n; ++i)
        CHECK(std::abs(r.values[i] - store.snapshots[1].values[i]) <= 1e-12);
}

TEST_CASE("rescale on a time-constant store") {
    Grid g = Grid::symmetric(10.0, 2047);
    std::vector<double> times;
    for (int i = 0; i <= 50; ++i) times.push_back(0.1 * i);
    auto store = analytic_store(g, times, [](double, double x) { return std::exp(-x * x); });
    Grid target = Grid::symmetric(4.0, 255);
    Field r = rescale(store, 2.0, 1.0, target);
    // 2 u(4, 2x) at x = 0 -> 2
    CHECK(r.values[127] == Catch::Approx(2.0).margin(1e-4));
    CHECK_THROWS_AS(rescale(store, 4.0, 1.0, target), std::out_of_range); // lambda^2 t = 16 > 5
}

TEST_CASE("rescale against the closed-form heat kernel") {
    // odd cell counts put a cell center exactly at x = 0
    Grid g = Grid::symmetric(40.0, 8191);
    double A = 1.0;
    std::vector<double> times;
    for (int i = 0; i <= 600; ++i) times.push_back(0.01 * i); // covers lambda^2 up to 6
    auto store = analytic_store(g, times, [&](double t, double x) {
        return std::exp(-x * x / (4.0 * A * (t + 1.0))) / std::sqrt(4.0 * std::numbers::pi * A * (t + 1.0));
    });
    for (double lambda : {1.5, 2.0}) {
        Grid target = Grid::symmetric(5.0, 511);
        Field r = rescale(store, lambda, 1.0, target);
        double expected = lambda / std::sqrt(4.0 * std::numbers::pi * A * (lambda * lambda + 1.0));
        CHECK(r.values[255] == Catch::Approx(expected).margin(1e-6));
    }
}

TEST_CASE("rescale preserves mass up to interpolation error") {
    Grid g = Grid::symmetric(30.0, 4096);
    std::vector<double> times{0.0, 0.5, 1.0, 2.0, 4.0, 9.0, 16.0};
    auto store = analytic_store(g, times, [](double t, double x) {
        return std::exp(-x * x / (4.0 * (t + 1.0))) / std::sqrt(4.0 * std::numbers::pi * (t + 1.0));
    });
    for (double lambda : {1.0, 2.0, 4.0}) {
        Grid target = Grid::symmetric(30.0, 4096 * static_cast<std::size_t>(lambda));
        Field r = rescale(store, lambda, 1.0, target);
        Field base = store.sample_time(lambda * lambda);
        // total variation of the scaled snapshot bounds the quadrature error
        double tv = 0.0;
        for (std::size_t i = 0; i + 1 < base.size(); ++i)
            tv += std::abs(base.values[i + 1] - base.values[i]);
        tv *= lambda;
        CHECK(std::abs(mass(r) - mass(base)) <= 2.0 * target.dx * tv + 1e-12);
    }
}
