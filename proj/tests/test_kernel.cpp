#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nlcd/convolve.hpp"
#include "nlcd/kernel.hpp"
#include "oracles.hpp"

using namespace nlcd;

TEST_CASE("second moments of the named families") {
    CHECK(second_moment(KernelSpec::exponential()) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(second_moment(KernelSpec::box(1.0)) == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
    for (double sigma : {0.5, 1.0, 2.0}) {
        KernelSpec g = KernelSpec::gaussian(sigma);
        double by_quadrature = 0.5 * oracles::simpson(
                                         [&](double z) { return z * z * g.density(z); },
                                         -12.0 * sigma, 12.0 * sigma, 200000);
        CHECK(second_moment(g) == Catch::Approx(sigma * sigma / 2.0).epsilon(1e-13));
        CHECK(second_moment(g) == Catch::Approx(by_quadrature).epsilon(1e-10));
    }
}

TEST_CASE("rescaled kernels") {
    for (double lambda : {0.5, 2.0, 8.0}) {
        for (const KernelSpec& spec :
             {KernelSpec::exponential(), KernelSpec::gaussian(0.7), KernelSpec::box(1.3)}) {
            KernelSpec scaled = spec.rescaled(lambda);
            // lambda J(lambda x): second moment scales by 1/lambda^2,
            // transform dilates
            CHECK(second_moment(scaled) ==
                  Catch::Approx(second_moment(spec) / (lambda * lambda)).epsilon(1e-12));
            for (double xi : {0.3, 1.0, 4.0})
                CHECK(scaled.fourier(xi) == Catch::Approx(spec.fourier(xi / lambda)).epsilon(1e-12));
            CHECK(scaled.density(0.4) ==
                  Catch::Approx(lambda * spec.density(lambda * 0.4)).epsilon(1e-12));
        }
    }
}

TEST_CASE("tabulated kernels act like their piecewise-linear density") {
    // tabulate the exponential kernel finely and compare moments/transform
    std::vector<double> samples;
    double dz = 0.01;
    for (int j = 0; j <= 4000; ++j) samples.push_back(0.5 * std::exp(-dz * static_cast<double>(j)));
    KernelSpec tab = KernelSpec::tabulated(samples, dz);
    KernelSpec exact = KernelSpec::exponential();
    CHECK(second_moment(tab) == Catch::Approx(1.0).margin(2e-4));
    for (double xi : {0.0, 0.5, 1.0, 3.0})
        CHECK(tab.fourier(xi) == Catch::Approx(exact.fourier(xi)).margin(2e-4));
    CHECK(tab.tail(2.0) == Catch::Approx(std::exp(-2.0)).margin(2e-4));
    KernelSpec scaled = tab.rescaled(3.0);
    CHECK(scaled.fourier(1.5) == Catch::Approx(tab.fourier(0.5)).epsilon(1e-12));
}

TEST_CASE("discretize invariants") {
    CHECK_THROWS_AS(discretize(KernelSpec::exponential(), 0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(discretize(KernelSpec::box(0.1), 1.0, 1e-10), std::invalid_argument); // m = 0

    DiscreteKernel box = discretize(KernelSpec::box(1.0), 0.25, 1e-12);
    CHECK(box.row_mass() == Catch::Approx(1.0).epsilon(1e-15));
    for (double w : box.weights) CHECK(w == Catch::Approx(box.weights.front()).epsilon(1e-14));

    DiscreteKernel expk = discretize(KernelSpec::exponential(), 0.05, 1e-12);
    CHECK(std::abs(expk.row_mass() - 1.0) <= 1e-15);
    // symmetric, nonnegative
    auto m = static_cast<std::ptrdiff_t>(expk.half_width());
    for (std::ptrdiff_t j = 0; j <= m; ++j) {
        CHECK(expk.weight(j) == expk.weight(-j));
        CHECK(expk.weight(j) >= 0.0);
    }

    DiscreteKernel gauss = discretize(KernelSpec::gaussian(1.0), 0.05, 1e-12);
    CHECK(gauss.discrete_second_moment() == Catch::Approx(0.5).margin(1e-4));
    CHECK(gauss.second_moment_A == Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("convolution of a discrete delta reproduces the weights") {
    DiscreteKernel k = discretize(KernelSpec::gaussian(0.5), 0.1, 1e-10);
    Grid g = Grid::symmetric(10.0, 200);
    Field f(g);
    std::size_t center = 100;
    f.values[center] = 1.0 / g.dx; // unit-mass spike
    for (ConvPath path : {ConvPath::direct, ConvPath::fft}) {
        Field out = convolve(k, f, path);
        auto m = static_cast<std::ptrdiff_t>(k.half_width());
        for (std::ptrdiff_t j = -m; j <= m; ++j) {
            double got = out.values[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(center) + j)];
            CHECK(got == Catch::Approx(k.weight(j)).margin(1e-12));
        }
    }
}

TEST_CASE("convolution fixes interior constants") {
    DiscreteKernel k = discretize(KernelSpec::exponential(), 0.25, 1e-10);
    Grid g = Grid::symmetric(50.0, 400);
    Field f(g, std::vector<double>(400, 1.0));
    Field out = convolve(k, f, ConvPath::direct);
    auto m = k.half_width();
    for (std::size_t i = m; i + m < g.n; ++i) CHECK(std::abs(out.values[i] - 1.0) <= 1e-13);
}

TEST_CASE("two boxes give the oracle trapezoid") {
    DiscreteKernel k = discretize(KernelSpec::box(1.0), 0.05, 1e-12);
    Grid g = Grid::symmetric(8.0, 320);
    Field f = sample_field(g, [](double x) { return std::abs(x) <= 2.0 ? 0.25 : 0.0; });
    auto expected = oracles::convolve_bruteforce(k.weights, f.values, g.dx);
    for (ConvPath path : {ConvPath::direct, ConvPath::fft}) {
        Field out = convolve(k, f, path);
        for (std::size_t i = 0; i < g.n; ++i)
            CHECK(out.values[i] == Catch::Approx(expected[i]).margin(1e-12));
    }
}

TEST_CASE("fft and direct paths agree on random fields") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    DiscreteKernel k = discretize(KernelSpec::gaussian(0.4), 0.1, 1e-10);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 16 + rng() % 497;
        Grid g(-5.0, 0.1, std::max<std::size_t>(n, 8));
        Field f(g);
        for (double& v : f.values) v = unif(rng);
        Field a = convolve(k, f, ConvPath::fft);
        Field b = convolve(k, f, ConvPath::direct);
        double scale = 0.0, dev = 0.0;
        for (std::size_t i = 0; i < g.n; ++i) {
            scale = std::max(scale, std::abs(b.values[i]));
            dev = std::max(dev, std::abs(a.values[i] - b.values[i]));
        }
        CHECK(dev <= 1e-12 * std::max(scale, 1.0));
    }
}

TEST_CASE("convolution is positivity-preserving and mass-conserving inside") {
    DiscreteKernel k = discretize(KernelSpec::exponential(), 0.2, 1e-10);
    Grid g = Grid::symmetric(40.0, 400);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Field f(g);
    // support well inside: kernel reach is m cells
    auto m = k.half_width();
    for (std::size_t i = m + 4; i + m + 4 < g.n; ++i) f.values[i] = unif(rng);
    Field out = convolve(k, f, ConvPath::direct);
    for (double v : out.values) CHECK(v >= 0.0);
    CHECK(std::abs(mass(out) - mass(f)) <= 1e-13 * std::max(1.0, mass(f)));
}

TEST_CASE("direct convolution commutes with whole-cell shifts exactly") {
    DiscreteKernel k = discretize(KernelSpec::gaussian(0.5), 0.1, 1e-10);
    Grid g = Grid::symmetric(15.0, 300);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto m = k.half_width();
    const std::size_t shift = 7;
    Field f(g);
    for (std::size_t i = m + shift + 2; i + m + 2 * shift < g.n; ++i) f.values[i] = unif(rng);

    Field shifted(g);
    for (std::size_t i = shift; i < g.n; ++i) shifted.values[i] = f.values[i - shift];
    Field conv_then_shift(g);
    Field conv_f = convolve(k, f, ConvPath::direct);
    for (std::size_t i = shift; i < g.n; ++i) conv_then_shift.values[i] = conv_f.values[i - shift];
    Field shift_then_conv = convolve(k, shifted, ConvPath::direct);
    for (std::size_t i = 0; i < g.n; ++i)
        CHECK(shift_then_conv.values[i] == conv_then_shift.values[i]); // bitwise
}

namespace {
void verify_splitting(const KernelSpec& spec, const FourierConstants& fc) {
    double xi_max = std::max(10.0 * fc.R, 60.0 / std::sqrt(spec.second_moment_full()));
    const int npts = 40000;
    for (int i = 0; i <= npts; ++i) {
        double xi = xi_max * static_cast<double>(i) / npts;
        double J = spec.fourier(xi);
        if (xi <= fc.R) CHECK(J <= 1.0 - fc.c * xi * xi + 1e-10);
        if (xi >= fc.R) CHECK(J <= 1.0 - fc.delta + 1e-10);
    }
}
} // namespace

TEST_CASE("fourier splitting constants: exponential") {
    KernelSpec spec = KernelSpec::exponential();
    // the classical triple c = 1/2, R = 1, delta = 1/2 is admissible:
    // 1/(1+xi^2) <= 1 - xi^2/2 iff xi^2 <= 1
    verify_splitting(spec, {0.5, 1.0, 0.5});
    FourierConstants fc = fourier_constants(spec);
    CHECK(fc.c > 0.0);
    CHECK(fc.R > 0.1);
    CHECK(fc.delta > 0.0);
    verify_splitting(spec, fc);
}

TEST_CASE("fourier splitting constants: box and gaussian") {
    KernelSpec box = KernelSpec::box(1.0);
    verify_splitting(box, fourier_constants(box));

    KernelSpec gauss = KernelSpec::gaussian(1.0);
    FourierConstants fc = fourier_constants(gauss);
    CHECK(fc.c < 0.5); // exp(-y) >= 1 - y forces c strictly below A = 1/2
    verify_splitting(gauss, fc);
}

TEST_CASE("fourier splitting constants: tabulated bump") {
    std::vector<double> samples;
    const int ns = 200;
    for (int j = 0; j < ns; ++j) {
        double s = static_cast<double>(j) / ns;
        samples.push_back(std::exp(-1.0 / (1.0 - s * s)));
    }
    samples.push_back(0.0);
    KernelSpec bump = KernelSpec::tabulated(samples, 1.0 / ns);
    CHECK(bump.fourier(0.0) == Catch::Approx(1.0).epsilon(1e-12));
    verify_splitting(bump, fourier_constants(bump));
}
