#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "stepscat/greens.hpp"

using namespace stepscat;

TEST_CASE("free kernel examples") {
    const cplx g = g_free(2.0, Side::Plus, 1.0, 0.0);
    const double p = 2.0;
    CHECK(std::abs(g - (-I / p) * std::exp(I * p)) < 1e-15);
    CHECK(std::abs(g_free(2.0, Side::Plus, 0.3, 0.3) - (-I / p)) < 1e-15);
    CHECK(std::abs(g_free(2.0, Side::Minus, 1.0, 0.0) - std::conj(g)) < 1e-15);
    CHECK_THROWS_AS(g_free(0.0, Side::Plus, 1.0, 0.0), ConfigError);
    // Genuinely complex energy picks the decaying root.
    CHECK(std::abs(g_free(cplx(2.0, 1e-3), Side::Minus, 50.0, 0.0)) <
          std::abs(g_free(cplx(2.0, 1e-3), Side::Minus, 1.0, 0.0)));
}

TEST_CASE("shifted kernel examples") {
    CHECK(g_shifted(2.0, Side::Plus, 1.0, 0.2, 0.0) == g_free(2.0, Side::Plus, 1.0, 0.2));
    const cplx a = g_shifted(0.5, Side::Plus, 3.0, 0.0, 1.0);
    const cplx b = g_shifted(0.5, Side::Plus, 4.0, 0.0, 1.0);
    CHECK(std::abs(b / a) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    const cplx c = g_shifted(2.0, Side::Plus, 1.0, 0.0, 1.0);
    CHECK(std::abs(c - (-I / std::sqrt(2.0)) * std::exp(I * std::sqrt(2.0))) < 1e-15);
    CHECK_THROWS_AS(g_shifted(1.0, Side::Plus, 1.0, 0.0, 1.0), ConfigError);
}

TEST_CASE("step kernel examples") {
    const double rp = (2.0 - std::sqrt(2.0)) / (2.0 + std::sqrt(2.0));
    const double x = -0.7, xp = -1.9;
    const cplx want = 1.0 / (I * 2.0) * (std::exp(I * 2.0 * std::abs(x - xp)) + rp * std::exp(-I * 2.0 * (x + xp)));
    CHECK(std::abs(g_step(2.0, Side::Plus, x, xp, 1.0) - want) < 1e-15);
    const auto par = step_kernel_params(2.0, Side::Plus, 1.0);
    CHECK(std::abs(1.0 + par.r - par.t) < 1e-15);
    const double e = 1e-12;
    CHECK(std::abs(g_step(2.0, Side::Plus, -e, xp, 1.0) - g_step(2.0, Side::Plus, e, xp, 1.0)) < 1e-10);
    CHECK_THROWS_AS(g_step(1.0, Side::Plus, 0.1, 0.2, 1.0), ConfigError);
}

TEST_CASE("step kernel properties at random points") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(-4.0, 4.0), ue(0.1, 4.0);
    for (int i = 0; i < 100; ++i) {
        const double x = ux(rng), xp = ux(rng), en = ue(rng);
        for (Side s : {Side::Plus, Side::Minus}) {
            const cplx g = g_step(en, s, x, xp, 1.0);
            CHECK(std::abs(g - g_step(en, s, xp, x, 1.0)) < 1e-12);
            CHECK(std::abs(g - oracle::step_kernel_wronskian(en, sign_of(s), x, xp, 1.0)) < 1e-12);
            CHECK(std::abs(g_step(en, s, x, xp, 1e-12) - g_free(en, s, x, xp)) < 1e-10);
        }
        CHECK(std::abs(g_step(en, Side::Plus, x, xp, 1.0) - std::conj(g_step(en, Side::Minus, x, xp, 1.0))) < 1e-13);
        CHECK(std::abs(g_free(en, Side::Plus, x, xp) - std::conj(g_free(en, Side::Minus, x, xp))) < 1e-15);
    }
}

TEST_CASE("projected kernels against the momentum integral") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ux(-6.0, 6.0), ue(-3.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 60; ++i) {
        const double x = ux(rng), xp = ux(rng);
        double zeta = ue(rng);
        if (std::abs(zeta) < 0.05 || std::abs(x - xp) < 0.05) continue;
        for (int xi : {1, -1})
            for (Side s : {Side::Plus, Side::Minus}) {
                const cplx got = projected_free_kernel(xi, zeta, s, x, xp);
                const cplx want = oracle::projected_kernel_quadrature(xi, zeta, sign_of(s), x, xp);
                worst = std::max(worst, std::abs(got - want));
            }
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("projector sum reproduces the free kernel") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ux(-20.0, 20.0), ue(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const double x = ux(rng), xp = ux(rng), z = ue(rng);
        for (Side s : {Side::Plus, Side::Minus}) {
            const cplx sum = projected_free_kernel(1, z, s, x, xp) + projected_free_kernel(-1, z, s, x, xp);
            CHECK(std::abs(sum - g_free(z, s, x, xp)) < 1e-12);
        }
    }
    // With no step both in/out kernels are the free kernel.
    CHECK(std::abs(g_inout(KernelKind::In, 1.3, Side::Plus, 0.4, -1.0, 0.0) - g_free(1.3, Side::Plus, 0.4, -1.0)) < 1e-13);
    CHECK(std::abs(g_inout(KernelKind::Out, 1.3, Side::Plus, 0.4, -1.0, 0.0) - g_free(1.3, Side::Plus, 0.4, -1.0)) < 1e-13);
    CHECK_THROWS_AS(g_inout(KernelKind::In, 2.0, Side::Plus, 0.5, 0.5, 1.0), ConfigError);
}

TEST_CASE("projected kernel approaches the half-range kernel for large separation") {
    const double z = 2.0;
    const cplx far = projected_free_kernel(1, z, Side::Plus, 400.0, 0.0);
    const cplx g0 = g_free(z, Side::Plus, 400.0, 0.0);
    const double y = 2.0 * 400.0;
    CHECK(std::abs(far - g0) < 2.0 / (2.0 * pi * 2.0) * 1.01 / y);
    CHECK(std::abs(projected_free_kernel(-1, z, Side::Plus, 400.0, 0.0)) < 1.01 / (2.0 * pi * y));
}

namespace {

double ratio_of_residuals(const ResolventKernel& k, double center) {
    auto f = [center](double x) { return std::exp(-(x - center) * (x - center) / 0.5); };
    const ResidualWindow w1{center - 5.0, center + 5.0, center - 1.0, center + 1.0, 0.02};
    ResidualWindow w2 = w1;
    w2.h = 0.01;
    const double r1 = residual_check(k, f, w1);
    const double r2 = residual_check(k, f, w2);
    MESSAGE(to_string(k.kind()) << " residuals " << r1 << " " << r2);
    CHECK(r1 < 1e-2);
    return r1 / r2;
}

}  // namespace

TEST_CASE("resolvent residuals converge at second order") {
    for (Side s : {Side::Plus, Side::Minus}) {
        CHECK(ratio_of_residuals(ResolventKernel(KernelKind::Free, 2.0, s), 0.0) == doctest::Approx(4.0).epsilon(0.15));
        CHECK(ratio_of_residuals(ResolventKernel(KernelKind::Shifted, 2.0, s, 1.0), 0.0) == doctest::Approx(4.0).epsilon(0.15));
        CHECK(ratio_of_residuals(ResolventKernel(KernelKind::Step, 2.0, s, 1.0), -6.0) == doctest::Approx(4.0).epsilon(0.15));
        CHECK(ratio_of_residuals(ResolventKernel(KernelKind::Step, 0.5, s, 1.0), -6.0) == doctest::Approx(4.0).epsilon(0.15));
    }
    CHECK(ratio_of_residuals(ResolventKernel(KernelKind::In, 2.0, Side::Plus, 1.0), 0.0) == doctest::Approx(4.0).epsilon(0.25));
    CHECK(ratio_of_residuals(ResolventKernel(KernelKind::Out, 0.5, Side::Minus, 1.0), 0.0) == doctest::Approx(4.0).epsilon(0.25));
    const auto fr = ResolventKernel(KernelKind::Free, 2.0, Side::Plus);
    const auto sh = ResolventKernel(KernelKind::Shifted, 2.0, Side::Plus, 0.0);
    auto f = [](double x) { return std::exp(-x * x); };
    const ResidualWindow w{-5.0, 5.0, -1.0, 1.0, 0.05};
    CHECK(residual_check(fr, f, w) == residual_check(sh, f, w));
}
