#include <doctest.h>

#include <cmath>
#include <random>

#include "stepscat/born.hpp"
#include "stepscat/closed_form.hpp"
#include "test_support.hpp"

using namespace stepscat;

namespace {

constexpr double kV0 = 1.0;
constexpr double kV1 = 0.01;

// |MM1|^2 = (1 + 0.0016)/64 at p = 2.
constexpr double kMm1Sq = 0.0156500;
// |LP1|^2 = (4 + 0.0064)/(2 + sqrt2)^4.
constexpr double kLp1Sq = 0.029484351125296;

// The same step plus delta with the delta moved inside a wider window.
Potential wide_step_delta() { return Potential(kV0, -1.0, 1.0, {}, {{0.0, kV1}}); }

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("first-order multichannel reflection") {
    const auto pot = Potential::step_delta(kV0, kV1);
    const auto bm = branch_momentum(2.0, pot);
    const auto r = born_mm1(pot, bm);
    CHECK(std::abs(r.value - cplx(0.125, -0.005)) < 1e-15);
    CHECK(std::norm(r.value) == doctest::Approx(kMm1Sq).epsilon(1e-12));
    CHECK(std::abs(born_mm1(wide_step_delta(), bm).value - r.value) < 1e-12);
    CHECK(std::abs(born_mm1(Potential::free_particle(), branch_momentum(1.0, 0.0)).value) == 0.0);
    // Grows like m V0/(2 p^2) towards p = 0.
    const double p = 1e-3;
    CHECK(std::abs(born_mm1(pot, branch_momentum(p, pot)).value) == doctest::Approx(kV0 / (2 * p * p)).epsilon(1e-4));
    CHECK_THROWS_AS(born_mm1(pot, branch_momentum(-2.0, pot)), ConfigError);
}

TEST_CASE("first-order step-reference reflection") {
    const auto pot = Potential::step_delta(kV0, kV1);
    const auto bm = branch_momentum(2.0, pot);
    const auto r = born_lp1(pot, bm);
    const double den = std::pow(2.0 + std::sqrt(2.0), 2);
    CHECK(std::abs(r.value - cplx(2.0, -0.08) / den) < 1e-15);
    CHECK(std::norm(r.value) == doctest::Approx(kLp1Sq).epsilon(1e-8));
    CHECK(std::abs(born_lp1(wide_step_delta(), bm).value - r.value) < 1e-12);
    // No localized part: the pure-step amplitude.
    const auto step = Potential(kV0, -1.0, 1.0);
    CHECK(std::abs(born_lp1(step, bm).value - step_amplitudes(bm).r_l) < 1e-15);
    // Below threshold q = i: |R| stays near 1.
    const auto below = born_lp1(pot, branch_momentum(1.0, pot));
    CHECK(std::abs(below.value - born_lp1_step_delta(branch_momentum(1.0, pot), kV1)) < 1e-14);
    CHECK(std::abs(std::abs(below.value) - 1.0) < 1e-3);
    CHECK_THROWS_AS(born_lp1(Potential(1.0, 0.5, 1.0), bm), ConfigError);
}

TEST_CASE("general machinery reproduces the closed forms") {
    const auto pot = Potential::step_delta(kV0, kV1);
    const auto wide = wide_step_delta();
    for (int i = 1; i <= 50; ++i) {
        const double p = 0.06 * i;
        const auto bm = branch_momentum(p, pot);
        if (bm.at_threshold) continue;
        const cplx mm = born_mm1_step_delta(bm, kV1);
        const cplx lp = born_lp1_step_delta(bm, kV1);
        CHECK(testing::rel_err(born_mm1(pot, bm).value, mm) < 1e-10);
        CHECK(testing::rel_err(born_mm1(wide, bm).value, mm) < 1e-10);
        CHECK(testing::rel_err(born_lp1(wide, bm).value, lp) < 1e-10);
    }
}

TEST_CASE("right reflection recipe p <-> q") {
    // With V0 written as (p^2 - q^2)/2m, exchanging p and q in the left
    // first-order amplitude gives the right one.
    const auto pot = Potential::step_delta(kV0, kV1);
    for (double p : {1.5, 2.0, 3.0}) {
        const auto bm = branch_momentum(p, pot);
        const cplx q = bm.q;
        const cplx recipe = (q * q - p * p) / (4.0 * q * q) - I * kV1 / q;
        CHECK(std::abs(born_mm1_right(pot, bm).value - recipe) < 1e-14);
        CHECK(std::abs(born_mm1_right(wide_step_delta(), bm).value - recipe) < 1e-12);
    }
    // Diverges as |p| -> p0 from above.
    CHECK(std::abs(born_mm1_right(pot, branch_momentum(std::sqrt(2.0) * 1.0001, pot)).value) > 100.0);
}

TEST_CASE("figure-one ordering of the approximations") {
    const auto pot = Potential::step_delta(kV0, kV1);
    double lp_dev = 0.0;
    double mm_dev = 0.0;
    for (int i = 0; i < 300; ++i) {
        const double p = 0.05 + (3.0 - 0.05) * i / 299.0;
        const auto bm = branch_momentum(p, pot);
        if (bm.at_threshold) continue;
        const double exact = std::norm(transfer_matrix_amplitudes(pot, bm).r_l);
        if (p < std::sqrt(2.0)) {
            CHECK(std::abs(exact - 1.0) < 1e-10);
            continue;
        }
        lp_dev = std::max(lp_dev, std::abs(std::norm(born_lp1(pot, bm).value) - exact));
        mm_dev = std::max(mm_dev, std::abs(std::norm(born_mm1(pot, bm).value) - exact));
    }
    CHECK(lp_dev < 1e-3);
    CHECK(mm_dev > 1e-2);
    CHECK(std::norm(born_mm1(pot, branch_momentum(0.1, pot)).value) > 1e3);
    // The multichannel amplitude has no channel-closing structure.
    const double p0 = std::sqrt(2.0);
    CHECK(std::abs(1.0 - std::norm(born_mm1(pot, branch_momentum(0.99 * p0, pot)).value)) > 0.1);
    CHECK(std::abs(std::abs(born_lp1(pot, branch_momentum(0.999 * p0, pot)).value) - 1.0) < 2e-2);
}

TEST_CASE("second-order multichannel term") {
    SUBCASE("delta without step matches the expansion of the exact amplitude") {
        const double v1 = 0.05;
        const Potential d(0.0, 0.0, 0.0, {}, {{0.0, v1}});
        for (double p : {0.7, 1.5}) {
            const double alpha = v1 / p;
            const auto r = born_mm2(d, branch_momentum(p, d));
            CHECK(std::abs(r.value - (-alpha * alpha)) < 1e-14);
            CHECK(r.error < 1e-14);
        }
        // Off the origin the amplitude picks up the phase e^{2ikx0}.
        const Potential win(0.0, -1.0, 1.0, {}, {{0.3, v1}});
        const cplx shifted = -(v1 / 1.5) * (v1 / 1.5) * std::exp(2.0 * I * 1.5 * 0.3);
        CHECK(std::abs(born_mm2(win, branch_momentum(1.5, win)).value - shifted) < 1e-12);
    }
    SUBCASE("vanishing potential") {
        const auto pot = Potential::free_particle();
        CHECK(std::abs(born_mm2(pot, branch_momentum(1.0, pot)).value) == 0.0);
    }
    SUBCASE("square barrier without step against direct double quadrature") {
        // Closed form of the double integral for a constant barrier u on [0, w]:
        // int int e^{ik(x+y)} e^{ik|x-y|} = 2 int x e^{2ikx}
        //   = w e^{2ikw}/(ik) + (e^{2ikw} - 1)/(2k^2).
        const double u = 0.4;
        const double w = 1.3;
        const double p = 1.1;
        const Potential box(0.0, 0.0, w, {{0.0, w, u}});
        const double k = p;
        const cplx g = -I / p;
        const cplx dbl = w * std::exp(2.0 * I * k * w) / (I * k) + (std::exp(2.0 * I * k * w) - 1.0) / (2.0 * k * k);
        const cplx want = -I / p * g * u * u * dbl;
        CHECK(std::abs(born_mm2(box, branch_momentum(p, box)).value - want) < 1e-12);
    }
    SUBCASE("step plus delta: p^-4 growth towards threshold zero") {
        const auto pot = Potential::step_delta(kV0, kV1);
        const double p0 = pot.p0();
        std::vector<double> lx, ly;
        for (int i = 0; i < 12; ++i) {
            const double p = p0 * 0.02 * std::pow(10.0, i / 11.0);
            const auto r = born_mm2(pot, branch_momentum(p, pot));
            CHECK(r.error < 1e-2 * std::abs(r.value));
            CHECK(r.parameters.size() == 4);
            lx.push_back(std::log(p));
            ly.push_back(std::log(std::abs(r.value)));
        }
        const double s = slope(lx, ly);
        CHECK(s >= -4.5);
        CHECK(s <= -3.5);
        // The grid version with the delta inside [a, b] agrees.
        const auto bm = branch_momentum(2.0, pot);
        const auto r1 = born_mm2(pot, bm);
        const auto r2 = born_mm2(wide_step_delta(), bm);
        CHECK(std::abs(r1.value - r2.value) < 10.0 * (r1.error + r2.error) + 1e-12);
    }
}

TEST_CASE("in/out first order: reflected wave on the wrong wavenumber") {
    const auto pot = Potential::step_delta(kV0, kV1);
    const auto bm = branch_momentum(2.0, pot);
    const auto r = born_inout1(pot, bm);
    const double q = std::sqrt(2.0);
    const cplx want = (2.0 - q) / (2.0 * q) + kV1 / (I * q);
    CHECK(std::abs(r.wavenumber - q) < 1e-6);
    CHECK(std::abs(r.wavenumber - 2.0) > 0.5);
    CHECK(std::abs(r.value - want) < 1e-6);
    CHECK(std::abs(born_inout1_step_delta(bm, kV1) - want) < 1e-15);

    const auto rw = born_inout1(wide_step_delta(), bm);
    CHECK(std::abs(rw.value - want) < 1e-6);
    CHECK(std::abs(rw.wavenumber - q) < 1e-6);

    SUBCASE("no step: ordinary first-order reflection") {
        const Potential d(0.0, 0.0, 0.0, {}, {{0.0, kV1}});
        const auto r0 = born_inout1(d, branch_momentum(1.5, d));
        CHECK(std::abs(r0.wavenumber - 1.5) < 1e-6);
        CHECK(std::abs(r0.value - kV1 / (I * 1.5)) < 1e-6);
    }
    SUBCASE("nothing to reflect") {
        const auto pot0 = Potential::free_particle();
        const auto bm0 = branch_momentum(1.5, pot0);
        CHECK(std::abs(born_inout1_step_delta(bm0, 0.0)) == 0.0);
    }
    CHECK_THROWS_AS(born_inout1(pot, branch_momentum(1.0, pot)), ConfigError);
}
