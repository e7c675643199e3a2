#include <doctest.h>

#include <random>

#include "stepscat/closed_form.hpp"
#include "stepscat/quadrature.hpp"
#include "test_support.hpp"

using namespace stepscat;
using testing::random_potential;

namespace {

constexpr double kRs = 0.171572875253809902;   // (2 - sqrt2)/(2 + sqrt2)
constexpr double kTs = 1.171572875253809902;   // 4/(2 + sqrt2)
// R^l of V0 theta + V1 delta at p = 2, V0 = 1, V1 = 0.01.
constexpr cplx kRStepDelta{0.171532674607922649, -0.006862679520220950};
constexpr double kRStepDeltaSq = 0.0294705548283447315;

}  // namespace

TEST_CASE("pure step closed forms") {
    const auto amp = step_amplitudes(branch_momentum(2.0, 1.0));
    CHECK(std::abs(amp.r_l - kRs) < 1e-15);
    CHECK(std::abs(amp.t_l - kTs) < 1e-15);
    const auto free = step_amplitudes(branch_momentum(1.3, 0.0));
    CHECK(free.r_l == 0.0);
    CHECK(free.t_l == 1.0);
    const auto ev = step_amplitudes(branch_momentum(1.0, 1.0));
    CHECK(std::abs(std::abs(ev.r_l) - 1.0) < 1e-15);
    CHECK_FALSE(ev.t_r.has_value());
}

TEST_CASE("step plus delta closed form") {
    const auto bm = branch_momentum(2.0, 1.0);
    CHECK(std::abs(step_delta_exact_rl(bm, 0.0) - kRs) < 1e-15);
    const cplx r = step_delta_exact_rl(bm, 0.01);
    CHECK(std::abs(r - kRStepDelta) < 1e-15);
    CHECK(std::norm(r) == doctest::Approx(kRStepDeltaSq).epsilon(1e-14));
    CHECK(std::abs(std::abs(step_delta_exact_rl(branch_momentum(1.0, 1.0), 0.01)) - 1.0) < 1e-15);
}

TEST_CASE("transfer matrix reproduces the closed forms") {
    for (double v1 : {0.0, 0.01, -0.3, 0.7}) {
        const auto pot = Potential::step_delta(1.0, v1);
        for (int i = 0; i < 100; ++i) {
            const double p = 0.05 + 0.04 * i;
            const auto bm = branch_momentum(p, pot);
            if (bm.at_threshold) continue;
            const auto tm = transfer_matrix_amplitudes(pot, bm);
            CHECK(std::abs(tm.r_l - step_delta_exact_rl(bm, v1)) <= 1e-12);
            if (v1 == 0.0) {
                const auto st = step_amplitudes(bm);
                CHECK(std::abs(tm.t_l - st.t_l) <= 1e-12);
                if (bm.two_open()) {
                    CHECK(std::abs(*tm.t_r - *st.t_r) <= 1e-12);
                    CHECK(std::abs(*tm.r_r - *st.r_r) <= 1e-12);
                }
            }
        }
    }
    const auto free = transfer_matrix_amplitudes(Potential::free_particle(), branch_momentum(0.7, 0.0));
    CHECK(std::abs(free.t_l - 1.0) < 1e-15);
    CHECK(std::abs(free.r_l) < 1e-15);
    CHECK(std::abs(*free.t_r - 1.0) < 1e-15);
}

TEST_CASE("ordinary barrier against the textbook formula") {
    // Square barrier of height 2 on [0, 1], no step.
    const Potential pot(0.0, 0.0, 1.0, {{0.0, 1.0, 2.0}});
    const double p = 1.5;
    const double k = p;
    const double kap = std::sqrt(4.0 - p * p);
    const cplx t = 1.0 / (std::cosh(kap) + I * (kap * kap - k * k) / (2.0 * k * kap) * std::sinh(kap)) *
                   std::exp(-I * k);
    const auto amp = transfer_matrix_amplitudes(pot, branch_momentum(p, pot));
    CHECK(std::abs(amp.t_l - t) < 1e-13);
}

TEST_CASE("flux and time-reversal identities over random potentials") {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    double worst_ev = 0.0;
    for (int n = 0; n < 200; ++n) {
        const auto pot = random_potential(rng);
        const double p0 = pot.p0();
        std::uniform_real_distribution<double> up(p0 * 1.01, p0 + 4.0), ue(0.02 * p0, 0.99 * p0);
        for (int i = 0; i < 50; ++i) {
            const double sgn_p = (i % 2 == 0) ? 1.0 : -1.0;
            const auto amp = transfer_matrix_amplitudes(pot, branch_momentum(sgn_p * up(rng), pot));
            const auto res = identity_residuals(amp);
            worst = std::max(worst, res.max());
            CHECK(smatrix(amp).unitarity_defect() < 1e-10);
            if (i < 10) {
                const auto ev = transfer_matrix_amplitudes(pot, branch_momentum(ue(rng), pot));
                worst_ev = std::max(worst_ev, identity_residuals(ev).evanescent);
            }
        }
    }
    CHECK(worst < 1e-10);
    CHECK(worst_ev < 1e-10);
}

TEST_CASE("S matrix shapes") {
    const auto s2 = smatrix(step_amplitudes(branch_momentum(2.0, 1.0)));
    CHECK(s2.dim() == 2);
    CHECK(s2.unitarity_defect() < 1e-12);
    const auto s1 = smatrix(step_amplitudes(branch_momentum(0.5, 1.0)));
    CHECK(s1.dim() == 1);
    CHECK(std::abs(std::abs(s1.m(0, 0)) - 1.0) < 1e-14);
    const auto id = smatrix(transfer_matrix_amplitudes(Potential::free_particle(),
                                                       branch_momentum(1.0, 0.0)));
    CHECK((id.m - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("scattering wave asymptotics and normalization") {
    const auto pot = Potential::pure_step(1.0);
    const auto bm = branch_momentum(2.0, pot);
    const auto w = scattering_wave(pot, bm, Side::Plus, Incidence::Left);
    const double x = -10.0;
    const cplx want = (std::exp(I * 2.0 * x) + kRs * std::exp(-I * 2.0 * x)) / std::sqrt(2.0 * pi);
    CHECK(std::abs(w(x) - want) < 1e-14);
    const auto wr = scattering_wave(pot, branch_momentum(-2.0, pot), Side::Plus, Incidence::Right);
    CHECK(std::abs(wr.normalization() - 1.0 / std::sqrt(2.0 * pi) * std::pow(2.0, 0.25)) < 1e-14);
    CHECK_THROWS_AS(scattering_wave(pot, bm, Side::Minus, Incidence::Left), ConfigError);
    CHECK_THROWS_AS(scattering_wave(pot, branch_momentum(1.0, pot), Incidence::Right), ConfigError);

    const auto ev = scattering_wave(pot, branch_momentum(1.0, pot), Incidence::Left);
    for (double xx : {1.0, 2.0, 5.0}) {
        CHECK(std::abs(ev(xx + 1.0)) / std::abs(ev(xx)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    }
    const auto fr = scattering_wave(Potential::free_particle(), branch_momentum(1.7, 0.0), Incidence::Left);
    for (double xx : {-3.0, 0.0, 4.0})
        CHECK(std::abs(fr(xx) - std::exp(I * 1.7 * xx) / std::sqrt(2.0 * pi)) < 1e-15);
}

TEST_CASE("interior wave satisfies the stationary equation to second order") {
    const Potential pot(1.0, -1.0, 1.0, {{-1.0, -0.2, 2.5}, {0.3, 1.0, -0.5}}, {{0.0, 0.4}});
    const auto bm = branch_momentum(1.8, pot);
    for (auto inc : {Incidence::Left, Incidence::Right}) {
        const auto w = scattering_wave(pot, bm, inc);
        auto resid = [&](double h) {
            double worst = 0.0;
            for (double x : {-0.7, -0.5, 0.6, 0.8}) {
                const double kk = 2.0 * (bm.energy() - pot(x));
                const cplx d2 = (w.raw(x + h) - 2.0 * w.raw(x) + w.raw(x - h)) / (h * h);
                worst = std::max(worst, std::abs(d2 + kk * w.raw(x)));
            }
            return worst;
        };
        const double r1 = resid(1e-2);
        const double r2 = resid(5e-3);
        CHECK(r2 < r1 / 3.5);
        // Continuity of value and the delta jump in the derivative.
        const double e = 1e-9;
        CHECK(std::abs(w.raw(-e) - w.raw(e)) < 1e-7);
        const cplx jump = w.raw_derivative(e) - w.raw_derivative(-e);
        CHECK(std::abs(jump - 2.0 * 0.4 * w.raw(0.0)) < 1e-6);
    }
}

TEST_CASE("overlap of scattering states approximates a delta function") {
    const auto pot = Potential::step_delta(1.0, 0.2);
    const double p = 2.0;
    const double box = 400.0;
    const auto xs = gauss_legendre(-box, box, 1600);
    const auto ref = scattering_wave(pot, branch_momentum(p, pot), Incidence::Left);
    std::vector<cplx> conj_ref(xs.x.size());
    for (std::size_t i = 0; i < xs.x.size(); ++i) conj_ref[i] = std::conj(ref(xs.x[i])) * xs.w[i];
    auto overlap = [&](double pp) {
        const auto w = scattering_wave(pot, branch_momentum(pp, pot), Incidence::Left);
        cplx s = 0.0;
        for (std::size_t i = 0; i < xs.x.size(); ++i) s += conj_ref[i] * w(xs.x[i]);
        return s;
    };
    const auto ps = gauss_legendre(p - 0.5, p + 0.5, 40);
    cplx area = 0.0;
    double peak_val = 0.0;
    double peak_at = 0.0;
    for (std::size_t i = 0; i < ps.x.size(); ++i) {
        const cplx o = overlap(ps.x[i]);
        area += ps.w[i] * o;
        if (std::abs(o) > peak_val) {
            peak_val = std::abs(o);
            peak_at = ps.x[i];
        }
    }
    CHECK(std::abs(area - 1.0) < 0.01);
    CHECK(std::abs(peak_at - p) < 0.01);
    // On the diagonal the overlap is the box-integrated density.
    const double diag = box / (2.0 * pi) *
                        (1.0 + std::norm(ref.reflected()) + std::norm(ref.transmitted()));
    CHECK(std::abs(overlap(p) - diag) < 0.01 * diag);
}
