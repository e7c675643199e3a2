#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stepscat/quadrature.hpp"
#include "stepscat/spectral.hpp"

using namespace stepscat;

namespace {

Potential square_well(double depth, double width) {
    return Potential(1.0, -0.5 * width, 0.5 * width, {{-0.5 * width, 0.5 * width, depth}});
}

// int u v over [a, b], split at the potential's breakpoints.
double inner(const BoundState& u, const BoundState& v, const Potential& pot) {
    const auto bps = pot.breakpoints();
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
        const auto nw = gauss_legendre(bps[k], bps[k + 1], 20);
        for (std::size_t i = 0; i < nw.x.size(); ++i) sum += nw.w[i] * u(nw.x[i]) * v(nw.x[i]);
    }
    return sum;
}

// Once the packet has cleared, the distance must not grow with |t| until it
// reaches the synthesis floor.
void check_decay(const MollerCurve& c) {
    std::vector<double> in, out;
    for (const auto& pt : c.points) {
        if (std::abs(pt.t) < c.clear_time) continue;
        (pt.t < 0 ? in : out).push_back(pt.distance);
    }
    std::reverse(in.begin(), in.end());
    for (const auto* branch : {&in, &out}) {
        REQUIRE(branch->size() >= 3);
        for (std::size_t i = 1; i < branch->size(); ++i)
            if ((*branch)[i - 1] > 1e-7) CHECK((*branch)[i] <= (*branch)[i - 1] * (1.0 + 1e-9));
        CHECK(branch->back() < 1e-3);
    }
}

}  // namespace

TEST_CASE("no bound states without a well") {
    CHECK(find_bound_states(Potential::pure_step(1.0)).empty());
    CHECK(find_bound_states(Potential::free_particle()).empty());
    CHECK(find_bound_states(Potential::step_delta(1.0, 0.5)).empty());
    CHECK(find_bound_states(Potential(1.0, -1.0, 1.0, {{-1.0, 1.0, 0.4}})).empty());
}

TEST_CASE("attractive delta: single level -m S^2/(2 hbar^2)") {
    for (double s : {-0.2, -0.7, -2.0}) {
        const Potential d(0.0, 0.0, 0.0, {}, {{0.0, s}});
        const auto states = find_bound_states(d);
        REQUIRE(states.size() == 1);
        CHECK(std::abs(states[0].energy() - (-0.5 * s * s)) < 1e-12);
        CHECK(states[0].kappa_left() == doctest::Approx(std::abs(s)));
    }
    const Units u{0.7, 1.9};
    const Potential d(0.0, 0.0, 0.0, {}, {{0.0, -0.5}}, u);
    const auto states = find_bound_states(d);
    REQUIRE(states.size() == 1);
    CHECK(std::abs(states[0].energy() + u.mass * 0.25 / (2.0 * u.hbar * u.hbar)) < 1e-12);
}

TEST_CASE("square well on the step against the finite-difference oracle") {
    for (double width : {1.0, 3.0, 6.0}) {
        const auto pot = square_well(-2.0, width);
        const auto states = find_bound_states(pot);
        const auto oracle = oracle::finite_difference_bound_energies(pot, 25.0, 0.004);
        CAPTURE(width);
        REQUIRE(states.size() == oracle.size());
        REQUIRE(!states.empty());
        for (std::size_t i = 0; i < states.size(); ++i) {
            CHECK(std::abs(states[i].energy() - oracle[i]) < 1e-3);
            if (i > 0) CHECK(states[i].energy() > states[i - 1].energy());
        }
    }
}

TEST_CASE("bound-state invariants") {
    const Potential pot(1.0, -2.0, 1.5, {{-2.0, -0.5, -1.5}, {-0.5, 1.5, -0.8}}, {{0.3, -0.4}});
    const auto states = find_bound_states(pot);
    REQUIRE(states.size() >= 2);
    for (const auto& s : states) {
        CHECK(s.energy() < 0.0);
        CHECK(s.kappa_left() == doctest::Approx(std::sqrt(-2.0 * s.energy())).epsilon(1e-14));
        CHECK(s.kappa_right() == doctest::Approx(std::sqrt(2.0 * (1.0 - s.energy()))).epsilon(1e-14));
        // Norm: [a, b] by quadrature plus the exponential tails.
        const double inside = inner(s, s, pot);
        const double tails = std::pow(s(-2.0), 2) / (2.0 * s.kappa_left()) +
                             std::pow(s(1.5), 2) / (2.0 * s.kappa_right());
        CHECK(inside + tails == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(s(-5.0) == doctest::Approx(s(-2.0) * std::exp(-3.0 * s.kappa_left())).epsilon(1e-12));
        CHECK(s(4.0) == doctest::Approx(s(1.5) * std::exp(-2.5 * s.kappa_right())).epsilon(1e-12));
        // Stationary equation by central differences inside a segment.
        const double x = -1.0;
        const double h = 1e-3;
        const double d2 = (s(x + h) - 2.0 * s(x) + s(x - h)) / (h * h);
        CHECK(std::abs(-0.5 * d2 + (-1.5 - s.energy()) * s(x)) < 1e-5);
    }
    // Distinct levels are orthogonal.
    double overlap = inner(states[0], states[1], pot);
    const double k0 = states[0].kappa_left() + states[1].kappa_left();
    const double k1 = states[0].kappa_right() + states[1].kappa_right();
    overlap += states[0](-2.0) * states[1](-2.0) / k0 + states[0](1.5) * states[1](1.5) / k1;
    CHECK(std::abs(overlap) < 1e-10);
    const std::vector<double> xs{-3.0, 0.0, 2.0};
    const auto sampled = states[0].sample(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(sampled[i] == states[0](xs[i]));
}

TEST_CASE("shallowing well: levels disappear continuously") {
    std::size_t prev_count = 100;
    double last_energy = -10.0;
    bool vanished = false;
    for (int i = 0; i <= 60; ++i) {
        const double depth = -2.0 + 2.0 * i / 60.0;
        const auto pot = square_well(depth, 1.0);
        const auto states = find_bound_states(pot);
        CHECK(states.size() <= prev_count);
        if (!states.empty()) {
            CHECK(states[0].energy() >= last_energy - 1e-12);
            last_energy = states[0].energy();
        } else if (prev_count == 1) {
            vanished = true;
            // The last level was already at the edge of the continuum.
            CHECK(last_energy > -2e-3);
        }
        prev_count = states.size();
    }
    CHECK(vanished);
    // The oracle agrees at a depth well away from the critical one.
    const auto pot = square_well(-1.5, 1.0);
    CHECK(find_bound_states(pot).size() == oracle::finite_difference_bound_energies(pot, 25.0, 0.004).size());
}

TEST_CASE("resolution of the identity") {
    const auto g = gaussian_test_function(0.0, 1.0);
    SUBCASE("pure step") {
        const auto r = completeness_check(Potential::pure_step(1.0), g);
        CHECK(r.defect <= 1e-3);
        CHECK(r.bound_states == 0);
        CHECK(r.p_nodes >= 780);
        CHECK(r.p_nodes <= 820);
    }
    SUBCASE("plane waves") {
        CHECK(completeness_check(Potential::free_particle(), g).defect <= 1e-6);
    }
    SUBCASE("barrier and spike: truncation error shrinks with p_max") {
        // The spike puts a kink in every eigenfunction, so overlaps fall off
        // as p^-2 and the truncated defect as p_max^-3/2.
        const Potential pot(0.6, -1.0, 2.0, {{-1.0, 0.5, 1.3}}, {{1.2, 0.4}});
        const auto f = gaussian_test_function(0.5, 1.0);
        const double d12 = completeness_check(pot, f, {800, 12.0}).defect;
        const double d24 = completeness_check(pot, f, {1600, 24.0}).defect;
        const double rate = std::log2(d24 / d12);
        CHECK(d12 < 1e-2);
        CHECK(rate < -1.0);
        CHECK(rate > -2.0);
    }
    SUBCASE("bound-state gap") {
        const auto pot = square_well(-2.0, 1.0);
        const auto f = gaussian_test_function(1.0, 0.8);
        const auto r = completeness_check(pot, f);
        REQUIRE(r.bound_states == 1);
        CHECK(r.defect <= 3e-3);
        CHECK(r.bound_weight > 0.2);
        CHECK(r.defect_without_bound * r.defect_without_bound ==
              doctest::Approx(r.bound_weight).epsilon(1e-2));
    }
    CHECK_THROWS_AS(completeness_check(Potential::pure_step(1.0), g, {800, 1.0}), ConfigError);
}

TEST_CASE("wavepacket asymptotes") {
    SUBCASE("vanishing potential: the state is its asymptote") {
        const auto c = moller_limit_check(Potential::free_particle(), ReferenceChannel::Left, {});
        for (const auto& pt : c.points) CHECK(pt.distance < 1e-12);
        CHECK(c.max_norm_defect() < 1e-6);
    }
    SUBCASE("free packet at t = 0 sits at its position") {
        const PacketSpec spec{2.0, 0.1, -7.0};
        const auto pair = evolve_packet(Potential::free_particle(), ReferenceChannel::Left, spec,
                                        Asymptote::In, 0.0, 80.0);
        double mean = 0.0;
        for (std::size_t i = 0; i < pair.asymptote.x.size(); ++i)
            mean += pair.asymptote.weights[i] * pair.asymptote.x[i] * std::norm(pair.asymptote.values[i]);
        CHECK(mean == doctest::Approx(-7.0).epsilon(1e-8));
        CHECK(pair.asymptote.norm() == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("step plus delta: decay in all three reference channels") {
        const auto pot = Potential::step_delta(1.0, 0.01);
        for (auto ch : {ReferenceChannel::Left, ReferenceChannel::Right, ReferenceChannel::Step}) {
            CAPTURE(to_string(ch));
            const auto c = moller_limit_check(pot, ch, {});
            CHECK(c.max_norm_defect() <= 1e-6);
            for (const auto& pt : c.points) CHECK(std::abs(pt.reference_norm - 1.0) <= 1e-6);
            check_decay(c);
            CHECK(c.points.size() == 48);
            CHECK(c.points.front().t < 0.0);
            CHECK(c.points.back().t > 0.0);
        }
    }
    SUBCASE("thresholds rejected") {
        const auto pot = Potential::step_delta(1.0, 0.01);
        CHECK_THROWS_AS(moller_limit_check(pot, ReferenceChannel::Left, {1.45, 0.06, 0.0}), ConfigError);
        CHECK_THROWS_AS(moller_limit_check(pot, ReferenceChannel::Right, {0.3, 0.06, 0.0}), ConfigError);
        CHECK_THROWS_AS(moller_limit_check(pot, ReferenceChannel::Step, {1.7, 0.06, 0.0}), ConfigError);
        CHECK_THROWS_AS(moller_limit_check(pot, ReferenceChannel::Left, {2.0, -0.1, 0.0}), ConfigError);
    }
}
