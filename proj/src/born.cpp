#include "stepscat/born.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/QR>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/tools/minima.hpp>

#include "stepscat/closed_form.hpp"
#include "stepscat/greens.hpp"
#include "stepscat/ls_engine.hpp"
#include "stepscat/quadrature.hpp"
#include "stepscat/special_functions.hpp"

namespace stepscat {

std::string to_string(BornScheme scheme) {
    switch (scheme) {
        case BornScheme::Mm1: return "mm1";
        case BornScheme::Mm2: return "mm2";
        case BornScheme::Lp1: return "lp1";
        case BornScheme::InOut1: return "inout1";
    }
    return "?";
}

namespace {

void require_positive_label(const BranchMomentum& bm) {
    if (!(bm.p > 0.0)) throw ConfigError("Born amplitudes are defined for p > 0");
}

QuadratureGrid grid_for(const Potential& pot, bool with_origin, std::size_t nodes) {
    std::vector<double> bps = pot.breakpoints();
    if (with_origin || (pot.a() <= 0.0 && pot.b() >= 0.0)) bps.push_back(0.0);
    return QuadratureGrid::from_breakpoints(bps, nodes);
}

// int_a^b f(x) u(x) dx + sum_d f(x_d) S_d
cplx integrate(const QuadratureGrid& grid, const Potential& pot, const std::function<cplx(double)>& f,
               const std::function<double(double)>& u) {
    cplx s = 0.0;
    const auto x = grid.nodes();
    const auto w = grid.weights();
    for (std::size_t i = 0; i < grid.size(); ++i) s += w[i] * f(x[i]) * u(x[i]);
    for (const auto& d : pot.deltas()) s += f(d.x0) * d.strength;
    return s;
}

BornResult make_result(BornScheme scheme, const BranchMomentum& bm, cplx value, double wavenumber) {
    BornResult r;
    r.scheme = scheme;
    r.label = bm.p;
    r.value = value;
    r.wavenumber = wavenumber;
    return r;
}

}  // namespace

cplx born_mm1_step_delta(const BranchMomentum& bm, double v1, const Units& units) {
    const double v0 = (bm.p * bm.p - std::real(bm.q * bm.q)) / (2.0 * units.mass);
    return units.mass * (v0 - 2.0 * I * bm.p * v1 / units.hbar) / (2.0 * bm.p * bm.p);
}

cplx born_lp1_step_delta(const BranchMomentum& bm, double v1, const Units& units) {
    const cplx p = bm.p;
    const cplx q = bm.q;
    return (p * p - q * q - 4.0 * units.mass * I * v1 * p / units.hbar) / ((p + q) * (p + q));
}

cplx born_inout1_step_delta(const BranchMomentum& bm, double v1, const Units& units) {
    const cplx q = bm.q;
    return (bm.p - q) / (2.0 * q) + units.mass * v1 / (I * units.hbar * q);
}

BornResult born_mm1(const Potential& pot, const BranchMomentum& bm, const BornOptions& opts) {
    require_positive_label(bm);
    const Units& u = pot.units();
    const double k = bm.p / u.hbar;
    const auto grid = grid_for(pot, false, opts.nodes);
    cplx m = integrate(grid, pot, [k](double x) { return std::exp(2.0 * I * k * x); },
                       [&pot](double x) { return pot(x); });
    if (pot.v0() != 0.0) m += pot.v0() * tail_right(2.0 * k, pot.b());
    return make_result(BornScheme::Mm1, bm, -I * u.mass / (u.hbar * bm.p) * m, k);
}

BornResult born_mm1_right(const Potential& pot, const BranchMomentum& bm, const BornOptions& opts) {
    require_positive_label(bm);
    if (!bm.two_open()) throw ConfigError("right reflection needs two open channels");
    const Units& u = pot.units();
    const double v0 = pot.v0();
    const cplx kq = bm.q / u.hbar;
    const auto grid = grid_for(pot, false, opts.nodes);
    cplx m = integrate(grid, pot, [kq](double x) { return std::exp(-2.0 * I * kq * x); },
                       [&pot, v0](double x) { return pot(x) - v0; });
    if (v0 != 0.0) m -= v0 * tail_left(-2.0 * kq, pot.a());
    return make_result(BornScheme::Mm1, bm, -I * u.mass / (u.hbar * bm.q) * m, kq.real());
}

BornResult born_lp1(const Potential& pot, const BranchMomentum& bm, const BornOptions& opts) {
    require_positive_label(bm);
    if (!(pot.a() <= 0.0 && pot.b() >= 0.0)) throw ConfigError("step reference needs 0 inside [a, b]");
    const Units& u = pot.units();
    const double v0 = pot.v0();
    const auto grid = grid_for(pot, true, opts.nodes);
    const auto phi = [&](double x) {
        const cplx s = step_state(bm.p, bm.q, Incidence::Left, x, u);
        return s * s;
    };
    const cplx m = integrate(grid, pot, phi, [&pot, v0](double x) { return x >= 0.0 ? pot(x) - v0 : pot(x); });
    const cplx rs = (bm.p - bm.q) / (bm.p + bm.q);
    return make_result(BornScheme::Lp1, bm, rs - I * u.mass / (u.hbar * bm.p) * m, bm.p / u.hbar);
}

namespace {

// Neville extrapolation of (h_i, f_i) to h = 0; returns the value and the
// last increment.
std::pair<cplx, double> extrapolate_to_zero(const std::vector<double>& h, std::vector<cplx> f) {
    const std::size_t n = h.size();
    cplx prev = f[0];
    double last = 0.0;
    for (std::size_t m = 1; m < n; ++m) {
        for (std::size_t i = 0; i + m < n; ++i)
            f[i] = (h[i] * f[i + 1] - h[i + m] * f[i]) / (h[i] - h[i + m]);
        last = std::abs(f[0] - prev);
        prev = f[0];
    }
    return {f[0], last};
}

}  // namespace

BornResult born_mm2(const Potential& pot, const BranchMomentum& bm, const BornOptions& opts) {
    require_positive_label(bm);
    const Units& u = pot.units();
    const double k = bm.p / u.hbar;
    const double v0 = pot.v0();
    const double b = pot.b();
    const cplx g = -I * u.mass / (u.hbar * bm.p);
    const auto kern = [g, k](double x, double y) { return g * std::exp(I * k * std::abs(x - y)); };
    const auto grid = grid_for(pot, false, opts.nodes);
    const auto& rule = reference_rule();
    const auto f = [k](double x) { return std::exp(I * k * x); };

    // inner(x) = int_a^b K(x,y) V(y) e^{iky} dy + deltas, panels split at x.
    const auto inner = [&](double x) {
        cplx s = 0.0;
        for (const auto& pn : grid.panels()) {
            const double v = pot(0.5 * (pn.lo + pn.hi));
            if (v == 0.0) continue;
            auto piece = [&](double lo, double hi) {
                const double mid = 0.5 * (lo + hi);
                const double half = 0.5 * (hi - lo);
                cplx t = 0.0;
                for (std::size_t j = 0; j < kPanelOrder; ++j) {
                    const double y = mid + half * rule.nodes[j];
                    t += half * rule.weights[j] * kern(x, y) * f(y);
                }
                return v * t;
            };
            if (x > pn.lo && x < pn.hi)
                s += piece(pn.lo, x) + piece(x, pn.hi);
            else
                s += piece(pn.lo, pn.hi);
        }
        for (const auto& d : pot.deltas()) s += kern(x, d.x0) * d.strength * f(d.x0);
        return s;
    };

    // Damping-independent part: both points inside [a, b].
    cplx inside = 0.0;
    {
        const auto x = grid.nodes();
        const auto w = grid.weights();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double v = pot(x[i]);
            if (v != 0.0) inside += w[i] * f(x[i]) * v * inner(x[i]);
        }
        for (const auto& d : pot.deltas()) inside += d.strength * f(d.x0) * inner(d.x0);
    }
    // f(x) e^{-ikx} = V(x) in the cross terms.
    const cplx source = integrate(grid, pot, [](double) { return cplx(1.0); }, [&pot](double x) { return pot(x); });

    const std::vector<double> ladder{0.2, 0.1, 0.05, 0.025};
    std::vector<double> eps;
    std::vector<cplx> vals;
    for (double c : ladder) {
        const double e = c * k;
        cplx total = inside;
        if (v0 != 0.0) {
            // x in [a, b] against y > b: K = g e^{ik(y - x)}, so f(x) K f(y)
            // carries e^{2iky} e^{-eps (y - b)}; counted twice by symmetry.
            const cplx tail = std::exp(e * b) * tail_right(cplx(2.0 * k, e), b);
            total += 2.0 * g * v0 * source * tail;
            // Both points beyond b.
            const cplx both = 2.0 / ((cplx(e, -2.0 * k)) * (cplx(2.0 * e, -2.0 * k)));
            total += g * v0 * v0 * std::exp(2.0 * I * k * b) * both;
        }
        eps.push_back(e);
        vals.push_back(total);
    }
    const auto [limit, increment] = extrapolate_to_zero(eps, vals);
    const cplx pre = -I * u.mass / (u.hbar * bm.p);
    BornResult r = make_result(BornScheme::Mm2, bm, pre * limit, k);
    r.error = std::abs(pre) * increment;
    for (std::size_t i = 0; i < eps.size(); ++i) r.parameters.emplace_back("eps" + std::to_string(i), eps[i]);
    if (!(r.error <= 1e-2 * std::max(std::abs(r.value), 1e-300)))
        throw NumericalError("second-order extrapolation did not settle (increment " + std::to_string(r.error) +
                             ")");
    return r;
}

namespace {

// int_b^inf f(kt (x' - x)/hbar) e^{ikx'} dx' for L = b - x > 0, from the
// Laplace form f(y) = int_0^inf e^{-yt}/(1 + t^2) dt.
cplx auxiliary_tail(double kt, double k, double b, double len, double hbar) {
    boost::math::quadrature::exp_sinh<double> es;
    const double scale = kt * len / hbar;
    auto integrand = [&](double uu, bool imag) {
        const double t = uu / scale;
        const cplx v = std::exp(-uu) / (1.0 + t * t) / cplx(kt * t / hbar, -k) / scale;
        return imag ? v.imag() : v.real();
    };
    const double re = es.integrate([&](double uu) { return integrand(uu, false); }, 1e-14);
    const double im = es.integrate([&](double uu) { return integrand(uu, true); }, 1e-14);
    return std::exp(I * k * b) * cplx(re, im);
}

struct Fit {
    cplx incident;
    cplx reflected;
    double residual;
};

Fit fit_reflected(const std::vector<double>& xs, const std::vector<double>& lens, const std::vector<cplx>& s,
                  double k, double kr, std::size_t terms) {
    const auto n = Eigen::Index(xs.size());
    Eigen::MatrixXcd a(n, Eigen::Index(2 + terms));
    Eigen::VectorXcd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = xs[std::size_t(i)];
        const double inv = lens[0] / lens[std::size_t(i)];
        a(i, 0) = std::exp(I * k * x);
        a(i, 1) = std::exp(-I * kr * x);
        double pw = 1.0;
        for (std::size_t j = 0; j < terms; ++j) {
            pw *= inv;
            a(i, Eigen::Index(2 + j)) = pw;
        }
        rhs(i) = s[std::size_t(i)];
    }
    const Eigen::VectorXcd c = a.colPivHouseholderQr().solve(rhs);
    return {c(0), c(1), (a * c - rhs).norm() / std::max(rhs.norm(), 1e-300)};
}

// Gauss-Newton on (kr, linear coefficients) jointly; the bracketing search
// only locates kr to about sqrt(machine epsilon).
double polish_wavenumber(const std::vector<double>& xs, const std::vector<double>& lens, const std::vector<cplx>& s,
                         double k, double kr, std::size_t terms) {
    const auto n = Eigen::Index(xs.size());
    const auto ncoef = Eigen::Index(2 + terms);
    for (int iter = 0; iter < 6; ++iter) {
        const Fit fit = fit_reflected(xs, lens, s, k, kr, terms);
        Eigen::MatrixXd a(2 * n, 2 * ncoef + 1);
        Eigen::VectorXd rhs(2 * n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = xs[std::size_t(i)];
            const double inv = lens[0] / lens[std::size_t(i)];
            std::vector<cplx> cols{std::exp(I * k * x), std::exp(-I * kr * x)};
            double pw = 1.0;
            for (std::size_t j = 0; j < terms; ++j) cols.push_back(pw *= inv);
            for (Eigen::Index j = 0; j < ncoef; ++j) {
                const cplx c = cols[std::size_t(j)];
                a(2 * i, 2 * j) = c.real();
                a(2 * i, 2 * j + 1) = -c.imag();
                a(2 * i + 1, 2 * j) = c.imag();
                a(2 * i + 1, 2 * j + 1) = c.real();
            }
            const cplx dk = -I * x * fit.reflected * std::exp(-I * kr * x);
            a(2 * i, 2 * ncoef) = dk.real();
            a(2 * i + 1, 2 * ncoef) = dk.imag();
            const cplx r = s[std::size_t(i)] + dk * kr;
            rhs(2 * i) = r.real();
            rhs(2 * i + 1) = r.imag();
        }
        const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
        const double next = sol(2 * ncoef);
        const bool done = std::abs(next - kr) <= 1e-15 * std::abs(kr);
        kr = next;
        if (done) break;
    }
    return kr;
}

}  // namespace

BornResult born_inout1(const Potential& pot, const BranchMomentum& bm, const InOutWindow& window,
                       const BornOptions& opts) {
    require_positive_label(bm);
    if (!bm.two_open()) throw ConfigError("in/out first order needs a propagating right channel");
    const Units& u = pot.units();
    const double v0 = pot.v0();
    const double e = bm.energy();
    const double k = bm.p / u.hbar;
    const double qabs = std::abs(bm.q);
    const double near = window.near > 0.0 ? window.near : 300.0 * u.hbar / qabs;
    const double far = window.far > 0.0 ? window.far : 2.0 * near;
    if (!(far > near)) throw ConfigError("in/out fit window is empty");
    // The wavenumber scan reaches 2.5 k; sample finely enough that neither it
    // nor the incident wave aliases.
    const double kmax = 3.5 * k;
    const std::size_t samples =
        window.samples > 0 ? window.samples : static_cast<std::size_t>(std::ceil((far - near) * kmax / pi * 2.0)) + 1;
    if (samples < 2 + window.transient_terms + 4) throw ConfigError("in/out fit window has too few samples");
    const double b = pot.b();
    const auto grid = grid_for(pot, false, opts.nodes);

    std::vector<double> xs, lens;
    std::vector<cplx> s;
    for (std::size_t n = 0; n < samples; ++n) {
        const double len = near + (far - near) * double(n) / double(samples - 1);
        const double x = b - len;
        cplx val = integrate(
            grid, pot,
            [&](double y) { return g_inout(KernelKind::In, e, Side::Plus, x, y, v0, u) * std::exp(I * k * y); },
            [&pot](double y) { return pot(y); });
        if (v0 != 0.0) {
            // y > b > x: K_+(E) = -A_E, K_-(E - V0) = A_{E-V0} + G_0(E - V0).
            const double kap_e = std::sqrt(2.0 * u.mass * e);
            const double kap_q = std::sqrt(2.0 * u.mass * (e - v0));
            const cplx ae = 2.0 * u.mass * I / (u.h() * kap_e) * auxiliary_tail(kap_e, k, b, len, u.hbar);
            const cplx aq = 2.0 * u.mass * I / (u.h() * kap_q) * auxiliary_tail(kap_q, k, b, len, u.hbar);
            const cplx g0 = -I * u.mass / (u.hbar * kap_q) * std::exp(-I * kap_q * x / u.hbar) *
                            tail_right((kap_q + bm.p) / u.hbar, b);
            val += v0 * (-ae + aq + g0);
        }
        xs.push_back(x);
        lens.push_back(len);
        s.push_back(val);
    }

    // Seed the reflected wavenumber at the periodogram peak of the samples,
    // then minimize the variable-projection residual inside that lobe.
    const std::size_t terms = window.transient_terms;
    const double lobe = 2.0 * pi / (far - near);
    const double lo = 0.05 * k;
    const double hi = 2.5 * k;
    double best = lo;
    double best_power = -1.0;
    for (double kr = lo; kr <= hi; kr += lobe / 16.0) {
        cplx acc = 0.0;
        for (std::size_t n = 0; n < xs.size(); ++n) acc += s[n] * std::exp(I * kr * xs[n]);
        if (std::norm(acc) > best_power) {
            best_power = std::norm(acc);
            best = kr;
        }
    }
    const auto refined = boost::math::tools::brent_find_minima(
        [&](double kr) { return fit_reflected(xs, lens, s, k, kr, terms).residual; }, best - lobe / 2.0,
        best + lobe / 2.0, std::numeric_limits<double>::digits);
    const double kr = polish_wavenumber(xs, lens, s, k, refined.first, terms);
    const Fit fit = fit_reflected(xs, lens, s, k, kr, terms);
    const Fit coarse = fit_reflected(xs, lens, s, k, kr, terms - 1);

    BornResult r = make_result(BornScheme::InOut1, bm, fit.reflected, kr);
    r.error = std::abs(fit.reflected - coarse.reflected);
    r.parameters = {{"near", near},
                    {"far", far},
                    {"samples", double(samples)},
                    {"transient_terms", double(terms)},
                    {"fit_residual", fit.residual},
                    {"incident_defect", std::abs(fit.incident)}};
    return r;
}

}  // namespace stepscat
