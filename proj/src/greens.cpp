#include "stepscat/greens.hpp"

#include <cmath>
#include <vector>

#include "stepscat/special_functions.hpp"

namespace stepscat {

cplx resolvent_momentum(cplx z, Side side, const Units& units) {
    if (z == 0.0) throw ConfigError("resolvent at the branch point z = 0");
    const double m2 = 2.0 * units.mass;
    if (z.imag() == 0.0) {
        const double e = z.real();
        if (e > 0.0) return sign_of(side) * std::sqrt(m2 * e);
        return cplx(0.0, std::sqrt(-m2 * e));
    }
    cplx k = std::sqrt(m2 * z);
    if (k.imag() < 0.0) k = -k;
    return k;
}

cplx g_free(cplx z, Side side, double x, double xp, const Units& units) {
    const cplx k = resolvent_momentum(z, side, units);
    return -I * units.mass / (units.hbar * k) * std::exp(I * k * std::abs(x - xp) / units.hbar);
}

cplx g_shifted(cplx z, Side side, double x, double xp, double v0, const Units& units) {
    if (z == cplx(v0)) throw ConfigError("shifted resolvent at its branch point z = V0");
    return g_free(z - v0, side, x, xp, units);
}

StepKernelParams step_kernel_params(double energy, Side side, double v0, const Units& units) {
    if (!(energy > 0.0)) throw ConfigError("step kernel needs E > 0");
    if (energy == v0) throw ConfigError("step kernel at the branch point E = V0");
    StepKernelParams k;
    k.abs_p = std::sqrt(2.0 * units.mass * energy);
    if (energy > v0)
        k.mu = std::sqrt(2.0 * units.mass * (energy - v0));
    else
        k.mu = cplx(0.0, sign_of(side) * std::sqrt(2.0 * units.mass * (v0 - energy)));
    k.t = 2.0 * k.abs_p / (k.abs_p + k.mu);
    k.r = (k.abs_p - k.mu) / (k.abs_p + k.mu);
    return k;
}

cplx g_step(double energy, Side side, double x, double xp, double v0, const Units& units) {
    const auto k = step_kernel_params(energy, side, v0, units);
    const double s = sign_of(side);
    const double hb = units.hbar;
    const cplx pre = s * units.mass / (I * hb);
    const double ap = k.abs_p;
    if (xp < 0.0 && x < 0.0)
        return pre / ap *
               (std::exp(I * s * ap * std::abs(x - xp) / hb) + k.r * std::exp(-I * s * ap * (x + xp) / hb));
    if (xp < 0.0)
        return pre / ap * k.t * std::exp(I * s * (k.mu * x - ap * xp) / hb);
    if (x < 0.0)
        return pre / ap * k.t * std::exp(I * s * (k.mu * xp - ap * x) / hb);
    return pre / k.mu *
           (std::exp(I * s * k.mu * std::abs(x - xp) / hb) - k.r * std::exp(I * s * k.mu * (x + xp) / hb));
}

namespace {

// Outgoing (+i0) projected kernel as a function of d = x - x'.
cplx projected_plus(int xi, double zeta, double d, const Units& u) {
    const double m = u.mass;
    const double hb = u.hbar;
    const double sd = d > 0.0 ? 1.0 : -1.0;
    if (zeta > 0.0) {
        const double kap = std::sqrt(2.0 * m * zeta);
        const double y = kap * std::abs(d) / hb;
        const cplx amp = 2.0 * m * I / (u.h() * kap) * sici_auxiliary(y).f;
        const cplx g0 = -I * m / (hb * kap) * std::exp(I * y);
        return double(xi) * amp * sd + ((xi * d > 0.0) ? g0 : cplx(0.0));
    }
    const double gam = std::sqrt(2.0 * m * -zeta);
    const double w = gam * std::abs(d) / hb;
    const double g0 = -m / (hb * gam) * std::exp(-w);
    const cplx odd = -(4.0 * m * I / u.h()) / (2.0 * gam) * (scaled_ei(w) + scaled_e1(w));
    return 0.5 * g0 + 0.5 * double(xi) * sd * odd;
}

}  // namespace

cplx projected_free_kernel(int xi, double zeta, Side side, double x, double xp, const Units& units) {
    if (xi != 1 && xi != -1) throw ConfigError("projector index must be +1 or -1");
    if (zeta == 0.0) throw ConfigError("projected kernel at the branch point");
    if (x == xp) throw ConfigError("projected kernel is singular at x = x'");
    const double d = x - xp;
    if (side == Side::Plus) return projected_plus(xi, zeta, d, units);
    return std::conj(projected_plus(xi, zeta, -d, units));
}

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Free: return "free";
        case KernelKind::Shifted: return "shifted";
        case KernelKind::Step: return "step";
        case KernelKind::In: return "in";
        case KernelKind::Out: return "out";
    }
    return "?";
}

cplx g_inout(KernelKind kind, double energy, Side side, double x, double xp, double v0,
             const Units& units) {
    if (kind != KernelKind::In && kind != KernelKind::Out)
        throw ConfigError("g_inout needs the in or out kind");
    const double lower = energy - v0;
    if (kind == KernelKind::In)
        return projected_free_kernel(1, energy, side, x, xp, units) +
               projected_free_kernel(-1, lower, side, x, xp, units);
    return projected_free_kernel(1, lower, side, x, xp, units) +
           projected_free_kernel(-1, energy, side, x, xp, units);
}

ResolventKernel::ResolventKernel(KernelKind kind, double energy, Side side, double v0, Units units)
    : kind_(kind), energy_(energy), side_(side), v0_(v0), units_(units) {}

cplx ResolventKernel::operator()(double x, double xp) const {
    switch (kind_) {
        case KernelKind::Free: return g_free(energy_, side_, x, xp, units_);
        case KernelKind::Shifted: return g_shifted(energy_, side_, x, xp, v0_, units_);
        case KernelKind::Step: return g_step(energy_, side_, x, xp, v0_, units_);
        default: return g_inout(kind_, energy_, side_, x, xp, v0_, units_);
    }
}

double ResolventKernel::reference_potential(double x) const {
    switch (kind_) {
        case KernelKind::Free: return 0.0;
        case KernelKind::Shifted: return v0_;
        case KernelKind::Step: return x >= 0.0 ? v0_ : 0.0;
        default: throw ConfigError("in/out reference Hamiltonians are non-local");
    }
}

double residual_check(const ResolventKernel& kernel, const std::function<double(double)>& f,
                      const ResidualWindow& win) {
    const double h = win.h;
    if (!(h > 0.0) || !(win.hi > win.lo) || !(win.eval_hi > win.eval_lo))
        throw ConfigError("residual_check: invalid window");
    // Source cells are centered between the x nodes, so every kink of the
    // kernel at x' = x falls on a cell boundary.
    const double origin = win.lo;
    const auto ncell = static_cast<std::size_t>(std::ceil((win.hi - win.lo) / h));
    std::vector<double> xs(ncell), fs(ncell);
    for (std::size_t j = 0; j < ncell; ++j) {
        xs[j] = origin + (double(j) + 0.5) * h;
        fs[j] = f(xs[j]) * h;
    }
    const auto i0 = static_cast<long>(std::floor((win.eval_lo - origin) / h));
    const auto i1 = static_cast<long>(std::ceil((win.eval_hi - origin) / h));
    const Units& u = kernel.units();
    const double c2 = u.hbar * u.hbar / (2.0 * u.mass);
    const bool inout = kernel.kind() == KernelKind::In || kernel.kind() == KernelKind::Out;

    struct Piece {
        std::function<cplx(double, double)> k;
        double zeta;
        std::function<double(double)> vref;
    };
    std::vector<Piece> pieces;
    const double e = kernel.energy();
    const double v0 = kernel.v0();
    const Side side = kernel.side();
    if (inout) {
        const bool in = kernel.kind() == KernelKind::In;
        const double zp = in ? e : e - v0;
        const double zm = in ? e - v0 : e;
        pieces.push_back({[=](double x, double xp) { return projected_free_kernel(1, zp, side, x, xp, u); },
                          zp, [](double) { return 0.0; }});
        pieces.push_back({[=](double x, double xp) { return projected_free_kernel(-1, zm, side, x, xp, u); },
                          zm, [](double) { return 0.0; }});
    } else {
        pieces.push_back({[&kernel](double x, double xp) { return kernel(x, xp); }, e,
                          [&kernel](double x) { return kernel.reference_potential(x); }});
    }

    // u on the evaluation nodes plus one on each side, per piece.
    const std::size_t npts = static_cast<std::size_t>(i1 - i0 + 3);
    std::vector<std::vector<cplx>> us(pieces.size(), std::vector<cplx>(npts));
    for (std::size_t k = 0; k < pieces.size(); ++k)
        for (std::size_t n = 0; n < npts; ++n) {
            const double x = origin + double(i0 - 1 + long(n)) * h;
            cplx s = 0.0;
            for (std::size_t j = 0; j < ncell; ++j) s += pieces[k].k(x, xs[j]) * fs[j];
            us[k][n] = s;
        }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t n = 1; n + 1 < npts; ++n) {
        const double x = origin + double(i0 - 1 + long(n)) * h;
        cplx total = -f(x);
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            const auto& uk = us[k];
            total += pieces[k].zeta * uk[n] + c2 * (uk[n + 1] - 2.0 * uk[n] + uk[n - 1]) / (h * h) -
                     pieces[k].vref(x) * uk[n];
        }
        num += std::norm(total);
        den += f(x) * f(x);
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace stepscat
