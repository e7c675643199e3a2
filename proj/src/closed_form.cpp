#include "stepscat/closed_form.hpp"

#include <algorithm>
#include <cmath>

namespace stepscat {

Eigen::Matrix2d constant_region_propagator(double kk, double length) {
    Eigen::Matrix2d m;
    if (kk > 0.0) {
        const double k = std::sqrt(kk);
        const double c = std::cos(k * length);
        const double s = std::sin(k * length);
        m << c, s / k, -k * s, c;
    } else if (kk < 0.0) {
        const double g = std::sqrt(-kk);
        const double c = std::cosh(g * length);
        const double s = std::sinh(g * length);
        m << c, s / g, g * s, c;
    } else {
        m << 1.0, length, 0.0, 1.0;
    }
    return m;
}

namespace {

// Solution of the stationary equation sampled at the breakpoints. Stored
// values are scaled: true value = stored * exp(log_scale).
struct Sweep {
    std::vector<double> x;
    std::vector<double> v;  // potential on (x[i], x[i+1])
    std::vector<double> jump;  // 2 m S / hbar^2 at x[i]
    std::vector<cplx> psi;
    std::vector<cplx> dlo;
    std::vector<cplx> dhi;
    std::vector<double> log_scale;
};

Sweep make_sweep(const Potential& pot) {
    Sweep s;
    s.x = pot.breakpoints();
    const std::size_t n = s.x.size();
    s.jump.assign(n, 0.0);
    const double c = 2.0 * pot.units().mass / (pot.units().hbar * pot.units().hbar);
    for (const auto& d : pot.deltas()) {
        const auto it = std::lower_bound(s.x.begin(), s.x.end(), d.x0);
        s.jump[static_cast<std::size_t>(it - s.x.begin())] += c * d.strength;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) s.v.push_back(pot(0.5 * (s.x[i] + s.x[i + 1])));
    s.psi.assign(n, 0.0);
    s.dlo.assign(n, 0.0);
    s.dhi.assign(n, 0.0);
    s.log_scale.assign(n, 0.0);
    return s;
}

double kk_of(double energy, double v, const Units& u) {
    return 2.0 * u.mass * (energy - v) / (u.hbar * u.hbar);
}

void rescale(Sweep& s, std::size_t i, double base_log) {
    const double mag = std::max({std::abs(s.psi[i]), std::abs(s.dlo[i]), std::abs(s.dhi[i])});
    s.log_scale[i] = base_log;
    if (mag > 0.0 && std::isfinite(mag)) {
        s.psi[i] /= mag;
        s.dlo[i] /= mag;
        s.dhi[i] /= mag;
        s.log_scale[i] += std::log(mag);
    }
}

// Given (psi, dhi) at the last node, integrate leftwards.
void sweep_backward(Sweep& s, double energy, const Units& u, cplx psi_b, cplx dpsi_b) {
    const std::size_t n = s.x.size();
    s.psi[n - 1] = psi_b;
    s.dhi[n - 1] = dpsi_b;
    s.dlo[n - 1] = dpsi_b - s.jump[n - 1] * psi_b;
    rescale(s, n - 1, 0.0);
    for (std::size_t j = n - 1; j > 0; --j) {
        const auto m = constant_region_propagator(kk_of(energy, s.v[j - 1], u), s.x[j - 1] - s.x[j]);
        const cplx psi = m(0, 0) * s.psi[j] + m(0, 1) * s.dlo[j];
        const cplx dpsi = m(1, 0) * s.psi[j] + m(1, 1) * s.dlo[j];
        s.psi[j - 1] = psi;
        s.dhi[j - 1] = dpsi;
        s.dlo[j - 1] = dpsi - s.jump[j - 1] * psi;
        rescale(s, j - 1, s.log_scale[j]);
    }
}

// Given (psi, dlo) at the first node, integrate rightwards.
void sweep_forward(Sweep& s, double energy, const Units& u, cplx psi_a, cplx dpsi_a) {
    const std::size_t n = s.x.size();
    s.psi[0] = psi_a;
    s.dlo[0] = dpsi_a;
    s.dhi[0] = dpsi_a + s.jump[0] * psi_a;
    rescale(s, 0, 0.0);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const auto m = constant_region_propagator(kk_of(energy, s.v[j], u), s.x[j + 1] - s.x[j]);
        const cplx psi = m(0, 0) * s.psi[j] + m(0, 1) * s.dhi[j];
        const cplx dpsi = m(1, 0) * s.psi[j] + m(1, 1) * s.dhi[j];
        s.psi[j + 1] = psi;
        s.dlo[j + 1] = dpsi;
        s.dhi[j + 1] = dpsi + s.jump[j + 1] * psi;
        rescale(s, j + 1, s.log_scale[j]);
    }
}

bool usable(cplx c) { return std::isfinite(c.real()) && std::isfinite(c.imag()) && c != 0.0; }

struct FamilyResult {
    cplx trans;
    cplx refl;
    Sweep sweep;
};

// Left family at label p: backward from b with the transmitted wave.
FamilyResult solve_left_family(const Potential& pot, double p, cplx q) {
    const Units& u = pot.units();
    const double energy = p * p / (2.0 * u.mass);
    const double k = p / u.hbar;
    const cplx kap = q / u.hbar;
    Sweep s = make_sweep(pot);
    const double b = s.x.back();
    const double a = s.x.front();
    sweep_backward(s, energy, u, std::exp(I * kap * b), I * kap * std::exp(I * kap * b));
    const cplx psi = s.psi.front();
    const cplx dpsi = s.dlo.front();
    const cplx amp_in = 0.5 * (psi + dpsi / (I * k)) * std::exp(-I * k * a);
    const cplx amp_out = 0.5 * (psi - dpsi / (I * k)) * std::exp(I * k * a);
    if (!usable(amp_in)) throw NumericalError("transfer matrix: singular matching (left family)");
    const cplx a_true = amp_in * std::exp(s.log_scale.front());
    if (!usable(a_true)) throw NumericalError("transfer matrix: transmitted amplitude underflow");
    const double ls0 = s.log_scale.front();
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        const cplx f = std::exp(s.log_scale[i] - ls0) / amp_in;
        s.psi[i] *= f;
        s.dlo[i] *= f;
        s.dhi[i] *= f;
        s.log_scale[i] = 0.0;
    }
    return {1.0 / a_true, amp_out / amp_in, std::move(s)};
}

// Right family at label pl (two open channels): forward from a.
FamilyResult solve_right_family(const Potential& pot, double pl, cplx ql) {
    const Units& u = pot.units();
    const double energy = pl * pl / (2.0 * u.mass);
    const double k = pl / u.hbar;
    const cplx kap = ql / u.hbar;
    Sweep s = make_sweep(pot);
    const double a = s.x.front();
    const double b = s.x.back();
    sweep_forward(s, energy, u, std::exp(I * k * a), I * k * std::exp(I * k * a));
    const cplx psi = s.psi.back();
    const cplx dpsi = s.dhi.back();
    const cplx amp_in = 0.5 * (psi + dpsi / (I * kap)) * std::exp(-I * kap * b);
    const cplx amp_out = 0.5 * (psi - dpsi / (I * kap)) * std::exp(I * kap * b);
    if (!usable(amp_in)) throw NumericalError("transfer matrix: singular matching (right family)");
    const cplx c_true = amp_in * std::exp(s.log_scale.back());
    if (!usable(c_true)) throw NumericalError("transfer matrix: transmitted amplitude underflow");
    const double lsn = s.log_scale.back();
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        const cplx f = std::exp(s.log_scale[i] - lsn) / amp_in;
        s.psi[i] *= f;
        s.dlo[i] *= f;
        s.dhi[i] *= f;
        s.log_scale[i] = 0.0;
    }
    return {1.0 / c_true, amp_out / amp_in, std::move(s)};
}

}  // namespace

AmplitudeSet step_amplitudes(const BranchMomentum& bm) {
    const cplx p = bm.p;
    const cplx q = bm.q;
    AmplitudeSet amp;
    amp.p = bm.p;
    amp.q = bm.q;
    amp.channel = bm.channel;
    amp.t_l = 2.0 * p / (p + q);
    amp.r_l = (p - q) / (p + q);
    if (bm.two_open()) {
        amp.t_r = 2.0 * q / (p + q);
        amp.r_r = (q - p) / (p + q);
    }
    return amp;
}

cplx step_delta_exact_rl(const BranchMomentum& bm, double v1, const Units& units) {
    const cplx alpha = I * (2.0 * units.mass * v1 / units.hbar);
    return (bm.p - bm.q - alpha) / (bm.p + bm.q + alpha);
}

AmplitudeSet transfer_matrix_amplitudes(const Potential& pot, const BranchMomentum& bm) {
    if (bm.at_threshold) throw ConfigError("transfer matrix: label at the channel threshold");
    AmplitudeSet amp;
    amp.p = bm.p;
    amp.q = bm.q;
    amp.channel = bm.channel;
    const auto left = solve_left_family(pot, bm.p, bm.q);
    amp.t_l = left.trans;
    amp.r_l = left.refl;
    if (bm.two_open()) {
        const auto right = solve_right_family(pot, -bm.p, -bm.q);
        amp.t_r = right.trans;
        amp.r_r = right.refl;
    }
    return amp;
}

double SMatrix::unitarity_defect() const {
    const Eigen::MatrixXcd d =
        m * m.adjoint() - Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    return d.cwiseAbs().maxCoeff();
}

SMatrix smatrix(const AmplitudeSet& amp) {
    SMatrix s;
    if (amp.two_open()) {
        const cplx ratio = amp.q / amp.p;
        s.m.resize(2, 2);
        s.m << std::sqrt(ratio) * amp.t_l, amp.r_l, *amp.r_r, std::sqrt(1.0 / ratio) * *amp.t_r;
    } else {
        s.m.resize(1, 1);
        s.m << amp.r_l;
    }
    return s;
}

double IdentityResiduals::max() const {
    return std::max({flux_left, flux_right, cross, time_reversal, evanescent});
}

IdentityResiduals identity_residuals(const AmplitudeSet& amp) {
    IdentityResiduals r;
    if (amp.two_open()) {
        const cplx qp = amp.q / amp.p;
        const cplx pq = amp.p / amp.q;
        r.flux_left = std::abs(qp.real() * std::norm(amp.t_l) + std::norm(amp.r_l) - 1.0);
        r.flux_right = std::abs(pq.real() * std::norm(*amp.t_r) + std::norm(*amp.r_r) - 1.0);
        r.cross = std::abs(pq * *amp.t_r * std::conj(amp.r_l) + *amp.r_r * std::conj(amp.t_l));
        r.time_reversal =
            std::abs(*amp.t_r - qp * amp.t_l) / std::max(1.0, std::abs(*amp.t_r));
    } else {
        r.evanescent = std::abs(std::abs(amp.r_l) - 1.0);
    }
    return r;
}

ScatteringWave scattering_wave(const Potential& pot, const BranchMomentum& bm, Side sign,
                               Incidence incidence) {
    const Side family_sign = side_of(incidence == Incidence::Left ? sgn(bm.p) : -sgn(bm.p));
    if (sign != family_sign)
        throw ConfigError("scattering_wave: sign inconsistent with the label and family");
    if (bm.at_threshold) throw ConfigError("scattering_wave: label at the channel threshold");
    if (incidence == Incidence::Right && !bm.two_open())
        throw ConfigError("scattering_wave: right family needs two open channels");
    const Units& u = pot.units();
    const auto res = incidence == Incidence::Left ? solve_left_family(pot, bm.p, bm.q)
                                                  : solve_right_family(pot, bm.p, bm.q);
    ScatteringWave w;
    w.p_ = bm.p;
    w.q_ = bm.q;
    w.sign_ = sign;
    w.incidence_ = incidence;
    w.trans_ = res.trans;
    w.refl_ = res.refl;
    w.energy_ = bm.p * bm.p / (2.0 * u.mass);
    w.units_ = u;
    w.v0_ = pot.v0();
    const double inv_sqrt_h = 1.0 / std::sqrt(u.h());
    w.norm_ = incidence == Incidence::Left ? cplx(inv_sqrt_h)
                                           : std::sqrt(cplx(bm.p) / bm.q) * inv_sqrt_h;
    const auto& s = res.sweep;
    for (std::size_t i = 0; i < s.x.size(); ++i)
        w.nodes_.push_back({s.x[i], s.psi[i], s.dlo[i], s.dhi[i]});
    w.interval_v_ = s.v;
    return w;
}

ScatteringWave scattering_wave(const Potential& pot, const BranchMomentum& bm,
                               Incidence incidence) {
    const int s = incidence == Incidence::Left ? sgn(bm.p) : -sgn(bm.p);
    return scattering_wave(pot, bm, side_of(s), incidence);
}

cplx ScatteringWave::raw(double x) const {
    const double k = p_ / units_.hbar;
    const cplx kap = q_ / units_.hbar;
    if (x < nodes_.front().x) {
        if (incidence_ == Incidence::Left) return std::exp(I * k * x) + refl_ * std::exp(-I * k * x);
        return trans_ * std::exp(I * k * x);
    }
    if (x > nodes_.back().x) {
        if (incidence_ == Incidence::Left) return trans_ * std::exp(I * kap * x);
        return std::exp(I * kap * x) + refl_ * std::exp(-I * kap * x);
    }
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x,
                               [](double v, const Node& n) { return v < n.x; });
    const auto i = static_cast<std::size_t>(std::distance(nodes_.begin(), it)) - 1;
    if (i + 1 >= nodes_.size()) return nodes_.back().psi;
    const auto m = constant_region_propagator(
        2.0 * units_.mass * (energy_ - interval_v_[i]) / (units_.hbar * units_.hbar),
        x - nodes_[i].x);
    return m(0, 0) * nodes_[i].psi + m(0, 1) * nodes_[i].dpsi_hi;
}

cplx ScatteringWave::raw_derivative(double x) const {
    const double k = p_ / units_.hbar;
    const cplx kap = q_ / units_.hbar;
    if (x < nodes_.front().x) {
        if (incidence_ == Incidence::Left)
            return I * k * (std::exp(I * k * x) - refl_ * std::exp(-I * k * x));
        return I * k * trans_ * std::exp(I * k * x);
    }
    if (x > nodes_.back().x) {
        if (incidence_ == Incidence::Left) return I * kap * trans_ * std::exp(I * kap * x);
        return I * kap * (std::exp(I * kap * x) - refl_ * std::exp(-I * kap * x));
    }
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x,
                               [](double v, const Node& n) { return v < n.x; });
    const auto i = static_cast<std::size_t>(std::distance(nodes_.begin(), it)) - 1;
    if (i + 1 >= nodes_.size()) return nodes_.back().dpsi_hi;
    const auto m = constant_region_propagator(
        2.0 * units_.mass * (energy_ - interval_v_[i]) / (units_.hbar * units_.hbar),
        x - nodes_[i].x);
    return m(1, 0) * nodes_[i].psi + m(1, 1) * nodes_[i].dpsi_hi;
}

}  // namespace stepscat
