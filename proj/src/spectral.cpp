#include "stepscat/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "stepscat/closed_form.hpp"
#include "stepscat/quadrature.hpp"

namespace stepscat {

namespace {

constexpr std::size_t kEnergyScan = 4000;
constexpr double kEnergyTolerance = 1e-12;
constexpr double kPacketCut = 8.0;

double kk_of(double energy, double v, const Units& u) {
    return 2.0 * u.mass * (energy - v) / (u.hbar * u.hbar);
}

// Breakpoints with the potential on each interval and the delta jumps
// 2 m S / hbar^2 at each breakpoint.
struct Layout {
    std::vector<double> x;
    std::vector<double> v;
    std::vector<double> jump;
};

Layout layout_of(const Potential& pot) {
    Layout l;
    l.x = pot.breakpoints();
    const Units& u = pot.units();
    l.jump.assign(l.x.size(), 0.0);
    for (const auto& d : pot.deltas()) {
        const auto it = std::lower_bound(l.x.begin(), l.x.end(), d.x0);
        l.jump[static_cast<std::size_t>(it - l.x.begin())] +=
            2.0 * u.mass * d.strength / (u.hbar * u.hbar);
    }
    for (std::size_t i = 0; i + 1 < l.x.size(); ++i) l.v.push_back(pot(0.5 * (l.x[i] + l.x[i + 1])));
    return l;
}

double kappa(double energy, double level, const Units& u) {
    return std::sqrt(2.0 * u.mass * (level - energy)) / u.hbar;
}

// Coefficient (up to a positive factor) of the growing exponential for x > b
// when shooting with the decaying solution from x < a.
double growing_coefficient(const Layout& l, double energy, const Potential& pot) {
    const Units& u = pot.units();
    double psi = 1.0;
    double dpsi = kappa(energy, 0.0, u);
    for (std::size_t i = 0; i < l.x.size(); ++i) {
        dpsi += l.jump[i] * psi;
        if (i + 1 < l.x.size()) {
            const auto m = constant_region_propagator(kk_of(energy, l.v[i], u), l.x[i + 1] - l.x[i]);
            const double p = m(0, 0) * psi + m(0, 1) * dpsi;
            const double d = m(1, 0) * psi + m(1, 1) * dpsi;
            const double s = std::max(std::abs(p), std::abs(d));
            psi = p / s;
            dpsi = d / s;
        }
    }
    return kappa(energy, pot.v0(), u) * psi + dpsi;
}

double bisect(const Layout& l, const Potential& pot, double lo, double hi, double flo) {
    while (hi - lo > kEnergyTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = growing_coefficient(l, mid, pot);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::size_t pieces_for(double k, double length) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(k * length / 3.0)));
}

}  // namespace

double BoundState::operator()(double x) const {
    if (x < nodes_.front().x) return nodes_.front().psi * std::exp(kappa_l_ * (x - nodes_.front().x));
    if (x > nodes_.back().x) return nodes_.back().psi * std::exp(-kappa_r_ * (x - nodes_.back().x));
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x,
                               [](double v, const Node& n) { return v < n.x; });
    const auto i = static_cast<std::size_t>(std::distance(nodes_.begin(), it)) - 1;
    if (i + 1 >= nodes_.size()) return nodes_.back().psi;
    const auto m = constant_region_propagator(kk_of(energy_, interval_v_[i], units_), x - nodes_[i].x);
    return m(0, 0) * nodes_[i].psi + m(0, 1) * nodes_[i].dpsi;
}

std::vector<double> BoundState::sample(std::span<const double> x) const {
    std::vector<double> out;
    out.reserve(x.size());
    for (double xi : x) out.push_back((*this)(xi));
    return out;
}

std::vector<BoundState> find_bound_states(const Potential& pot) {
    const Units& u = pot.units();
    const double top = std::min(0.0, pot.v0());
    double attractive = 0.0;
    for (const auto& d : pot.deltas())
        if (d.strength < 0) attractive += -d.strength;
    // A single spike carrying all the attractive strength on the deepest
    // level binds deepest.
    const double bottom = pot.min_value() - u.mass * attractive * attractive / (2.0 * u.hbar * u.hbar);
    std::vector<BoundState> out;
    if (!(bottom < top)) return out;

    const Layout l = layout_of(pot);
    // Scan uniform in sqrt(top - E), dense near the continuum edge.
    const double umax = std::sqrt(top - bottom) * (1.0 + 1e-9);
    std::vector<double> roots;
    double e_prev = top - std::pow(umax / double(kEnergyScan), 2);
    double f_prev = growing_coefficient(l, e_prev, pot);
    for (std::size_t i = 2; i <= kEnergyScan; ++i) {
        const double uu = umax * double(i) / double(kEnergyScan);
        const double e = top - uu * uu;
        const double f = growing_coefficient(l, e, pot);
        if (f == 0.0) {
            roots.push_back(e);
        } else if ((f < 0) != (f_prev < 0) && f_prev != 0.0) {
            roots.push_back(bisect(l, pot, e, e_prev, f));
        }
        e_prev = e;
        f_prev = f;
    }
    std::sort(roots.begin(), roots.end());

    for (double e : roots) {
        BoundState s;
        s.energy_ = e;
        s.units_ = u;
        s.kappa_l_ = kappa(e, 0.0, u);
        s.kappa_r_ = kappa(e, pot.v0(), u);
        s.interval_v_ = l.v;
        double psi = 1.0;
        double dpsi = s.kappa_l_;
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            dpsi += l.jump[i] * psi;
            s.nodes_.push_back({l.x[i], psi, dpsi});
            if (i + 1 < l.x.size()) {
                const auto m = constant_region_propagator(kk_of(e, l.v[i], u), l.x[i + 1] - l.x[i]);
                const double p = m(0, 0) * psi + m(0, 1) * dpsi;
                dpsi = m(1, 0) * psi + m(1, 1) * dpsi;
                psi = p;
            }
        }
        double norm2 = s.nodes_.front().psi * s.nodes_.front().psi / (2.0 * s.kappa_l_) +
                       s.nodes_.back().psi * s.nodes_.back().psi / (2.0 * s.kappa_r_);
        for (std::size_t i = 0; i + 1 < l.x.size(); ++i) {
            const double k = std::sqrt(std::abs(kk_of(e, l.v[i], u)));
            const auto nw = gauss_legendre(l.x[i], l.x[i + 1], pieces_for(k, l.x[i + 1] - l.x[i]));
            for (std::size_t j = 0; j < nw.x.size(); ++j) {
                const double y = s(nw.x[j]);
                norm2 += nw.w[j] * y * y;
            }
        }
        const double scale = 1.0 / std::sqrt(norm2);
        for (auto& n : s.nodes_) {
            n.psi *= scale;
            n.dpsi *= scale;
        }
        out.push_back(std::move(s));
    }
    return out;
}

TestFunction gaussian_test_function(double center, double width) {
    if (!(width > 0)) throw ConfigError("gaussian_test_function: width must be positive");
    return {[center, width](double x) {
                const double d = (x - center) / width;
                return cplx(std::exp(-0.5 * d * d));
            },
            center - 10.0 * width, center + 10.0 * width};
}

namespace {

// Quadrature grid on [lo, hi] aligned with the potential's breakpoints and
// fine enough for wavenumbers up to kmax.
NodesWeights spatial_grid(const Potential& pot, double lo, double hi, double kmax) {
    std::vector<double> bps{lo, hi};
    for (double x : pot.breakpoints())
        if (x > lo && x < hi) bps.push_back(x);
    std::sort(bps.begin(), bps.end());
    const double per_panel = 8.0;
    const auto panels = static_cast<std::size_t>(std::ceil((hi - lo) * kmax / per_panel)) + bps.size();
    const auto grid = QuadratureGrid::from_breakpoints(bps, panels * kPanelOrder);
    return {std::vector<double>(grid.nodes().begin(), grid.nodes().end()),
            std::vector<double>(grid.weights().begin(), grid.weights().end())};
}

// One continuum node: the state at a label and its weight in dp.
struct ContinuumNode {
    BranchMomentum bm;
    Incidence family;
    double weight;
};

std::vector<ContinuumNode> continuum_nodes(const Potential& pot, const CompletenessOptions& opts) {
    const double p0 = pot.p0();
    if (!(opts.p_max > p0)) throw ConfigError("completeness_check: p_max must exceed the threshold");
    if (opts.p_nodes < 3 * kPanelOrder) throw ConfigError("completeness_check: too few p nodes");
    const double qmax = std::sqrt(opts.p_max * opts.p_max - p0 * p0);
    const double total = p0 + 2.0 * (opts.p_max - p0);
    auto pieces = [&](double length) {
        const double share = double(opts.p_nodes) * length / total / double(kPanelOrder);
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(share)));
    };
    std::vector<ContinuumNode> out;
    if (p0 > 0) {
        const auto nw = gauss_legendre(0.0, pi / 2.0, pieces(p0));
        for (std::size_t i = 0; i < nw.x.size(); ++i) {
            const double p = p0 * std::sin(nw.x[i]);
            out.push_back({branch_momentum(p, pot), Incidence::Left, nw.w[i] * p0 * std::cos(nw.x[i])});
        }
    }
    const auto nw = gauss_legendre(0.0, qmax, pieces(opts.p_max - p0));
    for (std::size_t i = 0; i < nw.x.size(); ++i) {
        const double q = nw.x[i];
        const double p = std::sqrt(q * q + p0 * p0);
        out.push_back({branch_momentum(p, pot), Incidence::Left, nw.w[i] * q / p});
        out.push_back({branch_momentum(-p, pot), Incidence::Right, nw.w[i] * q / p});
    }
    return out;
}

}  // namespace

CompletenessResult completeness_check(const Potential& pot, const TestFunction& f,
                                      const CompletenessOptions& opts) {
    if (!(f.hi > f.lo)) throw ConfigError("completeness_check: empty test-function window");
    const double kmax = opts.p_max / pot.units().hbar;
    const auto xs = spatial_grid(pot, f.lo, f.hi, kmax);
    const std::size_t nx = xs.x.size();

    Eigen::VectorXcd fw(nx);
    Eigen::VectorXcd fv(nx);
    double fnorm2 = 0.0;
    for (std::size_t j = 0; j < nx; ++j) {
        fv(Eigen::Index(j)) = f.f(xs.x[j]);
        fw(Eigen::Index(j)) = xs.w[j] * fv(Eigen::Index(j));
        fnorm2 += xs.w[j] * std::norm(fv(Eigen::Index(j)));
    }

    const auto nodes = continuum_nodes(pot, opts);
    Eigen::VectorXcd rec = Eigen::VectorXcd::Zero(Eigen::Index(nx));
    Eigen::VectorXcd col(nx);
    for (const auto& n : nodes) {
        const auto wave = scattering_wave(pot, n.bm, n.family);
        for (std::size_t j = 0; j < nx; ++j) col(Eigen::Index(j)) = wave(xs.x[j]);
        const cplx overlap = col.dot(fw);  // conjugates col
        rec += (n.weight * overlap) * col;
    }

    const auto bound = find_bound_states(pot);
    Eigen::VectorXcd rec_bound = Eigen::VectorXcd::Zero(Eigen::Index(nx));
    double bound_weight = 0.0;
    for (const auto& s : bound) {
        Eigen::VectorXd b(nx);
        for (std::size_t j = 0; j < nx; ++j) b(Eigen::Index(j)) = s(xs.x[j]);
        const cplx overlap = b.cast<cplx>().dot(fw);
        rec_bound += overlap * b.cast<cplx>();
        bound_weight += std::norm(overlap);
    }

    auto rel_norm = [&](const Eigen::VectorXcd& r) {
        double s = 0.0;
        for (std::size_t j = 0; j < nx; ++j) s += xs.w[j] * std::norm(r(Eigen::Index(j)));
        return std::sqrt(s / fnorm2);
    };
    CompletenessResult res;
    res.defect = rel_norm(fv - rec - rec_bound);
    res.defect_without_bound = rel_norm(fv - rec);
    res.bound_weight = bound_weight / fnorm2;
    res.bound_states = bound.size();
    res.p_nodes = nodes.size();
    res.x_nodes = nx;
    return res;
}

std::string to_string(ReferenceChannel channel) {
    switch (channel) {
        case ReferenceChannel::Left: return "left";
        case ReferenceChannel::Right: return "right";
        case ReferenceChannel::Step: return "step";
    }
    return "?";
}

double Wavepacket::norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += weights[i] * std::norm(values[i]);
    return std::sqrt(s);
}

double MollerCurve::max_norm_defect() const {
    double m = 0.0;
    for (const auto& pt : points) m = std::max(m, std::abs(pt.norm - 1.0));
    return m;
}

namespace {

// Spectral synthesis of psi(t) and phi(t) for one asymptote. Both are sums
// over the same channel-momentum grid with the same coefficients and
// energies; only the eigenfunctions differ.
class Synthesis {
public:
    Synthesis(const Potential& pot, ReferenceChannel channel, const PacketSpec& packet,
              Asymptote asymptote, double box, double t_max)
        : xs_(spatial_grid(pot, -box, box, kmax_of(pot, channel, packet))) {
        const Units& u = pot.units();
        const double p0 = pot.p0();
        const double lo_mag = packet.momentum - kPacketCut * packet.width;
        const double hi_mag = packet.momentum + kPacketCut * packet.width;
        const bool step_out = channel == ReferenceChannel::Step && asymptote == Asymptote::Out;
        // Channel momentum sign: incoming from the left and outgoing to the
        // right move in +x.
        int dir = 1;
        if (channel == ReferenceChannel::Left && asymptote == Asymptote::Out) dir = -1;
        if (channel == ReferenceChannel::Right && asymptote == Asymptote::In) dir = -1;
        if (!(lo_mag > 0.0)) throw ConfigError("moller_limit_check: packet overlaps zero momentum");
        if (channel != ReferenceChannel::Right && p0 > 0 && lo_mag <= p0 && hi_mag >= p0)
            throw ConfigError("moller_limit_check: packet overlaps the channel threshold");
        if (step_out && lo_mag <= p0)
            throw ConfigError("moller_limit_check: outgoing step packet needs an open right channel");

        const Potential step = Potential::pure_step(pot.v0(), u);
        const double vmax = std::sqrt(hi_mag * hi_mag + p0 * p0) / u.mass;
        const double span = (hi_mag - lo_mag) * (box + vmax * t_max) / u.hbar;
        const auto pieces = static_cast<std::size_t>(std::ceil(span / 10.0)) + 4;
        const auto nw = gauss_legendre(lo_mag, hi_mag, pieces);
        const std::size_t np = nw.x.size();
        const std::size_t nx = xs_.x.size();
        full_.resize(Eigen::Index(nx), Eigen::Index(np));
        ref_.resize(Eigen::Index(nx), Eigen::Index(np));
        coeff_.resize(Eigen::Index(np));
        energy_.resize(Eigen::Index(np));
        const double inv_sqrt_h = 1.0 / std::sqrt(u.h());
        const double norm_c = std::pow(2.0 * pi * packet.width * packet.width, -0.25);
        for (std::size_t i = 0; i < np; ++i) {
            const double k = dir * nw.x[i];
            const double d = (nw.x[i] - packet.momentum) / packet.width;
            coeff_(Eigen::Index(i)) =
                nw.w[i] * norm_c * std::exp(-0.25 * d * d) * std::exp(-I * k * packet.position / u.hbar);
            const auto col = Eigen::Index(i);
            auto fill = [&](Eigen::MatrixXcd& m, auto&& g) {
                for (std::size_t j = 0; j < nx; ++j) m(Eigen::Index(j), col) = g(xs_.x[j]);
            };
            if (channel == ReferenceChannel::Right) {
                // Label p with the channel momentum k; raw/sqrt(h) is
                // normalized in k.
                const double p = dir * std::sqrt(k * k + p0 * p0);
                const auto bm = branch_momentum(p, pot);
                const auto wave = scattering_wave(pot, bm, Incidence::Right);
                energy_(col) = bm.energy();
                fill(full_, [&](double x) { return wave.raw(x) * inv_sqrt_h; });
                fill(ref_, [&](double x) { return std::exp(I * k * x / u.hbar) * inv_sqrt_h; });
            } else {
                const auto bm = branch_momentum(k, pot);
                const Incidence fam = step_out ? Incidence::Right : Incidence::Left;
                const auto wave = scattering_wave(pot, bm, fam);
                energy_(col) = bm.energy();
                fill(full_, [&](double x) { return wave(x); });
                if (channel == ReferenceChannel::Left) {
                    fill(ref_, [&](double x) { return std::exp(I * k * x / u.hbar) * inv_sqrt_h; });
                } else {
                    const auto sw = scattering_wave(step, branch_momentum(k, step), fam);
                    fill(ref_, [&](double x) { return sw(x); });
                }
            }
        }
        hbar_ = u.hbar;
    }

    std::size_t p_nodes() const { return std::size_t(coeff_.size()); }
    std::size_t x_nodes() const { return xs_.x.size(); }

    PacketPair at(double t) const {
        const Eigen::VectorXcd c =
            coeff_.array() * (-I * energy_.cast<cplx>().array() * (t / hbar_)).exp();
        const Eigen::VectorXcd psi = full_ * c;
        const Eigen::VectorXcd phi = ref_ * c;
        PacketPair out;
        out.state = {xs_.x, xs_.w, std::vector<cplx>(psi.data(), psi.data() + psi.size())};
        out.asymptote = {xs_.x, xs_.w, std::vector<cplx>(phi.data(), phi.data() + phi.size())};
        return out;
    }

private:
    static double kmax_of(const Potential& pot, ReferenceChannel, const PacketSpec& packet) {
        const double hi = packet.momentum + kPacketCut * packet.width;
        return std::sqrt(hi * hi + pot.p0() * pot.p0()) / pot.units().hbar;
    }

    NodesWeights xs_;
    Eigen::MatrixXcd full_;
    Eigen::MatrixXcd ref_;
    Eigen::VectorXcd coeff_;
    Eigen::VectorXd energy_;
    double hbar_ = 1.0;
};

void check_packet(const PacketSpec& packet) {
    if (!(packet.momentum > 0) || !(packet.width > 0) || !std::isfinite(packet.position))
        throw ConfigError("packet: momentum and width must be positive");
}

}  // namespace

PacketPair evolve_packet(const Potential& pot, ReferenceChannel channel, const PacketSpec& packet,
                         Asymptote asymptote, double t, double box) {
    check_packet(packet);
    if (!(box > 0)) throw ConfigError("evolve_packet: box must be positive");
    return Synthesis(pot, channel, packet, asymptote, box, std::abs(t)).at(t);
}

MollerCurve moller_limit_check(const Potential& pot, ReferenceChannel channel,
                               const PacketSpec& packet, const MollerOptions& opts) {
    check_packet(packet);
    if (opts.times_per_sign < 2 || !(opts.t_min > 0) || !(opts.t_max > opts.t_min))
        throw ConfigError("moller_limit_check: bad time grid");
    const Units& u = pot.units();
    const double p0 = pot.p0();
    const double sigma_x = u.hbar / (2.0 * packet.width);
    const double reach = std::max(std::abs(pot.a()), std::abs(pot.b())) + std::abs(packet.position);
    const double v_min = (packet.momentum - 4.0 * packet.width) / u.mass;
    const double hi = packet.momentum + kPacketCut * packet.width;
    const double v_max = std::sqrt(hi * hi + p0 * p0) / u.mass;

    MollerCurve curve;
    curve.channel = channel;
    curve.clear_time = (reach + kPacketCut * sigma_x) / v_min;
    const double t_lo = opts.t_min * curve.clear_time;
    const double t_hi = opts.t_max * curve.clear_time;
    const double spread = u.hbar * t_hi / (2.0 * u.mass * sigma_x * sigma_x);
    curve.box = reach + v_max * t_hi + 10.0 * sigma_x * std::sqrt(1.0 + spread * spread);

    std::vector<double> ts;
    for (std::size_t i = 0; i < opts.times_per_sign; ++i)
        ts.push_back(t_lo * std::pow(t_hi / t_lo, double(i) / double(opts.times_per_sign - 1)));

    for (Asymptote side : {Asymptote::In, Asymptote::Out}) {
        const Synthesis syn(pot, channel, packet, side, curve.box, t_hi);
        curve.p_nodes = std::max(curve.p_nodes, syn.p_nodes());
        curve.x_nodes = syn.x_nodes();
        for (double tt : ts) {
            const double t = side == Asymptote::In ? -tt : tt;
            const auto pair = syn.at(t);
            Wavepacket diff = pair.state;
            for (std::size_t j = 0; j < diff.values.size(); ++j) diff.values[j] -= pair.asymptote.values[j];
            curve.points.push_back({t, diff.norm(), pair.state.norm(), pair.asymptote.norm()});
        }
    }
    std::sort(curve.points.begin(), curve.points.end(),
              [](const MollerPoint& l, const MollerPoint& r) { return l.t < r.t; });
    return curve;
}

}  // namespace stepscat
