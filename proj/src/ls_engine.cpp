#include "stepscat/ls_engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>

#include <Eigen/LU>

namespace stepscat {

std::string to_string(Partitioning partitioning) {
    switch (partitioning) {
        case Partitioning::MmLeft: return "mm_left";
        case Partitioning::MmRight: return "mm_right";
        case Partitioning::Lp: return "lp";
    }
    return "?";
}

cplx tail_right(cplx wavenumber, double b) {
    if (wavenumber == 0.0) throw NumericalError("tail integral with vanishing wavenumber");
    if (wavenumber.imag() < 0.0) throw NumericalError("divergent right tail integral");
    return I * std::exp(I * wavenumber * b) / wavenumber;
}

cplx tail_left(cplx wavenumber, double a) {
    if (wavenumber == 0.0) throw NumericalError("tail integral with vanishing wavenumber");
    if (wavenumber.imag() > 0.0) throw NumericalError("divergent left tail integral");
    return -I * std::exp(I * wavenumber * a) / wavenumber;
}

cplx step_state(double p, cplx q, Incidence family, double x, const Units& units) {
    const cplx k = p / units.hbar;
    const cplx kap = q / units.hbar;
    if (family == Incidence::Left) {
        const cplx r = (cplx(p) - q) / (cplx(p) + q);
        const cplx t = 2.0 * p / (cplx(p) + q);
        return x < 0.0 ? std::exp(I * k * x) + r * std::exp(-I * k * x) : t * std::exp(I * kap * x);
    }
    const cplx r = (q - p) / (cplx(p) + q);
    const cplx t = 2.0 * q / (cplx(p) + q);
    return x < 0.0 ? t * std::exp(I * k * x) : std::exp(I * kap * x) + r * std::exp(-I * kap * x);
}

namespace detail {

// Constant residual potential outside [a, b] acting on a known plane wave
// with an unknown amplitude: u_t * C * e^{i kt x}.
struct Tail {
    bool present = false;
    bool right = true;  // x > b, else x < a
    double u = 0.0;
    cplx kt;
};

struct LsSystem {
    Potential pot;
    Partitioning partitioning = Partitioning::Lp;
    ResolventKernel kernel;
    QuadratureGrid grid;
    std::vector<double> panel_u;
    std::vector<double> dx;  // delta positions
    std::vector<double> ds;  // delta strengths
    Tail tail;
    cplx kg;  // kernel wavenumber (plane-wave kernels)
    cplx g;   // kernel prefactor, K = g e^{i kg |x - x'|}

    LsSystem(const Potential& p, Partitioning part, ResolventKernel k, std::size_t nodes,
             const std::function<double(double)>& residual)
        : pot(p), partitioning(part), kernel(std::move(k)) {
        std::vector<double> bps = pot.breakpoints();
        // The step edge is a panel edge for every partitioning, so step-projected
        // integrands stay smooth on each panel.
        if (pot.a() <= 0.0 && pot.b() >= 0.0) bps.push_back(0.0);
        std::sort(bps.begin(), bps.end());
        bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
        grid = QuadratureGrid::from_breakpoints(bps, nodes);
        for (const auto& pn : grid.panels()) panel_u.push_back(residual(0.5 * (pn.lo + pn.hi)));
        for (const auto& d : pot.deltas()) {
            dx.push_back(d.x0);
            ds.push_back(d.strength);
        }
        const Units& u = pot.units();
        if (kernel.kind() != KernelKind::Step) {
            const double z = kernel.kind() == KernelKind::Shifted ? kernel.energy() - kernel.v0()
                                                                   : kernel.energy();
            kg = resolvent_momentum(z, kernel.side(), u) / u.hbar;
            g = -I * u.mass / (u.hbar * u.hbar * kg);
        }
    }

    std::size_t n_nodes() const { return grid.size(); }
    std::size_t n_unknowns() const { return grid.size() + dx.size() + (tail.present ? 1 : 0); }
    double a() const { return pot.a(); }
    double b() const { return pot.b(); }

    cplx k(double x, double y) const { return kernel(x, y); }

    // Weights W_m with int_a^b K(x,y) U(y) f(y) dy ~ sum_m W_m f(x_m). The
    // panel holding x is split at x so the kink of K sits on a sub-panel edge.
    void quadrature_row(double x, cplx* out) const {
        const auto nodes = grid.nodes();
        const auto wts = grid.weights();
        const auto panels = grid.panels();
        const auto& rule = reference_rule();
        for (std::size_t j = 0; j < panels.size(); ++j) {
            const Panel& pn = panels[j];
            const double uj = panel_u[j];
            if (uj == 0.0) {
                for (std::size_t m = 0; m < kPanelOrder; ++m) out[pn.first + m] = 0.0;
                continue;
            }
            if (x > pn.lo && x < pn.hi) {
                for (std::size_t m = 0; m < kPanelOrder; ++m) out[pn.first + m] = 0.0;
                for (auto [lo, hi] : {std::pair{pn.lo, x}, std::pair{x, pn.hi}}) {
                    const double mid = 0.5 * (lo + hi);
                    const double half = 0.5 * (hi - lo);
                    for (std::size_t s = 0; s < kPanelOrder; ++s) {
                        const double y = mid + half * rule.nodes[s];
                        const cplx kw = k(x, y) * (uj * half * rule.weights[s]);
                        const auto basis = lagrange_basis(pn, y);
                        for (std::size_t m = 0; m < kPanelOrder; ++m) out[pn.first + m] += kw * basis[m];
                    }
                }
            } else {
                for (std::size_t m = 0; m < kPanelOrder; ++m) {
                    const std::size_t i = pn.first + m;
                    out[i] = k(x, nodes[i]) * (uj * wts[i]);
                }
            }
        }
    }

    // Coefficient of the tail amplitude in the equation at x (inside [a, b]).
    cplx tail_coefficient(double x) const {
        if (!tail.present) return 0.0;
        if (tail.right) return g * tail.u * std::exp(-I * kg * x) * tail_right(kg + tail.kt, b());
        return g * tail.u * std::exp(I * kg * x) * tail_left(tail.kt - kg, a());
    }

    // Full integral operator applied to stored unknowns at x in [a, b].
    cplx apply(double x, std::span<const cplx> unknowns) const {
        std::vector<cplx> row(n_nodes());
        quadrature_row(x, row.data());
        cplx s = 0.0;
        for (std::size_t m = 0; m < row.size(); ++m) s += row[m] * unknowns[m];
        for (std::size_t d = 0; d < dx.size(); ++d) s += k(x, dx[d]) * ds[d] * unknowns[n_nodes() + d];
        if (tail.present) s += tail_coefficient(x) * unknowns[n_nodes() + dx.size()];
        return s;
    }

    Eigen::MatrixXcd matrix() const {
        const std::size_t n = n_unknowns();
        const std::size_t nn = n_nodes();
        Eigen::MatrixXcd mat = Eigen::MatrixXcd::Identity(Eigen::Index(n), Eigen::Index(n));
        std::vector<cplx> row(nn);
        auto fill = [&](std::size_t r, double x) {
            quadrature_row(x, row.data());
            for (std::size_t m = 0; m < nn; ++m) mat(Eigen::Index(r), Eigen::Index(m)) -= row[m];
            for (std::size_t d = 0; d < dx.size(); ++d)
                mat(Eigen::Index(r), Eigen::Index(nn + d)) -= k(x, dx[d]) * ds[d];
            if (tail.present) mat(Eigen::Index(r), Eigen::Index(n - 1)) -= tail_coefficient(x);
        };
        for (std::size_t i = 0; i < nn; ++i) fill(i, grid.nodes()[i]);
        for (std::size_t d = 0; d < dx.size(); ++d) fill(nn + d, dx[d]);
        if (tail.present) {
            // The wave e^{+-i kg x} beyond the tail boundary must cancel the
            // incident wave: coefficient row = -1.
            const Eigen::Index r = Eigen::Index(n - 1);
            mat.row(r).setZero();
            const double dir = tail.right ? -1.0 : 1.0;
            for (std::size_t m = 0; m < nn; ++m) {
                const double x = grid.nodes()[m];
                mat(r, Eigen::Index(m)) = g * std::exp(dir * I * kg * x) * panel_u_at(m) * grid.weights()[m];
            }
            for (std::size_t d = 0; d < dx.size(); ++d)
                mat(r, Eigen::Index(nn + d)) = g * std::exp(dir * I * kg * dx[d]) * ds[d];
            if (tail.right)
                mat(r, r) = g * tail.u * I * std::exp(I * (tail.kt - kg) * b()) / (tail.kt - kg);
            else
                mat(r, r) = g * tail.u * -I * std::exp(I * (kg + tail.kt) * a()) / (kg + tail.kt);
        }
        return mat;
    }

    double panel_u_at(std::size_t node) const { return panel_u[node / kPanelOrder]; }

    Eigen::VectorXcd rhs(const std::function<cplx(double)>& ref) const {
        const std::size_t n = n_unknowns();
        const std::size_t nn = n_nodes();
        Eigen::VectorXcd v(Eigen::Index(n), 1);
        for (std::size_t i = 0; i < nn; ++i) v(Eigen::Index(i)) = ref(grid.nodes()[i]);
        for (std::size_t d = 0; d < dx.size(); ++d) v(Eigen::Index(nn + d)) = ref(dx[d]);
        if (tail.present) v(Eigen::Index(n - 1)) = -1.0;
        return v;
    }

    // sum_m w_m f(x_m) U_m psi_m + sum_d f(x_d) S_d psi_d
    cplx moment(const std::function<cplx(double)>& f, std::span<const cplx> unknowns) const {
        cplx s = 0.0;
        for (std::size_t m = 0; m < n_nodes(); ++m) {
            const double x = grid.nodes()[m];
            s += f(x) * panel_u_at(m) * grid.weights()[m] * unknowns[m];
        }
        for (std::size_t d = 0; d < dx.size(); ++d) s += f(dx[d]) * ds[d] * unknowns[n_nodes() + d];
        return s;
    }
};

}  // namespace detail

using detail::LsSystem;

namespace {

struct Solved {
    std::vector<std::vector<cplx>> unknowns;
    double residual = 0.0;
};

Solved solve_dense(const LsSystem& sys, const std::vector<std::function<cplx(double)>>& refs,
                   const LsOptions& opts) {
    Solved out;
    const Eigen::MatrixXcd a = sys.matrix();
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    const double rc = lu.rcond();
    if (!(rc > 1e-14))
        throw NumericalError("Lippmann-Schwinger system is singular (condition estimate " +
                             std::to_string(rc > 0.0 ? 1.0 / rc : INFINITY) + ")");
    for (const auto& ref : refs) {
        const Eigen::VectorXcd b = sys.rhs(ref);
        const Eigen::VectorXcd x = lu.solve(b);
        const double res = (a * x - b).norm() / std::max(b.norm(), 1e-300);
        out.residual = std::max(out.residual, res);
        out.unknowns.emplace_back(x.data(), x.data() + x.size());
    }
    if (!(out.residual <= opts.solve_tolerance))
        throw NumericalError("Lippmann-Schwinger solve residual " + std::to_string(out.residual) +
                             " above tolerance");
    return out;
}

void require_usable(const BranchMomentum& bm) {
    if (bm.at_threshold) throw ConfigError("label at the channel threshold is excluded");
}

double energy_of(const BranchMomentum& bm) { return bm.p * bm.p / (2.0 * bm.mass); }

std::function<double(double)> residual_fn(const Potential& pot, PartitionKind kind) {
    const auto part = partition(pot, kind);
    return [part](double x) { return part(x); };
}

}  // namespace

namespace detail {

struct LsAccess {
    static LSolution make(std::shared_ptr<const LsSystem> sys, const std::vector<cplx>& unknowns,
                          double residual, const BranchMomentum& bm, Side sign, Incidence fam) {
        LSolution s;
        const std::size_t nn = sys->n_nodes();
        s.values_.assign(unknowns.begin(), unknowns.begin() + long(nn));
        s.delta_values_.assign(unknowns.begin() + long(nn), unknowns.begin() + long(nn + sys->dx.size()));
        if (sys->tail.present) s.tail_ = unknowns.back();
        s.residual_ = residual;
        s.partitioning_ = sys->partitioning;
        s.system_ = std::move(sys);
        s.bm_ = bm;
        s.sign_ = sign;
        s.family_ = fam;
        return s;
    }
    static void set_amplitudes(LSolution& s, cplx t, cplx r) {
        s.trans_ = t;
        s.refl_ = r;
    }
    static const LsSystem& system(const LSolution& s) { return *s.system_; }
};

}  // namespace detail

using detail::LsAccess;

const QuadratureGrid& LSolution::grid() const { return system_->grid; }
const Potential& LSolution::potential() const { return system_->pot; }

cplx LSolution::normalization() const {
    const double inv = 1.0 / std::sqrt(system_->pot.units().h());
    if (family_ == Incidence::Left) return inv;
    return std::sqrt(cplx(bm_.p) / bm_.q) * inv;
}

namespace {

std::vector<cplx> unknown_vector(const LSolution& s) {
    std::vector<cplx> u(s.values().begin(), s.values().end());
    u.insert(u.end(), s.delta_values().begin(), s.delta_values().end());
    u.push_back(s.tail_amplitude());
    return u;
}

std::function<cplx(double)> plane(cplx wavenumber) {
    return [wavenumber](double x) { return std::exp(I * wavenumber * x); };
}

// sum_m w_m f(x_m) U(x_m) psi_m + sum_d f(x_d) S_d psi_d for an arbitrary U.
cplx moment_with(const LsSystem& sys, const std::function<cplx(double)>& f,
                 const std::function<double(double)>& u, std::span<const cplx> unknowns) {
    cplx s = 0.0;
    const auto nodes = sys.grid.nodes();
    const auto wts = sys.grid.weights();
    for (std::size_t m = 0; m < sys.n_nodes(); ++m) s += f(nodes[m]) * u(nodes[m]) * wts[m] * unknowns[m];
    for (std::size_t d = 0; d < sys.dx.size(); ++d) s += f(sys.dx[d]) * sys.ds[d] * unknowns[sys.n_nodes() + d];
    return s;
}

}  // namespace

cplx LSolution::operator()(double x) const {
    const Units& u = system_->pot.units();
    const cplx k = bm_.p / u.hbar;
    const cplx kap = bm_.q / u.hbar;
    const double a = system_->a();
    const double b = system_->b();
    if (x < a) {
        if (family_ == Incidence::Left) return std::exp(I * k * x) + refl_ * std::exp(-I * k * x);
        return trans_ * std::exp(I * k * x);
    }
    if (x > b) {
        if (family_ == Incidence::Left) return trans_ * std::exp(I * kap * x);
        return std::exp(I * kap * x) + refl_ * std::exp(-I * kap * x);
    }
    cplx ref;
    if (partitioning_ == Partitioning::Lp)
        ref = step_state(bm_.p, bm_.q, family_, x, u);
    else
        ref = family_ == Incidence::Left ? std::exp(I * k * x) : std::exp(I * kap * x);
    const auto unk = unknown_vector(*this);
    return ref + system_->apply(x, std::span<const cplx>(unk.data(), system_->n_unknowns()));
}

namespace {

// The system of one partitioning for a state of the given family and label.
std::shared_ptr<LsSystem> build_system(const Potential& pot, const BranchMomentum& bm,
                                       Partitioning part, Side side, const LsOptions& opts) {
    const double e = energy_of(bm);
    const Units& u = pot.units();
    if (part == Partitioning::Lp) {
        if (!(pot.a() <= 0.0 && pot.b() >= 0.0))
            throw ConfigError("step partitioning needs 0 inside [a, b]");
        return std::make_shared<LsSystem>(pot, part, ResolventKernel(KernelKind::Step, e, side, pot.v0(), u),
                                          opts.nodes, residual_fn(pot, PartitionKind::Step));
    }
    if (part == Partitioning::MmLeft) {
        auto sys = std::make_shared<LsSystem>(pot, part, ResolventKernel(KernelKind::Free, e, side, 0.0, u),
                                              opts.nodes, residual_fn(pot, PartitionKind::Left));
        if (pot.v0() != 0.0) sys->tail = {true, true, pot.v0(), bm.q / u.hbar};
        return sys;
    }
    auto sys = std::make_shared<LsSystem>(pot, part,
                                          ResolventKernel(KernelKind::Shifted, e, side, pot.v0(), u),
                                          opts.nodes, residual_fn(pot, PartitionKind::Right));
    if (pot.v0() != 0.0) sys->tail = {true, false, -pot.v0(), bm.p / u.hbar};
    return sys;
}

struct StepAmps {
    cplx t;
    cplx r;
};

// Step amplitudes of the family at set label P (left: state at P; right:
// state at -P), continued algebraically in Q.
StepAmps step_left(double p, cplx q) { return {2.0 * p / (p + q), (p - q) / (p + q)}; }
StepAmps step_right(double p, cplx q) { return {2.0 * q / (p + q), (q - p) / (p + q)}; }

// Per-state amplitudes from the step-reference formulas.
void finish_lp(LSolution& s) {
    const LsSystem& sys = LsAccess::system(s);
    const Units& u = sys.pot.units();
    const BranchMomentum& bm = s.momentum();
    const bool left = s.family() == Incidence::Left;
    const double P = left ? bm.p : -bm.p;
    const cplx Q = left ? bm.q : -bm.q;
    const auto unk = unknown_vector(s);
    const std::span<const cplx> span(unk);
    const cplx m_phi = sys.moment([&](double x) { return step_state(P, Q, Incidence::Left, x, u); }, span);
    const cplx m_chi = sys.moment([&](double x) { return step_state(-P, -Q, Incidence::Right, x, u); }, span);
    const cplx cp = I * u.mass / (u.hbar * P);
    const cplx cq = I * u.mass / (u.hbar * Q);
    const StepAmps sl = step_left(P, Q);
    const StepAmps sr = step_right(P, Q);
    if (left)
        LsAccess::set_amplitudes(s, sl.t - cq * m_chi, sl.r - cp * m_phi);
    else
        LsAccess::set_amplitudes(s, sr.t - cp * m_phi, sr.r - cq * m_chi);
}

MmExtraction mm_extract(const LSolution& s) {
    const LsSystem& sys = LsAccess::system(s);
    const Units& u = sys.pot.units();
    const Potential& pot = sys.pot;
    const BranchMomentum& bm = s.momentum();
    const double v0 = pot.v0();
    const cplx k = bm.p / u.hbar;
    const cplx kap = bm.q / u.hbar;
    const auto unk = unknown_vector(s);
    const std::span<const cplx> span(unk);
    const double a = sys.a();
    const double b = sys.b();
    const auto full = [&pot](double x) { return pot(x); };
    const auto shifted = [&pot, v0](double x) { return pot(x) - v0; };
    MmExtraction out;
    if (s.family() == Incidence::Left) {
        cplx r = sys.moment(plane(sys.kg), span);
        if (sys.tail.present) r += sys.tail.u * s.tail_amplitude() * tail_right(sys.kg + sys.tail.kt, b);
        r *= sys.g;
        cplx t;
        if (v0 == 0.0) {
            t = 1.0 + sys.g * sys.moment(plane(-k), span);
        } else {
            const cplx m = moment_with(sys, plane(-kap), shifted, span) -
                           v0 * (tail_left(k - kap, a) + r * tail_left(-k - kap, a));
            t = -I * u.mass / (u.hbar * bm.q) * m;
        }
        out.transmitted = t;
        out.reflected = r;
    } else {
        cplx r = sys.moment(plane(-sys.kg), span);
        if (sys.tail.present) r += sys.tail.u * s.tail_amplitude() * tail_left(sys.tail.kt - sys.kg, a);
        r *= sys.g;
        const cplx m = moment_with(sys, plane(-k), full, span);
        cplx t;
        if (v0 == 0.0) {
            t = 1.0 + I * u.mass / (u.hbar * bm.p) * m;
        } else {
            const cplx tails = v0 * (tail_right(kap - k, b) + r * tail_right(-kap - k, b));
            t = I * u.mass / (u.hbar * bm.p) * (m + tails);
        }
        out.transmitted = t;
        out.reflected = r;
    }
    if (sys.tail.present) out.tail_consistency = std::abs(out.transmitted - s.tail_amplitude());
    return out;
}

void finish_mm(LSolution& s) {
    const auto e = mm_extract(s);
    LsAccess::set_amplitudes(s, e.transmitted, e.reflected);
}

Incidence family_for(const BranchMomentum& bm, Side sign) {
    return sign == side_of(bm.p) ? Incidence::Left : Incidence::Right;
}

std::function<cplx(double)> reference_of(const BranchMomentum& bm, Partitioning part, Incidence fam,
                                         const Units& u) {
    if (part == Partitioning::Lp)
        return [bm, fam, u](double x) { return step_state(bm.p, bm.q, fam, x, u); };
    return plane((fam == Incidence::Left ? cplx(bm.p) : bm.q) / u.hbar);
}

}  // namespace

LSolution solve_ls(const Potential& pot, const BranchMomentum& bm, Partitioning partitioning, Side sign,
                   const LsOptions& opts) {
    require_usable(bm);
    const Incidence fam = family_for(bm, sign);
    if (partitioning == Partitioning::MmLeft && fam != Incidence::Left)
        throw ConfigError("left partitioning yields the left family only: sign must equal sign(p)");
    if (partitioning == Partitioning::MmRight && fam != Incidence::Right)
        throw ConfigError("right partitioning yields the right family only: sign must equal -sign(p)");
    if (fam == Incidence::Right && !bm.two_open())
        throw ConfigError("right-family states need two open channels");
    std::shared_ptr<const LsSystem> sys = build_system(pot, bm, partitioning, sign, opts);
    const auto solved = solve_dense(*sys, {reference_of(bm, partitioning, fam, pot.units())}, opts);
    LSolution s = LsAccess::make(sys, solved.unknowns[0], solved.residual, bm, sign, fam);
    if (partitioning == Partitioning::Lp)
        finish_lp(s);
    else
        finish_mm(s);
    return s;
}

LpPair solve_lp_pair(const Potential& pot, const BranchMomentum& bm, const LsOptions& opts) {
    require_usable(bm);
    const Side sign = side_of(bm.p);
    std::shared_ptr<const LsSystem> sys = build_system(pot, bm, Partitioning::Lp, sign, opts);
    std::vector<std::function<cplx(double)>> refs{
        reference_of(bm, Partitioning::Lp, Incidence::Left, pot.units())};
    std::optional<BranchMomentum> other;
    if (bm.two_open()) {
        other = branch_momentum(-bm.p, pot);
        refs.push_back(reference_of(*other, Partitioning::Lp, Incidence::Right, pot.units()));
    }
    const auto solved = solve_dense(*sys, refs, opts);
    LpPair pair{LsAccess::make(sys, solved.unknowns[0], solved.residual, bm, sign, Incidence::Left), {}};
    finish_lp(pair.left);
    if (other) {
        pair.right = LsAccess::make(sys, solved.unknowns[1], solved.residual, *other, sign, Incidence::Right);
        finish_lp(*pair.right);
    }
    return pair;
}

MmExtraction extract_amplitudes_mm(const LSolution& sol) {
    if (sol.partitioning() == Partitioning::Lp) throw ConfigError("not an MM solution");
    return mm_extract(sol);
}

AmplitudeSet mm_amplitudes(const Potential& pot, const BranchMomentum& bm, const LsOptions& opts) {
    const LSolution left = solve_ls(pot, bm, Partitioning::MmLeft, side_of(bm.p), opts);
    AmplitudeSet out;
    out.p = bm.p;
    out.q = bm.q;
    out.channel = bm.channel;
    out.t_l = left.transmitted();
    out.r_l = left.reflected();
    if (bm.two_open()) {
        const auto other = branch_momentum(-bm.p, pot);
        const LSolution right = solve_ls(pot, other, Partitioning::MmRight, side_of(bm.p), opts);
        out.t_r = right.transmitted();
        out.r_r = right.reflected();
    }
    return out;
}

AmplitudeSet extract_amplitudes_lp(const LpPair& pair) {
    const BranchMomentum& bm = pair.left.momentum();
    AmplitudeSet out;
    out.p = bm.p;
    out.q = bm.q;
    out.channel = bm.channel;
    out.t_l = pair.left.transmitted();
    out.r_l = pair.left.reflected();
    if (pair.right) {
        out.t_r = pair.right->transmitted();
        out.r_r = pair.right->reflected();
    }
    return out;
}

AmplitudeSet lp_amplitudes(const Potential& pot, const BranchMomentum& bm, const LsOptions& opts) {
    return extract_amplitudes_lp(solve_lp_pair(pot, bm, opts));
}

double check_alternative_ls(const LSolution& sol) {
    const LsSystem& sys = LsAccess::system(sol);
    const Potential& pot = sys.pot;
    const Units& u = pot.units();
    const BranchMomentum& bm = sol.momentum();
    const double v0 = pot.v0();
    const double e = energy_of(bm);
    const bool left = sol.family() == Incidence::Left;
    const cplx k = bm.p / u.hbar;
    const cplx kap = bm.q / u.hbar;

    // The complementary equation on the same grid (without a tail unknown).
    const KernelKind kind = left ? KernelKind::Shifted : KernelKind::Free;
    const PartitionKind pk = left ? PartitionKind::Right : PartitionKind::Left;
    LsSystem alt(pot, sys.partitioning, ResolventKernel(kind, e, sol.sign(), left ? v0 : 0.0, u),
                 LsOptions{}.nodes, residual_fn(pot, pk));
    // Reuse the solution grid exactly.
    alt.grid = sys.grid;
    alt.panel_u.clear();
    const auto rfn = residual_fn(pot, pk);
    for (const auto& pn : alt.grid.panels()) alt.panel_u.push_back(rfn(0.5 * (pn.lo + pn.hi)));

    const auto unk = unknown_vector(sol);
    const std::span<const cplx> span(unk);
    const cplx refl = sol.reflected();
    auto outside = [&](double x) -> cplx {
        if (v0 == 0.0) return left ? std::exp(I * k * x) : std::exp(I * kap * x);
        if (left)
            return alt.g * (-v0) * std::exp(I * alt.kg * x) *
                   (tail_left(k - alt.kg, sys.a()) + refl * tail_left(-k - alt.kg, sys.a()));
        return alt.g * v0 * std::exp(-I * alt.kg * x) *
               (tail_right(alt.kg + kap, sys.b()) + refl * tail_right(alt.kg - kap, sys.b()));
    };
    double num = 0.0;
    double den = 0.0;
    const auto nodes = sys.grid.nodes();
    const auto wts = sys.grid.weights();
    for (std::size_t m = 0; m < sys.n_nodes(); ++m) {
        const cplx res = unk[m] - alt.apply(nodes[m], span) - outside(nodes[m]);
        num += wts[m] * std::norm(res);
        den += wts[m] * std::norm(unk[m]);
    }
    for (std::size_t d = 0; d < sys.dx.size(); ++d) {
        const cplx val = unk[sys.n_nodes() + d];
        const cplx res = val - alt.apply(sys.dx[d], span) - outside(sys.dx[d]);
        num += std::norm(res);
        den += std::norm(val);
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

double TwoPotentialSides::relative_error() const {
    return std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
}

TwoPotentialSides check_two_potential(const Potential& pot, const BranchMomentum& bm, Side combo,
                                      TwoPotentialFormula formula, const LsOptions& opts) {
    require_usable(bm);
    if (!bm.two_open()) throw ConfigError("two-potential check needs two open channels");
    if (pot.v0() == 0.0) throw ConfigError("two-potential check needs a step (V0 != 0)");
    const Units& u = pot.units();
    const double v0 = pot.v0();
    const double p = bm.p;
    const cplx q = bm.q;
    const cplx k = p / u.hbar;
    const cplx kap = q / u.hbar;
    const auto minus = branch_momentum(-p, pot);
    const Side sign = formula == TwoPotentialFormula::PlaneWave ? opposite(side_of(p)) : side_of(p);

    // Ket: + is the first family named, - the other one.
    const bool ket_left = (formula == TwoPotentialFormula::PlaneWave) == (combo == Side::Minus);
    const BranchMomentum& kb = (combo == Side::Plus) ? bm : minus;
    const LSolution psi =
        solve_ls(pot, kb, ket_left ? Partitioning::MmLeft : Partitioning::MmRight, sign, opts);
    const LsSystem& sys = LsAccess::system(psi);
    const auto unk = unknown_vector(psi);
    const std::span<const cplx> span(unk);
    const double a = sys.a();
    const double b = sys.b();
    const cplx kk = kb.p / u.hbar;
    const cplx kq = kb.q / u.hbar;
    const cplx T = psi.transmitted();
    const cplx R = psi.reflected();
    const StepAmps st = ket_left ? step_left(kb.p, kb.q) : step_right(kb.p, kb.q);
    const auto step_pot = [&pot, v0](double x) { return x >= 0.0 ? pot(x) - v0 : pot(x); };

    TwoPotentialSides out;
    if (formula == TwoPotentialFormula::PlaneWave) {
        out.lhs = moment_with(sys, plane(-k), [&pot](double x) { return pot(x); }, span);
        if (ket_left) {
            out.lhs += v0 * T * tail_right(kq - k, b);
            out.rhs = v0 * st.t * tail_right(kq - k, 0.0);
        } else {
            out.lhs += v0 * (tail_right(kq - k, b) + R * tail_right(-kq - k, b));
            out.rhs = v0 * (tail_right(kq - k, 0.0) + st.r * tail_right(-kq - k, 0.0));
        }
        out.rhs += moment_with(sys, [&](double x) { return step_state(-p, -q, Incidence::Left, x, u); },
                               step_pot, span);
    } else {
        out.lhs = moment_with(sys, plane(-kap), [&pot, v0](double x) { return pot(x) - v0; }, span);
        if (ket_left) {
            out.lhs -= v0 * (tail_left(kk - kap, a) + R * tail_left(-kk - kap, a));
            out.rhs = -v0 * (tail_left(kk - kap, 0.0) + st.r * tail_left(-kk - kap, 0.0));
        } else {
            out.lhs -= v0 * T * tail_left(kk - kap, a);
            out.rhs = -v0 * st.t * tail_left(kk - kap, 0.0);
        }
        out.rhs += moment_with(sys, [&](double x) { return step_state(-p, -q, Incidence::Right, x, u); },
                               step_pot, span);
    }
    return out;
}

TMatrixElement step_tmatrix_element(const Potential& pot, double bra, double ket, Side side,
                                    const LsOptions& opts) {
    if (ket == 0.0) throw ConfigError("ket momentum must be nonzero");
    const Units& u = pot.units();
    const auto bm = branch_momentum(ket, pot);
    require_usable(bm);
    std::shared_ptr<const LsSystem> sys = build_system(pot, bm, Partitioning::Lp, side, opts);
    const auto solved = solve_dense(*sys, {plane(ket / u.hbar)}, opts);
    const std::span<const cplx> span(solved.unknowns[0]);
    const cplx value = sys->moment(plane(-bra / u.hbar), span) / u.h();
    return {bra, ket, value, TOperatorKind::Step};
}

OrdinaryResult ordinary_amplitudes(const Potential& pot, const BranchMomentum& bm, const LsOptions& opts) {
    if (pot.v0() != 0.0) throw ConfigError("ordinary scattering needs V0 = 0");
    require_usable(bm);
    const Units& u = pot.units();
    const double p = bm.p;
    const cplx k = p / u.hbar;
    auto sys = std::make_shared<LsSystem>(
        pot, Partitioning::MmLeft, ResolventKernel(KernelKind::Free, energy_of(bm), side_of(p), 0.0, u),
        opts.nodes, residual_fn(pot, PartitionKind::Left));
    const auto solved = solve_dense(*sys, {plane(k), plane(-k)}, opts);
    const std::span<const cplx> fwd(solved.unknowns[0]);
    const std::span<const cplx> bwd(solved.unknowns[1]);
    const double h = u.h();
    OrdinaryResult out;
    out.forward = {p, p, sys->moment(plane(-k), fwd) / h, TOperatorKind::Full};
    out.left_reflection = {-p, p, sys->moment(plane(k), fwd) / h, TOperatorKind::Full};
    out.right_reflection = {p, -p, sys->moment(plane(-k), bwd) / h, TOperatorKind::Full};
    const cplx backward = sys->moment(plane(k), bwd) / h;
    const cplx c = -2.0 * pi * I * u.mass / p;
    AmplitudeSet& a = out.amplitudes;
    a.p = p;
    a.q = bm.q;
    a.channel = bm.channel;
    a.t_l = 1.0 + c * out.forward.value;
    a.r_l = c * out.left_reflection.value;
    a.t_r = 1.0 + c * backward;
    a.r_r = c * out.right_reflection.value;
    return out;
}

}  // namespace stepscat
