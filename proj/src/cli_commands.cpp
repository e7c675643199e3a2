#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "stepscat/born.hpp"
#include "stepscat/cli.hpp"
#include "stepscat/closed_form.hpp"
#include "stepscat/greens.hpp"
#include "stepscat/ls_engine.hpp"

namespace stepscat::cli {

namespace {

constexpr double kIdentityTolerance = 1e-10;
constexpr double kClosedFormTolerance = 1e-12;
constexpr double kIntegralTolerance = 1e-6;
const std::string kClosed = "closed";
const std::string kThreshold = "threshold";

bool contains_origin(const Potential& pot) { return pot.a() <= 0.0 && 0.0 <= pot.b(); }

void push_complex(std::vector<Cell>& row, cplx z) {
    row.emplace_back(z.real());
    row.emplace_back(z.imag());
}

void push_marker(std::vector<Cell>& row, const std::string& marker, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) row.emplace_back(marker);
}

void add_complex_columns(std::vector<std::string>& cols, const std::string& name) {
    cols.push_back(name + "_re");
    cols.push_back(name + "_im");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::TransferMatrix: return "transfer-matrix";
        case Method::Mm: return "mm";
        case Method::Lp: return "lp";
    }
    return "?";
}

AmplitudeSet amplitudes_by(Method m, const Potential& pot, const BranchMomentum& bm, const LsOptions& ls) {
    switch (m) {
        case Method::TransferMatrix: return transfer_matrix_amplitudes(pot, bm);
        case Method::Mm: return mm_amplitudes(pot, bm, ls);
        case Method::Lp: return lp_amplitudes(pot, bm, ls);
    }
    return transfer_matrix_amplitudes(pot, bm);
}

std::size_t quantity_width(Quantity q) {
    switch (q) {
        case Quantity::Exact: return 2;
        case Quantity::Mm1: return 2;
        case Quantity::Mm2: return 3;
        case Quantity::Lp1: return 2;
        case Quantity::InOut1: return 3;
        case Quantity::Unitarity: return 1;
        case Quantity::SMatrix: return 8;
    }
    return 0;
}

void add_quantity_columns(std::vector<std::string>& cols, Quantity q) {
    switch (q) {
        case Quantity::Exact: add_complex_columns(cols, "r_l_exact"); break;
        case Quantity::Mm1: add_complex_columns(cols, "r_mm1"); break;
        case Quantity::Mm2:
            add_complex_columns(cols, "r_mm2");
            cols.push_back("r_mm2_error");
            break;
        case Quantity::Lp1: add_complex_columns(cols, "r_lp1"); break;
        case Quantity::InOut1:
            add_complex_columns(cols, "c_inout1");
            cols.push_back("k_inout1");
            break;
        case Quantity::Unitarity: cols.push_back("s_unitarity_defect"); break;
        case Quantity::SMatrix:
            for (const char* e : {"s11", "s12", "s21", "s22"}) add_complex_columns(cols, e);
            break;
    }
}

void push_quantity(std::vector<Cell>& row, Quantity q, const Potential& pot, const BranchMomentum& bm,
                   const AmplitudeSet& amp, const BornOptions& born) {
    switch (q) {
        case Quantity::Exact: push_complex(row, transfer_matrix_amplitudes(pot, bm).r_l); return;
        case Quantity::Mm1: push_complex(row, born_mm1(pot, bm, born).value); return;
        case Quantity::Mm2: {
            const auto r = born_mm2(pot, bm, born);
            push_complex(row, r.value);
            row.emplace_back(r.error);
            return;
        }
        case Quantity::Lp1: push_complex(row, born_lp1(pot, bm, born).value); return;
        case Quantity::InOut1: {
            if (!bm.two_open()) {
                push_marker(row, kClosed, 3);
                return;
            }
            const auto r = born_inout1(pot, bm, {}, born);
            push_complex(row, r.value);
            row.emplace_back(r.wavenumber);
            return;
        }
        case Quantity::Unitarity: row.emplace_back(smatrix(amp).unitarity_defect()); return;
        case Quantity::SMatrix: {
            const auto s = smatrix(amp);
            if (s.dim() == 2) {
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) push_complex(row, s.m(i, j));
            } else {
                push_complex(row, s.m(0, 0));
                push_marker(row, kClosed, 6);
            }
            return;
        }
    }
}

}  // namespace

Table cmd_amplitudes(const ScanConfig& cfg, Method method) {
    cfg.validate();
    const Potential pot = cfg.potential();
    if (method == Method::Lp && !contains_origin(pot))
        throw ConfigError("amplitudes: the step-reference method needs 0 in [a, b]");
    for (Quantity q : cfg.quantities)
        if (q == Quantity::Lp1 && !contains_origin(pot))
            throw ConfigError("amplitudes: lp1 needs 0 in [a, b]");

    Table t;
    t.schema = "stepscat.amplitudes/1";
    t.columns = {"p", "q_re", "q_im"};
    for (const char* n : {"t_l", "r_l", "t_r", "r_r"}) add_complex_columns(t.columns, n);
    t.columns.insert(t.columns.end(), {"channel", "method", "identity_residual"});
    for (Quantity q : cfg.quantities) add_quantity_columns(t.columns, q);
    t.meta["potential"] = potential_to_json(pot);
    t.meta["method"] = method_name(method);
    t.meta["grid"] = cfg.grid;

    const auto ps = cfg.momenta();
    t.rows.resize(ps.size());
    const LsOptions ls{cfg.grid};
    const BornOptions born{cfg.grid};
    parallel_for(ps.size(), [&](std::size_t i) {
        const auto bm = branch_momentum(ps[i], pot);
        auto& row = t.rows[i];
        row.emplace_back(bm.p);
        push_complex(row, bm.q);
        if (bm.at_threshold) {
            // q = 0: the channel normalization is singular and nothing
            // downstream is evaluated.
            push_marker(row, kThreshold, 8);
            row.emplace_back(kThreshold);
            row.emplace_back(method_name(method));
            row.emplace_back(kThreshold);
            for (Quantity q : cfg.quantities) push_marker(row, kThreshold, quantity_width(q));
            return;
        }
        const auto amp = amplitudes_by(method, pot, bm, ls);
        push_complex(row, amp.t_l);
        push_complex(row, amp.r_l);
        if (amp.two_open()) {
            push_complex(row, *amp.t_r);
            push_complex(row, *amp.r_r);
        } else {
            push_marker(row, kClosed, 4);
        }
        row.emplace_back(to_string(amp.channel));
        row.emplace_back(method_name(method));
        row.emplace_back(identity_residuals(amp).max());
        for (Quantity q : cfg.quantities) push_quantity(row, q, pot, bm, amp, born);
    });
    return t;
}

Table cmd_figure1(const ScanConfig& cfg) {
    cfg.validate();
    const Potential pot = cfg.potential();
    if (!contains_origin(pot)) throw ConfigError("figure1: the step-reference Born term needs 0 in [a, b]");
    Table t;
    t.schema = "stepscat.figure1/1";
    t.columns = {"p", "r2_exact", "r2_mm1", "r2_mm2_corrected", "r2_lp1", "mm2_error"};
    t.meta["potential"] = potential_to_json(pot);
    t.meta["grid"] = cfg.grid;
    const auto ps = cfg.momenta();
    t.rows.resize(ps.size());
    const BornOptions born{cfg.grid};
    parallel_for(ps.size(), [&](std::size_t i) {
        const auto bm = branch_momentum(ps[i], pot);
        auto& row = t.rows[i];
        row.emplace_back(bm.p);
        if (bm.at_threshold) {
            push_marker(row, kThreshold, 5);
            return;
        }
        const cplx mm1 = born_mm1(pot, bm, born).value;
        const auto mm2 = born_mm2(pot, bm, born);
        row.emplace_back(std::norm(transfer_matrix_amplitudes(pot, bm).r_l));
        row.emplace_back(std::norm(mm1));
        row.emplace_back(std::norm(mm1 + mm2.value));
        row.emplace_back(std::norm(born_lp1(pot, bm, born).value));
        row.emplace_back(mm2.error);
    });
    return t;
}

namespace {

// Largest residual per check at one momentum; NaN marks "not applicable".
using Residuals = std::map<std::string, double>;

struct CheckSpec {
    std::string name;
    double tolerance;
};

const std::vector<CheckSpec>& check_specs() {
    static const std::vector<CheckSpec> specs{
        {"closed_form", kClosedFormTolerance},    {"flux_left", kIdentityTolerance},
        {"flux_right", kIdentityTolerance},       {"flux_cross", kIdentityTolerance},
        {"time_reversal", kIdentityTolerance},    {"evanescent_reflection", kIdentityTolerance},
        {"smatrix_unitarity", kIdentityTolerance}, {"mm_agreement", kIntegralTolerance},
        {"lp_agreement", kIntegralTolerance},     {"alternative_ls", kIntegralTolerance},
        {"two_potential", kIntegralTolerance},
    };
    return specs;
}

double amplitude_distance(const AmplitudeSet& x, const AmplitudeSet& y) {
    double d = std::max(std::abs(x.t_l - y.t_l), std::abs(x.r_l - y.r_l));
    if (x.two_open() && y.two_open())
        d = std::max({d, std::abs(*x.t_r - *y.t_r), std::abs(*x.r_r - *y.r_r)});
    return d;
}

enum class StepShape { None, PureStep, StepDelta };

StepShape step_shape(const Potential& pot) {
    for (const auto& s : pot.segments()) {
        const double mid = 0.5 * (s.lo + s.hi);
        if (s.v != (mid < 0.0 ? 0.0 : pot.v0())) return StepShape::None;
    }
    if (pot.deltas().empty()) return StepShape::PureStep;
    if (pot.deltas().size() == 1 && pot.deltas()[0].x0 == 0.0) return StepShape::StepDelta;
    return StepShape::None;
}

Residuals verify_at(const Potential& pot, const BranchMomentum& bm, const VerifyOptions& opts,
                    const LsOptions& ls) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Residuals r;
    for (const auto& c : check_specs()) r[c.name] = nan;

    auto tm = transfer_matrix_amplitudes(pot, bm);
    if (opts.inject_fault) tm.r_l *= 1.0 + 1e-3;

    switch (step_shape(pot)) {
        case StepShape::PureStep: r["closed_form"] = amplitude_distance(tm, step_amplitudes(bm)); break;
        case StepShape::StepDelta:
            r["closed_form"] = std::abs(tm.r_l - step_delta_exact_rl(bm, pot.deltas()[0].strength, pot.units()));
            break;
        case StepShape::None: break;
    }
    const auto id = identity_residuals(tm);
    if (tm.two_open()) {
        r["flux_left"] = std::abs(id.flux_left);
        r["flux_right"] = std::abs(id.flux_right);
        r["flux_cross"] = std::abs(id.cross);
        r["time_reversal"] = std::abs(id.time_reversal);
    } else {
        r["evanescent_reflection"] = std::abs(id.evanescent);
    }
    r["smatrix_unitarity"] = smatrix(tm).unitarity_defect();
    if (!opts.integral_equations) return r;

    r["mm_agreement"] = amplitude_distance(mm_amplitudes(pot, bm, ls), tm);
    if (contains_origin(pot)) r["lp_agreement"] = amplitude_distance(lp_amplitudes(pot, bm, ls), tm);
    double alt = check_alternative_ls(solve_ls(pot, bm, Partitioning::MmLeft, side_of(bm.p), ls));
    if (bm.two_open()) {
        const auto minus = branch_momentum(-bm.p, pot);
        alt = std::max(alt, check_alternative_ls(solve_ls(pot, minus, Partitioning::MmRight, side_of(bm.p), ls)));
    }
    r["alternative_ls"] = alt;
    if (bm.two_open() && pot.v0() > 0.0) {
        double tp = 0.0;
        for (auto f : {TwoPotentialFormula::PlaneWave, TwoPotentialFormula::Channel})
            for (Side combo : {Side::Plus, Side::Minus})
                tp = std::max(tp, check_two_potential(pot, bm, combo, f, ls).relative_error());
        r["two_potential"] = tp;
    }
    return r;
}

}  // namespace

VerifyReport cmd_verify(const ScanConfig& cfg, const VerifyOptions& opts) {
    cfg.validate();
    const Potential pot = cfg.potential();
    const auto ps = cfg.momenta();
    std::vector<Residuals> per_p(ps.size());
    const LsOptions ls{cfg.grid};
    parallel_for(ps.size(), [&](std::size_t i) {
        const auto bm = branch_momentum(ps[i], pot);
        if (bm.at_threshold) return;
        per_p[i] = verify_at(pot, bm, opts, ls);
    });

    VerifyReport rep;
    Table& t = rep.table;
    t.schema = "stepscat.verify/1";
    t.columns = {"check", "tolerance", "max_residual", "worst_p", "status"};
    t.meta["potential"] = potential_to_json(pot);
    t.meta["grid"] = cfg.grid;
    t.meta["integral_equations"] = opts.integral_equations;
    t.meta["fault_injected"] = opts.inject_fault;
    for (const auto& spec : check_specs()) {
        double worst = -1.0;
        double worst_p = 0.0;
        bool applicable = false;
        bool finite = true;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const auto it = per_p[i].find(spec.name);
            if (it == per_p[i].end() || std::isnan(it->second)) continue;
            applicable = true;
            if (!std::isfinite(it->second)) finite = false;
            if (it->second > worst || !std::isfinite(it->second)) {
                worst = it->second;
                worst_p = ps[i];
            }
        }
        std::vector<Cell> row{spec.name, spec.tolerance};
        if (!applicable) {
            row.insert(row.end(), {std::string("n/a"), std::string("n/a"), std::string("skipped")});
        } else {
            const bool ok = finite && worst <= spec.tolerance;
            row.insert(row.end(), {worst, worst_p, std::string(ok ? "pass" : "fail")});
            if (!ok) {
                rep.pass = false;
                rep.failed.push_back(spec.name);
            }
        }
        t.rows.push_back(std::move(row));
    }
    t.meta["pass"] = rep.pass;
    t.meta["failed"] = rep.failed;
    return rep;
}

namespace {

KernelKind parse_kernel(const std::string& s) {
    if (s == "free") return KernelKind::Free;
    if (s == "shifted") return KernelKind::Shifted;
    if (s == "step") return KernelKind::Step;
    if (s == "in") return KernelKind::In;
    if (s == "out") return KernelKind::Out;
    throw ConfigError("greens-dump: unknown kernel '" + s + "'");
}

}  // namespace

Table cmd_greens_dump(const ScanConfig& cfg, const GreensDumpConfig& g) {
    if (g.count < 2) throw ConfigError("greens-dump: count must be at least 2");
    if (!(g.x_max > g.x_min)) throw ConfigError("greens-dump: empty x range");
    const Potential pot = cfg.potential();
    const ResolventKernel kernel(parse_kernel(g.kernel), g.energy, g.side, pot.v0(), pot.units());
    Table t;
    t.schema = "stepscat.greens/1";
    t.columns = {"x", "x_prime", "re", "im"};
    t.meta["kernel"] = g.kernel;
    t.meta["energy"] = g.energy;
    t.meta["side"] = g.side == Side::Plus ? "plus" : "minus";
    t.meta["v0"] = pot.v0();
    t.rows.resize(g.count);
    parallel_for(g.count, [&](std::size_t i) {
        const double x = g.x_min + (g.x_max - g.x_min) * double(i) / double(g.count - 1);
        const cplx v = kernel(x, g.x_prime);
        t.rows[i] = {x, g.x_prime, v.real(), v.imag()};
    });
    return t;
}

Table cmd_packet_demo(const ScanConfig& cfg, const PacketDemoConfig& p) {
    const Potential pot = cfg.potential();
    const auto curve = moller_limit_check(pot, p.channel, p.packet, p.times);
    Table t;
    t.schema = "stepscat.packet/1";
    t.columns = {"t", "distance", "norm", "reference_norm"};
    t.meta["potential"] = potential_to_json(pot);
    t.meta["channel"] = to_string(p.channel);
    t.meta["momentum"] = p.packet.momentum;
    t.meta["width"] = p.packet.width;
    t.meta["position"] = p.packet.position;
    t.meta["clear_time"] = curve.clear_time;
    t.meta["box"] = curve.box;
    t.meta["p_nodes"] = curve.p_nodes;
    t.meta["x_nodes"] = curve.x_nodes;
    t.meta["max_norm_defect"] = curve.max_norm_defect();
    for (const auto& pt : curve.points) t.rows.push_back({pt.t, pt.distance, pt.norm, pt.reference_norm});
    return t;
}

}  // namespace stepscat::cli
