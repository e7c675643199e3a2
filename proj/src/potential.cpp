#include "stepscat/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stepscat {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
}

// Fill [lo, hi) with the pure-step profile, split at the origin.
void fill_gap(std::vector<Segment>& out, double lo, double hi, double v0) {
    if (!(hi > lo)) return;
    if (lo < 0.0 && hi > 0.0) {
        out.push_back({lo, 0.0, 0.0});
        out.push_back({0.0, hi, v0});
    } else {
        out.push_back({lo, hi, lo >= 0.0 ? v0 : 0.0});
    }
}

}  // namespace

Potential::Potential(double v0, double a, double b, std::vector<Segment> segments,
                     std::vector<DeltaSpike> deltas, Units units)
    : v0_(v0), a_(a), b_(b), deltas_(std::move(deltas)), units_(units) {
    require_finite(v0, "v0");
    require_finite(a, "a");
    require_finite(b, "b");
    if (!(units.hbar > 0.0) || !(units.mass > 0.0) || !std::isfinite(units.hbar) ||
        !std::isfinite(units.mass))
        throw ConfigError("units: hbar and mass must be positive");
    if (v0 < 0.0) throw ConfigError("v0 must be non-negative");
    if (a > b) throw ConfigError("support: a must not exceed b");

    std::sort(segments.begin(), segments.end(),
              [](const Segment& l, const Segment& r) { return l.lo < r.lo; });
    double cursor = a;
    for (const auto& s : segments) {
        require_finite(s.lo, "segment lo");
        require_finite(s.hi, "segment hi");
        require_finite(s.v, "segment height");
        if (!(s.hi > s.lo)) throw ConfigError("segment with empty or reversed range");
        if (s.lo < a || s.hi > b) throw ConfigError("segment outside [a, b]");
        if (s.lo < cursor) throw ConfigError("overlapping segments");
        fill_gap(segments_, cursor, s.lo, v0);
        segments_.push_back(s);
        cursor = s.hi;
    }
    fill_gap(segments_, cursor, b, v0);

    for (const auto& d : deltas_) {
        require_finite(d.x0, "delta position");
        require_finite(d.strength, "delta strength");
        if (d.x0 < a || d.x0 > b) throw ConfigError("delta position outside [a, b]");
    }
    std::sort(deltas_.begin(), deltas_.end(),
              [](const DeltaSpike& l, const DeltaSpike& r) { return l.x0 < r.x0; });
    for (std::size_t i = 1; i < deltas_.size(); ++i)
        if (deltas_[i].x0 == deltas_[i - 1].x0)
            throw ConfigError("two deltas at the same position");
}

Potential Potential::free_particle(Units units) { return Potential(0.0, 0.0, 0.0, {}, {}, units); }

Potential Potential::pure_step(double v0, Units units) {
    return Potential(v0, 0.0, 0.0, {}, {}, units);
}

Potential Potential::step_delta(double v0, double v1, Units units) {
    return Potential(v0, 0.0, 0.0, {}, {{0.0, v1}}, units);
}

double Potential::p0() const { return std::sqrt(2.0 * units_.mass * v0_); }

double Potential::operator()(double x) const {
    if (x < a_) return 0.0;
    if (x > b_) return v0_;
    if (segments_.empty()) return x < 0.0 ? 0.0 : v0_;
    auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                               [](double v, const Segment& s) { return v < s.lo; });
    if (it == segments_.begin()) return segments_.front().v;
    return std::prev(it)->v;
}

std::vector<double> Potential::breakpoints() const {
    std::vector<double> pts{a_, b_};
    for (const auto& s : segments_) {
        pts.push_back(s.lo);
        pts.push_back(s.hi);
    }
    for (const auto& d : deltas_) pts.push_back(d.x0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

double Potential::min_value() const {
    double m = std::min(0.0, v0_);
    for (const auto& s : segments_) m = std::min(m, s.v);
    return m;
}

double evaluate(const Potential& potential, double x) {
    if (!std::isfinite(x)) throw ConfigError("evaluate: x must be finite");
    return potential(x);
}

std::string to_string(PartitionKind kind) {
    switch (kind) {
        case PartitionKind::Left: return "left";
        case PartitionKind::Right: return "right";
        case PartitionKind::Step: return "step";
        case PartitionKind::In: return "in";
        case PartitionKind::Out: return "out";
    }
    return "?";
}

PartitionedPotential::PartitionedPotential(const Potential& base, PartitionKind kind)
    : base_(base), kind_(kind) {
    if (kind == PartitionKind::Step && (base.a() > 0.0 || base.b() < 0.0))
        throw ConfigError("step partitioning requires 0 in [a, b]");
}

double PartitionedPotential::operator()(double x) const {
    const double v = base_(x);
    switch (kind_) {
        case PartitionKind::Left: return v;
        case PartitionKind::Right: return v - base_.v0();
        case PartitionKind::Step: return x >= 0.0 ? v - base_.v0() : v;
        default: throw ConfigError("in/out residuals are non-local");
    }
}

double PartitionedPotential::local_part(double x) const {
    return is_local() ? (*this)(x) : base_(x);
}

double PartitionedPotential::left_tail() const {
    return kind_ == PartitionKind::Right ? -base_.v0() : 0.0;
}

double PartitionedPotential::right_tail() const {
    return kind_ == PartitionKind::Left ? base_.v0() : 0.0;
}

PartitionedPotential partition(const Potential& potential, PartitionKind kind) {
    return PartitionedPotential(potential, kind);
}

std::string to_string(Channel channel) {
    return channel == Channel::TwoOpen ? "two_open" : "evanescent";
}

BranchMomentum branch_momentum(double p, double v0, const Units& units) {
    if (!std::isfinite(p)) throw ConfigError("momentum label must be finite");
    if (p == 0.0) throw ConfigError("momentum label p = 0 is excluded");
    if (v0 < 0.0) throw ConfigError("v0 must be non-negative");
    BranchMomentum bm;
    bm.p = p;
    bm.mass = units.mass;
    bm.p0 = std::sqrt(2.0 * units.mass * v0);
    const double ap = std::abs(p);
    if (ap > bm.p0) {
        // (|p| - p0)(|p| + p0) keeps relative accuracy near threshold
        const double mag = std::sqrt((ap - bm.p0) * (ap + bm.p0));
        bm.q = cplx(p > 0 ? mag : -mag, 0.0);
        bm.channel = Channel::TwoOpen;
    } else if (ap < bm.p0) {
        bm.q = cplx(0.0, std::sqrt((bm.p0 - ap) * (bm.p0 + ap)));
        bm.channel = Channel::Evanescent;
    } else {
        bm.q = cplx(0.0, 0.0);
        bm.channel = Channel::TwoOpen;
        bm.at_threshold = true;
    }
    return bm;
}

BranchMomentum branch_momentum(double p, const Potential& potential) {
    return branch_momentum(p, potential.v0(), potential.units());
}

Potential potential_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw ConfigError("potential: expected a JSON object");
        Units units;
        if (j.contains("units")) {
            const auto& u = j.at("units");
            units.hbar = u.value("hbar", 1.0);
            units.mass = u.value("mass", 1.0);
        }
        const double v0 = j.at("v0").get<double>();
        const double a = j.value("a", 0.0);
        const double b = j.value("b", 0.0);
        std::vector<Segment> segs;
        if (j.contains("segments"))
            for (const auto& s : j.at("segments"))
                segs.push_back({s.at("lo").get<double>(), s.at("hi").get<double>(),
                                s.at("v").get<double>()});
        std::vector<DeltaSpike> deltas;
        if (j.contains("deltas"))
            for (const auto& d : j.at("deltas"))
                deltas.push_back({d.at("x0").get<double>(), d.at("strength").get<double>()});
        return Potential(v0, a, b, std::move(segs), std::move(deltas), units);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("potential: ") + e.what());
    }
}

nlohmann::json potential_to_json(const Potential& potential) {
    nlohmann::json j;
    j["v0"] = potential.v0();
    j["a"] = potential.a();
    j["b"] = potential.b();
    j["segments"] = nlohmann::json::array();
    for (const auto& s : potential.segments())
        j["segments"].push_back({{"lo", s.lo}, {"hi", s.hi}, {"v", s.v}});
    j["deltas"] = nlohmann::json::array();
    for (const auto& d : potential.deltas())
        j["deltas"].push_back({{"x0", d.x0}, {"strength", d.strength}});
    j["units"] = {{"hbar", potential.units().hbar}, {"mass", potential.units().mass}};
    return j;
}

Potential load_potential(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open potential file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << path.string() << ":" << line << ":" << col << ": " << e.what();
        throw ConfigError(msg.str());
    }
    try {
        return potential_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace stepscat
