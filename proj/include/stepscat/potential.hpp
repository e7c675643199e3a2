#pragma once

// Step-like potentials: V -> 0 for x < a, V -> V0 for x > b, piecewise
// constant with delta spikes on [a, b].

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stepscat/common.hpp"

namespace stepscat {

struct Units {
    double hbar = 1.0;
    double mass = 1.0;

    /// Planck's constant h = 2 pi hbar.
    double h() const { return 2.0 * pi * hbar; }
};

struct Segment {
    double lo;
    double hi;
    double v;
};

struct DeltaSpike {
    double x0;
    double strength;
};

class Potential {
public:
    /// Segments may leave gaps inside [a, b]; gaps take the pure-step value
    /// V0*theta(x), so the stored segments always tile [a, b].
    Potential(double v0, double a, double b, std::vector<Segment> segments = {},
              std::vector<DeltaSpike> deltas = {}, Units units = {});

    static Potential free_particle(Units units = {});
    static Potential pure_step(double v0, Units units = {});
    /// V0*theta(x) + V1*delta(x).
    static Potential step_delta(double v0, double v1, Units units = {});

    double v0() const { return v0_; }
    double a() const { return a_; }
    double b() const { return b_; }
    const Units& units() const { return units_; }
    std::span<const Segment> segments() const { return segments_; }
    std::span<const DeltaSpike> deltas() const { return deltas_; }

    /// Channel threshold momentum sqrt(2 m V0).
    double p0() const;

    /// Pointwise value, delta spikes excluded.
    double operator()(double x) const;

    /// Sorted, unique positions where V or its derivative structure changes:
    /// a, b, segment edges and delta positions.
    std::vector<double> breakpoints() const;

    double min_value() const;

private:
    double v0_;
    double a_;
    double b_;
    std::vector<Segment> segments_;
    std::vector<DeltaSpike> deltas_;
    Units units_;
};

double evaluate(const Potential& potential, double x);

enum class PartitionKind { Left, Right, Step, In, Out };

std::string to_string(PartitionKind kind);

/// The residual potential of one partitioning H = H_ref + V_resid.
///   Left:  V_l = V             (reference p^2/2m)
///   Right: V_r = V - V0        (reference p^2/2m + V0)
///   Step:  V_s = V - V0 theta  (reference pure step)
///   In:    V - V0 F_-          (momentum projector, non-local)
///   Out:   V - V0 F_+
class PartitionedPotential {
public:
    PartitionedPotential(const Potential& base, PartitionKind kind);

    PartitionKind kind() const { return kind_; }
    const Potential& base() const { return base_; }
    bool is_local() const { return kind_ != PartitionKind::In && kind_ != PartitionKind::Out; }

    /// Local residual value (deltas excluded). Throws for In/Out.
    double operator()(double x) const;

    /// The local multiplicative part of In/Out residuals (V itself); equal to
    /// operator() for the local kinds.
    double local_part(double x) const;

    /// Constant residual value for x < a and x > b.
    double left_tail() const;
    double right_tail() const;

    std::span<const DeltaSpike> deltas() const { return base_.deltas(); }

private:
    Potential base_;
    PartitionKind kind_;
};

PartitionedPotential partition(const Potential& potential, PartitionKind kind);

enum class Channel { TwoOpen, Evanescent };

std::string to_string(Channel channel);

/// Energy label p with channel momentum q = (p^2 - p0^2)^{1/2}. The branch
/// cut joins -p0 and p0 just below the real axis: sign(q) = sign(p) above
/// threshold, q = +i|q| below.
struct BranchMomentum {
    double p = 0.0;
    cplx q;
    double p0 = 0.0;
    Channel channel = Channel::TwoOpen;
    /// |p| == p0: q vanishes and the (p/q)^{1/2} normalization is singular.
    bool at_threshold = false;
    double mass = 1.0;

    double energy() const { return p * p / (2.0 * mass); }
    bool two_open() const { return channel == Channel::TwoOpen && !at_threshold; }
};

BranchMomentum branch_momentum(double p, double v0, const Units& units = {});
BranchMomentum branch_momentum(double p, const Potential& potential);

Potential potential_from_json(const nlohmann::json& j);
nlohmann::json potential_to_json(const Potential& potential);
Potential load_potential(const std::filesystem::path& path);

}  // namespace stepscat
