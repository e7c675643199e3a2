#pragma once

// Bound states, resolution of the identity, and wavepacket realizations of
// the asymptotic limits by spectral synthesis.

#include <functional>
#include <span>
#include <vector>

#include "stepscat/potential.hpp"

namespace stepscat {

/// Normalized real bound state with energy below both asymptotic levels.
class BoundState {
public:
    double energy() const { return energy_; }
    /// Decay constants: psi ~ e^{kappa_left x} for x < a, e^{-kappa_right x} for x > b.
    double kappa_left() const { return kappa_l_; }
    double kappa_right() const { return kappa_r_; }

    double operator()(double x) const;
    std::vector<double> sample(std::span<const double> x) const;

private:
    friend std::vector<BoundState> find_bound_states(const Potential&);
    struct Node {
        double x;
        double psi;
        double dpsi;  // just right of x
    };

    double energy_ = 0.0;
    double kappa_l_ = 0.0;
    double kappa_r_ = 0.0;
    Units units_;
    std::vector<Node> nodes_;
    std::vector<double> interval_v_;
};

/// All bound states, ascending in energy. The condition is the vanishing of
/// the growing exponential for x > b after shooting from x < a; roots are
/// bracketed on a scan dense near the continuum edge and bisected to 1e-12.
std::vector<BoundState> find_bound_states(const Potential& pot);

/// A smooth function negligible outside [lo, hi].
struct TestFunction {
    std::function<cplx(double)> f;
    double lo = 0.0;
    double hi = 0.0;
};

TestFunction gaussian_test_function(double center, double width);

struct CompletenessOptions {
    std::size_t p_nodes = 800;
    double p_max = 12.0;
};

struct CompletenessResult {
    /// ||f - reconstruction|| / ||f||.
    double defect = 0.0;
    /// The same with the bound-state terms left out.
    double defect_without_bound = 0.0;
    /// sum_j |<E_j|f>|^2 / ||f||^2.
    double bound_weight = 0.0;
    std::size_t bound_states = 0;
    std::size_t p_nodes = 0;
    std::size_t x_nodes = 0;
};

/// Reconstructs f from the bound states plus the continuum
///   int_0^inf dp |p^+><p^+| (left family) + int_{-inf}^{-p0} dp |p^+><p^+| (right family)
/// truncated at p_max. Below threshold the label is p0 sin(theta), above it
/// the channel momentum q, so every range is smooth for Gauss-Legendre.
CompletenessResult completeness_check(const Potential& pot, const TestFunction& f,
                                      const CompletenessOptions& opts = {});

/// Which reference Hamiltonian defines the asymptotes.
///   Left:  p^2/2m, packets in from and out to the left.
///   Right: p^2/2m + V0, packets in from and out to the right.
///   Step:  the pure step, in from the left and out to the right.
enum class ReferenceChannel { Left, Right, Step };

std::string to_string(ReferenceChannel channel);

/// Gaussian asymptote: amplitude proportional to
/// exp(-(k - k_c)^2 / (4 width^2) - i k position / hbar) in the channel
/// momentum k (p for Left and Step, q for Right), cut at 8 widths.
/// `momentum` is the magnitude; the direction follows the channel.
struct PacketSpec {
    double momentum = 2.0;
    double width = 0.06;
    double position = 0.0;
};

/// Samples of a state on a quadrature grid over [-box, box].
struct Wavepacket {
    std::vector<double> x;
    std::vector<double> weights;
    std::vector<cplx> values;

    double norm() const;
};

enum class Asymptote { In, Out };

struct PacketPair {
    Wavepacket state;      ///< psi(t) = Omega phi(t), synthesized under the full H
    Wavepacket asymptote;  ///< phi(t), synthesized under the reference
};

PacketPair evolve_packet(const Potential& pot, ReferenceChannel channel, const PacketSpec& packet,
                         Asymptote asymptote, double t, double box);

struct MollerOptions {
    std::size_t times_per_sign = 24;
    /// The t grid is log-spaced on [t_min, t_max] times the clearing time.
    double t_min = 0.05;
    double t_max = 3.0;
};

struct MollerPoint {
    double t = 0.0;
    double distance = 0.0;        ///< ||psi(t) - phi(t)||
    double norm = 0.0;            ///< ||psi(t)|| on the box
    double reference_norm = 0.0;  ///< ||phi(t)|| on the box
};

struct MollerCurve {
    ReferenceChannel channel = ReferenceChannel::Left;
    /// Time for the packet edge to clear the scattering region.
    double clear_time = 0.0;
    double box = 0.0;
    std::size_t p_nodes = 0;
    std::size_t x_nodes = 0;
    /// Ascending t; in-asymptote for t < 0, out-asymptote for t > 0.
    std::vector<MollerPoint> points;

    double max_norm_defect() const;
};

/// ||psi(t) - phi(t)|| on a log-spaced t grid of both signs. Throws
/// ConfigError when the packet's momentum support touches a threshold.
MollerCurve moller_limit_check(const Potential& pot, ReferenceChannel channel,
                               const PacketSpec& packet, const MollerOptions& opts = {});

}  // namespace stepscat
