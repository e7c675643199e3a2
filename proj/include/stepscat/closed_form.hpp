#pragma once

// Exact amplitudes: pure-step and step+delta closed forms, and a transfer
// matrix solver for piecewise-constant potentials with delta spikes.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "stepscat/potential.hpp"

namespace stepscat {

/// Amplitudes at one energy label p. The left amplitudes belong to the
/// left-type state at label p,
///   x < a:  e^{ipx/hbar} + r_l e^{-ipx/hbar},   x > b:  t_l e^{iqx/hbar};
/// the right amplitudes to the right-type state at label -p,
///   x < a:  t_r e^{-ipx/hbar},   x > b:  e^{-iqx/hbar} + r_r e^{iqx/hbar}.
/// Below threshold the right amplitudes are absent.
struct AmplitudeSet {
    double p = 0.0;
    cplx q;
    Channel channel = Channel::TwoOpen;
    cplx t_l;
    cplx r_l;
    std::optional<cplx> t_r;
    std::optional<cplx> r_r;

    bool two_open() const { return t_r.has_value() && r_r.has_value(); }
};

AmplitudeSet step_amplitudes(const BranchMomentum& bm);

/// Reflection amplitude of V0 theta(x) + v1 delta(x).
cplx step_delta_exact_rl(const BranchMomentum& bm, double v1, const Units& units = {});

AmplitudeSet transfer_matrix_amplitudes(const Potential& pot, const BranchMomentum& bm);

/// 2x2 [[(q/p)^{1/2} t_l, r_l], [r_r, (p/q)^{1/2} t_r]] or 1x1 [r_l].
struct SMatrix {
    Eigen::MatrixXcd m;

    std::size_t dim() const { return static_cast<std::size_t>(m.rows()); }
    /// max |(S S^dagger - 1)_ij|
    double unitarity_defect() const;
};

SMatrix smatrix(const AmplitudeSet& amp);

/// Residuals of the flux and time-reversal relations. For two open channels:
///   (q/p)|t_l|^2 + |r_l|^2 - 1,  (p/q)|t_r|^2 + |r_r|^2 - 1,
///   (p/q) t_r r_l^* + r_r t_l^*,  t_r - (q/p) t_l;
/// below threshold only |r_l| - 1 is populated.
struct IdentityResiduals {
    double flux_left = 0.0;
    double flux_right = 0.0;
    double cross = 0.0;
    double time_reversal = 0.0;
    double evanescent = 0.0;

    double max() const;
};

IdentityResiduals identity_residuals(const AmplitudeSet& amp);

/// Which family of eigenfunctions: Left holds the left-type states
/// (plane wave e^{ipx} on the left), Right the right-type states (plane wave
/// e^{iqx} on the right, two open channels only).
enum class Incidence { Left, Right };

/// A stationary scattering state |p^sign>. For the left family sign equals
/// sign(p); for the right family it equals -sign(p).
class ScatteringWave {
public:
    double label() const { return p_; }
    cplx q() const { return q_; }
    Side sign() const { return sign_; }
    Incidence incidence() const { return incidence_; }

    /// Delta normalization: h^{-1/2} (left) or (p/q)^{1/2} h^{-1/2} (right).
    cplx normalization() const { return norm_; }

    /// Unnormalized wavefunction with unit incident amplitude.
    cplx raw(double x) const;
    cplx raw_derivative(double x) const;
    /// <x|p^sign>.
    cplx operator()(double x) const { return norm_ * raw(x); }

    /// Coefficients of the asymptotic forms, unnormalized. Left family:
    /// e^{ipx} + reflected e^{-ipx} (x < a), transmitted e^{iqx} (x > b).
    /// Right family: transmitted e^{ipx} (x < a), e^{iqx} + reflected e^{-iqx}.
    cplx transmitted() const { return trans_; }
    cplx reflected() const { return refl_; }

    double energy() const { return energy_; }

private:
    friend ScatteringWave scattering_wave(const Potential&, const BranchMomentum&, Side,
                                          Incidence);
    struct Node {
        double x;
        cplx psi;       // value at x
        cplx dpsi_lo;   // derivative just left of x
        cplx dpsi_hi;   // derivative just right of x
    };

    double p_ = 0.0;
    cplx q_;
    Side sign_ = Side::Plus;
    Incidence incidence_ = Incidence::Left;
    cplx norm_;
    cplx trans_;
    cplx refl_;
    double energy_ = 0.0;
    Units units_;
    double v0_ = 0.0;
    std::vector<Node> nodes_;
    std::vector<double> interval_v_;  // potential on (nodes_[i], nodes_[i+1])
};

ScatteringWave scattering_wave(const Potential& pot, const BranchMomentum& bm, Side sign,
                               Incidence incidence);

/// Convenience: the state of the given family at the label of bm, with the
/// sign fixed by the family.
ScatteringWave scattering_wave(const Potential& pot, const BranchMomentum& bm,
                               Incidence incidence);

/// Real 2x2 propagator of (psi, psi') across a constant region of length L
/// where psi'' = -kk psi (kk = 2m(E - V)/hbar^2).
Eigen::Matrix2d constant_region_propagator(double kk, double length);

}  // namespace stepscat
