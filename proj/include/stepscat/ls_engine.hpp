#pragma once

// Nystrom solution of the Lippmann-Schwinger equations on [a, b] and the
// amplitude formulas built on top of the solutions.

#include <memory>
#include <string>
#include <vector>

#include "stepscat/closed_form.hpp"
#include "stepscat/greens.hpp"
#include "stepscat/quadrature.hpp"

namespace stepscat {

/// MmLeft:  psi = |p> + G_l V_l psi, states |p^{sign p}> (left family).
/// MmRight: psi = |q_N> + G_r V_r psi, states |p^{-sign p}> (right family).
/// Lp:      psi = |p_s> + G_s V_s psi, either family.
enum class Partitioning { MmLeft, MmRight, Lp };

std::string to_string(Partitioning partitioning);

struct LsOptions {
    std::size_t nodes = 2000;
    /// Largest acceptable relative residual of the dense solve.
    double solve_tolerance = 1e-10;
};

namespace detail {
struct LsSystem;
struct LsAccess;
}

/// Tail integrals with the +-i0 convergence factor taken analytically:
///   int_b^inf e^{iKx} dx = i e^{iKb}/K        (Im K >= 0)
///   int_-inf^a e^{iKx} dx = -i e^{iKa}/K      (Im K <= 0)
cplx tail_right(cplx wavenumber, double b);
cplx tail_left(cplx wavenumber, double a);

/// Unnormalized value at x of the pure-step eigenfunction of the family at
/// label p (same asymptotic conventions as ScatteringWave).
cplx step_state(double p, cplx q, Incidence family, double x, const Units& units);

/// A scattering state from one partitioning. Values are unnormalized: the
/// incident plane wave has unit amplitude.
class LSolution {
public:
    Partitioning partitioning() const { return partitioning_; }
    double label() const { return bm_.p; }
    const BranchMomentum& momentum() const { return bm_; }
    Side sign() const { return sign_; }
    Incidence family() const { return family_; }

    const QuadratureGrid& grid() const;
    std::span<const cplx> values() const { return values_; }
    /// Values at the delta positions, in the potential's delta order.
    std::span<const cplx> delta_values() const { return delta_values_; }
    /// Amplitude of the tail unknown (MM only; zero otherwise).
    cplx tail_amplitude() const { return tail_; }
    double solve_residual() const { return residual_; }

    /// Transmitted and reflected amplitudes of this state (same meaning as
    /// ScatteringWave::transmitted / reflected).
    cplx transmitted() const { return trans_; }
    cplx reflected() const { return refl_; }

    /// Unnormalized value anywhere: Nystrom interpolation on [a, b],
    /// asymptotic forms outside.
    cplx operator()(double x) const;
    cplx normalization() const;

    const Potential& potential() const;

private:
    friend struct detail::LsAccess;
    std::shared_ptr<const detail::LsSystem> system_;
    Partitioning partitioning_ = Partitioning::Lp;
    BranchMomentum bm_;
    Side sign_ = Side::Plus;
    Incidence family_ = Incidence::Left;
    std::vector<cplx> values_;
    std::vector<cplx> delta_values_;
    cplx tail_;
    cplx trans_;
    cplx refl_;
    double residual_ = 0.0;
};

/// Solve for the state |p^sign>. For MmLeft sign must be sign(p); for
/// MmRight it must be -sign(p) with two open channels; Lp accepts both and
/// needs 0 in [a, b].
LSolution solve_ls(const Potential& pot, const BranchMomentum& bm, Partitioning partitioning,
                   Side sign, const LsOptions& opts = {});

/// The two Lp states sharing one matrix: left family at p and right family
/// at -p (the latter only with two open channels).
struct LpPair {
    LSolution left;
    std::optional<LSolution> right;
};
LpPair solve_lp_pair(const Potential& pot, const BranchMomentum& bm, const LsOptions& opts = {});

/// Amplitudes of one MM state from the matrix-element formulas with
/// analytic tails. Left family: {t_l, r_l}; right family: {t_r, r_r} of the
/// set at label -p.
struct MmExtraction {
    cplx transmitted;
    cplx reflected;
    /// |transmitted - tail amplitude|: the two routes to the same number.
    double tail_consistency = 0.0;
};
MmExtraction extract_amplitudes_mm(const LSolution& sol);

/// Full set at label bm.p from MmLeft at p and MmRight at -p.
AmplitudeSet mm_amplitudes(const Potential& pot, const BranchMomentum& bm, const LsOptions& opts = {});

/// The four step-reference formulas. The right solution may be absent below
/// threshold.
AmplitudeSet extract_amplitudes_lp(const LpPair& pair);
AmplitudeSet lp_amplitudes(const Potential& pot, const BranchMomentum& bm, const LsOptions& opts = {});

/// Relative residual of the complementary homogeneous equation:
/// left family psi = G_r V_r psi, right family psi = G_l V_l psi. With no
/// step the ordinary equation psi = |p> + G_0 V psi is checked instead.
double check_alternative_ls(const LSolution& sol);

enum class TwoPotentialFormula {
    /// <p|V|Psi> = <p|V_theta|Psi_s> + <p_s|V_s|Psi>
    PlaneWave,
    /// <q|V_r|Psi> = -V0 <q|theta(-x)|Psi_s> + <q_s|V_s|Psi>
    Channel,
};

struct TwoPotentialSides {
    cplx lhs;
    cplx rhs;
    double relative_error() const;
};

/// Both sides of the two-potential identity for the ket selected by the sign
/// combination (+: the state of the first family named below; -: the other).
/// PlaneWave: + is the right family at p, - the left family at -p.
/// Channel:   + is the left family at p,  - the right family at -p.
/// Two open channels required.
TwoPotentialSides check_two_potential(const Potential& pot, const BranchMomentum& bm, Side combo,
                                      TwoPotentialFormula formula, const LsOptions& opts = {});

enum class TOperatorKind { Full, Left, Right, Step };

/// <bra|T|ket> in the plane-wave basis (1/h and e^{-i bra x} e^{i ket x}).
struct TMatrixElement {
    double bra;
    double ket;
    cplx value;
    TOperatorKind kind;
};

/// <p|T_s(E_{p'} + side i0)|p'> with T_s|p'> = V_s phi, phi = |p'> + G_s V_s phi.
TMatrixElement step_tmatrix_element(const Potential& pot, double bra, double ket, Side side,
                                    const LsOptions& opts = {});

/// Ordinary scattering (V0 = 0) from the on-shell elements of T = V + V G V:
/// T = 1 - (2 pi i m/p) T_{p,p}, R^l = -(2 pi i m/p) T_{-p,p}, R^r = -(2 pi i m/p) T_{p,-p}.
struct OrdinaryResult {
    AmplitudeSet amplitudes;
    TMatrixElement forward;
    TMatrixElement left_reflection;
    TMatrixElement right_reflection;
};
OrdinaryResult ordinary_amplitudes(const Potential& pot, const BranchMomentum& bm,
                                   const LsOptions& opts = {});

}  // namespace stepscat
