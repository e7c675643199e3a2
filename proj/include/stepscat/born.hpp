#pragma once

// Low-order perturbative reflection amplitudes in the different partitionings.

#include <string>
#include <utility>
#include <vector>

#include "stepscat/potential.hpp"

namespace stepscat {

enum class BornScheme { Mm1, Mm2, Lp1, InOut1 };

std::string to_string(BornScheme scheme);

struct BornResult {
    BornScheme scheme = BornScheme::Mm1;
    double label = 0.0;
    /// Reflection amplitude (MM, LP) or reflected-wave coefficient (in/out).
    cplx value;
    /// Wavenumber of the reflected wave, e^{-i wavenumber x}.
    double wavenumber = 0.0;
    /// Extrapolation or fit error estimate; zero when the value is direct.
    double error = 0.0;
    /// Regularization and fit parameters actually used.
    std::vector<std::pair<std::string, double>> parameters;
};

struct BornOptions {
    std::size_t nodes = 2000;
};

/// (-2 pi i m/p) <-p|V_l|p>, with the V0 tail on [b, inf) done analytically.
BornResult born_mm1(const Potential& pot, const BranchMomentum& bm, const BornOptions& opts = {});

/// First-order right reflection in the multichannel scheme,
/// -(i m/(hbar q)) int e^{-2iqx/hbar} V_r dx with the tail V_r = -V0 on
/// (-inf, a] done analytically. Needs two open channels.
BornResult born_mm1_right(const Potential& pot, const BranchMomentum& bm, const BornOptions& opts = {});

/// R_s - (2 pi i m/p) <-p_s^-|V_s|p_s^+>. Needs 0 in [a, b].
BornResult born_lp1(const Potential& pot, const BranchMomentum& bm, const BornOptions& opts = {});

/// Second-order multichannel term (-2 pi i m/p) <-p|V_l G_0(E + i0) V_l|p>.
/// The semi-infinite directions carry a damping e^{-eps (x - b)} on the
/// ladder eps = {0.2, 0.1, 0.05, 0.025} p/hbar and the values are
/// extrapolated to eps = 0; error is the last extrapolation increment.
BornResult born_mm2(const Potential& pot, const BranchMomentum& bm, const BornOptions& opts = {});

/// Where the scattered part of the first-order in/out state is sampled:
/// distances L = b - x spaced evenly on [near, far].
struct InOutWindow {
    double near = 0.0;  ///< zero selects 300 hbar/|q|
    double far = 0.0;   ///< zero selects 2 * near
    std::size_t samples = 0;  ///< zero selects a spacing free of aliasing
    /// Inverse powers 1/L^j, j = 1..transient_terms, absorb the transients.
    std::size_t transient_terms = 6;
};

/// First-order in/out state for x << a: the reflected wave is fitted as
/// c e^{-i k' x} with k' found by variable projection. Two open channels, p > 0.
BornResult born_inout1(const Potential& pot, const BranchMomentum& bm, const InOutWindow& window = {},
                       const BornOptions& opts = {});

/// Closed forms for V0 theta(x) + V1 delta(x).
cplx born_mm1_step_delta(const BranchMomentum& bm, double v1, const Units& units = {});
cplx born_lp1_step_delta(const BranchMomentum& bm, double v1, const Units& units = {});
cplx born_inout1_step_delta(const BranchMomentum& bm, double v1, const Units& units = {});

}  // namespace stepscat
