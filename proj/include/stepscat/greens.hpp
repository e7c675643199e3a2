#pragma once

// Coordinate-space resolvent kernels of the reference Hamiltonians.

#include <functional>

#include "stepscat/potential.hpp"

namespace stepscat {

/// <x|(z - p^2/2m)^{-1}|x'>. A real z takes the limit from the side given;
/// a complex z ignores the side and uses the root with Im > 0.
cplx g_free(cplx z, Side side, double x, double xp, const Units& units = {});

/// Free kernel of p^2/2m + v0, i.e. g_free(z - v0).
cplx g_shifted(cplx z, Side side, double x, double xp, double v0, const Units& units = {});

/// Momentum of the kernel exponent, (2mz)^{1/2} on the chosen branch.
cplx resolvent_momentum(cplx z, Side side, const Units& units = {});

struct StepKernelParams {
    double abs_p;  ///< |p| = (2mE)^{1/2}
    cplx mu;       ///< channel momentum on the right, +-i|.| below V0
    cplx t;        ///< 2|p|/(|p| + mu)
    cplx r;        ///< (|p| - mu)/(|p| + mu)
};

StepKernelParams step_kernel_params(double energy, Side side, double v0, const Units& units = {});

/// Kernel of the pure step V0 theta(x) at energy E > 0, E != V0.
cplx g_step(double energy, Side side, double x, double xp, double v0, const Units& units = {});

/// <x|F_xi (zeta - p^2/2m)^{-1}|x'> with F_+ (F_-) the projector on positive
/// (negative) momenta. zeta real and nonzero; x != x'.
cplx projected_free_kernel(int xi, double zeta, Side side, double x, double xp,
                           const Units& units = {});

enum class KernelKind { Free, Shifted, Step, In, Out };

std::string to_string(KernelKind kind);

/// In:  F_+ (E - H0)^{-1} + F_- (E - V0 - H0)^{-1}
/// Out: F_+ (E - V0 - H0)^{-1} + F_- (E - H0)^{-1}
cplx g_inout(KernelKind kind, double energy, Side side, double x, double xp, double v0,
             const Units& units = {});

/// A kernel bound to an energy, side and step height.
class ResolventKernel {
public:
    ResolventKernel(KernelKind kind, double energy, Side side, double v0 = 0.0, Units units = {});

    cplx operator()(double x, double xp) const;

    KernelKind kind() const { return kind_; }
    double energy() const { return energy_; }
    Side side() const { return side_; }
    double v0() const { return v0_; }
    const Units& units() const { return units_; }

    /// Potential of the reference Hamiltonian (local kinds only).
    double reference_potential(double x) const;

private:
    KernelKind kind_;
    double energy_;
    Side side_;
    double v0_;
    Units units_;
};

struct ResidualWindow {
    double lo;  ///< test function support and quadrature range
    double hi;
    double eval_lo;  ///< window where the residual is measured
    double eval_hi;
    double h;        ///< grid spacing
};

/// Relative L2 norm of (E - H_ref) K f - f over the evaluation window, with
/// K f computed by the midpoint rule and H_ref by second differences, both
/// on the spacing h. In/out kernels are split into their two projector
/// pieces and each is acted on by its own free operator.
double residual_check(const ResolventKernel& kernel, const std::function<double(double)>& f,
                      const ResidualWindow& window);

}  // namespace stepscat
