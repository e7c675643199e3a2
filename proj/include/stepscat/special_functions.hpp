#pragma once

namespace stepscat {

/// Si(x) = int_0^x sin(t)/t dt.
double sine_integral(double x);

/// Ci(x) = gamma + ln x + int_0^x (cos t - 1)/t dt, x > 0.
double cosine_integral(double x);

/// Auxiliary functions of the sine/cosine integrals, y > 0:
///   f(y) = Ci(y) sin y - si(y) cos y,  g(y) = -Ci(y) cos y - si(y) sin y,
/// with si = Si - pi/2. Both decay like 1/y and 1/y^2.
struct SiCiAux {
    double f;
    double g;
};
SiCiAux sici_auxiliary(double y);

/// e^{-u} Ei(u) for u > 0.
double scaled_ei(double u);

/// e^{u} E1(u) for u > 0.
double scaled_e1(double u);

}  // namespace stepscat
