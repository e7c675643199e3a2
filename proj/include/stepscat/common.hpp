#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stepscat {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Invalid input: malformed potentials, out-of-domain momenta, bad options.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation that could not be carried out reliably (singular matching,
/// ill-conditioned linear systems, failed extrapolation).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which limit of the resolvent, E + i0 or E - i0.
enum class Side { Plus, Minus };

constexpr int sign_of(Side s) { return s == Side::Plus ? 1 : -1; }
constexpr Side side_of(int sign) { return sign >= 0 ? Side::Plus : Side::Minus; }
constexpr Side side_of(double x) { return x >= 0.0 ? Side::Plus : Side::Minus; }
constexpr Side opposite(Side s) { return s == Side::Plus ? Side::Minus : Side::Plus; }

inline int sgn(double x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

}  // namespace stepscat
