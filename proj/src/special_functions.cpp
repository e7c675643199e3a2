#include "stepscat/special_functions.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "stepscat/common.hpp"

namespace stepscat {

namespace {

constexpr double kSeriesMax = 2.0;
constexpr double kEps = 1e-17;

double si_series(double x) {
    double term = x;
    double sum = x;
    const double x2 = x * x;
    for (int n = 1; n < 60; ++n) {
        term *= -x2 / ((2.0 * n) * (2.0 * n + 1.0));
        const double add = term / (2.0 * n + 1.0);
        sum += add;
        if (std::abs(add) < kEps * std::abs(sum)) break;
    }
    return sum;
}

double ci_series(double x) {
    double term = 1.0;
    double sum = 0.0;
    const double x2 = x * x;
    for (int n = 1; n < 60; ++n) {
        term *= -x2 / ((2.0 * n - 1.0) * (2.0 * n));
        const double add = term / (2.0 * n);
        sum += add;
        if (std::abs(add) < kEps * (std::abs(sum) + 1e-300)) break;
    }
    return std::numbers::egamma + std::log(x) + sum;
}

// e^{iy} E1(iy) by modified Lentz evaluation of the continued fraction.
cplx e1_imag_scaled(double y) {
    const double tiny = std::numeric_limits<double>::min() * 1e10;
    cplx b(1.0, y);
    cplx c = 1.0 / tiny;
    cplx d = 1.0 / b;
    cplx h = d;
    for (int i = 2; i < 100000; ++i) {
        const double a = -double(i - 1) * double(i - 1);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const cplx del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) return h;
    }
    throw NumericalError("sine/cosine integral continued fraction did not converge");
}

}  // namespace

double sine_integral(double x) {
    if (!std::isfinite(x)) throw ConfigError("sine_integral: argument must be finite");
    if (x < 0.0) return -sine_integral(-x);
    if (x == 0.0) return 0.0;
    if (x <= kSeriesMax) return si_series(x);
    const cplx w = std::exp(cplx(0.0, -x)) * e1_imag_scaled(x);
    return pi / 2.0 + w.imag();
}

double cosine_integral(double x) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw ConfigError("cosine_integral: argument must be positive and finite");
    if (x <= kSeriesMax) return ci_series(x);
    const cplx w = std::exp(cplx(0.0, -x)) * e1_imag_scaled(x);
    return -w.real();
}

SiCiAux sici_auxiliary(double y) {
    if (!(y > 0.0) || !std::isfinite(y))
        throw ConfigError("sici_auxiliary: argument must be positive and finite");
    if (y <= kSeriesMax) {
        const double ci = ci_series(y);
        const double si = si_series(y) - pi / 2.0;
        const double s = std::sin(y);
        const double c = std::cos(y);
        return {ci * s - si * c, -ci * c - si * s};
    }
    const cplx h = e1_imag_scaled(y);
    return {-h.imag(), h.real()};
}

namespace {

// Asymptotic sum  sum_k (sign)^k k! / u^{k+1}, truncated at its smallest term.
double exp_integral_asymptotic(double u, double sign) {
    double term = 1.0 / u;
    double sum = term;
    for (int k = 1; k < 200; ++k) {
        const double next = term * sign * k / u;
        if (std::abs(next) >= std::abs(term)) break;
        term = next;
        sum += term;
        if (std::abs(term) < kEps * std::abs(sum)) break;
    }
    return sum;
}

constexpr double kAsymptoticMin = 40.0;

}  // namespace

double scaled_ei(double u) {
    if (!(u > 0.0) || !std::isfinite(u)) throw ConfigError("scaled_ei: argument must be positive");
    if (u >= kAsymptoticMin) return exp_integral_asymptotic(u, 1.0);
    return std::exp(-u) * std::expint(u);
}

double scaled_e1(double u) {
    if (!(u > 0.0) || !std::isfinite(u)) throw ConfigError("scaled_e1: argument must be positive");
    if (u >= kAsymptoticMin) return exp_integral_asymptotic(u, -1.0);
    return -std::exp(u) * std::expint(-u);
}

}  // namespace stepscat
