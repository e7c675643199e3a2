#pragma once

// Random potentials and small helpers shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "stepscat/potential.hpp"

namespace stepscat::testing {

/// Piecewise potential with a in [-2, -0.2], b in [0.2, 2], one to four
/// segments with heights in [-1, 3], up to two deltas of strength +-0.5.
inline Potential random_potential(std::mt19937_64& rng, double v0_lo = 0.3, double v0_hi = 2.0) {
    std::uniform_real_distribution<double> ua(-2.0, -0.2), ub(0.2, 2.0), uv(-1.0, 3.0),
        uv0(v0_lo, v0_hi), unit(0.0, 1.0), us(-0.5, 0.5);
    const double a = ua(rng);
    const double b = ub(rng);
    const int nseg = 1 + static_cast<int>(rng() % 4);
    std::vector<double> cuts{a, b};
    for (int i = 1; i < nseg; ++i) cuts.push_back(a + (b - a) * unit(rng));
    std::sort(cuts.begin(), cuts.end());
    std::vector<Segment> segs;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] - cuts[i] > 1e-3) segs.push_back({cuts[i], cuts[i + 1], uv(rng)});
    std::vector<DeltaSpike> deltas;
    const int nd = static_cast<int>(rng() % 3);
    for (int i = 0; i < nd; ++i) deltas.push_back({a + (b - a) * unit(rng), us(rng)});
    return Potential(uv0(rng), a, b, segs, deltas);
}

inline double rel_err(std::complex<double> got, std::complex<double> want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace stepscat::testing
