#include "stepscat/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "stepscat/common.hpp"

namespace stepscat {

const ReferenceRule& reference_rule() {
    static const ReferenceRule rule = [] {
        using Gauss = boost::math::quadrature::gauss<double, kPanelOrder>;
        const auto& absc = Gauss::abscissa();
        const auto& wts = Gauss::weights();
        ReferenceRule r{};
        const std::size_t half = kPanelOrder / 2;
        for (std::size_t i = 0; i < half; ++i) {
            r.nodes[half - 1 - i] = -absc[i];
            r.weights[half - 1 - i] = wts[i];
            r.nodes[half + i] = absc[i];
            r.weights[half + i] = wts[i];
        }
        for (std::size_t j = 0; j < kPanelOrder; ++j) {
            double prod = 1.0;
            for (std::size_t m = 0; m < kPanelOrder; ++m)
                if (m != j) prod *= r.nodes[j] - r.nodes[m];
            r.bary[j] = 1.0 / prod;
        }
        return r;
    }();
    return rule;
}

QuadratureGrid QuadratureGrid::from_breakpoints(std::span<const double> breakpoints,
                                                std::size_t target_nodes) {
    QuadratureGrid g;
    std::vector<double> pts(breakpoints.begin(), breakpoints.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 2) return g;
    const double total = pts.back() - pts.front();
    const std::size_t intervals = pts.size() - 1;
    const std::size_t want =
        std::max<std::size_t>(intervals, (target_nodes + kPanelOrder - 1) / kPanelOrder);
    const auto& rule = reference_rule();
    for (std::size_t i = 0; i < intervals; ++i) {
        const double lo = pts[i];
        const double hi = pts[i + 1];
        const auto count = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(double(want) * (hi - lo) / total)));
        const double h = (hi - lo) / double(count);
        for (std::size_t c = 0; c < count; ++c) {
            const double plo = lo + h * double(c);
            const double phi = c + 1 == count ? hi : lo + h * double(c + 1);
            g.panels_.push_back({plo, phi, g.nodes_.size()});
            const double mid = 0.5 * (plo + phi);
            const double half = 0.5 * (phi - plo);
            for (std::size_t j = 0; j < kPanelOrder; ++j) {
                g.nodes_.push_back(mid + half * rule.nodes[j]);
                g.weights_.push_back(half * rule.weights[j]);
            }
        }
    }
    return g;
}

std::size_t QuadratureGrid::panel_of(double x) const {
    if (panels_.empty() || x < panels_.front().lo || x > panels_.back().hi) return npos;
    auto it = std::upper_bound(panels_.begin(), panels_.end(), x,
                               [](double v, const Panel& p) { return v < p.lo; });
    if (it == panels_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(panels_.begin(), it)) - 1;
}

std::array<double, kPanelOrder> lagrange_basis(const Panel& panel, double y) {
    const auto& rule = reference_rule();
    const double t = (2.0 * y - panel.lo - panel.hi) / (panel.hi - panel.lo);
    std::array<double, kPanelOrder> out{};
    double denom = 0.0;
    for (std::size_t j = 0; j < kPanelOrder; ++j) {
        const double d = t - rule.nodes[j];
        if (d == 0.0) {
            out.fill(0.0);
            out[j] = 1.0;
            return out;
        }
        out[j] = rule.bary[j] / d;
        denom += out[j];
    }
    for (auto& v : out) v /= denom;
    return out;
}

NodesWeights gauss_legendre(double lo, double hi, std::size_t pieces) {
    if (pieces == 0) throw ConfigError("gauss_legendre: need at least one panel");
    const auto& rule = reference_rule();
    NodesWeights out;
    out.x.reserve(pieces * kPanelOrder);
    out.w.reserve(pieces * kPanelOrder);
    const double h = (hi - lo) / double(pieces);
    for (std::size_t c = 0; c < pieces; ++c) {
        const double mid = lo + h * (double(c) + 0.5);
        for (std::size_t j = 0; j < kPanelOrder; ++j) {
            out.x.push_back(mid + 0.5 * h * rule.nodes[j]);
            out.w.push_back(0.5 * h * rule.weights[j]);
        }
    }
    return out;
}

}  // namespace stepscat
