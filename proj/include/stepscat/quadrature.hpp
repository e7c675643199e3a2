#pragma once

// Composite Gauss-Legendre panels and panel-local Lagrange interpolation.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace stepscat {

inline constexpr std::size_t kPanelOrder = 16;

/// Nodes and weights of the fixed-order rule on [-1, 1], nodes ascending.
struct ReferenceRule {
    std::array<double, kPanelOrder> nodes;
    std::array<double, kPanelOrder> weights;
    /// Barycentric weights for interpolation through the nodes.
    std::array<double, kPanelOrder> bary;
};

const ReferenceRule& reference_rule();

struct Panel {
    double lo;
    double hi;
    std::size_t first;  ///< index of the panel's first node in the grid
};

class QuadratureGrid {
public:
    QuadratureGrid() = default;

    /// Panels of kPanelOrder nodes covering the intervals between consecutive
    /// breakpoints. Roughly target_nodes nodes in total, spread in proportion
    /// to interval length, at least one panel per interval.
    static QuadratureGrid from_breakpoints(std::span<const double> breakpoints,
                                           std::size_t target_nodes);

    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }
    std::span<const Panel> panels() const { return panels_; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }

    /// Index of the panel containing x (closed on both ends), or npos.
    std::size_t panel_of(double x) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<Panel> panels_;
};

/// Lagrange basis values l_m(y) through the panel's nodes.
std::array<double, kPanelOrder> lagrange_basis(const Panel& panel, double y);

/// Fixed-order rule mapped to [lo, hi], split evenly into `pieces` panels.
struct NodesWeights {
    std::vector<double> x;
    std::vector<double> w;
};
NodesWeights gauss_legendre(double lo, double hi, std::size_t pieces = 1);

}  // namespace stepscat
