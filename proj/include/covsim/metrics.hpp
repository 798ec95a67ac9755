#pragma once

#include <cstdint>
#include <vector>

#include "covsim/density.hpp"
#include "covsim/geometry.hpp"

namespace covsim {

class DiagramPositionMismatchError : public Error { public: using Error::Error; };

/// Coverage cost H(p) = sum_i ∫_{V(p_i)} ||q - p_i||^2 phi(q) dq, evaluated
/// on the domain grid with each quadrature center assigned to its nearest
/// site (ties to the lower index), so per-cell costs add exactly to H.
inline double coverage_cost(const VoronoiDiagram& ground_diagram, const std::vector<Point2>& positions,
                            const DensityField& field, const QuadratureGrid& grid) {
    if (ground_diagram.sites.size() != positions.size()) {
        throw DiagramPositionMismatchError("coverage_cost: diagram/position count mismatch");
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (distance(ground_diagram.sites[i], positions[i]) > 1e-12) {
            throw DiagramPositionMismatchError("coverage_cost: diagram sites differ from positions");
        }
    }
    double cost = 0.0;
    for (const Point2& c : grid.centers()) {
        const std::size_t i = nearest_site_index(ground_diagram.sites, c);
        cost += distance_squared(c, positions[i]) * field.evaluate_unchecked(c);
    }
    return cost * grid.cell_area();
}

/// Per-cell decomposition of the same cost (sums exactly to coverage_cost).
inline std::vector<double> coverage_cost_per_cell(const VoronoiDiagram& ground_diagram,
                                                  const std::vector<Point2>& positions,
                                                  const DensityField& field,
                                                  const QuadratureGrid& grid) {
    if (ground_diagram.sites.size() != positions.size()) {
        throw DiagramPositionMismatchError("coverage_cost_per_cell: diagram/position count mismatch");
    }
    std::vector<double> per_cell(positions.size(), 0.0);
    for (const Point2& c : grid.centers()) {
        const std::size_t i = nearest_site_index(ground_diagram.sites, c);
        per_cell[i] += distance_squared(c, positions[i]) * field.evaluate_unchecked(c);
    }
    for (double& v : per_cell) v *= grid.cell_area();
    return per_cell;
}

/// Per-iteration cost values extracted from a run.
struct CostSeries {
    enum class Normalization : std::uint8_t { Raw, DividedByInitial };

    std::vector<double> values;
    Normalization normalization = Normalization::Raw;
};

} // namespace covsim
