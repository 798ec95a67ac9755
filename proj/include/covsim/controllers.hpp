#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "covsim/density.hpp"
#include "covsim/geometry.hpp"

namespace covsim {

class EmptyGroundTeamError : public Error { public: using Error::Error; };
class UnnormalizedFieldError : public Error { public: using Error::Error; };
class EmptyReportsError : public Error { public: using Error::Error; };
class UnboundedRadiusError : public Error { public: using Error::Error; };
class RobotOutsideAllCellsError : public Error { public: using Error::Error; };
class NoMassError : public Error { public: using Error::Error; };
class NonSPDCovarianceError : public Error { public: using Error::Error; };

enum class RobotRole : std::uint8_t { Aerial, Ground };

struct RobotState {
    int id = 0;
    Point2 position{};
    RobotRole role = RobotRole::Ground;
    std::optional<double> sensing_radius{}; // nullopt = unlimited
};

/// Per-aerial-cell bundle: the cell polygon projected onto the ground
/// domain, its ground-robot count n_j, mass fraction Phi_j, weight
/// sigma_j = n_j/N - Phi_j, and the deadband-clamped weight sigma_hat_j.
struct AerialCellReport {
    int cell_index = 0;
    ConvexPolygon polygon;
    int robot_count = 0;
    double mass_fraction = 0.0;
    double weight = 0.0;
    double clamped_weight = 0.0;
    Point2 geometric_center{};
};

struct ControlGains {
    double kappa = 1.0; // local gain, 1/s
    double gamma = 1.0; // global gain, 1/s

    friend bool operator==(const ControlGains&, const ControlGains&) = default;

    void validate() const {
        if (!(kappa > 0.0)) throw Error("control gain kappa must be > 0");
        if (!(gamma > 0.0)) throw Error("control gain gamma must be > 0");
    }
};

/// Footprint covariance for the continuum weight diagnostic.
struct ContinuumParams {
    double cov_xx = 1e-2;
    double cov_xy = 0.0;
    double cov_yy = 1e-2;
    int local_resolution = 81;  // samples per axis of the footprint quadrature
    double extent_sigmas = 4.0; // half-width of the footprint box in std deviations

    void validate() const {
        const double det = cov_xx * cov_yy - cov_xy * cov_xy;
        if (!(cov_xx > 0.0) || !(cov_yy > 0.0) || !(det > 0.0)) {
            throw NonSPDCovarianceError("continuum footprint covariance must be SPD");
        }
    }
};

/// sigma_hat: sigma clamped to zero at or below the deadband. The deadband
/// is inclusive, so sigma == deadband maps to 0.
inline double clamp_weight(double sigma, double deadband) {
    return sigma > deadband ? sigma : 0.0;
}

/// Builds the per-cell weight reports from one consistent position snapshot.
/// Robot counts classify each ground robot to its nearest aerial site
/// (boundary ties to the lower cell index); mass fractions classify each
/// quadrature center the same way, so counts sum to N and fractions to 1.
inline std::vector<AerialCellReport> compute_cell_reports(const VoronoiDiagram& aerial_diagram,
                                                          const std::vector<RobotState>& ground_robots,
                                                          const DensityField& field,
                                                          const QuadratureGrid& grid,
                                                          double deadband) {
    if (ground_robots.empty()) throw EmptyGroundTeamError("compute_cell_reports: no ground robots");
    if (!field.is_normalized()) throw UnnormalizedFieldError("compute_cell_reports: field must be normalized");
    const std::size_t k = aerial_diagram.sites.size();

    std::vector<int> counts(k, 0);
    for (const RobotState& robot : ground_robots) {
        counts[nearest_site_index(aerial_diagram.sites, robot.position)] += 1;
    }

    std::vector<double> cell_mass(k, 0.0);
    double total_mass = 0.0;
    for (const Point2& c : grid.centers()) {
        const double phi = field.evaluate_unchecked(c);
        cell_mass[nearest_site_index(aerial_diagram.sites, c)] += phi;
        total_mass += phi;
    }

    const double n = static_cast<double>(ground_robots.size());
    std::vector<AerialCellReport> reports;
    reports.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        AerialCellReport report;
        report.cell_index = static_cast<int>(j);
        report.polygon = aerial_diagram.cells[j];
        report.robot_count = counts[j];
        report.mass_fraction = cell_mass[j] / total_mass;
        report.weight = static_cast<double>(counts[j]) / n - report.mass_fraction;
        report.clamped_weight = clamp_weight(report.weight, deadband);
        report.geometric_center = polygon_geometric_center(aerial_diagram.cells[j]);
        reports.push_back(std::move(report));
    }
    return reports;
}

/// Index of the minimum-weight cell (ties to the lowest index) and its
/// geometric center C_min, the attractor of the global law.
inline std::pair<std::size_t, Point2> select_min_weight_cell(const std::vector<AerialCellReport>& reports) {
    if (reports.empty()) throw EmptyReportsError("select_min_weight_cell: no reports");
    std::size_t best = 0;
    for (std::size_t j = 1; j < reports.size(); ++j) {
        if (reports[j].weight < reports[best].weight) best = j;
    }
    return {best, reports[best].geometric_center};
}

/// u = kappa * (c(p) - p) with c the mass centroid of the robot's cell.
/// Throws NoMassError when the cell carries no sampled mass; callers decide
/// the fallback (the simulation substitutes the geometric center).
inline Point2 lloyd_local_control(const RobotState& robot, const ConvexPolygon& own_cell,
                                  const DensityField& field, const QuadratureGrid& grid,
                                  const ControlGains& gains) {
    const std::optional<Point2> centroid = weighted_centroid(field, own_cell, grid);
    if (!centroid) throw NoMassError("lloyd_local_control: cell has no sampled mass");
    return gains.kappa * (*centroid - robot.position);
}

/// Range-limited local law: the robot only senses own_cell ∩ disc(p, r).
/// With no sensed mass the target falls back to the geometric center of the
/// clipped region; with an empty clip the command is zero.
inline Point2 range_limited_local_control(const RobotState& robot, const ConvexPolygon& own_cell,
                                          const DensityField& field, const QuadratureGrid& grid,
                                          const ControlGains& gains, int arc_segments = 64) {
    if (!robot.sensing_radius) {
        throw UnboundedRadiusError("range_limited_local_control: robot has unlimited sensing radius");
    }
    const std::optional<ConvexPolygon> sensed =
        clip_polygon_to_disc(own_cell, robot.position, *robot.sensing_radius, arc_segments);
    if (!sensed) return {0.0, 0.0};
    const std::optional<Point2> centroid = weighted_centroid(field, *sensed, grid);
    const Point2 target = centroid ? *centroid : polygon_geometric_center(*sensed);
    return gains.kappa * (target - robot.position);
}

/// u = gamma * (C_min - p).
inline Point2 global_control(const RobotState& robot, Point2 c_min, const ControlGains& gains) {
    return gains.gamma * (c_min - robot.position);
}

/// First report whose polygon contains the point; boundary ties resolve to
/// the lower cell index.
inline std::size_t containing_cell_index(const std::vector<AerialCellReport>& reports, Point2 p) {
    for (std::size_t j = 0; j < reports.size(); ++j) {
        if (point_in_polygon(p, reports[j].polygon)) return j;
    }
    throw RobotOutsideAllCellsError("point lies outside every aerial cell");
}

/// Blended law u = (1 - sigma_hat_j) u_local + sigma_hat_j u_global, where j
/// is the robot's containing aerial cell. The endpoints short-circuit so the
/// reductions to the pure laws are bit-exact. The local term is the
/// range-limited law for bounded sensing radii and the unlimited Lloyd law
/// otherwise (geometric-center fallback on a massless cell). c_min_override
/// replaces the default attractor (the minimum cell's geometric center).
inline Point2 hetero_control(const RobotState& robot, const std::vector<AerialCellReport>& reports,
                             const ConvexPolygon& own_ground_cell, const DensityField& field,
                             const QuadratureGrid& grid, const ControlGains& gains,
                             int arc_segments = 64,
                             std::optional<Point2> c_min_override = std::nullopt) {
    const std::size_t j = containing_cell_index(reports, robot.position);
    const double sigma_hat = reports[j].clamped_weight;

    const auto local = [&]() -> Point2 {
        if (robot.sensing_radius) {
            return range_limited_local_control(robot, own_ground_cell, field, grid, gains, arc_segments);
        }
        const std::optional<Point2> centroid = weighted_centroid(field, own_ground_cell, grid);
        const Point2 target = centroid ? *centroid : polygon_geometric_center(own_ground_cell);
        return gains.kappa * (target - robot.position);
    };

    if (sigma_hat <= 0.0) return local();
    const Point2 c_min = c_min_override ? *c_min_override : select_min_weight_cell(reports).second;
    const Point2 u_global = global_control(robot, c_min, gains);
    if (sigma_hat >= 1.0) return u_global;
    return (1.0 - sigma_hat) * local() + sigma_hat * u_global;
}

/// Continuum counterpart of the discrete weights: each robot's influence is
/// a bivariate normal footprint truncated to the domain and renormalized to
/// unit mass, integrated per aerial cell on a footprint-local grid. Returns
/// one sigma per cell polygon; the values sum to zero by construction.
inline std::vector<double> continuum_sigma(const std::vector<ConvexPolygon>& aerial_cells,
                                           const std::vector<RobotState>& ground_robots,
                                           const DensityField& field, const QuadratureGrid& grid,
                                           const ContinuumParams& params) {
    params.validate();
    if (ground_robots.empty()) throw EmptyGroundTeamError("continuum_sigma: no ground robots");
    if (!field.is_normalized()) throw UnnormalizedFieldError("continuum_sigma: field must be normalized");
    const std::size_t k = aerial_cells.size();
    const std::size_t n = ground_robots.size();

    std::vector<detail::EdgeTests> cell_tests;
    cell_tests.reserve(k);
    for (const ConvexPolygon& cell : aerial_cells) cell_tests.emplace_back(cell);
    const detail::EdgeTests domain_test(field.domain());

    const auto first_containing = [&](Point2 q) -> std::size_t {
        for (std::size_t j = 0; j < k; ++j) {
            if (cell_tests[j].contains(q)) return j;
        }
        return k; // outside every cell (numerical fuzz at the domain rim)
    };

    // Largest eigenvalue of the footprint covariance bounds the box extent.
    const double tr_half = 0.5 * (params.cov_xx + params.cov_yy);
    const double diff_half = 0.5 * (params.cov_xx - params.cov_yy);
    const double lambda_max = tr_half + std::sqrt(diff_half * diff_half + params.cov_xy * params.cov_xy);
    const double half_width = params.extent_sigmas * std::sqrt(lambda_max);

    GaussianComponent footprint;
    footprint.cov_xx = params.cov_xx;
    footprint.cov_xy = params.cov_xy;
    footprint.cov_yy = params.cov_yy;

    std::vector<double> count_term(k, 0.0);
    const int res = params.local_resolution;
    const double step = 2.0 * half_width / static_cast<double>(res);
    for (const RobotState& robot : ground_robots) {
        footprint.mean = robot.position;
        std::vector<double> cell_weight(k, 0.0);
        double kept_weight = 0.0;
        for (int iy = 0; iy < res; ++iy) {
            for (int ix = 0; ix < res; ++ix) {
                const Point2 q{robot.position.x - half_width + (ix + 0.5) * step,
                               robot.position.y - half_width + (iy + 0.5) * step};
                if (!domain_test.contains(q)) continue; // truncate at the domain
                const std::size_t j = first_containing(q);
                if (j == k) continue;
                const double w = footprint.pdf(q);
                cell_weight[j] += w;
                kept_weight += w;
            }
        }
        if (!(kept_weight > 0.0)) {
            // Footprint narrower than the local grid can resolve: all mass
            // collapses onto the containing cell, matching the discrete count.
            const std::size_t j = first_containing(robot.position);
            if (j == k) throw RobotOutsideAllCellsError("continuum_sigma: robot outside every aerial cell");
            cell_weight[j] = kept_weight = 1.0;
        }
        for (std::size_t j = 0; j < k; ++j) {
            count_term[j] += cell_weight[j] / kept_weight / static_cast<double>(n);
        }
    }

    // Field masses per cell with the same first-hit assignment rule.
    std::vector<double> cell_mass(k, 0.0);
    double total_mass = 0.0;
    for (const Point2& c : grid.centers()) {
        const double phi = field.evaluate_unchecked(c);
        total_mass += phi;
        const std::size_t j = first_containing(c);
        if (j < k) cell_mass[j] += phi;
    }

    std::vector<double> sigma(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        sigma[j] = count_term[j] - cell_mass[j] / total_mass;
    }
    return sigma;
}

} // namespace covsim
