#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covsim/controllers.hpp"
#include "covsim/density.hpp"
#include "covsim/geometry.hpp"
#include "covsim/metrics.hpp"
#include "covsim/rng.hpp"

namespace covsim {

class ConfigInvalidError : public Error { public: using Error::Error; };

enum class ControllerKind : std::uint8_t { UnlimitedLloyd, LimitedLloyd, Heterogeneous };

inline const char* controller_name(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::UnlimitedLloyd: return "unlimited-lloyd";
        case ControllerKind::LimitedLloyd: return "limited-lloyd";
        case ControllerKind::Heterogeneous: return "heterogeneous";
    }
    return "unknown";
}

/// Global attractor choice for the blended law: the minimum-weight cell's
/// geometric center (default) or its mass center.
enum class CMinMode : std::uint8_t { GeometricCenter, MassCenter };

/// Density section of a scenario: uniform or a Gaussian mixture.
struct DensitySpec {
    DensityField::Kind kind = DensityField::Kind::Uniform;
    std::vector<GaussianComponent> components;

    DensityField build(const ConvexPolygon& domain, const QuadratureGrid& grid) const {
        DensityField raw = (kind == DensityField::Kind::Uniform)
                               ? DensityField::uniform(domain)
                               : DensityField::gaussian_mixture(domain, components);
        return normalize(raw, grid);
    }

    bool operator==(const DensitySpec& other) const {
        if (kind != other.kind || components.size() != other.components.size()) return false;
        for (std::size_t i = 0; i < components.size(); ++i) {
            const auto& a = components[i];
            const auto& b = other.components[i];
            if (a.weight != b.weight || a.mean.x != b.mean.x || a.mean.y != b.mean.y ||
                a.cov_xx != b.cov_xx || a.cov_xy != b.cov_xy || a.cov_yy != b.cov_yy) {
                return false;
            }
        }
        return true;
    }
};

/// Where a robot team starts.
struct InitialPlacement {
    enum class Type : std::uint8_t { Uniform, Rect, Disc, Explicit };

    Type type = Type::Uniform;
    Point2 rect_lo{};
    Point2 rect_hi{};
    Point2 disc_center{};
    double disc_radius = 0.0;
    std::vector<Point2> positions; // Explicit only

    bool operator==(const InitialPlacement& other) const {
        if (type != other.type) return false;
        switch (type) {
            case Type::Uniform: return true;
            case Type::Rect:
                return rect_lo.x == other.rect_lo.x && rect_lo.y == other.rect_lo.y &&
                       rect_hi.x == other.rect_hi.x && rect_hi.y == other.rect_hi.y;
            case Type::Disc:
                return disc_center.x == other.disc_center.x && disc_center.y == other.disc_center.y &&
                       disc_radius == other.disc_radius;
            case Type::Explicit: {
                if (positions.size() != other.positions.size()) return false;
                for (std::size_t i = 0; i < positions.size(); ++i) {
                    if (positions[i].x != other.positions[i].x || positions[i].y != other.positions[i].y) {
                        return false;
                    }
                }
                return true;
            }
        }
        return false;
    }
};

struct ScenarioConfig {
    Point2 domain_lo{-1.6, -1.0};
    Point2 domain_hi{1.6, 1.0};
    int n_ground = 12;
    int k_aerial = 4;
    DensitySpec density;
    std::optional<double> sensing_radius = 0.3; // nullopt = unlimited
    ControlGains gains{1.0, 1.0};
    double dt = 0.033;
    double max_speed = 0.2;
    int max_iterations = 3000;
    double convergence_eps = 1e-3;
    int convergence_window = 10;
    std::optional<double> deadband; // nullopt = 1/N
    ControllerKind controller = ControllerKind::Heterogeneous;
    std::uint64_t rng_seed = 1;
    int grid_nx = 160;
    int grid_ny = 100;
    int arc_segments = 64;
    CMinMode c_min_mode = CMinMode::GeometricCenter;
    InitialPlacement initial_ground;
    InitialPlacement initial_aerial;

    ConvexPolygon domain_polygon() const { return ConvexPolygon::rectangle(domain_lo, domain_hi); }

    double effective_deadband() const {
        return deadband ? *deadband : 1.0 / static_cast<double>(n_ground);
    }

    bool operator==(const ScenarioConfig& other) const {
        return domain_lo == other.domain_lo && domain_hi == other.domain_hi &&
               n_ground == other.n_ground && k_aerial == other.k_aerial && density == other.density &&
               sensing_radius == other.sensing_radius && gains == other.gains && dt == other.dt &&
               max_speed == other.max_speed && max_iterations == other.max_iterations &&
               convergence_eps == other.convergence_eps &&
               convergence_window == other.convergence_window && deadband == other.deadband &&
               controller == other.controller && rng_seed == other.rng_seed &&
               grid_nx == other.grid_nx && grid_ny == other.grid_ny &&
               arc_segments == other.arc_segments && c_min_mode == other.c_min_mode &&
               initial_ground == other.initial_ground && initial_aerial == other.initial_aerial;
    }

    void validate() const {
        if (!(domain_hi.x > domain_lo.x) || !(domain_hi.y > domain_lo.y)) {
            throw ConfigInvalidError("domain: max must exceed min in both axes");
        }
        if (n_ground < 1) throw ConfigInvalidError("n_ground: must be >= 1");
        if (controller == ControllerKind::Heterogeneous && k_aerial < 1) {
            throw ConfigInvalidError("k_aerial: must be >= 1 for the heterogeneous controller");
        }
        if (density.kind == DensityField::Kind::GaussianMixture && density.components.empty()) {
            throw ConfigInvalidError("density.components: gaussian mixture needs at least one component");
        }
        for (std::size_t i = 0; i < density.components.size(); ++i) {
            try {
                density.components[i].validate();
            } catch (const Error& e) {
                throw ConfigInvalidError("density.components[" + std::to_string(i) + "]: " + e.what());
            }
        }
        if (sensing_radius && !(*sensing_radius > 0.0)) {
            throw ConfigInvalidError("sensing_radius: must be > 0 when bounded");
        }
        if (controller == ControllerKind::LimitedLloyd && !sensing_radius) {
            // Allowed: the limited controller degenerates to unlimited Lloyd.
        }
        try {
            gains.validate();
        } catch (const Error& e) {
            throw ConfigInvalidError(std::string("gains: ") + e.what());
        }
        if (!(dt > 0.0)) throw ConfigInvalidError("dt: must be > 0");
        if (!(max_speed > 0.0)) throw ConfigInvalidError("max_speed: must be > 0");
        if (max_iterations < 1) throw ConfigInvalidError("max_iterations: must be >= 1");
        if (!(convergence_eps > 0.0)) throw ConfigInvalidError("convergence_eps: must be > 0");
        if (convergence_window < 1) throw ConfigInvalidError("convergence_window: must be >= 1");
        if (deadband && *deadband < 0.0) throw ConfigInvalidError("deadband: must be >= 0");
        if (grid_nx < 32 || grid_ny < 32) throw ConfigInvalidError("grid: resolution must be at least 32x32");
        if (arc_segments < 16) throw ConfigInvalidError("arc_segments: must be >= 16");
        validate_placement(initial_ground, "initial_ground", n_ground);
        if (controller == ControllerKind::Heterogeneous) {
            validate_placement(initial_aerial, "initial_aerial", k_aerial);
        }
    }

private:
    void validate_placement(const InitialPlacement& placement, const char* name, int expected) const {
        const ConvexPolygon domain = domain_polygon();
        switch (placement.type) {
            case InitialPlacement::Type::Uniform:
                return;
            case InitialPlacement::Type::Rect: {
                if (!(placement.rect_hi.x > placement.rect_lo.x) ||
                    !(placement.rect_hi.y > placement.rect_lo.y)) {
                    throw ConfigInvalidError(std::string(name) + ".rect: max must exceed min");
                }
                const Point2 mid = 0.5 * (placement.rect_lo + placement.rect_hi);
                if (!point_in_polygon(mid, domain)) {
                    throw ConfigInvalidError(std::string(name) + ".rect: region does not meet the domain");
                }
                return;
            }
            case InitialPlacement::Type::Disc: {
                if (!(placement.disc_radius > 0.0)) {
                    throw ConfigInvalidError(std::string(name) + ".disc: radius must be > 0");
                }
                if (!point_in_polygon(placement.disc_center, domain)) {
                    throw ConfigInvalidError(std::string(name) + ".disc: center must lie inside the domain");
                }
                return;
            }
            case InitialPlacement::Type::Explicit: {
                if (static_cast<int>(placement.positions.size()) != expected) {
                    throw ConfigInvalidError(std::string(name) + ".positions: expected " +
                                             std::to_string(expected) + " entries, got " +
                                             std::to_string(placement.positions.size()));
                }
                for (std::size_t i = 0; i < placement.positions.size(); ++i) {
                    if (!point_in_polygon(placement.positions[i], domain)) {
                        throw ConfigInvalidError(std::string(name) + ".positions[" + std::to_string(i) +
                                                 "]: outside the domain");
                    }
                }
                return;
            }
        }
    }
};

struct SimState {
    int iteration = 0;
    std::vector<RobotState> ground;
    std::vector<RobotState> aerial;
    VoronoiDiagram aerial_diagram;
    VoronoiDiagram ground_diagram;
    std::vector<AerialCellReport> reports;
};

/// Per-cell scalars logged every iteration (hetero runs only).
struct CellStat {
    int robot_count = 0;
    double mass_fraction = 0.0;
    double weight = 0.0;
    double clamped_weight = 0.0;
};

struct TraceRecord {
    int iteration = 0;
    std::vector<Point2> positions; // ground robots, id order
    double cost = 0.0;
    std::vector<CellStat> cells;
    double sigma_min = 0.0;
    int min_cell_index = -1;
};

struct AerialPhaseInfo {
    int iterations = 0;
    bool converged = true;
};

struct SimTrace {
    ScenarioConfig config; // resolved configuration, for provenance
    std::vector<TraceRecord> records;
    int iterations = 0;
    bool converged = false;
    double final_cost = 0.0;
    std::vector<Point2> aerial_positions;
    VoronoiDiagram aerial_diagram; // empty unless heterogeneous
    AerialPhaseInfo aerial_phase;
};

struct AerialPhaseResult {
    std::vector<Point2> positions;
    VoronoiDiagram diagram;
    int iterations = 0;
    bool converged = false;
};

/// Aerial deployment: standard Lloyd iteration with a uniform density over
/// the domain, i.e. each site moves to its cell's geometric center, until
/// the maximum centroid residual drops below convergence_eps.
inline AerialPhaseResult run_aerial_phase(const ScenarioConfig& config, RngStream& rng) {
    const ConvexPolygon domain = config.domain_polygon();
    std::vector<Point2> sites;
    if (config.initial_aerial.type == InitialPlacement::Type::Explicit) {
        sites = config.initial_aerial.positions;
    } else {
        for (int i = 0; i < config.k_aerial; ++i) {
            switch (config.initial_aerial.type) {
                case InitialPlacement::Type::Rect:
                    sites.push_back(rng.point_in_rect(config.initial_aerial.rect_lo, config.initial_aerial.rect_hi));
                    break;
                case InitialPlacement::Type::Disc:
                    sites.push_back(rng.point_in_disc(config.initial_aerial.disc_center,
                                                      config.initial_aerial.disc_radius, domain));
                    break;
                default:
                    sites.push_back(rng.point_in_polygon_region(domain));
                    break;
            }
        }
    }

    AerialPhaseResult result;
    result.diagram = voronoi_tessellate(sites, domain);
    result.converged = false;
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        double residual = 0.0;
        std::vector<Point2> targets(sites.size());
        for (std::size_t i = 0; i < sites.size(); ++i) {
            targets[i] = polygon_geometric_center(result.diagram.cells[i]);
            residual = std::max(residual, distance(targets[i], sites[i]));
        }
        result.iterations = iter;
        if (residual < config.convergence_eps) {
            result.converged = true;
            break;
        }
        sites = std::move(targets);
        result.diagram = voronoi_tessellate(sites, domain);
    }
    result.positions = sites;
    return result;
}

/// Discrete-time engine: aerial phase first (heterogeneous only), then the
/// ground team under the configured controller with forward-Euler steps.
/// All integrals run over one domain-attached grid with nearest-site sample
/// assignment, so logged costs decompose exactly across cells.
class Simulation {
public:
    explicit Simulation(ScenarioConfig config)
        : config_(std::move(config)),
          grid_((config_.validate(), config_.domain_polygon()), config_.grid_nx, config_.grid_ny),
          field_(config_.density.build(config_.domain_polygon(), grid_)),
          ground_rng_(config_.rng_seed),
          aerial_rng_(RngStream(config_.rng_seed).substream(1)) {
        phi_samples_ = grid_.sample_field(field_);
        initialize();
    }

    const ScenarioConfig& config() const { return config_; }
    const DensityField& field() const { return field_; }
    const QuadratureGrid& grid() const { return grid_; }
    const SimState& state() const { return state_; }
    const SimTrace& trace() const { return trace_; }

    /// Advances one iteration. Returns false once the run should stop
    /// (converged or out of iterations).
    bool step() {
        if (done_) return false;
        const std::vector<Point2> velocities = compute_velocities();
        double max_commanded = 0.0;
        for (std::size_t i = 0; i < state_.ground.size(); ++i) {
            Point2 u = velocities[i];
            const double speed = norm(u);
            if (speed > config_.max_speed) u = (config_.max_speed / speed) * u;
            const Point2 displacement = config_.dt * u;
            max_commanded = std::max(max_commanded, norm(displacement));
            state_.ground[i].position = clamp_to_rectangle(state_.ground[i].position + displacement,
                                                           config_.domain_lo, config_.domain_hi);
        }
        state_.iteration += 1;
        refresh_derived_state();
        append_record();

        quiet_iters_ = (max_commanded < config_.convergence_eps) ? quiet_iters_ + 1 : 0;
        if (quiet_iters_ >= config_.convergence_window) {
            trace_.converged = true;
            done_ = true;
        } else if (state_.iteration >= config_.max_iterations) {
            done_ = true;
        }
        return !done_;
    }

    SimTrace run() {
        while (step()) {
        }
        trace_.iterations = state_.iteration;
        trace_.final_cost = trace_.records.back().cost;
        return trace_;
    }

private:
    void initialize() {
        const ConvexPolygon domain = config_.domain_polygon();

        if (config_.controller == ControllerKind::Heterogeneous) {
            const AerialPhaseResult aerial = run_aerial_phase(config_, aerial_rng_);
            state_.aerial_diagram = aerial.diagram;
            trace_.aerial_phase = {aerial.iterations, aerial.converged};
            trace_.aerial_positions = aerial.positions;
            trace_.aerial_diagram = aerial.diagram;
            for (std::size_t i = 0; i < aerial.positions.size(); ++i) {
                state_.aerial.push_back({static_cast<int>(i), aerial.positions[i], RobotRole::Aerial, {}});
            }
        }

        for (int i = 0; i < config_.n_ground; ++i) {
            Point2 p{};
            switch (config_.initial_ground.type) {
                case InitialPlacement::Type::Explicit:
                    p = config_.initial_ground.positions[static_cast<std::size_t>(i)];
                    break;
                case InitialPlacement::Type::Rect: {
                    do {
                        p = ground_rng_.point_in_rect(config_.initial_ground.rect_lo, config_.initial_ground.rect_hi);
                    } while (!point_in_polygon(p, domain));
                    break;
                }
                case InitialPlacement::Type::Disc:
                    p = ground_rng_.point_in_disc(config_.initial_ground.disc_center,
                                                  config_.initial_ground.disc_radius, domain);
                    break;
                case InitialPlacement::Type::Uniform:
                    p = ground_rng_.point_in_polygon_region(domain);
                    break;
            }
            const std::optional<double> radius =
                config_.controller == ControllerKind::UnlimitedLloyd ? std::nullopt : config_.sensing_radius;
            state_.ground.push_back({i, p, RobotRole::Ground, radius});
        }

        trace_.config = config_;
        refresh_derived_state();
        append_record();
    }

    /// Recomputes the ground diagram, the fused per-cell integrals, and (for
    /// heterogeneous runs) the aerial cell reports for the current positions.
    void refresh_derived_state() {
        std::vector<Point2> positions;
        positions.reserve(state_.ground.size());
        for (const RobotState& r : state_.ground) positions.push_back(r.position);

        state_.ground_diagram = voronoi_tessellate(positions, grid_.domain());

        const std::size_t n = positions.size();
        cell_mass_.assign(n, 0.0);
        cell_mx_.assign(n, 0.0);
        cell_my_.assign(n, 0.0);
        current_cost_ = 0.0;
        const auto& centers = grid_.centers();
        for (std::size_t s = 0; s < centers.size(); ++s) {
            const Point2 c = centers[s];
            const std::size_t i = nearest_site_index(positions, c);
            const double phi = phi_samples_[s];
            cell_mass_[i] += phi;
            cell_mx_[i] += phi * c.x;
            cell_my_[i] += phi * c.y;
            current_cost_ += phi * distance_squared(c, positions[i]);
        }
        current_cost_ *= grid_.cell_area();

        if (config_.controller == ControllerKind::Heterogeneous) {
            if (cached_mass_fractions_.empty()) {
                const std::vector<AerialCellReport> full = compute_cell_reports(
                    state_.aerial_diagram, state_.ground, field_, grid_, config_.effective_deadband());
                cached_mass_fractions_.reserve(full.size());
                for (const auto& r : full) cached_mass_fractions_.push_back(r.mass_fraction);
                state_.reports = full;
            } else {
                // Cells and the field are frozen after the aerial phase; only
                // the robot counts change between steps.
                const std::size_t k = state_.aerial_diagram.sites.size();
                std::vector<int> counts(k, 0);
                for (const RobotState& robot : state_.ground) {
                    counts[nearest_site_index(state_.aerial_diagram.sites, robot.position)] += 1;
                }
                const double deadband = config_.effective_deadband();
                for (std::size_t j = 0; j < k; ++j) {
                    AerialCellReport& report = state_.reports[j];
                    report.robot_count = counts[j];
                    report.weight = static_cast<double>(counts[j]) / static_cast<double>(n) -
                                    cached_mass_fractions_[j];
                    report.clamped_weight = clamp_weight(report.weight, deadband);
                }
            }
        }
    }

    Point2 fused_centroid_or_center(std::size_t i) const {
        if (cell_mass_[i] * grid_.cell_area() >= kNoMassTol) {
            return {cell_mx_[i] / cell_mass_[i], cell_my_[i] / cell_mass_[i]};
        }
        return polygon_geometric_center(state_.ground_diagram.cells[i]);
    }

    std::vector<Point2> compute_velocities() const {
        const std::size_t n = state_.ground.size();
        std::vector<Point2> velocities(n);
        std::optional<Point2> c_min_override;
        if (config_.controller == ControllerKind::Heterogeneous &&
            config_.c_min_mode == CMinMode::MassCenter) {
            const auto [j, geometric] = select_min_weight_cell(state_.reports);
            const std::optional<Point2> mass_center =
                weighted_centroid(field_, state_.reports[j].polygon, grid_);
            c_min_override = mass_center ? *mass_center : geometric;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const RobotState& robot = state_.ground[i];
            const ConvexPolygon& cell = state_.ground_diagram.cells[i];
            switch (config_.controller) {
                case ControllerKind::UnlimitedLloyd:
                    velocities[i] = config_.gains.kappa * (fused_centroid_or_center(i) - robot.position);
                    break;
                case ControllerKind::LimitedLloyd:
                    if (robot.sensing_radius) {
                        velocities[i] = range_limited_local_control(robot, cell, field_, grid_,
                                                                    config_.gains, config_.arc_segments);
                    } else {
                        const std::optional<Point2> centroid = weighted_centroid(field_, cell, grid_);
                        const Point2 target = centroid ? *centroid : polygon_geometric_center(cell);
                        velocities[i] = config_.gains.kappa * (target - robot.position);
                    }
                    break;
                case ControllerKind::Heterogeneous:
                    velocities[i] = hetero_control(robot, state_.reports, cell, field_, grid_,
                                                   config_.gains, config_.arc_segments, c_min_override);
                    break;
            }
        }
        return velocities;
    }

    void append_record() {
        TraceRecord record;
        record.iteration = state_.iteration;
        record.positions.reserve(state_.ground.size());
        for (const RobotState& r : state_.ground) record.positions.push_back(r.position);
        record.cost = current_cost_;
        if (!state_.reports.empty()) {
            record.cells.reserve(state_.reports.size());
            double sigma_min = state_.reports.front().weight;
            int min_index = 0;
            for (const AerialCellReport& r : state_.reports) {
                record.cells.push_back({r.robot_count, r.mass_fraction, r.weight, r.clamped_weight});
                if (r.weight < sigma_min) {
                    sigma_min = r.weight;
                    min_index = r.cell_index;
                }
            }
            record.sigma_min = sigma_min;
            record.min_cell_index = min_index;
        }
        trace_.records.push_back(std::move(record));
    }

    ScenarioConfig config_;
    QuadratureGrid grid_;
    DensityField field_;
    RngStream ground_rng_;
    RngStream aerial_rng_;
    SimState state_;
    SimTrace trace_;
    std::vector<double> phi_samples_;
    std::vector<double> cell_mass_;
    std::vector<double> cell_mx_;
    std::vector<double> cell_my_;
    double current_cost_ = 0.0;
    std::vector<double> cached_mass_fractions_;
    int quiet_iters_ = 0;
    bool done_ = false;
};

inline SimTrace run(const ScenarioConfig& config) { return Simulation(config).run(); }

/// Aerial-cell membership changes per robot over the last quarter of the
/// trace; a deadband of 1/N keeps these at zero once the team settles.
inline std::vector<int> detect_boundary_oscillation(const SimTrace& trace,
                                                    const VoronoiDiagram& aerial_diagram) {
    const std::size_t records = trace.records.size();
    std::vector<int> crossings;
    if (records < 2 || aerial_diagram.sites.empty()) {
        if (!trace.records.empty()) crossings.assign(trace.records.front().positions.size(), 0);
        return crossings;
    }
    const std::size_t n = trace.records.front().positions.size();
    crossings.assign(n, 0);
    const std::size_t start = records - std::max<std::size_t>(records / 4, 1);
    for (std::size_t t = start; t < records; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t prev = nearest_site_index(aerial_diagram.sites, trace.records[t - 1].positions[i]);
            const std::size_t cur = nearest_site_index(aerial_diagram.sites, trace.records[t].positions[i]);
            if (prev != cur) crossings[i] += 1;
        }
    }
    return crossings;
}

/// Mean of sigma_min over consecutive fixed-size windows, truncated at the
/// first iteration where every clamped weight is zero (the point where the
/// blended law has reduced to pure local coverage).
inline std::vector<double> sigma_min_window_means(const SimTrace& trace, int window = 50) {
    std::size_t end = trace.records.size();
    for (std::size_t t = 0; t < trace.records.size(); ++t) {
        bool all_zero = true;
        for (const CellStat& cell : trace.records[t].cells) {
            if (cell.clamped_weight > 0.0) {
                all_zero = false;
                break;
            }
        }
        if (all_zero) {
            end = t + 1;
            break;
        }
    }
    std::vector<double> means;
    for (std::size_t begin = 0; begin + 1 <= end; begin += static_cast<std::size_t>(window)) {
        const std::size_t stop = std::min(end, begin + static_cast<std::size_t>(window));
        double sum = 0.0;
        for (std::size_t t = begin; t < stop; ++t) sum += trace.records[t].sigma_min;
        means.push_back(sum / static_cast<double>(stop - begin));
        if (stop == end) break;
    }
    return means;
}

} // namespace covsim
