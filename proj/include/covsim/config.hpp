#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "covsim/sim.hpp"

namespace covsim {

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& context,
                       std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigInvalidError(context + ": unknown key '" + it.key() + "'");
    }
}

inline Point2 parse_point(const json& value, const std::string& context) {
    if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
        throw ConfigInvalidError(context + ": expected [x, y]");
    }
    return {value[0].get<double>(), value[1].get<double>()};
}

template <typename T>
T parse_number(const json& obj, const std::string& context, const char* key, T fallback,
               bool required = false) {
    if (!obj.contains(key)) {
        if (required) throw ConfigInvalidError(context + ": missing required key '" + key + "'");
        return fallback;
    }
    const json& value = obj.at(key);
    if (!value.is_number()) throw ConfigInvalidError(context + "." + key + ": expected a number");
    return value.get<T>();
}

inline InitialPlacement parse_placement(const json& obj, const std::string& context) {
    check_keys(obj, context, {"type", "min", "max", "center", "radius", "positions"});
    if (!obj.contains("type") || !obj.at("type").is_string()) {
        throw ConfigInvalidError(context + ": missing 'type'");
    }
    const std::string type = obj.at("type").get<std::string>();
    InitialPlacement placement;
    if (type == "uniform") {
        placement.type = InitialPlacement::Type::Uniform;
    } else if (type == "rect") {
        placement.type = InitialPlacement::Type::Rect;
        if (!obj.contains("min") || !obj.contains("max")) {
            throw ConfigInvalidError(context + ": rect placement needs 'min' and 'max'");
        }
        placement.rect_lo = parse_point(obj.at("min"), context + ".min");
        placement.rect_hi = parse_point(obj.at("max"), context + ".max");
    } else if (type == "disc") {
        placement.type = InitialPlacement::Type::Disc;
        if (!obj.contains("center") || !obj.contains("radius")) {
            throw ConfigInvalidError(context + ": disc placement needs 'center' and 'radius'");
        }
        placement.disc_center = parse_point(obj.at("center"), context + ".center");
        placement.disc_radius = parse_number<double>(obj, context, "radius", 0.0, true);
    } else if (type == "explicit") {
        placement.type = InitialPlacement::Type::Explicit;
        if (!obj.contains("positions") || !obj.at("positions").is_array()) {
            throw ConfigInvalidError(context + ": explicit placement needs 'positions'");
        }
        for (std::size_t i = 0; i < obj.at("positions").size(); ++i) {
            placement.positions.push_back(
                parse_point(obj.at("positions")[i], context + ".positions[" + std::to_string(i) + "]"));
        }
    } else {
        throw ConfigInvalidError(context + ".type: expected uniform|rect|disc|explicit, got '" + type + "'");
    }
    return placement;
}

inline json placement_to_json(const InitialPlacement& placement) {
    json obj;
    switch (placement.type) {
        case InitialPlacement::Type::Uniform:
            obj["type"] = "uniform";
            break;
        case InitialPlacement::Type::Rect:
            obj["type"] = "rect";
            obj["min"] = {placement.rect_lo.x, placement.rect_lo.y};
            obj["max"] = {placement.rect_hi.x, placement.rect_hi.y};
            break;
        case InitialPlacement::Type::Disc:
            obj["type"] = "disc";
            obj["center"] = {placement.disc_center.x, placement.disc_center.y};
            obj["radius"] = placement.disc_radius;
            break;
        case InitialPlacement::Type::Explicit: {
            obj["type"] = "explicit";
            json positions = json::array();
            for (const Point2& p : placement.positions) positions.push_back({p.x, p.y});
            obj["positions"] = std::move(positions);
            break;
        }
    }
    return obj;
}

} // namespace detail

/// Builds a ScenarioConfig from its JSON document. Unknown keys anywhere in
/// the document are rejected; missing optional keys take the library
/// defaults, so the echoed resolved config fully pins the run.
inline ScenarioConfig scenario_from_json(const nlohmann::json& doc) {
    using detail::check_keys;
    using detail::parse_number;
    using detail::parse_point;

    if (!doc.is_object()) throw ConfigInvalidError("config: expected a JSON object");
    check_keys(doc, "config",
               {"domain", "n_ground", "k_aerial", "density", "sensing_radius", "gains", "dt",
                "max_speed", "max_iterations", "convergence_eps", "convergence_window", "deadband",
                "controller", "rng_seed", "grid", "arc_segments", "c_min_mode", "initial_ground",
                "initial_aerial"});

    ScenarioConfig config;

    if (!doc.contains("domain")) throw ConfigInvalidError("config: missing required section 'domain'");
    const auto& domain = doc.at("domain");
    check_keys(domain, "domain", {"min", "max"});
    if (!domain.contains("min") || !domain.contains("max")) {
        throw ConfigInvalidError("domain: needs 'min' and 'max'");
    }
    config.domain_lo = parse_point(domain.at("min"), "domain.min");
    config.domain_hi = parse_point(domain.at("max"), "domain.max");

    config.n_ground = parse_number<int>(doc, "config", "n_ground", config.n_ground, true);
    config.k_aerial = parse_number<int>(doc, "config", "k_aerial", config.k_aerial);

    if (!doc.contains("density")) throw ConfigInvalidError("config: missing required section 'density'");
    const auto& density = doc.at("density");
    check_keys(density, "density", {"kind", "components"});
    if (!density.contains("kind") || !density.at("kind").is_string()) {
        throw ConfigInvalidError("density: missing 'kind'");
    }
    const std::string kind = density.at("kind").get<std::string>();
    if (kind == "uniform") {
        config.density.kind = DensityField::Kind::Uniform;
    } else if (kind == "gaussian_mixture") {
        config.density.kind = DensityField::Kind::GaussianMixture;
        if (!density.contains("components") || !density.at("components").is_array() ||
            density.at("components").empty()) {
            throw ConfigInvalidError("density.components: gaussian_mixture needs a non-empty array");
        }
        for (std::size_t i = 0; i < density.at("components").size(); ++i) {
            const std::string context = "density.components[" + std::to_string(i) + "]";
            const auto& entry = density.at("components")[i];
            check_keys(entry, context, {"weight", "mean", "covariance"});
            GaussianComponent component;
            component.weight = parse_number<double>(entry, context, "weight", 1.0);
            if (!entry.contains("mean")) throw ConfigInvalidError(context + ": missing 'mean'");
            component.mean = parse_point(entry.at("mean"), context + ".mean");
            if (!entry.contains("covariance")) throw ConfigInvalidError(context + ": missing 'covariance'");
            const auto& cov = entry.at("covariance");
            if (!cov.is_array() || cov.size() != 2 || !cov[0].is_array() || cov[0].size() != 2 ||
                !cov[1].is_array() || cov[1].size() != 2) {
                throw ConfigInvalidError(context + ".covariance: expected a 2x2 matrix [[a,b],[b,c]]");
            }
            component.cov_xx = cov[0][0].get<double>();
            component.cov_xy = cov[0][1].get<double>();
            component.cov_yy = cov[1][1].get<double>();
            if (cov[1][0].get<double>() != component.cov_xy) {
                throw ConfigInvalidError(context + ".covariance: matrix must be symmetric");
            }
            config.density.components.push_back(component);
        }
    } else {
        throw ConfigInvalidError("density.kind: expected uniform|gaussian_mixture, got '" + kind + "'");
    }

    if (doc.contains("sensing_radius")) {
        const auto& radius = doc.at("sensing_radius");
        if (radius.is_string() && radius.get<std::string>() == "unlimited") {
            config.sensing_radius.reset();
        } else if (radius.is_number()) {
            config.sensing_radius = radius.get<double>();
        } else {
            throw ConfigInvalidError("sensing_radius: expected a number or \"unlimited\"");
        }
    }

    if (doc.contains("gains")) {
        const auto& gains = doc.at("gains");
        check_keys(gains, "gains", {"kappa", "gamma"});
        config.gains.kappa = parse_number<double>(gains, "gains", "kappa", config.gains.kappa);
        config.gains.gamma = parse_number<double>(gains, "gains", "gamma", config.gains.gamma);
    }

    config.dt = parse_number<double>(doc, "config", "dt", config.dt);
    config.max_speed = parse_number<double>(doc, "config", "max_speed", config.max_speed);
    config.max_iterations = parse_number<int>(doc, "config", "max_iterations", config.max_iterations);
    config.convergence_eps = parse_number<double>(doc, "config", "convergence_eps", config.convergence_eps);
    config.convergence_window =
        parse_number<int>(doc, "config", "convergence_window", config.convergence_window);

    if (doc.contains("deadband")) {
        const auto& deadband = doc.at("deadband");
        if (deadband.is_string() && deadband.get<std::string>() == "1/N") {
            config.deadband.reset();
        } else if (deadband.is_number()) {
            config.deadband = deadband.get<double>();
        } else {
            throw ConfigInvalidError("deadband: expected a number or \"1/N\"");
        }
    }

    if (doc.contains("controller")) {
        if (!doc.at("controller").is_string()) throw ConfigInvalidError("controller: expected a string");
        const std::string name = doc.at("controller").get<std::string>();
        if (name == "unlimited-lloyd") {
            config.controller = ControllerKind::UnlimitedLloyd;
        } else if (name == "limited-lloyd") {
            config.controller = ControllerKind::LimitedLloyd;
        } else if (name == "heterogeneous") {
            config.controller = ControllerKind::Heterogeneous;
        } else {
            throw ConfigInvalidError(
                "controller: expected unlimited-lloyd|limited-lloyd|heterogeneous, got '" + name + "'");
        }
    }

    config.rng_seed = parse_number<std::uint64_t>(doc, "config", "rng_seed", config.rng_seed);

    if (doc.contains("grid")) {
        const auto& grid = doc.at("grid");
        check_keys(grid, "grid", {"nx", "ny"});
        config.grid_nx = parse_number<int>(grid, "grid", "nx", config.grid_nx);
        config.grid_ny = parse_number<int>(grid, "grid", "ny", config.grid_ny);
    }

    config.arc_segments = parse_number<int>(doc, "config", "arc_segments", config.arc_segments);

    if (doc.contains("c_min_mode")) {
        if (!doc.at("c_min_mode").is_string()) throw ConfigInvalidError("c_min_mode: expected a string");
        const std::string mode = doc.at("c_min_mode").get<std::string>();
        if (mode == "geometric") {
            config.c_min_mode = CMinMode::GeometricCenter;
        } else if (mode == "mass") {
            config.c_min_mode = CMinMode::MassCenter;
        } else {
            throw ConfigInvalidError("c_min_mode: expected geometric|mass, got '" + mode + "'");
        }
    }

    if (doc.contains("initial_ground")) {
        config.initial_ground = detail::parse_placement(doc.at("initial_ground"), "initial_ground");
    }
    if (doc.contains("initial_aerial")) {
        config.initial_aerial = detail::parse_placement(doc.at("initial_aerial"), "initial_aerial");
    }

    config.validate();
    return config;
}

/// Canonical JSON form of a resolved config; parsing it back reproduces the
/// ScenarioConfig exactly.
inline nlohmann::json scenario_to_json(const ScenarioConfig& config) {
    nlohmann::json doc;
    doc["domain"] = {{"min", {config.domain_lo.x, config.domain_lo.y}},
                     {"max", {config.domain_hi.x, config.domain_hi.y}}};
    doc["n_ground"] = config.n_ground;
    doc["k_aerial"] = config.k_aerial;
    nlohmann::json density;
    density["kind"] =
        config.density.kind == DensityField::Kind::Uniform ? "uniform" : "gaussian_mixture";
    if (config.density.kind == DensityField::Kind::GaussianMixture) {
        nlohmann::json components = nlohmann::json::array();
        for (const GaussianComponent& c : config.density.components) {
            components.push_back({{"weight", c.weight},
                                  {"mean", {c.mean.x, c.mean.y}},
                                  {"covariance", {{c.cov_xx, c.cov_xy}, {c.cov_xy, c.cov_yy}}}});
        }
        density["components"] = std::move(components);
    }
    doc["density"] = std::move(density);
    if (config.sensing_radius) {
        doc["sensing_radius"] = *config.sensing_radius;
    } else {
        doc["sensing_radius"] = "unlimited";
    }
    doc["gains"] = {{"kappa", config.gains.kappa}, {"gamma", config.gains.gamma}};
    doc["dt"] = config.dt;
    doc["max_speed"] = config.max_speed;
    doc["max_iterations"] = config.max_iterations;
    doc["convergence_eps"] = config.convergence_eps;
    doc["convergence_window"] = config.convergence_window;
    if (config.deadband) {
        doc["deadband"] = *config.deadband;
    } else {
        doc["deadband"] = "1/N";
    }
    doc["controller"] = controller_name(config.controller);
    doc["rng_seed"] = config.rng_seed;
    doc["grid"] = {{"nx", config.grid_nx}, {"ny", config.grid_ny}};
    doc["arc_segments"] = config.arc_segments;
    doc["c_min_mode"] = config.c_min_mode == CMinMode::GeometricCenter ? "geometric" : "mass";
    doc["initial_ground"] = detail::placement_to_json(config.initial_ground);
    doc["initial_aerial"] = detail::placement_to_json(config.initial_aerial);
    return doc;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalidError("cannot open config file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalidError("config parse error in " + path.string() + ": " + e.what());
    }
    return scenario_from_json(doc);
}

} // namespace covsim
