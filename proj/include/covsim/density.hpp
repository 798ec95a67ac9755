#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "covsim/geometry.hpp"

namespace covsim {

class PointOutsideDomainError : public Error { public: using Error::Error; };
class PolygonOutsideDomainError : public Error { public: using Error::Error; };
class ZeroMassFieldError : public Error { public: using Error::Error; };
class InvalidCovarianceError : public Error { public: using Error::Error; };

inline constexpr double kNoMassTol = 1e-12;

/// One weighted bivariate Gaussian N(mean, covariance).
struct GaussianComponent {
    double weight = 1.0;
    Point2 mean{};
    double cov_xx = 1.0;
    double cov_xy = 0.0;
    double cov_yy = 1.0;

    void validate() const {
        if (!(weight >= 0.0)) throw InvalidCovarianceError("gaussian component weight must be >= 0");
        const double det = cov_xx * cov_yy - cov_xy * cov_xy;
        if (!(cov_xx > 0.0) || !(cov_yy > 0.0) || !(det > 0.0)) {
            throw InvalidCovarianceError("gaussian covariance must be symmetric positive-definite");
        }
    }

    double pdf(Point2 q) const {
        const double det = cov_xx * cov_yy - cov_xy * cov_xy;
        const double inv_xx = cov_yy / det;
        const double inv_xy = -cov_xy / det;
        const double inv_yy = cov_xx / det;
        const double dx = q.x - mean.x;
        const double dy = q.y - mean.y;
        const double quad = dx * (inv_xx * dx + inv_xy * dy) + dy * (inv_xy * dx + inv_yy * dy);
        return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det));
    }
};

/// Importance function phi over a convex domain: uniform or a Gaussian
/// mixture truncated at the domain boundary. Call normalize() before use by
/// the controllers so that the total mass over the domain is 1.
class DensityField {
public:
    enum class Kind : std::uint8_t { Uniform, GaussianMixture };

    static DensityField uniform(ConvexPolygon domain) {
        validate_polygon(domain);
        DensityField f;
        f.kind_ = Kind::Uniform;
        f.domain_ = std::move(domain);
        return f;
    }

    static DensityField gaussian_mixture(ConvexPolygon domain, std::vector<GaussianComponent> components) {
        validate_polygon(domain);
        if (components.empty()) throw ZeroMassFieldError("gaussian mixture needs at least one component");
        double total_weight = 0.0;
        for (const auto& c : components) {
            c.validate();
            total_weight += c.weight;
        }
        if (!(total_weight > 0.0)) throw ZeroMassFieldError("gaussian mixture has zero total weight");
        DensityField f;
        f.kind_ = Kind::GaussianMixture;
        f.domain_ = std::move(domain);
        f.components_ = std::move(components);
        return f;
    }

    Kind kind() const { return kind_; }
    const ConvexPolygon& domain() const { return domain_; }
    const std::vector<GaussianComponent>& components() const { return components_; }
    double normalization() const { return normalization_; }
    bool is_normalized() const { return normalized_; }

    /// phi(q). Throws PointOutsideDomainError when q is outside the domain.
    double evaluate(Point2 q) const {
        if (!point_in_polygon(q, domain_)) {
            throw PointOutsideDomainError("evaluate: point outside the field domain");
        }
        return evaluate_unchecked(q);
    }

    /// phi(q) without the domain-membership check (grid samples are
    /// constructed inside the domain already).
    double evaluate_unchecked(Point2 q) const {
        if (kind_ == Kind::Uniform) return normalization_;
        double sum = 0.0;
        for (const auto& c : components_) sum += c.weight * c.pdf(q);
        return normalization_ * sum;
    }

    void set_normalization(double scale, bool normalized) {
        normalization_ = scale;
        normalized_ = normalized;
    }

private:
    Kind kind_ = Kind::Uniform;
    ConvexPolygon domain_;
    std::vector<GaussianComponent> components_;
    double normalization_ = 1.0;
    bool normalized_ = false;
};

/// Midpoint-rule quadrature grid attached to the field domain: an nx-by-ny
/// rectangular grid over the domain bounding box, masked to cell centers that
/// fall inside the domain polygon. All integrals in the library are sums of
/// phi at kept centers times the cell area, so mass is additive across any
/// partition of the domain that assigns each center exactly once.
class QuadratureGrid {
public:
    QuadratureGrid(const ConvexPolygon& domain, int nx, int ny) : domain_(domain), nx_(nx), ny_(ny) {
        if (nx < 32 || ny < 32) throw Error("quadrature grid resolution must be at least 32x32");
        validate_polygon(domain);
        box_ = bounding_box(domain);
        dx_ = (box_.hi.x - box_.lo.x) / static_cast<double>(nx);
        dy_ = (box_.hi.y - box_.lo.y) / static_cast<double>(ny);
        cell_area_ = dx_ * dy_;
        centers_.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const Point2 c{box_.lo.x + (ix + 0.5) * dx_, box_.lo.y + (iy + 0.5) * dy_};
                if (point_in_polygon(c, domain)) centers_.push_back(c);
            }
        }
    }

    const ConvexPolygon& domain() const { return domain_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double cell_area() const { return cell_area_; }
    const std::vector<Point2>& centers() const { return centers_; }

    /// phi evaluated at every kept center, in center order.
    std::vector<double> sample_field(const DensityField& field) const {
        std::vector<double> values;
        values.reserve(centers_.size());
        for (const Point2& c : centers_) values.push_back(field.evaluate_unchecked(c));
        return values;
    }

private:
    ConvexPolygon domain_;
    int nx_;
    int ny_;
    BoundingBox box_{};
    double dx_ = 0.0;
    double dy_ = 0.0;
    double cell_area_ = 0.0;
    std::vector<Point2> centers_;
};

namespace detail {

/// Precomputed inclusive half-plane tests for one convex polygon.
struct EdgeTests {
    struct Edge {
        Point2 origin;
        Point2 unit_normal_in; // left-hand normal of the CCW edge
    };
    std::vector<Edge> edges;

    explicit EdgeTests(const ConvexPolygon& poly) {
        const auto& v = poly.vertices;
        const std::size_t n = v.size();
        edges.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 a = v[i];
            const Point2 e = v[(i + 1) % n] - a;
            const double len = norm(e);
            if (len < 1e-15) continue;
            edges.push_back({a, {-e.y / len, e.x / len}});
        }
    }

    bool contains(Point2 q, double tol = kBoundaryTol) const {
        for (const Edge& e : edges) {
            if (dot(q - e.origin, e.unit_normal_in) < -tol) return false;
        }
        return true;
    }
};

inline void require_polygon_in_domain(const ConvexPolygon& poly, const ConvexPolygon& domain) {
    for (const Point2& v : poly.vertices) {
        if (!point_in_polygon(v, domain, 1e-6)) {
            throw PolygonOutsideDomainError("polygon vertex outside the field domain");
        }
    }
}

} // namespace detail

/// Integral of phi over `poly` using grid centers that fall inside `poly`.
inline double mass_over_polygon(const DensityField& field, const ConvexPolygon& poly,
                                const QuadratureGrid& grid) {
    detail::require_polygon_in_domain(poly, field.domain());
    const detail::EdgeTests tests(poly);
    const BoundingBox box = bounding_box(poly);
    double mass = 0.0;
    for (const Point2& c : grid.centers()) {
        if (c.x < box.lo.x - kBoundaryTol || c.x > box.hi.x + kBoundaryTol ||
            c.y < box.lo.y - kBoundaryTol || c.y > box.hi.y + kBoundaryTol) {
            continue;
        }
        if (tests.contains(c)) mass += field.evaluate_unchecked(c);
    }
    return mass * grid.cell_area();
}

/// Mass centroid of phi over `poly`; std::nullopt when the sampled mass is
/// below kNoMassTol (the caller chooses the fallback).
inline std::optional<Point2> weighted_centroid(const DensityField& field, const ConvexPolygon& poly,
                                               const QuadratureGrid& grid) {
    detail::require_polygon_in_domain(poly, field.domain());
    const detail::EdgeTests tests(poly);
    const BoundingBox box = bounding_box(poly);
    double mass = 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (const Point2& c : grid.centers()) {
        if (c.x < box.lo.x - kBoundaryTol || c.x > box.hi.x + kBoundaryTol ||
            c.y < box.lo.y - kBoundaryTol || c.y > box.hi.y + kBoundaryTol) {
            continue;
        }
        if (!tests.contains(c)) continue;
        const double phi = field.evaluate_unchecked(c);
        mass += phi;
        mx += phi * c.x;
        my += phi * c.y;
    }
    if (mass * grid.cell_area() < kNoMassTol) return std::nullopt;
    return Point2{mx / mass, my / mass};
}

/// Rescales the field so the quadrature mass over the whole domain is 1.
inline DensityField normalize(const DensityField& field, const QuadratureGrid& grid) {
    double mass = 0.0;
    for (const Point2& c : grid.centers()) mass += field.evaluate_unchecked(c);
    mass *= grid.cell_area();
    if (!(mass > kNoMassTol)) throw ZeroMassFieldError("normalize: field has zero mass over the domain");
    DensityField result = field;
    result.set_normalization(field.normalization() / mass, true);
    return result;
}

} // namespace covsim
