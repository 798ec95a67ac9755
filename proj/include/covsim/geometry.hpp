#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace covsim {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidPolygonError : public Error { public: using Error::Error; };
class ZeroNormalError : public Error { public: using Error::Error; };
class EmptySitesError : public Error { public: using Error::Error; };
class SiteOutsideDomainError : public Error { public: using Error::Error; };
class DuplicateSitesError : public Error { public: using Error::Error; };
class NonPositiveRadiusError : public Error { public: using Error::Error; };

// Tolerances shared by the geometric predicates. Distances are meters.
inline constexpr double kCollinearTol = 1e-9;       // max sagitta for "collinear"
inline constexpr double kDegenerateAreaTol = 1e-12; // clip results below this collapse to Empty
inline constexpr double kDuplicateSiteTol = 1e-9;   // sites closer than this are duplicates
inline constexpr double kBoundaryTol = 1e-9;        // point-on-boundary slack

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline Point2 operator*(Point2 p, double s) { return {s * p.x, s * p.y}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double squared_norm(Point2 p) { return p.x * p.x + p.y * p.y; }
inline double norm(Point2 p) { return std::sqrt(squared_norm(p)); }
inline double distance_squared(Point2 a, Point2 b) { return squared_norm(a - b); }
inline double distance(Point2 a, Point2 b) { return std::sqrt(distance_squared(a, b)); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Convex polygon stored as a counter-clockwise vertex list.
struct ConvexPolygon {
    std::vector<Point2> vertices;

    ConvexPolygon() = default;
    explicit ConvexPolygon(std::vector<Point2> verts) : vertices(std::move(verts)) {}

    static ConvexPolygon rectangle(Point2 lo, Point2 hi) {
        return ConvexPolygon({{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}});
    }

    std::size_t size() const { return vertices.size(); }
};

inline double polygon_signed_area(const ConvexPolygon& poly) {
    double twice = 0.0;
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = v[i];
        const Point2& b = v[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

inline double polygon_area(const ConvexPolygon& poly) {
    return polygon_signed_area(poly);
}

/// Uniform-density centroid (the "geometric center" of a cell).
inline Point2 polygon_geometric_center(const ConvexPolygon& poly) {
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    double twice_area = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = v[i];
        const Point2& b = v[(i + 1) % n];
        const double w = a.x * b.y - b.x * a.y;
        twice_area += w;
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    if (std::abs(twice_area) < 2.0 * kDegenerateAreaTol) {
        // Degenerate sliver: fall back to the vertex average.
        Point2 mean{0.0, 0.0};
        for (const Point2& p : v) mean = mean + p;
        return (1.0 / static_cast<double>(n)) * mean;
    }
    const double scale = 1.0 / (3.0 * twice_area);
    return {cx * scale, cy * scale};
}

/// Throws InvalidPolygonError unless `poly` is a finite, CCW, convex polygon
/// with at least 3 vertices (collinear runs within kCollinearTol allowed).
inline void validate_polygon(const ConvexPolygon& poly) {
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    if (n < 3) throw InvalidPolygonError("polygon needs at least 3 vertices, got " + std::to_string(n));
    for (const Point2& p : v) {
        if (!is_finite(p)) throw InvalidPolygonError("polygon vertex is not finite");
    }
    if (polygon_signed_area(poly) <= 0.0) {
        throw InvalidPolygonError("polygon is not counter-clockwise (signed area <= 0)");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = v[i];
        const Point2& b = v[(i + 1) % n];
        const Point2& c = v[(i + 2) % n];
        const double turn = cross(b - a, c - b);
        // Sagitta of b relative to chord a->c; negative turns beyond the
        // collinearity tolerance make the polygon non-convex.
        const double chord = norm(c - a);
        if (turn < -kCollinearTol * (chord + 1.0)) {
            throw InvalidPolygonError("polygon is not convex at vertex " + std::to_string((i + 1) % n));
        }
    }
}

/// Inclusive point-in-convex-polygon test: true when `q` is at signed distance
/// >= -tol from every edge of the CCW polygon.
inline bool point_in_polygon(Point2 q, const ConvexPolygon& poly, double tol = kBoundaryTol) {
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = v[i];
        const Point2 b = v[(i + 1) % n];
        const Point2 e = b - a;
        const double len = norm(e);
        if (len < 1e-15) continue;
        if (cross(e, q - a) < -tol * len) return false;
    }
    return true;
}

struct BoundingBox {
    Point2 lo;
    Point2 hi;
};

inline BoundingBox bounding_box(const ConvexPolygon& poly) {
    BoundingBox box{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
                    {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
    for (const Point2& p : poly.vertices) {
        box.lo.x = std::min(box.lo.x, p.x);
        box.lo.y = std::min(box.lo.y, p.y);
        box.hi.x = std::max(box.hi.x, p.x);
        box.hi.y = std::max(box.hi.y, p.y);
    }
    return box;
}

/// Sutherland-Hodgman clip of a convex polygon against one half-plane
/// { q : <q - boundary_point, inward_normal> >= 0 }.
/// Returns std::nullopt when the intersection is degenerate (area < kDegenerateAreaTol).
inline std::optional<ConvexPolygon> clip_halfplane(const ConvexPolygon& poly,
                                                   Point2 boundary_point,
                                                   Point2 inward_normal) {
    const double nlen = norm(inward_normal);
    if (nlen < 1e-30) throw ZeroNormalError("clip_halfplane: inward normal has zero length");
    const Point2 n{inward_normal.x / nlen, inward_normal.y / nlen};

    const auto& v = poly.vertices;
    const std::size_t count = v.size();
    std::vector<Point2> out;
    out.reserve(count + 1);
    for (std::size_t i = 0; i < count; ++i) {
        const Point2 cur = v[i];
        const Point2 nxt = v[(i + 1) % count];
        const double sc = dot(cur - boundary_point, n);
        const double sn = dot(nxt - boundary_point, n);
        if (sc >= 0.0) out.push_back(cur);
        if ((sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0)) {
            const double t = sc / (sc - sn);
            out.push_back(cur + t * (nxt - cur));
        }
    }

    // Drop consecutive duplicates produced by vertices lying on the cut line.
    std::vector<Point2> dedup;
    dedup.reserve(out.size());
    for (const Point2& p : out) {
        if (dedup.empty() || distance_squared(dedup.back(), p) > 1e-24) dedup.push_back(p);
    }
    while (dedup.size() > 1 && distance_squared(dedup.front(), dedup.back()) <= 1e-24) {
        dedup.pop_back();
    }

    if (dedup.size() < 3) return std::nullopt;
    ConvexPolygon result(std::move(dedup));
    if (polygon_signed_area(result) < kDegenerateAreaTol) return std::nullopt;
    return result;
}

/// Regular inscribed polygon approximating disc(center, radius).
inline ConvexPolygon disc_polygon(Point2 center, double radius, int arc_segments = 64) {
    if (!(radius > 0.0)) throw NonPositiveRadiusError("disc radius must be positive");
    if (arc_segments < 16) throw Error("disc approximation needs at least 16 segments");
    std::vector<Point2> verts;
    verts.reserve(static_cast<std::size_t>(arc_segments));
    const double step = 2.0 * std::numbers::pi / static_cast<double>(arc_segments);
    for (int k = 0; k < arc_segments; ++k) {
        const double a = step * static_cast<double>(k);
        verts.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return ConvexPolygon(std::move(verts));
}

/// poly ∩ inscribed-polygon approximation of disc(center, radius).
inline std::optional<ConvexPolygon> clip_polygon_to_disc(const ConvexPolygon& poly,
                                                         Point2 center,
                                                         double radius,
                                                         int arc_segments = 64) {
    const ConvexPolygon disc = disc_polygon(center, radius, arc_segments);
    std::optional<ConvexPolygon> current = poly;
    const std::size_t n = disc.vertices.size();
    for (std::size_t i = 0; i < n && current; ++i) {
        const Point2 a = disc.vertices[i];
        const Point2 b = disc.vertices[(i + 1) % n];
        const Point2 edge = b - a;
        // CCW disc: inward normal is the left-hand normal of each edge.
        const Point2 inward{-edge.y, edge.x};
        current = clip_halfplane(*current, a, inward);
    }
    return current;
}

/// Index of the site nearest to q; ties resolve to the lowest index.
inline std::size_t nearest_site_index(const std::vector<Point2>& sites, Point2 q) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const double d = distance_squared(sites[i], q);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

/// Bounded Voronoi partition of a convex domain.
struct VoronoiDiagram {
    std::vector<Point2> sites;
    std::vector<ConvexPolygon> cells; // index-aligned with sites
    ConvexPolygon domain;
};

/// Cell i = domain ∩ (⋂_{j≠i} half-plane closer to site i than to site j).
inline VoronoiDiagram voronoi_tessellate(const std::vector<Point2>& sites,
                                         const ConvexPolygon& domain) {
    if (sites.empty()) throw EmptySitesError("voronoi_tessellate: no sites");
    validate_polygon(domain);
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (!is_finite(sites[i]) || !point_in_polygon(sites[i], domain)) {
            throw SiteOutsideDomainError("site " + std::to_string(i) + " lies outside the domain");
        }
        for (std::size_t j = i + 1; j < sites.size(); ++j) {
            if (distance(sites[i], sites[j]) < kDuplicateSiteTol) {
                throw DuplicateSitesError("sites " + std::to_string(i) + " and " + std::to_string(j) +
                                          " coincide within " + std::to_string(kDuplicateSiteTol));
            }
        }
    }

    VoronoiDiagram diagram;
    diagram.sites = sites;
    diagram.domain = domain;
    diagram.cells.reserve(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        std::optional<ConvexPolygon> cell = domain;
        for (std::size_t j = 0; j < sites.size() && cell; ++j) {
            if (j == i) continue;
            const Point2 mid = 0.5 * (sites[i] + sites[j]);
            cell = clip_halfplane(*cell, mid, sites[i] - sites[j]);
        }
        if (!cell) {
            // A site inside the domain always keeps a neighborhood of itself.
            throw Error("voronoi_tessellate: degenerate empty cell for site " + std::to_string(i));
        }
        diagram.cells.push_back(std::move(*cell));
    }
    return diagram;
}

inline Point2 clamp_to_rectangle(Point2 q, Point2 lo, Point2 hi) {
    return {std::clamp(q.x, lo.x, hi.x), std::clamp(q.y, lo.y, hi.y)};
}

} // namespace covsim
