#pragma once

#include <cstdint>
#include <random>

#include "covsim/geometry.hpp"

namespace covsim {

/// Deterministic draw stream. The generator is pinned to mt19937_64 and
/// doubles are derived from raw engine words, so identical seeds reproduce
/// identical sequences on any platform and standard library.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    static constexpr const char* algorithm() { return "mt19937_64"; }

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    Point2 point_in_rect(Point2 lo, Point2 hi) {
        const double x = uniform(lo.x, hi.x);
        const double y = uniform(lo.y, hi.y);
        return {x, y};
    }

    /// Rejection sample inside disc(center, radius) ∩ region.
    Point2 point_in_disc(Point2 center, double radius, const ConvexPolygon& region) {
        for (;;) {
            const double dx = uniform(-radius, radius);
            const double dy = uniform(-radius, radius);
            if (dx * dx + dy * dy > radius * radius) continue;
            const Point2 p{center.x + dx, center.y + dy};
            if (point_in_polygon(p, region)) return p;
        }
    }

    /// Rejection sample inside a convex region.
    Point2 point_in_polygon_region(const ConvexPolygon& region) {
        const BoundingBox box = bounding_box(region);
        for (;;) {
            const Point2 p = point_in_rect(box.lo, box.hi);
            if (point_in_polygon(p, region)) return p;
        }
    }

    /// Derives an independent stream, e.g. for the aerial initialization, so
    /// that ground draws do not depend on whether aerial draws happened.
    RngStream substream(std::uint64_t tag) const {
        return RngStream(seed_ ^ (0x9E3779B97F4A7C15ULL + tag * 0xBF58476D1CE4E5B9ULL));
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

} // namespace covsim
