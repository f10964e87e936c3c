#include "vista/geom.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "vista/text.hpp"

namespace vista::geom {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
// Parameter-space slack for "within the closed span" tests.
constexpr double kParamSlack = 1e-12;
// sin(angle) below which two directions are treated as parallel.
constexpr double kParallelSine = 1e-12;

Point operator-(Point a, Point b) noexcept { return {a.x - b.x, a.y - b.y}; }
Point operator+(Point a, Point b) noexcept { return {a.x + b.x, a.y + b.y}; }
Point operator*(Point a, double s) noexcept { return {a.x * s, a.y * s}; }
double dot(Point a, Point b) noexcept { return a.x * b.x + a.y * b.y; }
double cross(Point a, Point b) noexcept { return a.x * b.y - a.y * b.x; }
double norm(Point a) noexcept { return std::hypot(a.x, a.y); }

std::vector<Point> circle_circle_intersection(const Circle& c1, const Circle& c2,
                                              double abs_tol) {
    const double d = distance(c1.center, c2.center);
    if (d <= kDegeneracyThreshold) {
        if (std::abs(c1.radius - c2.radius) <= abs_tol) throw CollinearOverlap();
        return {};
    }
    const double r1 = c1.radius;
    const double r2 = c2.radius;
    if (d > r1 + r2 + abs_tol || d < std::abs(r1 - r2) - abs_tol) return {};
    const double along = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    const double h2 = r1 * r1 - along * along;
    const Point u = (c2.center - c1.center) * (1.0 / d);
    const Point foot = c1.center + u * along;
    if (h2 <= abs_tol * abs_tol) return {foot};
    const double h = std::sqrt(h2);
    const Point perp{-u.y, u.x};
    return {foot + perp * h, foot - perp * h};
}

// ---------------------------------------------------------------------------
// Entity resolution
// ---------------------------------------------------------------------------

enum class EntityKind { Segment, Circle, Polygon };

struct Entity {
    EntityKind kind = EntityKind::Segment;
    std::vector<Point> vertices;  // segment: 2 endpoints, polygon: ring
    Circle circle;

    std::vector<Segment> edges() const {
        std::vector<Segment> out;
        if (kind == EntityKind::Segment) {
            out.push_back({vertices[0], vertices[1]});
        } else if (kind == EntityKind::Polygon) {
            for (std::size_t i = 0; i < vertices.size(); ++i)
                out.push_back({vertices[i], vertices[(i + 1) % vertices.size()]});
        }
        return out;
    }

    double extent() const {
        if (kind == EntityKind::Circle) return 2.0 * circle.radius;
        double minx = vertices[0].x, maxx = minx, miny = vertices[0].y, maxy = miny;
        for (const auto& p : vertices) {
            minx = std::min(minx, p.x);
            maxx = std::max(maxx, p.x);
            miny = std::min(miny, p.y);
            maxy = std::max(maxy, p.y);
        }
        return std::hypot(maxx - minx, maxy - miny);
    }

    std::string type_name() const {
        switch (kind) {
            case EntityKind::Segment: return "segment";
            case EntityKind::Circle: return "circle";
            case EntityKind::Polygon:
                if (vertices.size() == 3) return "triangle";
                if (vertices.size() == 4) return "quadrilateral";
                return "polygon-" + std::to_string(vertices.size());
        }
        return "?";
    }
};

bool type_matches(std::string_view actual, std::string_view wanted) {
    if (actual == wanted) return true;
    if (wanted == "polygon") return actual != "segment" && actual != "circle";
    if (wanted == "polygon-3") return actual == "triangle";
    if (wanted == "polygon-4") return actual == "quadrilateral";
    return false;
}

bool is_shape_type_name(std::string_view t) {
    if (t == "segment" || t == "circle" || t == "triangle" || t == "quadrilateral" ||
        t == "polygon")
        return true;
    if (t.rfind("polygon-", 0) != 0) return false;
    const auto digits = t.substr(8);
    int n = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    return ec == std::errc{} && ptr == digits.data() + digits.size() && n >= 3;
}

std::vector<std::string> split_ref(std::string_view ref) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto dash = ref.find('-', start);
        parts.emplace_back(ref.substr(start, dash - start));
        if (dash == std::string_view::npos) break;
        start = dash + 1;
    }
    return parts;
}

bool same_ring(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size()) return false;
    const std::size_t n = a.size();
    for (std::size_t shift = 0; shift < n; ++shift) {
        bool fwd = true, rev = true;
        for (std::size_t i = 0; i < n && (fwd || rev); ++i) {
            if (a[i] != b[(shift + i) % n]) fwd = false;
            if (a[i] != b[(shift + n - i) % n]) rev = false;
        }
        if (fwd || rev) return true;
    }
    return false;
}

class SceneView {
public:
    explicit SceneView(const GeometricScene& s) : scene_(s) {}

    Point point(const std::string& label) const {
        auto it = scene_.points.find(label);
        if (it == scene_.points.end()) throw UnknownLabel(label);
        return it->second;
    }

    Entity entity(const std::string& ref) const {
        if (ref.rfind("circle:", 0) == 0) {
            const auto center = ref.substr(7);
            for (const auto& [c, r] : scene_.circles) {
                if (c == center) {
                    Entity e;
                    e.kind = EntityKind::Circle;
                    e.circle = {point(c), r};
                    return e;
                }
            }
            throw UnknownLabel(ref);
        }
        const auto labels = split_ref(ref);
        if (labels.size() == 2) {
            if (has_segment(labels[0], labels[1])) {
                Entity e;
                e.kind = EntityKind::Segment;
                e.vertices = {point(labels[0]), point(labels[1])};
                return e;
            }
            throw UnknownLabel(ref);
        }
        if (labels.size() >= 3) {
            for (const auto& poly : scene_.polygons) {
                if (same_ring(poly, labels)) {
                    Entity e;
                    e.kind = EntityKind::Polygon;
                    for (const auto& l : poly) e.vertices.push_back(point(l));
                    return e;
                }
            }
        }
        throw UnknownLabel(ref);
    }

    std::size_t count(std::string_view type) const {
        std::size_t n = 0;
        if (type_matches("segment", type)) n += scene_.segments.size();
        if (type_matches("circle", type)) n += scene_.circles.size();
        for (const auto& poly : scene_.polygons) {
            Entity e;
            e.kind = EntityKind::Polygon;
            e.vertices.resize(poly.size());
            if (type_matches(e.type_name(), type)) ++n;
        }
        return n;
    }

private:
    // Declared segments, plus every polygon edge.
    bool has_segment(const std::string& a, const std::string& b) const {
        for (const auto& [p, q] : scene_.segments)
            if ((p == a && q == b) || (p == b && q == a)) return true;
        for (const auto& poly : scene_.polygons) {
            for (std::size_t i = 0; i < poly.size(); ++i) {
                const auto& p = poly[i];
                const auto& q = poly[(i + 1) % poly.size()];
                if ((p == a && q == b) || (p == b && q == a)) return true;
            }
        }
        return false;
    }

    const GeometricScene& scene_;
};

double segment_segment_distance(const Segment& s, const Segment& t) {
    try {
        if (segment_intersection(s, t)) return 0.0;
    } catch (const CollinearOverlap&) {
        return 0.0;
    }
    return std::min({point_segment_distance(s.a, t), point_segment_distance(s.b, t),
                     point_segment_distance(t.a, s), point_segment_distance(t.b, s)});
}

double segment_circle_distance(const Segment& s, const Circle& c) {
    const double dmin = point_segment_distance(c.center, s);
    const double dmax = std::max(distance(c.center, s.a), distance(c.center, s.b));
    if (c.radius < dmin) return dmin - c.radius;
    if (c.radius > dmax) return c.radius - dmax;
    return 0.0;
}

double circle_circle_distance(const Circle& a, const Circle& b) {
    const double d = distance(a.center, b.center);
    if (d > a.radius + b.radius) return d - a.radius - b.radius;
    if (d < std::abs(a.radius - b.radius)) return std::abs(a.radius - b.radius) - d;
    return 0.0;
}

// Smallest gap between the boundaries of two entities.
double boundary_gap(const Entity& e1, const Entity& e2) {
    double best = std::numeric_limits<double>::infinity();
    const auto edges1 = e1.edges();
    const auto edges2 = e2.edges();
    for (const auto& s : edges1)
        for (const auto& t : edges2) best = std::min(best, segment_segment_distance(s, t));
    if (e2.kind == EntityKind::Circle)
        for (const auto& s : edges1) best = std::min(best, segment_circle_distance(s, e2.circle));
    if (e1.kind == EntityKind::Circle)
        for (const auto& t : edges2) best = std::min(best, segment_circle_distance(t, e1.circle));
    if (e1.kind == EntityKind::Circle && e2.kind == EntityKind::Circle)
        best = std::min(best, circle_circle_distance(e1.circle, e2.circle));
    return best;
}

double point_boundary_distance(Point p, const Entity& e) {
    if (e.kind == EntityKind::Circle) return std::abs(distance(p, e.circle.center) - e.circle.radius);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : e.edges()) best = std::min(best, point_segment_distance(p, s));
    return best;
}

// All isolated boundary intersection points; throws CollinearOverlap when
// any pair of primitives overlaps in more than a point.
std::vector<Point> boundary_intersections(const Entity& e1, const Entity& e2, double abs_tol) {
    std::vector<Point> out;
    const auto edges1 = e1.edges();
    const auto edges2 = e2.edges();
    for (const auto& s : edges1)
        for (const auto& t : edges2)
            if (auto p = segment_intersection(s, t)) out.push_back(*p);
    if (e2.kind == EntityKind::Circle)
        for (const auto& s : edges1)
            for (const auto& p : circle_line_intersection(e2.circle, s)) out.push_back(p);
    if (e1.kind == EntityKind::Circle)
        for (const auto& t : edges2)
            for (const auto& p : circle_line_intersection(e1.circle, t)) out.push_back(p);
    if (e1.kind == EntityKind::Circle && e2.kind == EntityKind::Circle)
        for (const auto& p : circle_circle_intersection(e1.circle, e2.circle, abs_tol))
            out.push_back(p);
    return out;
}

double length_measure(const Entity& e) {
    switch (e.kind) {
        case EntityKind::Segment: return distance(e.vertices[0], e.vertices[1]);
        case EntityKind::Circle: return 2.0 * std::numbers::pi * e.circle.radius;
        case EntityKind::Polygon: return perimeter(e.vertices);
    }
    return 0.0;
}

std::optional<double> area_measure(const Entity& e) {
    switch (e.kind) {
        case EntityKind::Segment: return std::nullopt;
        case EntityKind::Circle: return std::numbers::pi * e.circle.radius * e.circle.radius;
        case EntityKind::Polygon: return polygon_area(e.vertices);
    }
    return std::nullopt;
}

// Area for 2-D shapes, length for segments.
double ratio_measure(const Entity& e) {
    if (auto a = area_measure(e)) return *a;
    return length_measure(e);
}

double abs_tolerance(double rel, double scale) { return std::max(rel * scale, kAbsoluteFloor); }

ValidationEntry evaluate(const SceneView& view, const Constraint& c) {
    ValidationEntry entry;
    entry.check = c.describe();
    auto decide = [&](bool ok) { entry.verdict = ok ? Verdict::Pass : Verdict::Fail; };
    const auto& ops = c.operands;

    switch (c.kind) {
        case ConstraintKind::ShapeCount: {
            const auto n = static_cast<double>(view.count(ops[0]));
            entry.measured = n;
            entry.expected = *c.target;
            decide(n == std::round(*c.target));
            break;
        }
        case ConstraintKind::ShapeType: {
            const auto e = view.entity(ops[0]);
            const auto actual = e.type_name();
            entry.note = "actual type " + actual;
            decide(type_matches(actual, ops[1]));
            break;
        }
        case ConstraintKind::Adjacent: {
            const auto e1 = view.entity(ops[0]);
            const auto e2 = view.entity(ops[1]);
            const double gap = boundary_gap(e1, e2);
            entry.measured = gap;
            entry.expected = 0.0;
            decide(gap <= abs_tolerance(c.tolerance, std::max(e1.extent(), e2.extent())));
            break;
        }
        case ConstraintKind::IntersectsAt: {
            const auto e1 = view.entity(ops[0]);
            const auto e2 = view.entity(ops[1]);
            const Point p = view.point(ops[2]);
            const double tol = abs_tolerance(c.tolerance, std::max(e1.extent(), e2.extent()));
            entry.expected = 0.0;
            try {
                const auto hits = boundary_intersections(e1, e2, tol);
                if (hits.empty()) {
                    entry.note = "entities do not intersect";
                    decide(false);
                    break;
                }
                double best = std::numeric_limits<double>::infinity();
                for (const auto& h : hits) best = std::min(best, distance(h, p));
                entry.measured = best;
                decide(best <= tol);
            } catch (const CollinearOverlap&) {
                entry.note = "collinear overlap: intersection is not a single point";
                decide(false);
            }
            break;
        }
        case ConstraintKind::PointOnEntity: {
            const Point p = view.point(ops[0]);
            const auto e = view.entity(ops[1]);
            const double d = point_boundary_distance(p, e);
            entry.measured = d;
            entry.expected = 0.0;
            decide(d <= abs_tolerance(c.tolerance, e.extent()));
            break;
        }
        case ConstraintKind::RatioEquals: {
            const auto e1 = view.entity(ops[0]);
            const auto e2 = view.entity(ops[1]);
            const double m1 = ratio_measure(e1);
            const double m2 = ratio_measure(e2);
            entry.expected = *c.target;
            if (m2 <= kAbsoluteFloor) {
                entry.note = "second entity has zero measure";
                decide(false);
                break;
            }
            entry.measured = m1 / m2;
            decide(approx_equal(*entry.measured, *c.target, c.tolerance));
            break;
        }
        case ConstraintKind::Parallel:
        case ConstraintKind::Perpendicular: {
            const auto e1 = view.entity(ops[0]);
            const auto e2 = view.entity(ops[1]);
            if (e1.kind != EntityKind::Segment || e2.kind != EntityKind::Segment) {
                entry.note = "operands must be segments";
                decide(false);
                break;
            }
            const Point u = e1.vertices[1] - e1.vertices[0];
            const Point v = e2.vertices[1] - e2.vertices[0];
            const double nu = norm(u) * norm(v);
            const double sine = std::abs(cross(u, v)) / nu;
            const double cosine = std::abs(dot(u, v)) / nu;
            entry.measured = std::atan2(sine, cosine) * kRadToDeg;
            const bool parallel = c.kind == ConstraintKind::Parallel;
            entry.expected = parallel ? 0.0 : 90.0;
            const double slack = std::max(c.tolerance, kAbsoluteFloor);
            decide(parallel ? sine <= slack : cosine <= slack);
            break;
        }
        case ConstraintKind::AngleEquals: {
            const Point v = view.point(ops[0]);
            const Point a = view.point(ops[1]);
            const Point b = view.point(ops[2]);
            entry.expected = *c.target;
            try {
                entry.measured = angle_at(v, a, b);
                decide(approx_equal(*entry.measured, *c.target, c.tolerance));
            } catch (const DegenerateAngle& e) {
                entry.note = e.what();
                decide(false);
            }
            break;
        }
        case ConstraintKind::LengthEquals: {
            const auto e = view.entity(ops[0]);
            entry.measured = length_measure(e);
            entry.expected = *c.target;
            decide(approx_equal(*entry.measured, *c.target, c.tolerance));
            break;
        }
        case ConstraintKind::AreaEquals: {
            const auto e = view.entity(ops[0]);
            entry.expected = *c.target;
            const auto area = area_measure(e);
            if (!area) {
                entry.note = "segments have no area";
                decide(false);
                break;
            }
            entry.measured = *area;
            decide(approx_equal(*area, *c.target, c.tolerance));
            break;
        }
    }
    return entry;
}

bool kind_takes_target(ConstraintKind k) {
    switch (k) {
        case ConstraintKind::ShapeCount:
        case ConstraintKind::RatioEquals:
        case ConstraintKind::AngleEquals:
        case ConstraintKind::LengthEquals:
        case ConstraintKind::AreaEquals: return true;
        default: return false;
    }
}

std::size_t operand_count(ConstraintKind k) {
    switch (k) {
        case ConstraintKind::ShapeCount:
        case ConstraintKind::LengthEquals:
        case ConstraintKind::AreaEquals: return 1;
        case ConstraintKind::ShapeType:
        case ConstraintKind::Adjacent:
        case ConstraintKind::PointOnEntity:
        case ConstraintKind::RatioEquals:
        case ConstraintKind::Parallel:
        case ConstraintKind::Perpendicular: return 2;
        case ConstraintKind::IntersectsAt:
        case ConstraintKind::AngleEquals: return 3;
    }
    return 0;
}

}  // namespace

bool approx_equal(double measured, double expected, double rel, double abs_floor) noexcept {
    const double scale = std::max(std::abs(measured), std::abs(expected));
    return std::abs(measured - expected) <= std::max(rel * scale, abs_floor);
}

double distance(Point p, Point q) noexcept { return std::hypot(p.x - q.x, p.y - q.y); }

double angle_at(Point vertex, Point a, Point b) {
    const Point u = a - vertex;
    const Point w = b - vertex;
    if (norm(u) < kDegeneracyThreshold || norm(w) < kDegeneracyThreshold) throw DegenerateAngle();
    return std::atan2(std::abs(cross(u, w)), dot(u, w)) * kRadToDeg;
}

double polygon_area(std::span<const Point> v) {
    if (v.size() < 3) throw TooFewVertices(v.size());
    double twice = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) twice += cross(v[i], v[(i + 1) % v.size()]);
    return std::abs(twice) / 2.0;
}

double perimeter(std::span<const Point> v) {
    if (v.size() < 3) throw TooFewVertices(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) total += distance(v[i], v[(i + 1) % v.size()]);
    return total;
}

double point_segment_distance(Point p, const Segment& s) noexcept {
    const Point d = s.b - s.a;
    const double len2 = dot(d, d);
    if (len2 == 0.0) return distance(p, s.a);
    const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
    return distance(p, s.a + d * t);
}

std::optional<Point> segment_intersection(const Segment& s1, const Segment& s2) {
    const Point d1 = s1.b - s1.a;
    const Point d2 = s2.b - s2.a;
    const double len1 = norm(d1);
    const double len2 = norm(d2);
    if (len1 <= 0.0 || len2 <= 0.0) throw DegenerateSegment();

    const Point w = s2.a - s1.a;
    const double denom = cross(d1, d2);
    if (std::abs(denom) <= kParallelSine * len1 * len2) {
        // Parallel: either disjoint lines or collinear.
        const double offset = std::abs(cross(w, d1)) / len1;
        if (offset > kDegeneracyThreshold * std::max(len1, len2)) return std::nullopt;
        const double l2 = len1 * len1;
        const double t0 = dot(w, d1) / l2;
        const double t1 = dot(s2.b - s1.a, d1) / l2;
        const double lo = std::max(0.0, std::min(t0, t1));
        const double hi = std::min(1.0, std::max(t0, t1));
        if (lo > hi + kParamSlack) return std::nullopt;
        if ((hi - lo) * len1 <= kDegeneracyThreshold * std::max(len1, len2))
            return s1.a + d1 * std::clamp(lo, 0.0, 1.0);
        throw CollinearOverlap();
    }
    const double t = cross(w, d2) / denom;
    const double u = cross(w, d1) / denom;
    if (t < -kParamSlack || t > 1.0 + kParamSlack || u < -kParamSlack || u > 1.0 + kParamSlack)
        return std::nullopt;
    return s1.a + d1 * std::clamp(t, 0.0, 1.0);
}

namespace {

// Intersections with the infinite line, plus their parameter along a->b.
std::vector<std::pair<double, Point>> circle_line_hits(const Circle& c, Point a, Point b) {
    const Point d = b - a;
    const double len = norm(d);
    if (len <= 0.0) throw DegenerateSegment();
    const Point u = d * (1.0 / len);
    const double along = dot(c.center - a, u);  // foot parameter in length units
    const Point foot = a + u * along;
    const double h = distance(c.center, foot);
    const double r = c.radius;
    const double tol = std::max(kDefaultRelTolerance * r, kAbsoluteFloor);
    if (h > r + tol) return {};
    if (std::abs(h - r) <= tol) return {{along / len, foot}};
    const double half = std::sqrt(r * r - h * h);
    return {{(along - half) / len, foot - u * half}, {(along + half) / len, foot + u * half}};
}

}  // namespace

std::vector<Point> circle_line_intersection(const Circle& c, const Line& l) {
    std::vector<Point> out;
    for (const auto& [t, p] : circle_line_hits(c, l.a, l.b)) out.push_back(p);
    return out;
}

std::vector<Point> circle_line_intersection(const Circle& c, const Segment& s) {
    std::vector<Point> out;
    for (const auto& [t, p] : circle_line_hits(c, s.a, s.b))
        if (t >= -kParamSlack && t <= 1.0 + kParamSlack) out.push_back(p);
    return out;
}

void GeometricScene::check_invariants() const {
    auto require = [&](const std::string& label) {
        if (!points.contains(label)) throw SceneError("dangling label '" + label + "'");
    };
    for (const auto& [a, b] : segments) {
        require(a);
        require(b);
        if (a == b) throw SceneError("segment " + a + "-" + b + " has identical endpoints");
    }
    for (const auto& [c, r] : circles) {
        require(c);
        if (!(r > 0.0)) throw SceneError("circle at " + c + " must have positive radius");
    }
    for (const auto& poly : polygons) {
        if (poly.size() < 3) throw SceneError("polygon needs at least 3 labels");
        for (std::size_t i = 0; i < poly.size(); ++i) {
            require(poly[i]);
            if (poly[i] == poly[(i + 1) % poly.size()])
                throw SceneError("polygon repeats consecutive label '" + poly[i] + "'");
        }
    }
}

std::string_view to_string(ConstraintKind k) noexcept {
    switch (k) {
        case ConstraintKind::ShapeCount: return "ShapeCount";
        case ConstraintKind::ShapeType: return "ShapeType";
        case ConstraintKind::Adjacent: return "Adjacent";
        case ConstraintKind::IntersectsAt: return "IntersectsAt";
        case ConstraintKind::PointOnEntity: return "PointOnEntity";
        case ConstraintKind::RatioEquals: return "RatioEquals";
        case ConstraintKind::Parallel: return "Parallel";
        case ConstraintKind::Perpendicular: return "Perpendicular";
        case ConstraintKind::AngleEquals: return "AngleEquals";
        case ConstraintKind::LengthEquals: return "LengthEquals";
        case ConstraintKind::AreaEquals: return "AreaEquals";
    }
    return "?";
}

std::optional<ConstraintKind> parse_constraint_kind(std::string_view s) noexcept {
    for (int i = 0; i <= static_cast<int>(ConstraintKind::AreaEquals); ++i) {
        const auto k = static_cast<ConstraintKind>(i);
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

void Constraint::check_arity() const {
    const auto want = operand_count(kind);
    if (operands.size() != want)
        throw SceneError(std::string(to_string(kind)) + " takes " + std::to_string(want) +
                         " operand(s), got " + std::to_string(operands.size()));
    if (kind_takes_target(kind) != target.has_value())
        throw SceneError(std::string(to_string(kind)) +
                         (target ? " takes no target value" : " requires a target value"));
    if ((kind == ConstraintKind::ShapeCount && !is_shape_type_name(operands[0])) ||
        (kind == ConstraintKind::ShapeType && !is_shape_type_name(operands[1])))
        throw SceneError("unknown shape type in " + describe());
    if (!(tolerance >= 0.0)) throw SceneError("tolerance must be non-negative");
}

std::string Constraint::describe() const {
    std::string s(to_string(kind));
    for (const auto& o : operands) s += " " + o;
    if (target) s += " " + text::format_number(*target);
    return s;
}

ValidationReport validate_scene(const GeometricScene& scene, std::span<const Constraint> constraints) {
    const SceneView view(scene);
    ValidationReport report;
    report.entries.reserve(constraints.size());
    for (const auto& c : constraints) report.entries.push_back(evaluate(view, c));
    return report;
}

SceneBlock parse_scene_block(std::string_view body) {
    SceneBlock out;
    std::size_t lineno = 0;
    for (auto line : text::split_lines(body)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = text::split_ws(line);
        if (tok.empty()) continue;
        auto fail = [&](const std::string& why) -> SceneError {
            return SceneError("scene line " + std::to_string(lineno) + ": " + why);
        };
        auto number = [&](std::string_view t) {
            auto v = text::parse_number(t);
            if (!v) throw fail("expected a number, got '" + std::string(t) + "'");
            return *v;
        };
        const auto kw = tok[0];
        if (kw == "point") {
            if (tok.size() != 4) throw fail("usage: point LABEL x y");
            const std::string label(tok[1]);
            if (out.scene.points.contains(label)) throw fail("duplicate point '" + label + "'");
            out.scene.points[label] = {number(tok[2]), number(tok[3])};
        } else if (kw == "segment") {
            if (tok.size() != 3) throw fail("usage: segment A B");
            out.scene.segments.emplace_back(tok[1], tok[2]);
        } else if (kw == "circle") {
            if (tok.size() != 3) throw fail("usage: circle CENTER r");
            out.scene.circles.emplace_back(std::string(tok[1]), number(tok[2]));
        } else if (kw == "polygon") {
            if (tok.size() < 4) throw fail("usage: polygon A B C ...");
            out.scene.polygons.emplace_back(tok.begin() + 1, tok.end());
        } else if (kw == "constraint") {
            if (tok.size() < 2) throw fail("usage: constraint KIND args...");
            const auto kind = parse_constraint_kind(tok[1]);
            if (!kind) throw fail("unknown constraint kind '" + std::string(tok[1]) + "'");
            Constraint c;
            c.kind = *kind;
            std::vector<std::string_view> args(tok.begin() + 2, tok.end());
            if (!args.empty() && args.back().rfind("tol=", 0) == 0) {
                c.tolerance = number(args.back().substr(4));
                args.pop_back();
            }
            if (kind_takes_target(c.kind) && !args.empty()) {
                c.target = number(args.back());
                args.pop_back();
            }
            for (auto a : args) c.operands.emplace_back(a);
            try {
                c.check_arity();
            } catch (const SceneError& e) {
                throw fail(e.what());
            }
            out.constraints.push_back(std::move(c));
        } else {
            throw fail("unknown keyword '" + std::string(kw) + "'");
        }
    }
    out.scene.check_invariants();
    return out;
}

}  // namespace vista::geom
