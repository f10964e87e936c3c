#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vista/core.hpp"

// Deterministic plane-geometry kernel plus the constraint engine that checks
// a declared scene against its stated conditions. Angles are degrees at every
// public boundary.
namespace vista::geom {

inline constexpr double kDefaultRelTolerance = 1e-6;
inline constexpr double kAbsoluteFloor = 1e-9;
inline constexpr double kDegeneracyThreshold = 1e-9;

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

struct Segment {
    Point a;
    Point b;
};

// Infinite line through two distinct points.
struct Line {
    Point a;
    Point b;
};

struct Circle {
    Point center;
    double radius = 1.0;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class DegenerateAngle : public GeometryError {
public:
    DegenerateAngle() : GeometryError("angle ray is shorter than the degeneracy threshold") {}
};

class DegenerateSegment : public GeometryError {
public:
    DegenerateSegment() : GeometryError("segment has zero length") {}
};

class TooFewVertices : public GeometryError {
public:
    explicit TooFewVertices(std::size_t n)
        : GeometryError("polygon needs at least 3 vertices, got " + std::to_string(n)) {}
};

// Two collinear segments share a sub-segment, so there is no single
// intersection point to report.
class CollinearOverlap : public GeometryError {
public:
    CollinearOverlap() : GeometryError("segments overlap collinearly") {}
};

class UnknownLabel : public GeometryError {
public:
    explicit UnknownLabel(std::string label)
        : GeometryError("unknown label or entity '" + label + "'"), label_(std::move(label)) {}
    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

class SceneError : public GeometryError {
public:
    using GeometryError::GeometryError;
};

// |measured - expected| <= max(rel * max(|measured|, |expected|), abs_floor)
bool approx_equal(double measured, double expected, double rel = kDefaultRelTolerance,
                  double abs_floor = kAbsoluteFloor) noexcept;

double distance(Point p, Point q) noexcept;

// Interior angle a-vertex-b in [0, 180] degrees.
double angle_at(Point vertex, Point a, Point b);

double polygon_area(std::span<const Point> vertices);
double perimeter(std::span<const Point> vertices);

// Unique intersection point of two closed segments, nullopt when disjoint.
// Throws CollinearOverlap when they share more than one point.
std::optional<Point> segment_intersection(const Segment& s1, const Segment& s2);

// Sorted along the line direction (a -> b). Tangency yields one point.
std::vector<Point> circle_line_intersection(const Circle& c, const Line& l);
std::vector<Point> circle_line_intersection(const Circle& c, const Segment& s);

double point_segment_distance(Point p, const Segment& s) noexcept;

// ---------------------------------------------------------------------------
// Scene + constraints
// ---------------------------------------------------------------------------

struct GeometricScene {
    std::map<std::string, Point> points;
    std::vector<std::pair<std::string, std::string>> segments;
    std::vector<std::pair<std::string, double>> circles;  // center label, radius
    std::vector<std::vector<std::string>> polygons;

    // Throws SceneError on a dangling label, short polygon, repeated
    // consecutive vertex or non-positive radius.
    void check_invariants() const;
};

enum class ConstraintKind {
    ShapeCount,
    ShapeType,
    Adjacent,
    IntersectsAt,
    PointOnEntity,
    RatioEquals,
    Parallel,
    Perpendicular,
    AngleEquals,
    LengthEquals,
    AreaEquals,
};

std::string_view to_string(ConstraintKind k) noexcept;
std::optional<ConstraintKind> parse_constraint_kind(std::string_view s) noexcept;

// Operands by kind (entity references: `A-B` segment or polygon edge,
// `A-B-C...` polygon, `circle:O` circle; points are bare labels):
//   ShapeCount    TYPE            target = count
//   ShapeType     ENTITY TYPE
//   Adjacent      ENTITY ENTITY
//   IntersectsAt  ENTITY ENTITY POINT
//   PointOnEntity POINT ENTITY
//   RatioEquals   ENTITY ENTITY   target = measure(first) / measure(second)
//   Parallel      SEGMENT SEGMENT
//   Perpendicular SEGMENT SEGMENT
//   AngleEquals   VERTEX A B      target in degrees
//   LengthEquals  ENTITY          target
//   AreaEquals    ENTITY          target
// TYPE is one of segment, circle, triangle, quadrilateral, polygon-N.
struct Constraint {
    ConstraintKind kind = ConstraintKind::ShapeCount;
    std::vector<std::string> operands;
    std::optional<double> target;
    double tolerance = kDefaultRelTolerance;

    // Throws SceneError when operand count or target presence does not match kind.
    void check_arity() const;
    std::string describe() const;
};

// One entry per constraint, in order. Throws UnknownLabel when a constraint
// names a point or entity the scene does not declare.
ValidationReport validate_scene(const GeometricScene& scene, std::span<const Constraint> constraints);

struct SceneBlock {
    GeometricScene scene;
    std::vector<Constraint> constraints;
};

// Parses the body of a ```scene fence:
//   point LABEL x y | segment A B | circle C r | polygon A B C ... |
//   constraint KIND args... [tol=REL]
// `#` starts a comment. Throws SceneError with the offending line number.
SceneBlock parse_scene_block(std::string_view body);

}  // namespace vista::geom
