#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vista/core.hpp"

// Lower-degree polynomial models and the key-point checks run against them.
namespace vista::func {

inline constexpr int kMaxDegree = 4;
inline constexpr double kDefaultTolerance = 1e-6;
inline constexpr double kRootTolerance = 1e-9;
inline constexpr double kDefaultWindowLo = -100.0;
inline constexpr double kDefaultWindowHi = 100.0;

class FunctionError : public Error {
public:
    using Error::Error;
};

class IdenticallyZero : public FunctionError {
public:
    IdenticallyZero() : FunctionError("polynomial is identically zero") {}
};

class NotQuadratic : public FunctionError {
public:
    explicit NotQuadratic(int degree)
        : FunctionError("expected a quadratic, got degree " + std::to_string(degree)) {}
};

class IdenticalCurves : public FunctionError {
public:
    IdenticalCurves() : FunctionError("curves coincide; intersection is not finite") {}
};

class UnsupportedDegree : public FunctionError {
public:
    explicit UnsupportedDegree(const std::string& why) : FunctionError(why) {}
};

class FunctionBlockError : public FunctionError {
public:
    using FunctionError::FunctionError;
};

// Coefficients in ascending degree. Trailing zeros are trimmed, so the
// leading coefficient is non-zero unless the polynomial is zero.
class Polynomial {
public:
    Polynomial() = default;
    // Throws UnsupportedDegree above kMaxDegree.
    explicit Polynomial(std::vector<double> coefficients);
    Polynomial(std::initializer_list<double> coefficients)
        : Polynomial(std::vector<double>(coefficients)) {}

    const std::vector<double>& coefficients() const noexcept { return c_; }
    // -1 for the zero polynomial.
    int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const noexcept { return c_.empty(); }
    double coefficient(int i) const noexcept {
        return i >= 0 && i < static_cast<int>(c_.size()) ? c_[i] : 0.0;
    }
    double max_abs_coefficient() const noexcept;

    Polynomial derivative() const;
    friend Polynomial operator-(const Polynomial& p, const Polynomial& q);

    std::string to_string() const;
    bool operator==(const Polynomial&) const = default;

private:
    std::vector<double> c_;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

struct Window {
    double lo = kDefaultWindowLo;
    double hi = kDefaultWindowHi;
};

enum class KeyPointKind { OnCurve, XIntercept, YIntercept, Vertex, OnAuxiliaryLine };
std::string_view to_string(KeyPointKind k) noexcept;
std::optional<KeyPointKind> parse_key_point_kind(std::string_view s) noexcept;

struct KeyPointCheck {
    Point2 point;
    KeyPointKind kind = KeyPointKind::OnCurve;
    double tolerance = kDefaultTolerance;
    // OnAuxiliaryLine: index into the aux list; unset means "any line".
    std::optional<std::size_t> aux_index;

    // XIntercept needs y == 0, YIntercept needs x == 0.
    bool well_typed() const noexcept;
};

enum class AuxKind { Horizontal, Vertical, General };

struct AuxiliaryLine {
    AuxKind kind = AuxKind::Horizontal;
    double value = 0.0;  // Horizontal: y, Vertical: x, General: intercept
    double slope = 0.0;  // General only

    static AuxiliaryLine horizontal(double y) { return {AuxKind::Horizontal, y, 0.0}; }
    static AuxiliaryLine vertical(double x) { return {AuxKind::Vertical, x, 0.0}; }
    // Throws FunctionError for a non-finite slope.
    static AuxiliaryLine general(double slope, double intercept);

    // Signed offset of a point from the line, measured along y (or x for
    // vertical lines).
    double residual(Point2 p) const noexcept;
    std::string to_string() const;
};

double poly_eval(const Polynomial& p, double x) noexcept;

// Real roots in [lo, hi], ascending, multiple roots reported once.
std::vector<double> poly_roots(const Polynomial& p, Window w = {});

struct AxisIntersections {
    std::vector<double> x_intercepts;
    Point2 y_intercept;
};
AxisIntersections axis_intersections(const Polynomial& p, Window w = {});

Point2 quadratic_vertex(const Polynomial& p);

// |measured - expected| <= tol * max(1, |expected|)
bool within(double measured, double expected, double tol) noexcept;

ValidationReport check_key_points(const Polynomial& p, std::span<const KeyPointCheck> checks,
                                  std::span<const AuxiliaryLine> aux);

std::vector<Point2> intersect_polynomials(const Polynomial& p, const Polynomial& q, Window w = {});

// Degree 1: equal slopes. Degree 2: same opening direction and
// |a_p| / |a_q| within tolerance of target.
Verdict similarity_check(const Polynomial& p, const Polynomial& q, double target = 1.0,
                         double tolerance = kDefaultTolerance);

// Fallback curve used when a Function problem arrives without one.
Polynomial default_example(Subtype subtype);

struct NamedKeyPoint {
    KeyPointCheck check;
    std::string poly;  // empty: first declared polynomial
};

struct FunctionBlock {
    std::vector<std::pair<std::string, Polynomial>> polys;
    std::vector<AuxiliaryLine> aux_lines;
    std::vector<NamedKeyPoint> key_points;
};

// Parses the body of a ```function fence:
//   poly NAME c0 c1 ... | auxline Horizontal y | auxline Vertical x |
//   auxline General slope intercept | keypoint KIND x y [NAME-or-aux-index] [tol=REL]
FunctionBlock parse_function_block(std::string_view body);

// Runs every key point of the block against its polynomial.
ValidationReport validate_function_block(const FunctionBlock& block);

}  // namespace vista::func
