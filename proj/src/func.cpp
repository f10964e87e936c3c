#include "vista/func.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "vista/text.hpp"

namespace vista::func {

namespace {

// Discriminants smaller than this fraction of b^2 + |4ac| count as zero.
constexpr double kDiscriminantSlack = 1e-14;
// |p(c)| at a critical point below this fraction of the evaluation magnitude
// marks an even-multiplicity (touching) root.
constexpr double kTouchSlack = 1e-10;

double eval_magnitude(const Polynomial& p, double x) {
    double acc = 0.0;
    double xp = 1.0;
    for (double c : p.coefficients()) {
        acc += std::abs(c) * xp;
        xp *= std::abs(x);
    }
    return acc;
}

double bisect(const Polynomial& p, double a, double b, double fa) {
    for (int i = 0; i < 400; ++i) {
        const double mid = a + (b - a) / 2.0;
        if (mid <= a || mid >= b) break;
        const double fm = poly_eval(p, mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return a + (b - a) / 2.0;
}

void dedupe(std::vector<double>& roots, const Polynomial& p) {
    std::sort(roots.begin(), roots.end());
    std::vector<double> out;
    for (double r : roots) {
        if (!out.empty() && std::abs(r - out.back()) <= kRootTolerance * std::max(1.0, std::abs(r))) {
            if (std::abs(poly_eval(p, r)) < std::abs(poly_eval(p, out.back()))) out.back() = r;
            continue;
        }
        out.push_back(r);
    }
    roots = std::move(out);
}

std::vector<double> closed_form_roots(const Polynomial& p) {
    if (p.degree() == 0) return {};
    if (p.degree() == 1) return {-p.coefficient(0) / p.coefficient(1)};
    const double a = p.coefficient(2);
    const double b = p.coefficient(1);
    const double c = p.coefficient(0);
    const double disc = b * b - 4.0 * a * c;
    const double scale = b * b + std::abs(4.0 * a * c);
    if (std::abs(disc) <= kDiscriminantSlack * scale) return {-b / (2.0 * a)};
    if (disc < 0.0) return {};
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    std::vector<double> r{q / a, c / q};
    std::sort(r.begin(), r.end());
    return r;
}

std::vector<double> roots_in(const Polynomial& p, double lo, double hi) {
    if (p.degree() <= 2) {
        std::vector<double> out;
        for (double r : closed_form_roots(p))
            if (r >= lo && r <= hi) out.push_back(r);
        return out;
    }
    // Between consecutive stationary points p is monotone, so each piece
    // holds at most one simple root.
    const auto crit = roots_in(p.derivative(), lo, hi);
    std::vector<double> cuts{lo};
    for (double c : crit)
        if (c > lo && c < hi) cuts.push_back(c);
    cuts.push_back(hi);

    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        const double fa = poly_eval(p, a);
        const double fb = poly_eval(p, b);
        if (fa == 0.0) roots.push_back(a);
        if (fb == 0.0) roots.push_back(b);
        if (fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0)) roots.push_back(bisect(p, a, b, fa));
    }
    for (double c : crit)
        if (std::abs(poly_eval(p, c)) <= kTouchSlack * eval_magnitude(p, c)) roots.push_back(c);
    dedupe(roots, p);
    return roots;
}

}  // namespace

Polynomial::Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    if (degree() > kMaxDegree)
        throw UnsupportedDegree("degree " + std::to_string(degree()) + " exceeds the supported maximum of " +
                                std::to_string(kMaxDegree));
}

double Polynomial::max_abs_coefficient() const noexcept {
    double m = 0.0;
    for (double c : c_) m = std::max(m, std::abs(c));
    return m;
}

Polynomial Polynomial::derivative() const {
    std::vector<double> d;
    for (std::size_t i = 1; i < c_.size(); ++i) d.push_back(c_[i] * static_cast<double>(i));
    return Polynomial(std::move(d));
}

Polynomial operator-(const Polynomial& p, const Polynomial& q) {
    const auto n = std::max(p.c_.size(), q.c_.size());
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = p.coefficient(static_cast<int>(i)) - q.coefficient(static_cast<int>(i));
    return Polynomial(std::move(d));
}

std::string Polynomial::to_string() const {
    if (c_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (int i = degree(); i >= 0; --i) {
        const double c = c_[i];
        if (c == 0.0) continue;
        const double mag = std::abs(c);
        if (first) {
            if (c < 0) os << '-';
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        if (mag != 1.0 || i == 0) os << text::format_number(mag);
        if (i >= 1) os << 'x';
        if (i >= 2) os << '^' << i;
        first = false;
    }
    return os.str();
}

std::string_view to_string(KeyPointKind k) noexcept {
    switch (k) {
        case KeyPointKind::OnCurve: return "OnCurve";
        case KeyPointKind::XIntercept: return "XIntercept";
        case KeyPointKind::YIntercept: return "YIntercept";
        case KeyPointKind::Vertex: return "Vertex";
        case KeyPointKind::OnAuxiliaryLine: return "OnAuxiliaryLine";
    }
    return "?";
}

std::optional<KeyPointKind> parse_key_point_kind(std::string_view s) noexcept {
    for (auto k : {KeyPointKind::OnCurve, KeyPointKind::XIntercept, KeyPointKind::YIntercept,
                   KeyPointKind::Vertex, KeyPointKind::OnAuxiliaryLine})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

bool KeyPointCheck::well_typed() const noexcept {
    if (kind == KeyPointKind::XIntercept && point.y != 0.0) return false;
    if (kind == KeyPointKind::YIntercept && point.x != 0.0) return false;
    return tolerance >= 0.0;
}

AuxiliaryLine AuxiliaryLine::general(double slope, double intercept) {
    if (!std::isfinite(slope)) throw FunctionError("general auxiliary line needs a finite slope");
    return {AuxKind::General, intercept, slope};
}

double AuxiliaryLine::residual(Point2 p) const noexcept {
    switch (kind) {
        case AuxKind::Horizontal: return p.y - value;
        case AuxKind::Vertical: return p.x - value;
        case AuxKind::General: return p.y - (slope * p.x + value);
    }
    return 0.0;
}

std::string AuxiliaryLine::to_string() const {
    switch (kind) {
        case AuxKind::Horizontal: return "y = " + text::format_number(value);
        case AuxKind::Vertical: return "x = " + text::format_number(value);
        case AuxKind::General:
            return "y = " + text::format_number(slope) + "x + " + text::format_number(value);
    }
    return "?";
}

double poly_eval(const Polynomial& p, double x) noexcept {
    const auto& c = p.coefficients();
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

std::vector<double> poly_roots(const Polynomial& p, Window w) {
    if (p.is_zero()) throw IdenticallyZero();
    if (!(w.lo < w.hi)) throw FunctionError("root window must satisfy lo < hi");
    return roots_in(p, w.lo, w.hi);
}

AxisIntersections axis_intersections(const Polynomial& p, Window w) {
    return {poly_roots(p, w), {0.0, p.coefficient(0)}};
}

Point2 quadratic_vertex(const Polynomial& p) {
    if (p.degree() != 2) throw NotQuadratic(p.degree());
    const double x = -p.coefficient(1) / (2.0 * p.coefficient(2));
    return {x, poly_eval(p, x)};
}

bool within(double measured, double expected, double tol) noexcept {
    return std::abs(measured - expected) <= tol * std::max(1.0, std::abs(expected));
}

ValidationReport check_key_points(const Polynomial& p, std::span<const KeyPointCheck> checks,
                                  std::span<const AuxiliaryLine> aux) {
    ValidationReport report;
    for (const auto& k : checks) {
        ValidationEntry e;
        e.check = std::string(to_string(k.kind)) + " (" + text::format_number(k.point.x) + ", " +
                  text::format_number(k.point.y) + ") on " + p.to_string();
        auto decide = [&](bool ok) { e.verdict = ok ? Verdict::Pass : Verdict::Fail; };
        if (!k.well_typed()) {
            e.note = "ill-typed check";
            decide(false);
            report.entries.push_back(std::move(e));
            continue;
        }
        switch (k.kind) {
            case KeyPointKind::OnCurve:
            case KeyPointKind::XIntercept:
                e.measured = poly_eval(p, k.point.x);
                e.expected = k.point.y;
                decide(within(*e.measured, k.point.y, k.tolerance));
                break;
            case KeyPointKind::YIntercept:
                e.measured = p.coefficient(0);
                e.expected = k.point.y;
                decide(within(*e.measured, k.point.y, k.tolerance));
                break;
            case KeyPointKind::Vertex: {
                if (p.degree() != 2) {
                    e.note = "vertex check needs a quadratic";
                    decide(false);
                    break;
                }
                const auto v = quadratic_vertex(p);
                e.measured = v.y;
                e.expected = k.point.y;
                e.note = "vertex at (" + text::format_number(v.x) + ", " + text::format_number(v.y) + ")";
                decide(within(v.x, k.point.x, k.tolerance) && within(v.y, k.point.y, k.tolerance));
                break;
            }
            case KeyPointKind::OnAuxiliaryLine: {
                e.expected = 0.0;
                if (k.aux_index) {
                    if (*k.aux_index >= aux.size()) {
                        e.note = "no auxiliary line #" + std::to_string(*k.aux_index);
                        decide(false);
                        break;
                    }
                    e.measured = aux[*k.aux_index].residual(k.point);
                    e.note = aux[*k.aux_index].to_string();
                } else {
                    if (aux.empty()) {
                        e.note = "no auxiliary lines declared";
                        decide(false);
                        break;
                    }
                    for (const auto& line : aux) {
                        const double r = line.residual(k.point);
                        if (!e.measured || std::abs(r) < std::abs(*e.measured)) {
                            e.measured = r;
                            e.note = line.to_string();
                        }
                    }
                }
                decide(within(*e.measured, 0.0, k.tolerance));
                break;
            }
        }
        report.entries.push_back(std::move(e));
    }
    return report;
}

std::vector<Point2> intersect_polynomials(const Polynomial& p, const Polynomial& q, Window w) {
    const Polynomial d = p - q;
    if (d.is_zero()) throw IdenticalCurves();
    std::vector<Point2> out;
    for (double r : poly_roots(d, w)) out.push_back({r, poly_eval(p, r)});
    return out;
}

Verdict similarity_check(const Polynomial& p, const Polynomial& q, double target, double tolerance) {
    if (p.degree() != q.degree())
        throw UnsupportedDegree("similarity needs equal degrees, got " + std::to_string(p.degree()) +
                                " and " + std::to_string(q.degree()));
    if (p.degree() == 1)
        return within(p.coefficient(1), q.coefficient(1), tolerance) ? Verdict::Pass : Verdict::Fail;
    if (p.degree() == 2) {
        const double a = p.coefficient(2);
        const double b = q.coefficient(2);
        if ((a < 0.0) != (b < 0.0)) return Verdict::Fail;
        return within(std::abs(a) / std::abs(b), target, tolerance) ? Verdict::Pass : Verdict::Fail;
    }
    throw UnsupportedDegree("similarity is defined for degree 1 or 2, got " + std::to_string(p.degree()));
}

Polynomial default_example(Subtype subtype) {
    switch (subtype) {
        case Subtype::Property: return Polynomial{0.0, 0.0, 1.0};
        case Subtype::Expression: return Polynomial{-1.0, 0.0, 1.0};
        default: return Polynomial{0.0, 1.0};
    }
}

FunctionBlock parse_function_block(std::string_view body) {
    FunctionBlock out;
    std::size_t lineno = 0;
    for (auto line : text::split_lines(body)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto tok = text::split_ws(line);
        if (tok.empty()) continue;
        auto fail = [&](const std::string& why) {
            return FunctionBlockError("function line " + std::to_string(lineno) + ": " + why);
        };
        auto number = [&](std::string_view t) {
            auto v = text::parse_number(t);
            if (!v) throw fail("expected a number, got '" + std::string(t) + "'");
            return *v;
        };
        const auto kw = tok[0];
        if (kw == "poly") {
            if (tok.size() < 3) throw fail("usage: poly NAME c0 c1 ...");
            std::vector<double> coeffs;
            for (std::size_t i = 2; i < tok.size(); ++i) coeffs.push_back(number(tok[i]));
            const std::string name(tok[1]);
            for (const auto& [n, _] : out.polys)
                if (n == name) throw fail("duplicate polynomial '" + name + "'");
            try {
                out.polys.emplace_back(name, Polynomial(std::move(coeffs)));
            } catch (const UnsupportedDegree& e) {
                throw fail(e.what());
            }
        } else if (kw == "auxline") {
            if (tok.size() < 2) throw fail("usage: auxline KIND params...");
            if (tok[1] == "Horizontal" && tok.size() == 3) {
                out.aux_lines.push_back(AuxiliaryLine::horizontal(number(tok[2])));
            } else if (tok[1] == "Vertical" && tok.size() == 3) {
                out.aux_lines.push_back(AuxiliaryLine::vertical(number(tok[2])));
            } else if (tok[1] == "General" && tok.size() == 4) {
                out.aux_lines.push_back(AuxiliaryLine::general(number(tok[2]), number(tok[3])));
            } else {
                throw fail("usage: auxline Horizontal y | Vertical x | General slope intercept");
            }
        } else if (kw == "keypoint") {
            NamedKeyPoint kp;
            if (!tok.empty() && tok.back().rfind("tol=", 0) == 0) {
                kp.check.tolerance = number(tok.back().substr(4));
                tok.pop_back();
            }
            if (tok.size() != 4 && tok.size() != 5) throw fail("usage: keypoint KIND x y [ref] [tol=REL]");
            const auto kind = parse_key_point_kind(tok[1]);
            if (!kind) throw fail("unknown keypoint kind '" + std::string(tok[1]) + "'");
            kp.check.kind = *kind;
            kp.check.point = {number(tok[2]), number(tok[3])};
            if (tok.size() == 5) {
                if (*kind == KeyPointKind::OnAuxiliaryLine) {
                    const double idx = number(tok[4]);
                    if (idx < 0 || idx != std::floor(idx)) throw fail("aux line index must be a non-negative integer");
                    kp.check.aux_index = static_cast<std::size_t>(idx);
                } else {
                    kp.poly = std::string(tok[4]);
                }
            }
            if (!kp.check.well_typed()) throw fail("XIntercept needs y = 0 and YIntercept needs x = 0");
            out.key_points.push_back(std::move(kp));
        } else {
            throw fail("unknown keyword '" + std::string(kw) + "'");
        }
    }
    for (const auto& kp : out.key_points) {
        if (kp.check.kind == KeyPointKind::OnAuxiliaryLine) continue;
        if (out.polys.empty()) throw FunctionBlockError("keypoint declared without any polynomial");
        if (!kp.poly.empty() &&
            std::none_of(out.polys.begin(), out.polys.end(), [&](const auto& np) { return np.first == kp.poly; }))
            throw FunctionBlockError("keypoint references unknown polynomial '" + kp.poly + "'");
    }
    return out;
}

ValidationReport validate_function_block(const FunctionBlock& block) {
    ValidationReport report;
    for (const auto& kp : block.key_points) {
        const Polynomial* p = nullptr;
        std::string name;
        for (const auto& [n, poly] : block.polys) {
            if (kp.poly.empty() || n == kp.poly) {
                p = &poly;
                name = n;
                break;
            }
        }
        const Polynomial fallback;
        const KeyPointCheck one[] = {kp.check};
        auto sub = check_key_points(p ? *p : fallback, one, block.aux_lines);
        for (auto& e : sub.entries) {
            if (!name.empty()) e.check = name + ": " + e.check;
            report.entries.push_back(std::move(e));
        }
    }
    return report;
}

}  // namespace vista::func
