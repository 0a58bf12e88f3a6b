#include "lsm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lsm/errors.hpp"
#include "lsm/rng.hpp"

namespace lsm {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr int kFineSamples = 2048;
constexpr double kGolden = 0.6180339887498949;

// Maximises (or minimises with sign=-1) f on [a, b] by golden-section search.
template <class F>
double golden_section(F&& f, double a, double b, double sign) {
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = sign * f(x1);
    double f2 = sign * f(x2);
    for (int it = 0; it < 100 && (b - a) > 1e-14; ++it) {
        if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = sign * f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = sign * f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

Point canonical_kite(double t) {
    return {std::cos(t) + 0.65 * std::cos(2.0 * t) - 0.65, 1.5 * std::sin(t)};
}

BoundaryCurve::BoundaryCurve(Shape shape, Point center, double scale, double rotation)
    : shape_(shape), center_(center), scale_(scale), rotation_(rotation) {
    if (!(scale > 0.0)) {
        throw GeometryError("curve scale must be positive");
    }
    std::visit(Overloaded{
                   [](const CircleShape& c) {
                       if (!(c.radius > 0.0)) throw GeometryError("circle radius must be positive");
                   },
                   [](const EllipseShape& e) {
                       if (!(e.a > 0.0 && e.b > 0.0))
                           throw GeometryError("ellipse semi-axes must be positive");
                   },
                   [](const KiteShape&) {},
               },
               shape_);
}

std::string BoundaryCurve::kind_name() const {
    return std::visit(Overloaded{
                          [](const CircleShape&) { return std::string("circle"); },
                          [](const EllipseShape&) { return std::string("ellipse"); },
                          [](const KiteShape&) { return std::string("kite"); },
                      },
                      shape_);
}

Point BoundaryCurve::canonical(double t) const {
    return std::visit(Overloaded{
                          [t](const CircleShape& c) { return polar(c.radius, t); },
                          [t](const EllipseShape& e) {
                              return Point{e.a * std::cos(t), e.b * std::sin(t)};
                          },
                          [t](const KiteShape&) { return canonical_kite(t); },
                      },
                      shape_);
}

Point BoundaryCurve::canonical_derivative(double t) const {
    return std::visit(Overloaded{
                          [t](const CircleShape& c) {
                              return Point{-c.radius * std::sin(t), c.radius * std::cos(t)};
                          },
                          [t](const EllipseShape& e) {
                              return Point{-e.a * std::sin(t), e.b * std::cos(t)};
                          },
                          [t](const KiteShape&) {
                              return Point{-std::sin(t) - 1.3 * std::sin(2.0 * t),
                                           1.5 * std::cos(t)};
                          },
                      },
                      shape_);
}

Point BoundaryCurve::rotate(Point v) const {
    const double c = std::cos(rotation_);
    const double s = std::sin(rotation_);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Point BoundaryCurve::to_world(Point local) const { return center_ + scale_ * rotate(local); }

Point BoundaryCurve::point(double t) const { return to_world(canonical(t)); }

Point BoundaryCurve::derivative(double t) const { return scale_ * rotate(canonical_derivative(t)); }

double BoundaryCurve::canonical_diameter() const {
    if (const auto* c = std::get_if<CircleShape>(&shape_)) {
        return 2.0 * c->radius;
    }
    if (const auto* e = std::get_if<EllipseShape>(&shape_)) {
        return 2.0 * std::max(e->a, e->b);
    }
    // Kite: brute-force farthest pair on a sampling, then local refinement.
    constexpr int m = 720;
    const double h = kTwoPi / m;
    double best = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
    for (int i = 0; i < m; ++i) {
        const Point pi = canonical(i * h);
        for (int j = i + 1; j < m; ++j) {
            const double d = distance(pi, canonical(j * h));
            if (d > best) {
                best = d;
                t1 = i * h;
                t2 = j * h;
            }
        }
    }
    for (int round = 0; round < 6; ++round) {
        t1 = golden_section([&](double t) { return distance(canonical(t), canonical(t2)); },
                            t1 - h, t1 + h, 1.0);
        t2 = golden_section([&](double t) { return distance(canonical(t1), canonical(t)); },
                            t2 - h, t2 + h, 1.0);
    }
    return std::max(best, distance(canonical(t1), canonical(t2)));
}

double BoundaryCurve::perimeter() const {
    double sum = 0.0;
    for (int q = 0; q < kFineSamples; ++q) {
        sum += speed(kTwoPi * q / kFineSamples);
    }
    return sum * kTwoPi / kFineSamples;
}

bool BoundaryCurve::contains(Point p) const {
    const Point shifted = p - center_;
    const double c = std::cos(rotation_);
    const double s = std::sin(rotation_);
    const Point local{(c * shifted.x + s * shifted.y) / scale_,
                      (-s * shifted.x + c * shifted.y) / scale_};
    if (const auto* circle = std::get_if<CircleShape>(&shape_)) {
        return norm(local) < circle->radius;
    }
    if (const auto* e = std::get_if<EllipseShape>(&shape_)) {
        const double u = local.x / e->a;
        const double v = local.y / e->b;
        return u * u + v * v < 1.0;
    }
    // Winding number of a fine polygon around the point.
    int winding = 0;
    Point prev = canonical(0.0);
    for (int q = 1; q <= kFineSamples; ++q) {
        const Point cur = canonical(kTwoPi * q / kFineSamples);
        const double cross = (cur.x - prev.x) * (local.y - prev.y) - (local.x - prev.x) * (cur.y - prev.y);
        if (prev.y <= local.y) {
            if (cur.y > local.y && cross > 0.0) ++winding;
        } else if (cur.y <= local.y && cross < 0.0) {
            --winding;
        }
        prev = cur;
    }
    return winding != 0;
}

double BoundaryCurve::distance_to(Point p) const {
    const double h = kTwoPi / kFineSamples;
    double best = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    for (int q = 0; q < kFineSamples; ++q) {
        const double d = distance(point(q * h), p);
        if (d < best) {
            best = d;
            best_t = q * h;
        }
    }
    const double t = golden_section([&](double tt) { return distance(point(tt), p); },
                                    best_t - h, best_t + h, -1.0);
    return std::min(best, distance(point(t), p));
}

BoundaryCurve BoundaryCurve::with_placement(Point center, double scale) const {
    return BoundaryCurve(shape_, center, scale, rotation_);
}

BoundaryCurve place_scatterer(const BoundaryCurve& curve, Point center, double size) {
    if (!(size > 0.0)) {
        throw GeometryError("scatterer size must be positive");
    }
    return curve.with_placement(center, size / curve.canonical_diameter());
}

double DiscretizedBoundary::total_weight() const {
    double sum = 0.0;
    for (const double w : weights) sum += w;
    return sum;
}

double DiscretizedBoundary::max_spacing() const {
    double best = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        best = std::max(best, distance(nodes[q], nodes[(q + 1) % nodes.size()]));
    }
    return best;
}

DiscretizedBoundary discretize(const BoundaryCurve& curve, int n) {
    if (n < 4 || n % 2 != 0) {
        throw GeometryError("boundary node count must be even and >= 4, got " + std::to_string(n));
    }
    DiscretizedBoundary out{curve, n, {}, {}, {}, {}, {}};
    const auto count = static_cast<std::size_t>(n);
    out.params.resize(count);
    out.nodes.resize(count);
    out.normals.resize(count);
    out.speeds.resize(count);
    out.weights.resize(count);
    for (std::size_t q = 0; q < count; ++q) {
        const double t = kTwoPi * static_cast<double>(q) / n;
        const Point d = curve.derivative(t);
        const double speed = norm(d);
        out.params[q] = t;
        out.nodes[q] = curve.point(t);
        // Counter-clockwise traversal: outward normal is the tangent turned clockwise.
        out.normals[q] = {d.y / speed, -d.x / speed};
        out.speeds[q] = speed;
        out.weights[q] = kTwoPi / n * speed;
    }
    return out;
}

std::string to_string(PointRole role) {
    switch (role) {
        case PointRole::Receiver: return "receivers";
        case PointRole::DeterministicSource: return "deterministic-sources";
        case PointRole::RandomSource: return "random-sources";
    }
    return "unknown";
}

std::string to_string(AngleDistribution d) {
    return d == AngleDistribution::Uniform ? "uniform" : "perturbed";
}

PointSet make_point_set(const PointSetSpec& spec, PointRole role) {
    if (spec.count < 1) {
        throw GeometryError("point count must be >= 1");
    }
    if (!(spec.radius > 0.0)) {
        throw GeometryError("point-set radius must be positive");
    }
    if (spec.beta < 0.0 || spec.beta > 1.0) {
        throw GeometryError("beta must lie in [0, 1]");
    }
    const Arc arc = spec.arc.value_or(Arc{});
    if (!(arc.theta_max > arc.theta_min)) {
        throw GeometryError("arc requires theta_max > theta_min");
    }
    PointSet set;
    set.role = role;
    set.generation = spec;
    const auto count = static_cast<std::size_t>(spec.count);
    set.points.resize(count);
    set.angles.resize(count);
    const double span = arc.theta_max - arc.theta_min;
    for (std::size_t j = 0; j < count; ++j) {
        double theta = 0.0;
        if (spec.distribution == AngleDistribution::Uniform) {
            RandomStream stream(spec.seed, to_string(role) + "/uniform", j);
            theta = arc.theta_min + span * stream.uniform();
        } else {
            double shift = 0.0;
            if (spec.beta > 0.0) {
                RandomStream stream(spec.seed, to_string(role) + "/beta", j);
                shift = spec.beta * stream.uniform();
            }
            theta = arc.theta_min + span / spec.count * (static_cast<double>(j) + shift);
        }
        set.angles[j] = theta;
        set.points[j] = polar(spec.radius, theta);
    }
    return set;
}

PointSet circle_points(double radius, int count, double beta, std::uint64_t seed,
                       std::optional<Arc> arc, PointRole role) {
    return make_point_set(PointSetSpec{radius, count, beta, seed, arc, AngleDistribution::Perturbed},
                          role);
}

PointSet uniform_circle_points(double radius, int count, std::uint64_t seed,
                               std::optional<Arc> arc, PointRole role) {
    return make_point_set(PointSetSpec{radius, count, 0.0, seed, arc, AngleDistribution::Uniform},
                          role);
}

}  // namespace lsm
