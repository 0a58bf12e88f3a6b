#pragma once

// Scatterer boundary curves, their periodic discretization, and the
// receiver/source point sets on circles and arcs.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lsm/types.hpp"

namespace lsm {

struct CircleShape {
    double radius = 1.0;
};

struct EllipseShape {
    double a = 1.5;  // semi-axis along the local x direction
    double b = 1.0;
};

/// The Colton-Kress kite (cos t + 0.65 cos 2t - 0.65, 1.5 sin t).
struct KiteShape {};

using Shape = std::variant<CircleShape, EllipseShape, KiteShape>;

/// Canonical kite parametrization at t.
Point canonical_kite(double t);

/// Smooth closed curve x(t) = center + scale * R(rotation) * canonical(t),
/// t in [0, 2 pi), traversed counter-clockwise.
class BoundaryCurve {
public:
    explicit BoundaryCurve(Shape shape, Point center = {}, double scale = 1.0,
                           double rotation = 0.0);

    const Shape& shape() const { return shape_; }
    Point center() const { return center_; }
    double scale() const { return scale_; }
    double rotation() const { return rotation_; }
    std::string kind_name() const;

    Point point(double t) const;
    Point derivative(double t) const;
    double speed(double t) const { return norm(derivative(t)); }

    /// Maximal diameter of the unscaled canonical curve.
    double canonical_diameter() const;
    double diameter() const { return scale_ * canonical_diameter(); }
    double perimeter() const;

    bool contains(Point p) const;
    /// Euclidean distance from p to the curve.
    double distance_to(Point p) const;

    BoundaryCurve with_placement(Point center, double scale) const;

private:
    Point canonical(double t) const;
    Point canonical_derivative(double t) const;
    Point to_world(Point local) const;
    Point rotate(Point v) const;

    Shape shape_;
    Point center_;
    double scale_;
    double rotation_;
};

/// Scale the canonical curve so its maximal diameter equals `size` and
/// move it to `center`.
BoundaryCurve place_scatterer(const BoundaryCurve& curve, Point center, double size);

/// Equispaced-parameter discretization with n nodes.
struct DiscretizedBoundary {
    BoundaryCurve curve;
    int n = 0;
    std::vector<double> params;   // t_q = 2 pi q / n
    std::vector<Point> nodes;     // x(t_q)
    std::vector<Point> normals;   // outward unit normals
    std::vector<double> speeds;   // |x'(t_q)|
    std::vector<double> weights;  // 2 pi / n * |x'(t_q)|, arc-length weights

    double total_weight() const;
    /// Largest distance between consecutive nodes.
    double max_spacing() const;
};

/// n must be even and >= 4.
DiscretizedBoundary discretize(const BoundaryCurve& curve, int n);

enum class PointRole { Receiver, DeterministicSource, RandomSource };

enum class AngleDistribution {
    Perturbed,  // theta_j = a + (b - a)/count * (j - 1 + beta_j), beta_j ~ U[0, beta]
    Uniform,    // theta_j ~ U[a, b) i.i.d.
};

struct Arc {
    double theta_min = 0.0;
    double theta_max = kTwoPi;
};

struct PointSetSpec {
    double radius = 1.0;
    int count = 1;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::optional<Arc> arc;
    AngleDistribution distribution = AngleDistribution::Perturbed;
};

struct PointSet {
    std::vector<Point> points;
    std::vector<double> angles;
    PointRole role = PointRole::Receiver;
    PointSetSpec generation;

    std::size_t size() const { return points.size(); }
    std::span<const Point> view() const { return points; }
};

std::string to_string(PointRole role);
std::string to_string(AngleDistribution d);

/// Points on the circle of given radius about the origin.
PointSet circle_points(double radius, int count, double beta, std::uint64_t seed,
                       std::optional<Arc> arc = std::nullopt,
                       PointRole role = PointRole::Receiver);

/// Points with i.i.d. uniform angles on the circle (or arc).
PointSet uniform_circle_points(double radius, int count, std::uint64_t seed,
                               std::optional<Arc> arc = std::nullopt,
                               PointRole role = PointRole::RandomSource);

PointSet make_point_set(const PointSetSpec& spec, PointRole role);

}  // namespace lsm
