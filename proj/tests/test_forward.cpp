#include <gtest/gtest.h>

#include <cmath>

#include "lsm/errors.hpp"
#include "lsm/forward.hpp"

using namespace lsm;

namespace {

const WaveContext kCtx(kTwoPi);

std::shared_ptr<const SingleLayerSystem> circle_system(double radius, int n, Point center = {}) {
    return assemble_single_layer(discretize(BoundaryCurve(CircleShape{radius}, center), n), kCtx);
}

std::shared_ptr<const SingleLayerSystem> kite_system(int n = 256) {
    return assemble_single_layer(discretize(place_scatterer(BoundaryCurve(KiteShape{}), {2, 2}, 0.5), n), kCtx);
}

}  // namespace

TEST(Nystrom, MatchesSeriesOnQuarterWavelengthCircle) {
    const auto sys = circle_system(0.25, 256);
    const Point y{5.0, 0.0};
    const auto sol = solve_point_source(sys, y);
    for (int j = 0; j < 16; ++j) {
        const Point x = polar(5.0, kTwoPi * (j + 0.5) / 16);
        const Complex exact = mie_scattered_circle(kCtx, 0.25, {}, x, y).value;
        EXPECT_LT(std::abs(evaluate_scattered(sol, x) - exact), 1e-10 * std::abs(exact));
    }
}

TEST(Nystrom, OffCenterCircleAndCloseObservation) {
    const Point c{1.0, -0.5};
    const auto sys = circle_system(0.8, 128, c);
    const Point y{-2.0, 1.0};
    const auto sol = solve_point_source(sys, y);
    for (const Point x : {Point{3.0, 0.0}, Point{1.0, 0.5}, Point{1.9, -0.5}}) {
        const Complex exact = mie_scattered_circle(kCtx, 0.8, c, x, y).value;
        EXPECT_LT(std::abs(evaluate_scattered(sol, x) - exact), 1e-7 * std::abs(exact)) << x.x << " " << x.y;
    }
}

TEST(Nystrom, ErrorDecaysSpectrallyOnLargerCircle) {
    const Point y{5.0, 1.0};
    const Point x{-4.0, 2.5};
    const Complex exact = mie_scattered_circle(kCtx, 2.0, {}, x, y).value;
    const double scale = std::abs(exact);
    double previous = 1.0;
    for (const int n : {32, 48, 64, 96}) {
        const double err =
            std::abs(evaluate_scattered(solve_point_source(circle_system(2.0, n), y), x) - exact) / scale;
        if (previous > 1e-10) {
            EXPECT_LT(err, previous / 10.0) << n;
        }
        previous = err;
    }
    EXPECT_LT(previous, 1e-10);
}

TEST(Nystrom, BoundaryResidualIsSmall) {
    const auto sol = solve_point_source(kite_system(), {4.0, 0.0});
    EXPECT_LT(sol.boundary_residual(), 1e-10);
}

TEST(Nystrom, MatrixIsSymmetric) {
    const auto sys = kite_system(64);
    const auto& m = sys->matrix();
    EXPECT_LT((m - m.transpose()).norm(), 1e-14 * m.norm());
}

TEST(Nystrom, TotalFieldVanishesOnBoundary) {
    const auto curve = place_scatterer(BoundaryCurve(KiteShape{}), {2, 2}, 0.5);
    const auto sys = kite_system();
    const Point y{-3.0, 1.0};
    for (const double t : {0.3, 2.0, 4.4}) {
        const Point p = curve.point(t);
        const Point d = curve.derivative(t);
        const Point n = (1.0 / norm(d)) * Point{d.y, -d.x};
        // Dirichlet data: u = O(h) at distance h off the boundary.
        const double far = std::abs(total_field(sys, p + 4e-3 * n, y));
        const double near = std::abs(total_field(sys, p + 2e-3 * n, y));
        EXPECT_NEAR(far / near, 2.0, 0.2) << t;
        EXPECT_LT(near, 0.1 * std::abs(green2d(kCtx, p, y))) << t;
    }
}

TEST(Nystrom, ReciprocityOnKite) {
    const auto sys = kite_system();
    const Point a{-4.0, 1.0};
    const Point b{3.0, -3.5};
    const Complex ab = evaluate_scattered(solve_point_source(sys, b), a);
    const Complex ba = evaluate_scattered(solve_point_source(sys, a), b);
    EXPECT_LT(std::abs(ab - ba), 1e-10 * std::abs(ab));
}

TEST(Nystrom, RadiatingDecay) {
    const auto sol = solve_point_source(kite_system(), {-3.0, 0.0});
    const double a = std::abs(evaluate_scattered(sol, polar(200.0, 0.7))) * std::sqrt(200.0);
    const double b = std::abs(evaluate_scattered(sol, polar(800.0, 0.7))) * std::sqrt(800.0);
    EXPECT_NEAR(a / b, 1.0, 1e-2);
}

TEST(Nystrom, ConditionFlagsInteriorResonance) {
    // k a at the first zero of J_0 makes the single-layer operator singular.
    const double j01 = 2.404825557695773;
    const auto resonant = assemble_single_layer(discretize(BoundaryCurve(CircleShape{j01 / kTwoPi}), 64), kCtx);
    EXPECT_TRUE(resonant->resonance_warning());
    const auto regular = circle_system(0.25, 64);
    EXPECT_FALSE(regular->resonance_warning());
    EXPECT_LT(regular->condition_estimate(), 1e4);
}

TEST(Nystrom, RejectsSmallOrOddDiscretizations) {
    EXPECT_THROW(circle_system(0.25, 16), DomainError);
    EXPECT_THROW(circle_system(0.25, 34 + 1), GeometryError);
}

TEST(Nystrom, RejectsInteriorSources) {
    const auto sys = kite_system(64);
    EXPECT_THROW(solve_point_source(sys, {2.0, 2.0}), GeometryError);
    EXPECT_THROW(sys->require_exterior({2.0, 2.0}), GeometryError);
    EXPECT_NO_THROW(sys->require_exterior({0.0, 0.0}));
}

TEST(Nystrom, NearBoundaryEvaluationIsUpsampled) {
    const auto sys = circle_system(0.25, 64);
    const Point y{3.0, 0.0};
    const auto sol = solve_point_source(sys, y);
    const Point x{0.0, 0.26};
    const auto e = evaluate_scattered_detailed(sol, x);
    EXPECT_TRUE(e.upsampled);
    const Complex exact = mie_scattered_circle(kCtx, 0.25, {}, x, y).value;
    EXPECT_LT(std::abs(e.value - exact), 1e-6 * std::abs(exact));
    EXPECT_FALSE(evaluate_scattered_detailed(sol, {4.0, 0.0}).upsampled);
}

TEST(Nystrom, EmptySystemMeansFreeSpace) {
    const auto empty = assemble_single_layer(std::vector<DiscretizedBoundary>{}, kCtx);
    EXPECT_TRUE(empty->empty());
    const Point x{1, 2};
    const Point y{-1, 0};
    EXPECT_EQ(total_field(empty, x, y), green2d(kCtx, x, y));
    BoundaryIntegralModel model(empty);
    const std::vector<Point> pts{x, y};
    EXPECT_EQ(model.scattered(pts, pts).norm(), 0.0);
}

TEST(Nystrom, TwoScatterersInteract) {
    std::vector<DiscretizedBoundary> parts{discretize(BoundaryCurve(CircleShape{0.25}, {-1, 0}), 64),
                                           discretize(BoundaryCurve(CircleShape{0.25}, {1, 0}), 64)};
    const auto both = assemble_single_layer(std::move(parts), kCtx);
    const Point y{0.0, 4.0};
    const Point x{0.0, -4.0};
    const Complex single = mie_scattered_circle(kCtx, 0.25, {-1, 0}, x, y).value +
                           mie_scattered_circle(kCtx, 0.25, {1, 0}, x, y).value;
    const Complex coupled = evaluate_scattered(solve_point_source(both, y), x);
    // Multiple scattering changes the answer, but only by a fraction.
    EXPECT_GT(std::abs(coupled - single), 1e-4 * std::abs(single));
    EXPECT_LT(std::abs(coupled - single), 0.5 * std::abs(single));
}

TEST(BatchModel, MatchesPointwiseEvaluation) {
    const auto sys = kite_system(128);
    BoundaryIntegralModel model(sys);
    const std::vector<Point> rx{{-4, 0}, {0, 4}, {2.0, 2.3}};
    const std::vector<Point> src{{5, 1}, {-3, -3}};
    const Eigen::MatrixXcd batch = model.scattered(rx, src);
    for (std::size_t j = 0; j < rx.size(); ++j) {
        for (std::size_t l = 0; l < src.size(); ++l) {
            const Complex ref = evaluate_scattered(solve_point_source(sys, src[l]), rx[j]);
            EXPECT_LT(std::abs(batch(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) - ref),
                      1e-10 * std::abs(ref));
        }
    }
}

TEST(Series, SymmetricAndSatisfiesBoundaryCondition) {
    const Point x{3.0, 1.0};
    const Point y{-2.0, 2.0};
    const auto a = mie_scattered_circle(kCtx, 0.5, {}, x, y);
    const auto b = mie_scattered_circle(kCtx, 0.5, {}, y, x);
    EXPECT_LT(std::abs(a.value - b.value), 1e-14);
    EXPECT_FALSE(a.truncation_warning);
    EXPECT_EQ(a.truncation, static_cast<int>(std::ceil(kTwoPi * 0.5)) + 20);
    for (const double t : {0.0, 1.0, 2.5}) {
        const Point p = polar(0.5 + 1e-12, t);
        EXPECT_LT(std::abs(mie_scattered_circle(kCtx, 0.5, {}, p, y).value + green2d(kCtx, p, y)), 1e-10);
    }
}

TEST(Series, TruncationChecks) {
    EXPECT_TRUE(mie_scattered_circle(kCtx, 0.5, {}, {3, 0}, {0, 3}, 2).truncation_warning);
    EXPECT_THROW(mie_scattered_circle(WaveContext(60.0), 1.0, {}, {3, 0}, {0, 3}), DomainError);
    EXPECT_THROW(mie_scattered_circle(kCtx, 0.5, {}, {0.1, 0}, {0, 3}), GeometryError);
}

TEST(PointScatterer, ReflectionScalesLikeInverseLog) {
    const PointScattererConfig c{{{0, 0}}, {1e-3}};
    const PointScattererConfig d{{{0, 0}}, {1e-6}};
    const double la = std::abs(c.reflection(kCtx)[0]);
    const double lb = std::abs(d.reflection(kCtx)[0]);
    // |lambda| ~ 2 pi / |log(k r)|.
    EXPECT_NEAR(la * std::abs(std::log(kCtx.k() * 1e-3)) / (lb * std::abs(std::log(kCtx.k() * 1e-6))), 1.0, 0.1);
    EXPECT_GT(la, lb);
}

TEST(PointScatterer, AgreesWithBoundarySolverForSmallDisk) {
    const double r = 0.01;
    const auto sys = circle_system(r, 64);
    const PointScattererConfig cfg{{{0, 0}}, {r}};
    for (const double t : {0.0, 1.0, 2.0, 3.0}) {
        const Point x = polar(5.0, t);
        const Point y = polar(5.0, t + 2.2);
        const Complex bem = evaluate_scattered(solve_point_source(sys, y), x);
        const Complex pt = point_scatterer_scattered(cfg, kCtx, x, y);
        EXPECT_LT(std::abs(pt - bem), 0.05 * std::abs(bem));
        EXPECT_LT(std::abs(pt - point_scatterer_scattered(cfg, kCtx, y, x)), 1e-14 * std::abs(pt));
    }
}

TEST(PointScatterer, ModelChecksGeometry) {
    PointScattererModel m(PointScattererConfig{{{1, 1}}, {0.01}}, kCtx);
    EXPECT_THROW(m.require_exterior({1.0, 1.005}), GeometryError);
    EXPECT_TRUE(m.inside({1.0, 1.005}));
    EXPECT_THROW(PointScattererModel(PointScattererConfig{{{1, 1}}, {}}, kCtx), GeometryError);
}
