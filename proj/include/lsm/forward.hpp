#pragma once

// Sound-soft forward scattering of point sources.
//
// The scattered field is represented as a single-layer potential
//   u^s(x) = int_{dD} phi(x, y) psi(y) ds(y)
// whose density solves S psi = -phi(., y_src) on the boundary. S is
// discretized by Nystrom's method on the periodic parametrization with the
// logarithmic kernel split of Kress (trigonometric weights R_j for the
// log part, trapezoid for the smooth remainder), which converges
// spectrally for smooth curves.
//
// Two independent references are provided alongside: the separable series
// solution for a circle and the small-obstacle point-scatterer model.

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lsm/geometry.hpp"
#include "lsm/specfun.hpp"

namespace lsm {

/// Condition estimate above which the boundary system is flagged resonant.
inline constexpr double kResonanceCondition = 1.0e10;
/// Sources closer than this many wavelengths to the boundary are rejected.
inline constexpr double kMinSourceClearance = 1.0e-3;
/// Near-boundary evaluation kicks in within this many node spacings.
inline constexpr double kNearBoundarySpacings = 3.0;
inline constexpr int kUpsampleFactor = 4;

/// phi(rows_i, cols_j) for all pairs. Throws SingularityError on coincident points.
Eigen::MatrixXcd green_matrix(const WaveContext& ctx, std::span<const Point> rows,
                              std::span<const Point> cols);

/// Discretized single-layer operator over one or more disjoint boundaries.
///
/// The stored matrix acts on weighted densities mu_q = w_q psi_q (w_q the
/// arc-length weights), which makes it symmetric: entry (p, q) is the
/// kernel phi(x_p, x_q) with the diagonal and log part replaced by their
/// Kress quadrature counterparts. An empty boundary list models free space.
class SingleLayerSystem {
public:
    SingleLayerSystem(std::vector<DiscretizedBoundary> boundaries, const WaveContext& ctx);

    const WaveContext& ctx() const { return ctx_; }
    const std::vector<DiscretizedBoundary>& boundaries() const { return boundaries_; }
    bool empty() const { return size_ == 0; }
    int size() const { return size_; }

    const Eigen::MatrixXcd& matrix() const { return matrix_; }
    /// 1-norm condition number estimate of the matrix.
    double condition_estimate() const { return condition_; }
    bool resonance_warning() const { return condition_ > kResonanceCondition; }

    const std::vector<Point>& nodes() const { return nodes_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    /// Weighted densities for one or many right-hand sides.
    Eigen::MatrixXcd solve_weighted(const Eigen::MatrixXcd& rhs) const;

    bool inside(Point p) const;
    double distance_to_boundary(Point p) const;
    /// Throws GeometryError when p lies inside a scatterer or within
    /// 1e-3 lambda of a boundary.
    void require_exterior(Point p) const;

private:
    WaveContext ctx_;
    std::vector<DiscretizedBoundary> boundaries_;
    int size_ = 0;
    std::vector<Point> nodes_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXcd matrix_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
    double condition_ = 1.0;
};

std::shared_ptr<const SingleLayerSystem> assemble_single_layer(const DiscretizedBoundary& boundary,
                                                               const WaveContext& ctx);
std::shared_ptr<const SingleLayerSystem> assemble_single_layer(
    std::vector<DiscretizedBoundary> boundaries, const WaveContext& ctx);

/// Scattered field of one point source, held as its boundary density.
struct ScatterSolution {
    std::shared_ptr<const SingleLayerSystem> system;
    Eigen::VectorXcd density;  // psi at the nodes, per unit arc length
    Point source;

    /// max_q |(S psi)_q + phi(x_q, source)|
    double boundary_residual() const;
};

ScatterSolution solve_point_source(std::shared_ptr<const SingleLayerSystem> system, Point y);

struct FieldEvaluation {
    Complex value;
    double error_estimate = 0.0;  // nonzero only for near-boundary evaluation
    bool upsampled = false;
    bool accuracy_warning = false;
};

FieldEvaluation evaluate_scattered_detailed(const ScatterSolution& solution, Point x);
Complex evaluate_scattered(const ScatterSolution& solution, Point x);

/// u(x, y) = phi(x, y) + u^s(x, y).
Complex total_field(std::shared_ptr<const SingleLayerSystem> system, Point x, Point y);

struct SeriesValue {
    Complex value;
    int truncation = 0;
    double tail = 0.0;  // magnitude of the last retained term
    bool truncation_warning = false;
};

/// Separable solution for a sound-soft circle of radius a about `center`:
/// u^s = -(i/4) sum_{|n|<=N} J_n(ka)/H_n(ka) H_n(k r_x) H_n(k r_y) e^{in(th_x - th_y)}.
/// N defaults to ceil(ka) + 20; the tail term must fall below 1e-12.
SeriesValue mie_scattered_circle(const WaveContext& ctx, double a, Point center, Point x, Point y,
                                 std::optional<int> truncation = std::nullopt);

/// Small sound-soft disks treated as point scatterers without multiple
/// scattering: u^s(x, y) = sum_l lambda_l phi(c_l, y) phi(x, c_l).
struct PointScattererConfig {
    std::vector<Point> centers;
    std::vector<double> radii;

    /// lambda_l = 4i / H^(1)_0(k r_l).
    std::vector<Complex> reflection(const WaveContext& ctx) const;
};

Complex point_scatterer_scattered(const PointScattererConfig& config, const WaveContext& ctx, Point x,
                                  Point y);

/// Batch access to scattered fields, the interface consumed by acquisition.
class ScatteringModel {
public:
    virtual ~ScatteringModel() = default;

    virtual const WaveContext& ctx() const = 0;
    virtual bool empty() const = 0;
    /// u^s(receivers_j, sources_l) as a receivers x sources matrix.
    virtual Eigen::MatrixXcd scattered(std::span<const Point> receivers,
                                       std::span<const Point> sources) const = 0;
    virtual void require_exterior(Point p) const = 0;
    /// True interior test, used for reconstruction metrics.
    virtual bool inside(Point p) const = 0;

    /// u(receivers_j, sources_l) = phi + u^s.
    Eigen::MatrixXcd total(std::span<const Point> receivers, std::span<const Point> sources) const;
};

class BoundaryIntegralModel final : public ScatteringModel {
public:
    explicit BoundaryIntegralModel(std::shared_ptr<const SingleLayerSystem> system);

    const WaveContext& ctx() const override { return system_->ctx(); }
    bool empty() const override { return system_->empty(); }
    Eigen::MatrixXcd scattered(std::span<const Point> receivers,
                               std::span<const Point> sources) const override;
    void require_exterior(Point p) const override { system_->require_exterior(p); }
    bool inside(Point p) const override { return system_->inside(p); }

    const SingleLayerSystem& system() const { return *system_; }

private:
    std::shared_ptr<const SingleLayerSystem> system_;
};

class PointScattererModel final : public ScatteringModel {
public:
    PointScattererModel(PointScattererConfig config, const WaveContext& ctx);

    const WaveContext& ctx() const override { return ctx_; }
    bool empty() const override { return config_.centers.empty(); }
    Eigen::MatrixXcd scattered(std::span<const Point> receivers,
                               std::span<const Point> sources) const override;
    void require_exterior(Point p) const override;
    bool inside(Point p) const override;

    const PointScattererConfig& config() const { return config_; }

private:
    PointScattererConfig config_;
    WaveContext ctx_;
    std::vector<Complex> reflection_;
};

}  // namespace lsm
