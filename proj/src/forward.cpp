#include "lsm/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lsm/errors.hpp"
#include "lsm/parallel.hpp"

namespace lsm {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

// Kress weights R_d for the log-split, indexed by |i - j| mod N, N = 2n nodes.
std::vector<double> kress_log_weights(int node_count) {
    const int n = node_count / 2;
    std::vector<double> r(static_cast<std::size_t>(node_count));
    for (int d = 0; d < node_count; ++d) {
        const double t = kPi * d / n;
        double sum = 0.0;
        for (int m = 1; m < n; ++m) {
            sum += std::cos(m * t) / m;
        }
        const double nyquist = (d % 2 == 0) ? 1.0 : -1.0;
        r[static_cast<std::size_t>(d)] =
            -2.0 * kPi / n * sum - kPi / (static_cast<double>(n) * n) * nyquist;
    }
    return r;
}

// Self block in weighted-density form: entries R_d K1 (n/pi) + K2.
void fill_self_block(const DiscretizedBoundary& b, const WaveContext& ctx, Eigen::MatrixXcd& m,
                     int offset) {
    const int count = b.n;
    const int half = count / 2;
    const auto r = kress_log_weights(count);
    const double k = ctx.k();
    const Complex i_quarter(0.0, 0.25);
    const double inv_four_pi = 1.0 / (4.0 * kPi);
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t ui) {
        const int i = static_cast<int>(ui);
        for (int j = 0; j < count; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double rw = r[static_cast<std::size_t>(std::abs(i - j))] * half / kPi;
            Complex entry;
            if (i == j) {
                const double k2 = -kEulerGamma / (2.0 * kPi) -
                                  std::log(0.5 * k * b.speeds[ui]) / (2.0 * kPi);
                entry = rw * (-inv_four_pi) + Complex(k2, 0.25);
            } else {
                const double dist = distance(b.nodes[ui], b.nodes[uj]);
                const Complex h0 = specfun::hankel1_0(k * dist);
                const Complex kernel = i_quarter * h0;
                const double k1 = -inv_four_pi * h0.real();
                const double dt = b.params[ui] - b.params[uj];
                const double log_term = std::log(4.0 * std::pow(std::sin(0.5 * dt), 2));
                entry = rw * k1 + (kernel - k1 * log_term);
            }
            m(offset + i, offset + j) = entry;
        }
    });
}

// Trigonometric interpolation of nodal values onto factor * n equispaced parameters.
Eigen::VectorXcd trig_upsample(const Eigen::VectorXcd& values, int factor) {
    const auto n = static_cast<int>(values.size());
    const int half = n / 2;
    // DFT coefficients for modes -half..half (Nyquist split evenly).
    std::vector<Complex> coeff(static_cast<std::size_t>(n) + 1);
    for (int m = -half; m <= half; ++m) {
        Complex c = 0.0;
        for (int q = 0; q < n; ++q) {
            c += values(q) * std::polar(1.0, -kTwoPi * m * q / n);
        }
        c /= static_cast<double>(n);
        if (std::abs(m) == half) {
            c *= 0.5;
        }
        coeff[static_cast<std::size_t>(m + half)] = c;
    }
    const int fine = factor * n;
    Eigen::VectorXcd out(fine);
    for (int p = 0; p < fine; ++p) {
        Complex v = 0.0;
        const double t = kTwoPi * p / fine;
        for (int m = -half; m <= half; ++m) {
            v += coeff[static_cast<std::size_t>(m + half)] * std::polar(1.0, m * t);
        }
        out(p) = v;
    }
    return out;
}

// Single-layer potential with the densities trigonometrically refined.
Complex refined_potential(const SingleLayerSystem& system, const Eigen::VectorXcd& density, Point x,
                          int factor) {
    const WaveContext& ctx = system.ctx();
    Complex sum = 0.0;
    int offset = 0;
    for (const auto& b : system.boundaries()) {
        const Eigen::VectorXcd fine = trig_upsample(density.segment(offset, b.n), factor);
        const int count = factor * b.n;
        for (int p = 0; p < count; ++p) {
            const double t = kTwoPi * p / count;
            const double w = kTwoPi / count * b.curve.speed(t);
            sum += w * green2d(ctx, x, b.curve.point(t)) * fine(p);
        }
        offset += b.n;
    }
    return sum;
}

bool near_boundary(const SingleLayerSystem& system, Point x) {
    for (const auto& b : system.boundaries()) {
        const double threshold = kNearBoundarySpacings * b.max_spacing();
        for (const Point& node : b.nodes) {
            if (distance(node, x) < threshold) {
                return true;
            }
        }
    }
    return false;
}

FieldEvaluation evaluate_density(const SingleLayerSystem& system, const Eigen::VectorXcd& density,
                                 Point x) {
    FieldEvaluation out;
    if (system.empty()) {
        out.value = 0.0;
        return out;
    }
    if (!near_boundary(system, x)) {
        const auto& nodes = system.nodes();
        const auto& w = system.weights();
        Complex sum = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            const auto iq = static_cast<Eigen::Index>(q);
            sum += w(iq) * green2d(system.ctx(), x, nodes[q]) * density(iq);
        }
        out.value = sum;
        return out;
    }
    const Complex coarse = refined_potential(system, density, x, kUpsampleFactor / 2);
    const Complex fine = refined_potential(system, density, x, kUpsampleFactor);
    out.value = fine;
    out.upsampled = true;
    out.error_estimate = std::abs(fine - coarse);
    out.accuracy_warning = out.error_estimate > 1.0e-6 * std::max(std::abs(fine), 1.0e-300);
    return out;
}

}  // namespace

Eigen::MatrixXcd green_matrix(const WaveContext& ctx, std::span<const Point> rows,
                              std::span<const Point> cols) {
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(cols.size()));
    parallel_for(rows.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                green2d(ctx, rows[i], cols[j]);
        }
    });
    return out;
}

SingleLayerSystem::SingleLayerSystem(std::vector<DiscretizedBoundary> boundaries,
                                     const WaveContext& ctx)
    : ctx_(ctx), boundaries_(std::move(boundaries)) {
    for (const auto& b : boundaries_) {
        if (b.n < 32 || b.n % 2 != 0) {
            throw DomainError("single-layer assembly needs an even node count >= 32, got " +
                              std::to_string(b.n));
        }
        size_ += b.n;
    }
    nodes_.reserve(static_cast<std::size_t>(size_));
    weights_.resize(size_);
    for (const auto& b : boundaries_) {
        for (std::size_t q = 0; q < b.nodes.size(); ++q) {
            weights_(static_cast<Eigen::Index>(nodes_.size())) = b.weights[q];
            nodes_.push_back(b.nodes[q]);
        }
    }
    matrix_.resize(size_, size_);
    if (size_ == 0) {
        return;
    }
    int row_offset = 0;
    for (std::size_t p = 0; p < boundaries_.size(); ++p) {
        const auto& bp = boundaries_[p];
        fill_self_block(bp, ctx_, matrix_, row_offset);
        int col_offset = 0;
        for (std::size_t q = 0; q < boundaries_.size(); ++q) {
            const auto& bq = boundaries_[q];
            if (p != q) {
                matrix_.block(row_offset, col_offset, bp.n, bq.n) = green_matrix(ctx_, bp.nodes, bq.nodes);
            }
            col_offset += bq.n;
        }
        row_offset += bp.n;
    }
    lu_.compute(matrix_);
    const double rcond = lu_.rcond();
    condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXcd SingleLayerSystem::solve_weighted(const Eigen::MatrixXcd& rhs) const {
    if (empty()) {
        return Eigen::MatrixXcd::Zero(0, rhs.cols());
    }
    return lu_.solve(rhs);
}

bool SingleLayerSystem::inside(Point p) const {
    return std::any_of(boundaries_.begin(), boundaries_.end(),
                       [p](const DiscretizedBoundary& b) { return b.curve.contains(p); });
}

double SingleLayerSystem::distance_to_boundary(Point p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : boundaries_) {
        best = std::min(best, b.curve.distance_to(p));
    }
    return best;
}

void SingleLayerSystem::require_exterior(Point p) const {
    if (empty()) {
        return;
    }
    if (inside(p)) {
        throw GeometryError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                            ") lies inside a scatterer");
    }
    if (distance_to_boundary(p) < kMinSourceClearance * ctx_.lambda()) {
        throw GeometryError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                            ") lies within 1e-3 wavelengths of a scatterer boundary");
    }
}

std::shared_ptr<const SingleLayerSystem> assemble_single_layer(const DiscretizedBoundary& boundary,
                                                               const WaveContext& ctx) {
    return assemble_single_layer(std::vector<DiscretizedBoundary>{boundary}, ctx);
}

std::shared_ptr<const SingleLayerSystem> assemble_single_layer(
    std::vector<DiscretizedBoundary> boundaries, const WaveContext& ctx) {
    return std::make_shared<const SingleLayerSystem>(std::move(boundaries), ctx);
}

double ScatterSolution::boundary_residual() const {
    if (system->empty()) {
        return 0.0;
    }
    const Eigen::VectorXcd mu = system->weights().cast<Complex>().cwiseProduct(density);
    const std::vector<Point> src{source};
    const Eigen::VectorXcd incident = green_matrix(system->ctx(), system->nodes(), src).col(0);
    return (system->matrix() * mu + incident).cwiseAbs().maxCoeff();
}

ScatterSolution solve_point_source(std::shared_ptr<const SingleLayerSystem> system, Point y) {
    system->require_exterior(y);
    ScatterSolution out{system, Eigen::VectorXcd::Zero(system->size()), y};
    if (system->empty()) {
        return out;
    }
    const std::vector<Point> src{y};
    const Eigen::MatrixXcd rhs = -green_matrix(system->ctx(), system->nodes(), src);
    const Eigen::VectorXcd mu = system->solve_weighted(rhs).col(0);
    out.density = mu.cwiseQuotient(system->weights().cast<Complex>());
    return out;
}

FieldEvaluation evaluate_scattered_detailed(const ScatterSolution& solution, Point x) {
    solution.system->require_exterior(x);
    return evaluate_density(*solution.system, solution.density, x);
}

Complex evaluate_scattered(const ScatterSolution& solution, Point x) {
    return evaluate_scattered_detailed(solution, x).value;
}

Complex total_field(std::shared_ptr<const SingleLayerSystem> system, Point x, Point y) {
    const WaveContext ctx = system->ctx();
    const auto solution = solve_point_source(std::move(system), y);
    return green2d(ctx, x, y) + evaluate_scattered(solution, x);
}

SeriesValue mie_scattered_circle(const WaveContext& ctx, double a, Point center, Point x, Point y,
                                 std::optional<int> truncation) {
    const double k = ctx.k();
    const int order = truncation.value_or(static_cast<int>(std::ceil(k * a)) + 20);
    if (order > specfun::kMaxOrder) {
        throw DomainError("series truncation " + std::to_string(order) +
                          " exceeds the supported Bessel order cap of 60");
    }
    const Point px = x - center;
    const Point py = y - center;
    const double rx = norm(px);
    const double ry = norm(py);
    if (rx <= a || ry <= a) {
        throw GeometryError("series solution requires both points outside the circle");
    }
    const double dtheta = std::atan2(px.y, px.x) - std::atan2(py.y, py.x);
    std::vector<double> ja(static_cast<std::size_t>(order) + 1);
    std::vector<double> ya(ja.size());
    std::vector<double> jx(ja.size());
    std::vector<double> yx(ja.size());
    std::vector<double> jy(ja.size());
    std::vector<double> yy(ja.size());
    specfun::bessel_jy_orders(order, k * a, ja.data(), ya.data());
    specfun::bessel_jy_orders(order, k * rx, jx.data(), yx.data());
    specfun::bessel_jy_orders(order, k * ry, jy.data(), yy.data());
    Complex sum = 0.0;
    double last = 0.0;
    for (int n = 0; n <= order; ++n) {
        const auto un = static_cast<std::size_t>(n);
        const Complex ratio = ja[un] / Complex(ja[un], ya[un]);
        const Complex term = ratio * Complex(jx[un], yx[un]) * Complex(jy[un], yy[un]);
        const double weight = (n == 0) ? 1.0 : 2.0 * std::cos(n * dtheta);
        sum += weight * term;
        last = 2.0 * 0.25 * std::abs(term);
    }
    SeriesValue out;
    out.value = Complex(0.0, -0.25) * sum;
    out.truncation = order;
    out.tail = last;
    out.truncation_warning = last > 1.0e-12;
    return out;
}

std::vector<Complex> PointScattererConfig::reflection(const WaveContext& ctx) const {
    std::vector<Complex> out;
    out.reserve(radii.size());
    for (const double r : radii) {
        out.push_back(Complex(0.0, 4.0) / specfun::hankel1_0(ctx.k() * r));
    }
    return out;
}

Complex point_scatterer_scattered(const PointScattererConfig& config, const WaveContext& ctx, Point x,
                                  Point y) {
    if (config.centers.size() != config.radii.size()) {
        throw GeometryError("point-scatterer centers and radii differ in length");
    }
    const auto lambda = config.reflection(ctx);
    Complex sum = 0.0;
    for (std::size_t l = 0; l < config.centers.size(); ++l) {
        sum += lambda[l] * green2d(ctx, config.centers[l], y) * green2d(ctx, x, config.centers[l]);
    }
    return sum;
}

Eigen::MatrixXcd ScatteringModel::total(std::span<const Point> receivers,
                                        std::span<const Point> sources) const {
    return scattered(receivers, sources) + green_matrix(ctx(), receivers, sources);
}

BoundaryIntegralModel::BoundaryIntegralModel(std::shared_ptr<const SingleLayerSystem> system)
    : system_(std::move(system)) {}

Eigen::MatrixXcd BoundaryIntegralModel::scattered(std::span<const Point> receivers,
                                                  std::span<const Point> sources) const {
    const auto rows = static_cast<Eigen::Index>(receivers.size());
    const auto cols = static_cast<Eigen::Index>(sources.size());
    if (system_->empty()) {
        return Eigen::MatrixXcd::Zero(rows, cols);
    }
    for (const Point& p : sources) system_->require_exterior(p);
    for (const Point& p : receivers) system_->require_exterior(p);

    const auto& nodes = system_->nodes();
    const Eigen::MatrixXcd mu = system_->solve_weighted(-green_matrix(ctx(), nodes, sources));
    Eigen::MatrixXcd out = green_matrix(ctx(), receivers, nodes) * mu;
    for (std::size_t j = 0; j < receivers.size(); ++j) {
        if (!near_boundary(*system_, receivers[j])) {
            continue;
        }
        for (Eigen::Index l = 0; l < cols; ++l) {
            const Eigen::VectorXcd density = mu.col(l).cwiseQuotient(system_->weights().cast<Complex>());
            out(static_cast<Eigen::Index>(j), l) = evaluate_density(*system_, density, receivers[j]).value;
        }
    }
    return out;
}

PointScattererModel::PointScattererModel(PointScattererConfig config, const WaveContext& ctx)
    : config_(std::move(config)), ctx_(ctx), reflection_(config_.reflection(ctx)) {
    if (config_.centers.size() != config_.radii.size()) {
        throw GeometryError("point-scatterer centers and radii differ in length");
    }
}

Eigen::MatrixXcd PointScattererModel::scattered(std::span<const Point> receivers,
                                                std::span<const Point> sources) const {
    const auto rows = static_cast<Eigen::Index>(receivers.size());
    const auto cols = static_cast<Eigen::Index>(sources.size());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rows, cols);
    if (empty()) {
        return out;
    }
    const Eigen::MatrixXcd to_receivers = green_matrix(ctx_, receivers, config_.centers);
    const Eigen::MatrixXcd from_sources = green_matrix(ctx_, config_.centers, sources);
    const auto refl = Eigen::Map<const Eigen::VectorXcd>(reflection_.data(),
                                                         static_cast<Eigen::Index>(reflection_.size()));
    return to_receivers * refl.asDiagonal() * from_sources;
}

void PointScattererModel::require_exterior(Point p) const {
    for (std::size_t l = 0; l < config_.centers.size(); ++l) {
        if (distance(p, config_.centers[l]) <= config_.radii[l]) {
            throw GeometryError("point lies inside a point scatterer");
        }
    }
}

bool PointScattererModel::inside(Point p) const {
    for (std::size_t l = 0; l < config_.centers.size(); ++l) {
        if (distance(p, config_.centers[l]) < config_.radii[l]) {
            return true;
        }
    }
    return false;
}

}  // namespace lsm
