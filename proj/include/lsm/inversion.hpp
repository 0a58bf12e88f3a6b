#pragma once

// Linear sampling inversion: one SVD per measurement matrix, then for every
// probe point z a Tikhonov-filtered solution of C g_z = phi_z whose
// regularization parameter satisfies Morozov's discrepancy principle
// ||C g_z - phi_z|| = delta ||g_z||.

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lsm/acquisition.hpp"
#include "lsm/geometry.hpp"
#include "lsm/specfun.hpp"

namespace lsm {

struct SvdFactors {
    Eigen::MatrixXcd u;
    Eigen::VectorXd sigma;  // nonincreasing
    Eigen::MatrixXcd v;
    int sweeps = 0;

    Eigen::MatrixXcd reconstruct() const;
};

inline constexpr Eigen::Index kMaxSvdSize = 2048;
inline constexpr int kMaxJacobiSweeps = 60;

/// Full SVD A = U diag(sigma) V* of a square complex matrix by one-sided
/// (Hestenes) Jacobi rotations. Throws ConvergenceError after 60 sweeps.
SvdFactors svd(const Eigen::MatrixXcd& a);
SvdFactors svd(const FieldMatrix& matrix);

double spectral_norm(const Eigen::MatrixXcd& a);

/// Right-hand side a * phi(x_j, z) + b * conj(phi(x_j, z)); the default is
/// the plain phi_z.
struct RhsWeights {
    Complex direct{1.0, 0.0};
    Complex conjugate{0.0, 0.0};
};

Eigen::VectorXcd rhs_vector(const PointSet& receivers, Point z, const WaveContext& ctx,
                            const RhsWeights& weights = {});

/// Raised when the discrepancy equation has no positive root, e.g. when the
/// noise level exceeds what the data can explain.
class NoSignChangeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unique positive root of sum_j (a^2 - delta^2 s_j^2) / (a + s_j^2)^2 |b_j|^2
/// with b = U* phi_z, by bisection to relative tolerance 1e-12 starting from
/// [1e-30, a_hi], a_hi doubled until the sign changes.
double morozov_alpha(const SvdFactors& factors, const Eigen::VectorXcd& b, double delta);

struct TikhonovNorms {
    double g_norm = 0.0;
    double residual = 0.0;
};

/// ||g_z|| and ||C g_z - phi_z|| for the filter s / (alpha + s^2), evaluated
/// in the singular basis.
TikhonovNorms tikhonov_gnorm(const SvdFactors& factors, const Eigen::VectorXcd& phi_z, double alpha);

/// Coefficient form: b = U* phi_z already projected.
TikhonovNorms tikhonov_norms_projected(const Eigen::VectorXd& sigma, const Eigen::VectorXcd& b,
                                       double alpha);

/// The regularized solution itself, g = V diag(s / (alpha + s^2)) U* phi_z.
Eigen::VectorXcd tikhonov_solution(const SvdFactors& factors, const Eigen::VectorXcd& phi_z,
                                   double alpha);

enum class ProbeStatus : std::uint8_t { Ok, NoSignChange, Singular, Masked };

struct ProbeResult {
    Point z;
    double alpha = 0.0;
    double g_norm = 0.0;
    double residual = 0.0;
    ProbeStatus status = ProbeStatus::Ok;
};

/// Morozov-regularized probe. On NoSignChange the alpha -> infinity limit is
/// recorded (g_norm = 0, residual = ||phi_z||).
ProbeResult probe_point(const SvdFactors& factors, const Eigen::VectorXcd& phi_z, double delta,
                        Point z);

struct GridSpec {
    double x_min = -6.0;
    double x_max = 6.0;
    double y_min = -6.0;
    double y_max = 6.0;
    int nx = 100;
    int ny = 100;

    Point at(int ix, int iy) const;
    double dx() const { return nx > 1 ? (x_max - x_min) / (nx - 1) : 0.0; }
    double dy() const { return ny > 1 ? (y_max - y_min) / (ny - 1) : 0.0; }
};

/// Cell (ix, iy) is stored at iy * nx + ix; iy grows with y.
struct IndicatorMap {
    GridSpec grid;
    double mask_radius = 0.0;
    std::vector<double> values;      // ||g_z||, zero where masked out
    std::vector<double> reciprocal;  // 1/||g_z|| min-max normalised over the mask
    std::vector<std::uint8_t> mask;  // 1 where a probe succeeded inside the mask radius
    std::vector<ProbeResult> probes;
    double reciprocal_min = 0.0;     // before normalisation
    double reciprocal_max = 0.0;
    int failed_probes = 0;

    std::size_t index(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) +
               static_cast<std::size_t>(ix);
    }
};

/// One SVD of the matrix, then a Morozov probe per grid point with
/// |z| <= mask_radius. Requires delta > 0.
IndicatorMap indicator_map(const Eigen::MatrixXcd& matrix, const PointSet& receivers,
                           const GridSpec& grid, double delta, double mask_radius,
                           const WaveContext& ctx, const RhsWeights& weights = {});
IndicatorMap indicator_map(const FieldMatrix& matrix, const GridSpec& grid, double mask_radius,
                           const WaveContext& ctx, const RhsWeights& weights = {});
/// Variant reusing an existing factorization.
IndicatorMap indicator_map(const SvdFactors& factors, const PointSet& receivers, const GridSpec& grid,
                           double delta, double mask_radius, const WaveContext& ctx,
                           const RhsWeights& weights = {});

std::string to_string(ProbeStatus status);

}  // namespace lsm
