#pragma once

// Measurement matrices: near-field N, imaginary near-field I = N - conj(N),
// cross-correlation C of random point sources (first passive setup),
// empirical covariance C of a random source distribution (second passive
// setup), and additive noise with its exact spectral norm.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "lsm/forward.hpp"
#include "lsm/geometry.hpp"

namespace lsm {

enum class MatrixKind { NearField, ImaginaryNearField, CrossCorrelation, Covariance };

std::string to_string(MatrixKind kind);
/// Accepts the enum names and the short forms N, I, C, covariance.
MatrixKind parse_matrix_kind(const std::string& text);

struct Provenance {
    double k = 0.0;
    int sources = 0;             // L, zero for N and I
    double beta = 0.0;
    double source_radius = 0.0;
    double sigma_measure = 0.0;  // |Sigma|, length of the source curve
    int realizations = 0;        // M, covariance only
    std::uint64_t seed = 0;
    double noise_amplitude = 0.0;
    double delta = 0.0;          // ||C_delta - C||_2
};

struct FieldMatrix {
    Eigen::MatrixXcd entries;
    MatrixKind kind = MatrixKind::NearField;
    PointSet receivers;
    Provenance provenance;

    Eigen::Index size() const { return entries.rows(); }
};

/// phi(x_j, x_m) - conj(phi(x_j, x_m)) = 2i Im phi; the diagonal takes the
/// continuous limit 2i * J_0(0) / 4 = i/2.
Eigen::MatrixXcd imaginary_green_bracket(const WaveContext& ctx, const PointSet& receivers);

/// N_jm = u^s(x_j, x_m) for co-located sources and receivers.
FieldMatrix near_field_matrix(const PointSet& receivers, const ScatteringModel& model);

/// I = N - conj(N). Throws KindError unless n is a NearField matrix.
FieldMatrix imaginary_near_field_matrix(const FieldMatrix& n);

/// C_jm = (2ik|Sigma|/L) sum_l conj(u(x_j, z_l)) u(x_m, z_l) - [phi - conj(phi)]_jm.
FieldMatrix cross_correlation_matrix(const PointSet& receivers, const PointSet& sources,
                                     double sigma_measure, const ScatteringModel& model);

/// C_jm = 2ik <U(x_j) conj(U(x_m))>_M - [phi - conj(phi)]_jm, where each
/// realization U(x) = sum_l u(x, z_l) n_l draws n_l = a_l + i b_l with
/// a_l, b_l ~ N(0, |Sigma|/(2L)), so that E[n_l conj(n_l')] = (|Sigma|/L) delta_ll'.
/// Realization r uses the stream (seed, "realizations", r).
FieldMatrix covariance_matrix(const PointSet& receivers, const PointSet& sources,
                              double sigma_measure, int realizations, std::uint64_t seed,
                              const ScatteringModel& model);

/// The complex Gaussian draws used by covariance_matrix, L x M.
Eigen::MatrixXcd source_noise_samples(int sources, int realizations, double sigma_measure,
                                      std::uint64_t seed);

/// C_delta = C + E, E_jm = amplitude * max|C| * (g1 + i g2) / sqrt(2),
/// with delta = ||E||_2 recorded in the provenance. Row j draws from the
/// stream (seed, "noise", j).
FieldMatrix add_noise(const FieldMatrix& matrix, double amplitude, std::uint64_t seed);

/// The perturbation add_noise would draw for a J x J matrix with the given scale.
Eigen::MatrixXcd noise_perturbation(Eigen::Index size, double scale, std::uint64_t seed);

/// Row-major CSV: one header line "# key=value,..." followed by J lines of
/// 2J values re_1,im_1,...,re_J,im_J printed with 17 significant digits.
void write_field_matrix_csv(const FieldMatrix& matrix, std::ostream& out);
/// Reads entries, kind and provenance back; receivers are not stored.
FieldMatrix read_field_matrix_csv(std::istream& in);

/// Decimal with 17 significant digits, locale independent; shared by every CSV writer.
std::string format_number(double value);

}  // namespace lsm
