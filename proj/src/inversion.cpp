#include "lsm/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lsm/errors.hpp"
#include "lsm/parallel.hpp"

namespace lsm {
namespace {

// Completes the columns flagged in `missing` to an orthonormal basis by
// Gram-Schmidt against the standard basis vectors.
void complete_basis(Eigen::MatrixXcd& u, const std::vector<bool>& missing) {
    const Eigen::Index n = u.rows();
    Eigen::Index candidate = 0;
    for (Eigen::Index col = 0; col < u.cols(); ++col) {
        if (!missing[static_cast<std::size_t>(col)]) {
            continue;
        }
        while (candidate < n) {
            Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
            e(candidate++) = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index other = 0; other < u.cols(); ++other) {
                    if (other == col || (missing[static_cast<std::size_t>(other)] && other > col)) {
                        continue;
                    }
                    e -= u.col(other).dot(e) * u.col(other);
                }
            }
            const double len = e.norm();
            if (len > 0.5) {
                u.col(col) = e / len;
                break;
            }
        }
    }
}

}  // namespace

Eigen::MatrixXcd SvdFactors::reconstruct() const {
    return u * sigma.cast<Complex>().asDiagonal() * v.adjoint();
}

SvdFactors svd(const Eigen::MatrixXcd& a) {
    if (a.rows() != a.cols()) {
        throw DomainError("svd expects a square matrix");
    }
    if (a.rows() > kMaxSvdSize) {
        throw DomainError("svd supports matrices up to 2048 x 2048");
    }
    const Eigen::Index n = a.rows();
    Eigen::MatrixXcd w = a;
    Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(n, n);
    const double tol = std::numeric_limits<double>::epsilon() * std::max<double>(1.0, static_cast<double>(n));

    int sweep = 0;
    bool rotated = true;
    while (rotated) {
        if (sweep >= kMaxJacobiSweeps) {
            throw ConvergenceError("one-sided Jacobi SVD did not converge in 60 sweeps");
        }
        ++sweep;
        rotated = false;
        for (Eigen::Index i = 0; i < n - 1; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double alpha = w.col(i).squaredNorm();
                const double beta = w.col(j).squaredNorm();
                const Complex gamma = w.col(i).dot(w.col(j));  // w_i^* w_j
                const double g = std::abs(gamma);
                if (g == 0.0 || g <= tol * std::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const Complex phase = gamma / g;
                const double zeta = (beta - alpha) / (2.0 * g);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                // [w_i, w_j] <- [w_i, w_j] [[c, s e], [-s conj(e), c]]
                const Eigen::VectorXcd wi = w.col(i);
                w.col(i) = c * wi - (s * std::conj(phase)) * w.col(j);
                w.col(j) = (s * phase) * wi + c * w.col(j);
                const Eigen::VectorXcd vi = v.col(i);
                v.col(i) = c * vi - (s * std::conj(phase)) * v.col(j);
                v.col(j) = (s * phase) * vi + c * v.col(j);
            }
        }
    }

    Eigen::VectorXd norms(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        norms(j) = w.col(j).norm();
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index l, Eigen::Index r) { return norms(l) > norms(r); });

    SvdFactors out;
    out.sweeps = sweep;
    out.sigma.resize(n);
    out.u.resize(n, n);
    out.v.resize(n, n);
    std::vector<bool> missing(static_cast<std::size_t>(n), false);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.sigma(k) = norms(src);
        out.v.col(k) = v.col(src);
        if (norms(src) > std::numeric_limits<double>::min()) {
            out.u.col(k) = w.col(src) / norms(src);
        } else {
            out.sigma(k) = 0.0;
            out.u.col(k).setZero();
            missing[static_cast<std::size_t>(k)] = true;
        }
    }
    complete_basis(out.u, missing);
    return out;
}

SvdFactors svd(const FieldMatrix& matrix) { return svd(matrix.entries); }

double spectral_norm(const Eigen::MatrixXcd& a) {
    if (a.size() == 0) {
        return 0.0;
    }
    return svd(a).sigma(0);
}

Eigen::VectorXcd rhs_vector(const PointSet& receivers, Point z, const WaveContext& ctx,
                            const RhsWeights& weights) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(receivers.size()));
    for (std::size_t j = 0; j < receivers.size(); ++j) {
        const Complex phi = green2d(ctx, receivers.points[j], z);
        out(static_cast<Eigen::Index>(j)) = weights.direct * phi + weights.conjugate * std::conj(phi);
    }
    return out;
}

namespace {

double discrepancy(const Eigen::VectorXd& sigma, const Eigen::VectorXd& b2, double alpha, double delta) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < sigma.size(); ++j) {
        const double s2 = sigma(j) * sigma(j);
        const double denom = alpha + s2;
        sum += (alpha * alpha - delta * delta * s2) / (denom * denom) * b2(j);
    }
    return sum;
}

}  // namespace

double morozov_alpha(const SvdFactors& factors, const Eigen::VectorXcd& b, double delta) {
    if (!(delta > 0.0)) {
        throw DomainError("Morozov parameter choice requires delta > 0");
    }
    const Eigen::VectorXd b2 = b.cwiseAbs2();
    if (b2.maxCoeff() <= 0.0) {
        throw NoSignChangeError("right-hand side has no component in the data space");
    }
    double lo = 1.0e-30;
    if (discrepancy(factors.sigma, b2, lo, delta) >= 0.0) {
        throw NoSignChangeError("noise exceeds signal: discrepancy is nonnegative at alpha = 1e-30");
    }
    double hi = 1.0;
    for (int it = 0; discrepancy(factors.sigma, b2, hi, delta) <= 0.0; ++it) {
        if (it > 2000) {
            throw NoSignChangeError("discrepancy stays negative as alpha grows");
        }
        lo = std::max(lo, hi);
        hi *= 2.0;
    }
    // Bisection on log(alpha) until the bracket is relatively tight.
    while (hi / lo - 1.0 > 1.0e-12) {
        const double mid = (hi / lo > 4.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (discrepancy(factors.sigma, b2, mid, delta) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

TikhonovNorms tikhonov_norms_projected(const Eigen::VectorXd& sigma, const Eigen::VectorXcd& b,
                                       double alpha) {
    double g2 = 0.0;
    double r2 = 0.0;
    for (Eigen::Index j = 0; j < sigma.size(); ++j) {
        const double s = sigma(j);
        const double denom = alpha + s * s;
        const double bj2 = std::norm(b(j));
        g2 += (s / denom) * (s / denom) * bj2;
        r2 += (alpha / denom) * (alpha / denom) * bj2;
    }
    return {std::sqrt(g2), std::sqrt(r2)};
}

TikhonovNorms tikhonov_gnorm(const SvdFactors& factors, const Eigen::VectorXcd& phi_z, double alpha) {
    if (!(alpha > 0.0)) {
        throw DomainError("Tikhonov parameter must be positive");
    }
    return tikhonov_norms_projected(factors.sigma, factors.u.adjoint() * phi_z, alpha);
}

Eigen::VectorXcd tikhonov_solution(const SvdFactors& factors, const Eigen::VectorXcd& phi_z,
                                   double alpha) {
    Eigen::VectorXcd coeff = factors.u.adjoint() * phi_z;
    for (Eigen::Index j = 0; j < coeff.size(); ++j) {
        const double s = factors.sigma(j);
        coeff(j) *= s / (alpha + s * s);
    }
    return factors.v * coeff;
}

ProbeResult probe_point(const SvdFactors& factors, const Eigen::VectorXcd& phi_z, double delta, Point z) {
    ProbeResult out;
    out.z = z;
    const Eigen::VectorXcd b = factors.u.adjoint() * phi_z;
    try {
        out.alpha = morozov_alpha(factors, b, delta);
    } catch (const NoSignChangeError&) {
        out.status = ProbeStatus::NoSignChange;
        out.alpha = std::numeric_limits<double>::infinity();
        out.g_norm = 0.0;
        out.residual = phi_z.norm();
        return out;
    }
    const auto norms = tikhonov_norms_projected(factors.sigma, b, out.alpha);
    out.g_norm = norms.g_norm;
    out.residual = norms.residual;
    return out;
}

Point GridSpec::at(int ix, int iy) const {
    return {x_min + ix * dx(), y_min + iy * dy()};
}

IndicatorMap indicator_map(const SvdFactors& factors, const PointSet& receivers, const GridSpec& grid,
                           double delta, double mask_radius, const WaveContext& ctx,
                           const RhsWeights& weights) {
    if (!(delta > 0.0)) {
        throw DomainError("indicator map requires a positive noise level delta");
    }
    if (grid.nx < 1 || grid.ny < 1) {
        throw DomainError("indicator grid needs at least one cell per axis");
    }
    IndicatorMap map;
    map.grid = grid;
    map.mask_radius = mask_radius;
    const std::size_t cells = static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);
    map.values.assign(cells, 0.0);
    map.reciprocal.assign(cells, 0.0);
    map.mask.assign(cells, 0);
    map.probes.resize(cells);

    parallel_for(cells, [&](std::size_t cell) {
        const int ix = static_cast<int>(cell % static_cast<std::size_t>(grid.nx));
        const int iy = static_cast<int>(cell / static_cast<std::size_t>(grid.nx));
        const Point z = grid.at(ix, iy);
        ProbeResult& probe = map.probes[cell];
        probe.z = z;
        if (norm(z) > mask_radius) {
            probe.status = ProbeStatus::Masked;
            return;
        }
        Eigen::VectorXcd phi;
        try {
            phi = rhs_vector(receivers, z, ctx, weights);
        } catch (const SingularityError&) {
            probe.status = ProbeStatus::Singular;
            return;
        }
        probe = probe_point(factors, phi, delta, z);
    });

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        const auto& p = map.probes[c];
        if (p.status == ProbeStatus::Ok && p.g_norm > 0.0) {
            map.mask[c] = 1;
            map.values[c] = p.g_norm;
            const double r = 1.0 / p.g_norm;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        } else if (p.status != ProbeStatus::Masked) {
            ++map.failed_probes;
        }
    }
    if (hi > 0.0) {
        map.reciprocal_min = lo;
        map.reciprocal_max = hi;
        const double span = hi - lo;
        for (std::size_t c = 0; c < cells; ++c) {
            if (map.mask[c]) {
                map.reciprocal[c] = span > 0.0 ? (1.0 / map.values[c] - lo) / span : 0.0;
            }
        }
    }
    return map;
}

IndicatorMap indicator_map(const Eigen::MatrixXcd& matrix, const PointSet& receivers,
                           const GridSpec& grid, double delta, double mask_radius,
                           const WaveContext& ctx, const RhsWeights& weights) {
    if (!(delta > 0.0)) {
        throw DomainError("indicator map requires a positive noise level delta");
    }
    return indicator_map(svd(matrix), receivers, grid, delta, mask_radius, ctx, weights);
}

IndicatorMap indicator_map(const FieldMatrix& matrix, const GridSpec& grid, double mask_radius,
                           const WaveContext& ctx, const RhsWeights& weights) {
    return indicator_map(matrix.entries, matrix.receivers, grid, matrix.provenance.delta, mask_radius,
                         ctx, weights);
}

std::string to_string(ProbeStatus status) {
    switch (status) {
        case ProbeStatus::Ok: return "ok";
        case ProbeStatus::NoSignChange: return "no-sign-change";
        case ProbeStatus::Singular: return "singular";
        case ProbeStatus::Masked: return "masked";
    }
    return "unknown";
}

}  // namespace lsm
