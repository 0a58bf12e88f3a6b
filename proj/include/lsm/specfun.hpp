#pragma once

// Integer-order Bessel functions of real argument and the 2D Helmholtz
// fundamental solution.

#include "lsm/types.hpp"

namespace lsm {

/// Wavenumber k together with its wavelength 2*pi/k.
class WaveContext {
public:
    explicit WaveContext(double k);

    static WaveContext from_wavelength(double lambda);

    double k() const { return k_; }
    double lambda() const { return lambda_; }

private:
    double k_;
    double lambda_;
};

namespace specfun {

inline constexpr int kMaxOrder = 60;
inline constexpr double kMaxArgument = 1.0e4;
/// Series / Miller recurrence below, Hankel asymptotic expansion at or above.
inline constexpr double kAsymptoticCrossover = 12.0;

/// J_n(x) for 0 <= n <= 60 and 0 < x <= 1e4. Throws DomainError otherwise.
double bessel_j(int n, double x);

/// Y_n(x), same domain as bessel_j. Diverges like (2/pi) log(x) as x -> 0+;
/// finite large negative values are returned for tiny x.
double bessel_y(int n, double x);

/// H^(1)_n(x) = J_n(x) + i Y_n(x).
Complex hankel1(int n, double x);

/// H^(1)_0(x) without the order bookkeeping; the hot path of every kernel.
Complex hankel1_0(double x);

/// J_0..J_nmax and Y_0..Y_nmax in one pass (out arrays of size nmax + 1).
void bessel_jy_orders(int nmax, double x, double* j_out, double* y_out);

}  // namespace specfun

/// Distance below which green2d refuses to evaluate, in wavelengths.
inline constexpr double kSingularDistance = 1.0e-14;

/// phi(x, y) = (i/4) H^(1)_0(k |x - y|). Throws SingularityError when
/// |x - y| < 1e-14 * lambda.
Complex green2d(const WaveContext& ctx, Point x, Point y);

}  // namespace lsm
