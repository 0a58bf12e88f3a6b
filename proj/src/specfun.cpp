#include "lsm/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "lsm/errors.hpp"

namespace lsm {

WaveContext::WaveContext(double k) : k_(k), lambda_(kTwoPi / k) {
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw DomainError("wavenumber must be positive and finite, got " + std::to_string(k));
    }
}

WaveContext WaveContext::from_wavelength(double lambda) {
    if (!(lambda > 0.0)) {
        throw DomainError("wavelength must be positive");
    }
    return WaveContext(kTwoPi / lambda);
}

namespace specfun {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kRescaleAbove = 1.0e200;
constexpr double kRescaleBy = 1.0e-200;

void check_domain(int n, double x) {
    if (n < 0 || n > kMaxOrder) {
        throw DomainError("Bessel order out of range [0, 60]: " + std::to_string(n));
    }
    if (!(x > 0.0) || x > kMaxArgument) {
        throw DomainError("Bessel argument out of range (0, 1e4]: " + std::to_string(x));
    }
}

// Starting order for Miller's downward recurrence; J_start / J_top is far
// below double precision for every (top, x) with x < 60.
int miller_start(int top, double x) {
    const double reach = std::max(static_cast<double>(top), x);
    int m = static_cast<int>(reach + 30.0 + 1.5 * std::sqrt(60.0 * reach));
    return m + (m % 2);
}

constexpr std::size_t kMillerCapacity = 200;

struct MillerTable {
    std::array<double, kMillerCapacity> f{};
    int m = 0;  // highest filled order
};

// J_0..J_m(x) by downward recurrence normalised with J_0 + 2 sum J_2k = 1.
// Entries far below J_0 may underflow to zero.
MillerTable miller_j(int top, double x) {
    MillerTable table;
    const int m = miller_start(top, x);
    table.m = m;
    auto& f = table.f;
    f[static_cast<std::size_t>(m)] = 1.0e-30;
    double sum = 0.0;
    const double two_over_x = 2.0 / x;
    for (int n = m; n >= 1; --n) {
        const auto un = static_cast<std::size_t>(n);
        f[un - 1] = n * two_over_x * f[un] - f[un + 1];
        if (n % 2 == 0) {
            sum += 2.0 * f[un];
        }
        if (std::abs(f[un - 1]) > kRescaleAbove) {
            for (std::size_t i = un - 1; i <= static_cast<std::size_t>(m); ++i) {
                f[i] *= kRescaleBy;
            }
            sum *= kRescaleBy;
        }
    }
    sum += f[0];
    for (int n = 0; n <= m; ++n) {
        f[static_cast<std::size_t>(n)] /= sum;
    }
    return table;
}

struct Pair {
    double j;
    double y;
};

// Hankel asymptotic expansion for orders 0 and 1, used for x >= 12.
Pair asymptotic_jy(int nu, double x) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0;
    double q = 0.0;
    double a = 1.0;  // a_k(nu) / x^k
    double prev = 1.0;
    for (int k = 1; k < 80; ++k) {
        const double odd = 2.0 * k - 1.0;
        a *= (mu - odd * odd) / (8.0 * k * x);
        const double mag = std::abs(a);
        if (mag > prev) {
            break;  // asymptotic series has started to diverge
        }
        // sign pattern: k=1 +Q, k=2 -P, k=3 -Q, k=4 +P, ...
        const int r = k % 4;
        if (r == 1) {
            q += a;
        } else if (r == 2) {
            p -= a;
        } else if (r == 3) {
            q -= a;
        } else {
            p += a;
        }
        if (mag < 1.0e-17) {
            break;
        }
        prev = mag;
    }
    const double chi = x - (0.5 * nu + 0.25) * kPi;
    const double c = std::cos(chi);
    const double s = std::sin(chi);
    const double amp = std::sqrt(2.0 / (kPi * x));
    return {amp * (p * c - q * s), amp * (p * s + q * c)};
}

struct YPair {
    double y0;
    double y1;
};

// Y_0 and Y_1 from Neumann series over Miller values J_0..J_m.
YPair neumann_y01(const MillerTable& table, double x) {
    const auto& j = table.f;
    const double log_term = std::log(0.5 * x) + kEulerGamma;
    double s0 = 0.0;
    double s1 = 0.0;
    const auto m = static_cast<std::size_t>(table.m);
    for (std::size_t k = 1; 2 * k + 1 <= m; ++k) {
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        s0 += sign * j[2 * k] / static_cast<double>(k);
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / static_cast<double>(k);
    }
    const double y0 = (2.0 / kPi) * (log_term * j[0] + 2.0 * s0);
    const double y1 = -(2.0 / kPi) * (j[0] / x - log_term * j[1] + s1);
    return {y0, y1};
}

}  // namespace

void bessel_jy_orders(int nmax, double x, double* j_out, double* y_out) {
    check_domain(nmax, x);
    double y0 = 0.0;
    double y1 = 0.0;
    if (x < kAsymptoticCrossover) {
        const auto table = miller_j(std::max(nmax, 1), x);
        std::copy_n(table.f.begin(), nmax + 1, j_out);
        const YPair y = neumann_y01(table, x);
        y0 = y.y0;
        y1 = y.y1;
    } else {
        const Pair order0 = asymptotic_jy(0, x);
        const Pair order1 = asymptotic_jy(1, x);
        y0 = order0.y;
        y1 = order1.y;
        j_out[0] = order0.j;
        if (nmax >= 1) {
            j_out[1] = order1.j;
        }
        // Upward recurrence is stable for J while n < x.
        const int up_to = std::min(nmax, static_cast<int>(x));
        for (int n = 1; n < up_to; ++n) {
            j_out[n + 1] = (2.0 * n / x) * j_out[n] - j_out[n - 1];
        }
        if (nmax > up_to) {
            const auto table = miller_j(nmax, x);
            for (int n = up_to + 1; n <= nmax; ++n) {
                j_out[n] = table.f[static_cast<std::size_t>(n)];
            }
        }
    }
    y_out[0] = y0;
    if (nmax >= 1) {
        y_out[1] = y1;
    }
    for (int n = 1; n < nmax; ++n) {
        y_out[n + 1] = (2.0 * n / x) * y_out[n] - y_out[n - 1];
    }
}

double bessel_j(int n, double x) {
    check_domain(n, x);
    std::array<double, kMaxOrder + 1> j{};
    std::array<double, kMaxOrder + 1> y{};
    bessel_jy_orders(n, x, j.data(), y.data());
    return j[static_cast<std::size_t>(n)];
}

double bessel_y(int n, double x) {
    check_domain(n, x);
    std::array<double, kMaxOrder + 1> j{};
    std::array<double, kMaxOrder + 1> y{};
    bessel_jy_orders(n, x, j.data(), y.data());
    return y[static_cast<std::size_t>(n)];
}

Complex hankel1(int n, double x) {
    check_domain(n, x);
    std::array<double, kMaxOrder + 1> j{};
    std::array<double, kMaxOrder + 1> y{};
    bessel_jy_orders(n, x, j.data(), y.data());
    const auto un = static_cast<std::size_t>(n);
    return {j[un], y[un]};
}

Complex hankel1_0(double x) {
    check_domain(0, x);
    if (x >= kAsymptoticCrossover) {
        const Pair p = asymptotic_jy(0, x);
        return {p.j, p.y};
    }
    // Miller recurrence carrying only the running sums needed for J_0 and the
    // Neumann series of Y_0; J_m(x) / J_0(x) < 1e-17 at the start order.
    int m = static_cast<int>(1.5 * x + 24.0);
    m += m % 2;
    const double two_over_x = 2.0 / x;
    double upper = 0.0;
    double current = 1.0e-30;
    double norm_sum = 0.0;
    double neumann = 0.0;
    for (int n = m; n >= 1; --n) {
        if (n % 2 == 0) {
            const int k = n / 2;
            norm_sum += 2.0 * current;
            neumann += ((k % 2 == 1) ? current : -current) / k;
        }
        const double lower = n * two_over_x * current - upper;
        upper = current;
        current = lower;
        if (std::abs(current) > kRescaleAbove) {
            current *= kRescaleBy;
            upper *= kRescaleBy;
            norm_sum *= kRescaleBy;
            neumann *= kRescaleBy;
        }
    }
    norm_sum += current;
    const double j0 = current / norm_sum;
    const double y0 = (2.0 / kPi) * ((std::log(0.5 * x) + kEulerGamma) * j0 + 2.0 * neumann / norm_sum);
    return {j0, y0};
}

}  // namespace specfun

Complex green2d(const WaveContext& ctx, Point x, Point y) {
    const double r = distance(x, y);
    if (r < kSingularDistance * ctx.lambda()) {
        throw SingularityError("green2d evaluated at coincident points");
    }
    return Complex(0.0, 0.25) * specfun::hankel1_0(ctx.k() * r);
}

}  // namespace lsm
