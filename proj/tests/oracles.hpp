#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library under test.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

/// Romberg integration over `panels` equal sub-intervals, each refined to order 2k.
inline double romberg(const std::function<double(double)>& f, double a, double b, int panels = 1000,
                      int levels = 8)
{
    double total = 0.0;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p)
    {
        const double lo = a + p * h, hi = lo + h;
        std::vector<std::vector<double>> r(levels, std::vector<double>(levels, 0.0));
        r[0][0] = 0.5 * (hi - lo) * (f(lo) + f(hi));
        for (int i = 1; i < levels; ++i)
        {
            const int n = 1 << (i - 1);
            const double step = (hi - lo) / (2 * n);
            double s = 0.0;
            for (int k = 0; k < n; ++k)
                s += f(lo + (2 * k + 1) * step);
            r[i][0] = 0.5 * r[i - 1][0] + step * s;
            double pow4 = 4.0;
            for (int j = 1; j <= i; ++j, pow4 *= 4.0)
                r[i][j] = r[i][j - 1] + (r[i][j - 1] - r[i - 1][j - 1]) / (pow4 - 1.0);
        }
        total += r[levels - 1][levels - 1];
    }
    return total;
}

/// Gauss-Legendre rule on [-R, R] in long double, Newton on the three-term recurrence.
struct LongRule
{
    std::vector<long double> x, w;
};

inline LongRule gauss_legendre_long(int n, long double half_width)
{
    LongRule r;
    r.x.resize(n);
    r.w.resize(n);
    const long double pi = 3.141592653589793238462643383279502884L;
    for (int i = 0; i < n; ++i)
    {
        long double z = std::cos(pi * (i + 0.75L) / (n + 0.5L));
        long double dp = 0.0L;
        for (int it = 0; it < 200; ++it)
        {
            long double p0 = 1.0L, p1 = z;
            for (int k = 2; k <= n; ++k)
            {
                const long double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0L);
            const long double dz = p1 / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-19L)
                break;
        }
        r.x[i] = -z * half_width;
        r.w[i] = 2.0L / ((1.0L - z * z) * dp * dp) * half_width;
    }
    return r;
}

/// Discrete Maxwellian exp(a1 + a2 v + a3 v^2) on a long-double rule by plain Newton.
inline std::array<long double, 3> maxwellian_params_long(const LongRule& g, long double rho,
                                                         long double m, long double E)
{
    const long double U = m / rho;
    const long double T = (2 * rho * E - m * m) / (3 * rho * rho);
    const long double pi = 3.141592653589793238462643383279502884L;
    std::array<long double, 3> a{std::log(rho / std::sqrt(2 * pi * T)) - U * U / (2 * T), U / T,
                                 -1.0L / (2 * T)};
    for (int it = 0; it < 100; ++it)
    {
        long double s[5] = {0, 0, 0, 0, 0};
        for (std::size_t k = 0; k < g.x.size(); ++k)
        {
            const long double v = g.x[k];
            const long double e = g.w[k] * std::exp(a[0] + a[1] * v + a[2] * v * v);
            long double vp = 1.0L;
            for (int j = 0; j < 5; ++j, vp *= v)
                s[j] += e * vp;
        }
        // residual for (rho, m, E) with E = <v^2/2 M> - <M>/(2 a3)
        const long double r0 = s[0] - rho, r1 = s[1] - m, r2 = 0.5L * s[2] - s[0] / (2 * a[2]) - E;
        long double J[3][3] = {{s[0], s[1], s[2]},
                               {s[1], s[2], s[3]},
                               {0.5L * s[2] - s[0] / (2 * a[2]), 0.5L * s[3] - s[1] / (2 * a[2]),
                                0.5L * s[4] - s[2] / (2 * a[2]) + s[0] / (2 * a[2] * a[2])}};
        // Cramer's rule
        auto det3 = [](long double M[3][3]) {
            return M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
                   - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
                   + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
        };
        const long double d = det3(J);
        const long double rhs[3] = {-r0, -r1, -r2};
        std::array<long double, 3> dx{};
        for (int c = 0; c < 3; ++c)
        {
            long double Mc[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    Mc[i][j] = j == c ? rhs[i] : J[i][j];
            dx[c] = det3(Mc) / d;
        }
        for (int c = 0; c < 3; ++c)
            a[c] += dx[c];
        if (std::fabs(dx[0]) + std::fabs(dx[1]) + std::fabs(dx[2]) < 1e-17L)
            break;
    }
    return a;
}

/// Star pressure of the Euler Riemann problem by bisection on the pressure function.
inline double riemann_star_pressure_bisection(double rl, double ul, double pl, double rr, double ur,
                                              double pr, double gamma)
{
    auto side = [gamma](double p, double rk, double pk) {
        const double ck = std::sqrt(gamma * pk / rk);
        if (p > pk)
        {
            const double A = 2.0 / ((gamma + 1.0) * rk);
            const double B = (gamma - 1.0) / (gamma + 1.0) * pk;
            return (p - pk) * std::sqrt(A / (p + B));
        }
        return 2.0 * ck / (gamma - 1.0) * (std::pow(p / pk, (gamma - 1.0) / (2.0 * gamma)) - 1.0);
    };
    auto f = [&](double p) { return side(p, rl, pl) + side(p, rr, pr) + (ur - ul); };
    double lo = 1e-14, hi = 10.0 * std::max(pl, pr);
    while (f(hi) < 0.0)
        hi *= 2.0;
    for (int i = 0; i < 400 && hi - lo > 1e-16 * hi; ++i)
    {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Sample mean and population variance of a vector.
inline std::pair<double, double> mean_var(const std::vector<double>& v)
{
    long double s = 0.0L, s2 = 0.0L;
    for (double x : v)
        s += x;
    const long double m = s / v.size();
    for (double x : v)
        s2 += (x - m) * (x - m);
    return {static_cast<double>(m), static_cast<double>(s2 / v.size())};
}

/// Population covariance.
inline double covariance(const std::vector<double>& a, const std::vector<double>& b)
{
    const double ma = mean_var(a).first, mb = mean_var(b).first;
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - ma) * (b[i] - mb);
    return static_cast<double>(s / a.size());
}

} // namespace oracle
