#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// None of these call into the library code they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Random symmetric n x n table with zero diagonal, entries in [0,1] and the
/// largest off-diagonal entry exactly 1.
inline std::vector<double> random_normalized_table(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> d(n * n, 0.0);
  double mx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i * n + j] = d[j * n + i] = u(rng);
      mx = std::max(mx, d[i * n + j]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) d[i * n + j] = d[i * n + j] == mx ? 1.0 : d[i * n + j] / mx;
    }
  }
  return d;
}

/// Designer score by literal evaluation of each case of the piecewise rule,
/// 1-based positions, summed left to right.
inline double direct_score(const std::vector<double>& d, std::size_t n, const std::vector<std::size_t>& perm) {
  const std::size_t T = perm.size();
  auto M = [&](std::size_t i, std::size_t j) { return d[perm[i - 1] * n + perm[j - 1]]; };
  double s = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    double v;
    if (t == 1) {
      double mean = 0.0;
      for (std::size_t j = 2; j <= T; ++j) mean += M(1, j);
      mean /= static_cast<double>(T - 1);
      double var = 0.0;
      for (std::size_t j = 2; j <= T; ++j) var += (M(1, j) - mean) * (M(1, j) - mean);
      var /= static_cast<double>(T - 1);
      v = 1.0 - var;
    } else if (2 * t <= T) {
      v = M(t, t - 1);
    } else {
      v = 1.0 - M(t, T - t + 1);
    }
    s += v;
  }
  return s;
}

/// Adaptive Simpson integration.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13,
                        int depth = 60) {
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int d) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, d - 1) + rec(mid, hi, fmid, frm, fhi, right, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), depth);
}

/// Student-t density with `df` degrees of freedom.
inline double t_pdf(double x, double df) {
  const double logc = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * M_PI);
  return std::exp(logc - 0.5 * (df + 1.0) * std::log1p(x * x / df));
}

/// Two-sided p value by numerically integrating the density from 0 to |t|.
inline double t_two_sided_p_quadrature(double t, double df) {
  const double a = std::abs(t);
  if (a == 0.0) return 1.0;
  // split the range so each Simpson pass sees a smooth, well-scaled piece
  double inner = 0.0;
  const int pieces = 64;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a * i / pieces, hi = a * (i + 1) / pieces;
    inner += integrate([df](double x) { return t_pdf(x, df); }, lo, hi);
  }
  return std::clamp(1.0 - 2.0 * inner, 0.0, 1.0);
}

struct WelchReference {
  double t, df, p;
};

/// Welch statistic, Welch-Satterthwaite df and quadrature p, from scratch.
inline WelchReference welch_reference(const std::vector<double>& x, const std::vector<double>& y) {
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double e : v) s += e;
    return s / static_cast<double>(v.size());
  };
  auto var = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double e : v) s += (e - m) * (e - m);
    return s / static_cast<double>(v.size() - 1);
  };
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  const double a = var(x) / nx, b = var(y) / ny;
  const double t = (mean(x) - mean(y)) / std::sqrt(a + b);
  const double df = (a + b) * (a + b) / (a * a / (nx - 1) + b * b / (ny - 1));
  return {t, df, t_two_sided_p_quadrature(t, df)};
}

/// Pooled-variance Student statistic with quadrature p.
inline WelchReference pooled_reference(const std::vector<double>& x, const std::vector<double>& y) {
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  double mx = 0, my = 0;
  for (double e : x) mx += e;
  for (double e : y) my += e;
  mx /= nx;
  my /= ny;
  double ss = 0;
  for (double e : x) ss += (e - mx) * (e - mx);
  for (double e : y) ss += (e - my) * (e - my);
  const double df = nx + ny - 2;
  const double sp2 = ss / df;
  const double t = (mx - my) / std::sqrt(sp2 * (1 / nx + 1 / ny));
  return {t, df, t_two_sided_p_quadrature(t, df)};
}

/// Central finite-difference derivative of f at x along coordinate i.
template <typename F>
double central_difference(F&& f, std::vector<double> x, std::size_t i, double h = 1e-5) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

}  // namespace oracle
