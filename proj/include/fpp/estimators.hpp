#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "fpp/lattice.hpp"

namespace fpp {

/// Straight-line fit y = exponent * x + intercept (on log scales for power
/// laws). `stderr_` is the slope's standard error.
struct FitResult {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double stderr_ = 0.0;
  int n_points = 0;

  /// Two-sided Student-t interval on the slope with n_points - 2 degrees of freedom.
  double half_width(double level = 0.95) const {
    const int dof = n_points - 2;
    if (dof < 1 || stderr_ == 0.0) return 0.0;
    boost::math::students_t t(dof);
    return boost::math::quantile(t, 0.5 + level / 2) * stderr_;
  }
  double ci_low(double level = 0.95) const { return exponent - half_width(level); }
  double ci_high(double level = 0.95) const { return exponent + half_width(level); }
  bool ci_excludes(double v, double level = 0.95) const { return v < ci_low(level) || v > ci_high(level); }
};

struct SampleSummary {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

inline SampleSummary summarize(const std::vector<double>& xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= double(xs.size());
  s.mean = m;
  if (xs.size() > 1) {
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= double(xs.size() - 1);
    s.stderr_ = std::sqrt(v / double(xs.size()));
  }
  return s;
}

namespace detail {

inline double clamp01(double r) { return std::clamp(r, 0.0, 1.0); }

/// Weighted least squares line. With unit weights this is ordinary least
/// squares and the slope error comes from the residual variance; with known
/// per-point errors the covariance is scaled up by the reduced chi-square
/// when that exceeds 1.
inline FitResult line_fit(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>* se = nullptr) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) throw Error("fit: at least 3 points required");
  std::vector<double> w(n, 1.0);
  if (se) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!((*se)[i] > 0.0)) throw Error("fit: standard errors must be positive");
      w[i] = 1.0 / ((*se)[i] * (*se)[i]);
    }
  }
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
    syy += w[i] * (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error("fit: x values must not all coincide");
  FitResult f;
  f.n_points = int(n);
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.exponent * x[i] + f.intercept);
    ssr += w[i] * r * r;
  }
  f.r_squared = syy > 0.0 ? clamp01(1.0 - ssr / syy) : 1.0;
  const double dof = double(n) - 2.0;
  if (se) f.stderr_ = std::sqrt(1.0 / sxx) * std::max(1.0, std::sqrt(ssr / dof));
  else f.stderr_ = std::sqrt(ssr / dof / sxx);
  return f;
}

}  // namespace detail

struct Point {
  double x = 0.0;
  double y = 0.0;
  double y_stderr = 0.0;
};

/// Least squares on (log x, log y).
inline FitResult fit_power_law(const std::vector<Point>& pts) {
  std::vector<double> lx, ly;
  for (const auto& p : pts) {
    if (!(p.x > 0.0) || !(p.y > 0.0)) throw Error("fit_power_law: inputs must be positive");
    lx.push_back(std::log(p.x));
    ly.push_back(std::log(p.y));
  }
  return detail::line_fit(lx, ly);
}

/// As fit_power_law, weighting each point by its standard error (delta method
/// on log y).
inline FitResult fit_power_law_weighted(const std::vector<Point>& pts) {
  std::vector<double> lx, ly, se;
  for (const auto& p : pts) {
    if (!(p.x > 0.0) || !(p.y > 0.0)) throw Error("fit_power_law: inputs must be positive");
    lx.push_back(std::log(p.x));
    ly.push_back(std::log(p.y));
    se.push_back(std::max(p.y_stderr / p.y, 1e-12));
  }
  return detail::line_fit(lx, ly, &se);
}

inline FitResult fit_linear(const std::vector<Point>& pts) {
  std::vector<double> x, y;
  for (const auto& p : pts) {
    x.push_back(p.x);
    y.push_back(p.y);
  }
  return detail::line_fit(x, y);
}

struct LogGrowthFit {
  FitResult log_fit;     // y = a log n + b
  FitResult linear_fit;  // y = a n + b
  bool log_preferred = false;
};

inline LogGrowthFit fit_log_growth(const std::vector<Point>& pts) {
  if (pts.size() < 4) throw Error("fit_log_growth: at least 4 scales required");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!(pts[i].x > 0.0)) throw Error("fit_log_growth: n must be positive");
    if (i >= 2) {
      const double r0 = pts[1].x / pts[0].x, r = pts[i].x / pts[i - 1].x;
      if (std::abs(r - r0) > 1e-9 * r0) throw Error("fit_log_growth: n grid must be geometric");
    }
  }
  if (!(pts[1].x > pts[0].x)) throw Error("fit_log_growth: n grid must increase");
  std::vector<double> lx, x, y;
  for (const auto& p : pts) {
    lx.push_back(std::log(p.x));
    x.push_back(p.x);
    y.push_back(p.y);
  }
  LogGrowthFit out;
  out.log_fit = detail::line_fit(lx, y);
  out.linear_fit = detail::line_fit(x, y);
  out.log_preferred = out.log_fit.r_squared > out.linear_fit.r_squared;
  return out;
}

/// mu_hat is the slope of mean a_{0,n} = mu n + c log n + d, fitted with the
/// per-n replicate errors; the log term absorbs the finite-size bias that
/// makes a_{0,n}/n at fixed n overestimate mu. The plain largest-n ratio and
/// a subadditivity diagnostic are reported alongside.
struct MuEstimate {
  double p = std::numeric_limits<double>::quiet_NaN();
  double mu_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<int> n_grid;
  bool exact = false;
  double ratio_at_nmax = 0.0;
  double ratio_stderr = 0.0;
  std::vector<double> ratio_means;
  bool still_decreasing = false;

  bool ci_contains(double v) const { return ci_low <= v && v <= ci_high; }
};

inline MuEstimate estimate_mu(const std::map<int, std::vector<double>>& samples, double p = std::numeric_limits<double>::quiet_NaN()) {
  if (samples.size() < 3) throw Error("estimate_mu: at least 3 distinct n required");
  for (const auto& [n, xs] : samples) {
    if (n < 1) throw Error("estimate_mu: n must be positive");
    if (xs.size() < 30) throw Error("estimate_mu: at least 30 replicates per n required");
  }
  MuEstimate out;
  out.p = p;
  std::vector<SampleSummary> ratio;
  for (const auto& [n, xs] : samples) {
    out.n_grid.push_back(n);
    std::vector<double> r;
    for (double a : xs) r.push_back(a / n);
    ratio.push_back(summarize(r));
    out.ratio_means.push_back(ratio.back().mean);
  }
  out.ratio_at_nmax = ratio.back().mean;
  out.ratio_stderr = ratio.back().stderr_;
  {
    const auto& a = ratio[ratio.size() - 2];
    const auto& b = ratio.back();
    out.still_decreasing = a.mean - b.mean > 2.0 * std::hypot(a.stderr_, b.stderr_);
  }

  const double first = samples.begin()->second.front() / samples.begin()->first;
  bool constant = true;
  for (const auto& [n, xs] : samples)
    for (double a : xs) constant = constant && a / n == first;
  if (constant) {
    out.exact = true;
    out.mu_hat = out.ci_low = out.ci_high = first;
    return out;
  }

  // Normal equations for the three-parameter weighted fit.
  double A[3][3] = {}, rhs[3] = {};
  for (const auto& [n, xs] : samples) {
    const auto s = summarize(xs);
    const double se = std::max(s.stderr_, 0.5 / std::sqrt(double(xs.size())));
    const double w = 1.0 / (se * se);
    const double f[3] = {double(n), std::log(double(n)), 1.0};
    for (int i = 0; i < 3; ++i) {
      rhs[i] += w * f[i] * s.mean;
      for (int j = 0; j < 3; ++j) A[i][j] += w * f[i] * f[j];
    }
  }
  // Inverse via cofactors.
  const double det = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                     A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                     A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
  if (!(std::abs(det) > 0.0)) throw Error("estimate_mu: singular design");
  double inv[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      inv[i][j] = (A[r0][c0] * A[r1][c1] - A[r0][c1] * A[r1][c0]) / det;
    }
  double beta[3] = {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) beta[i] += inv[i][j] * rhs[j];
  const double se_mu = std::sqrt(std::max(inv[0][0], 0.0));
  out.mu_hat = beta[0];
  out.ci_low = beta[0] - 1.96 * se_mu;
  out.ci_high = beta[0] + 1.96 * se_mu;
  return out;
}

struct SlopeFit {
  FitResult fit;
  double censored_fraction = 0.0;
  bool degenerate = false;
  std::vector<Point> means;
};

/// Linear fit of mean log N_n against n; nullopt entries are overflowed
/// counts, excluded and reported as censoring.
inline SlopeFit subcritical_slope(const std::map<int, std::vector<std::optional<double>>>& samples) {
  if (samples.size() < 3) throw Error("subcritical_slope: at least 3 scales required");
  SlopeFit out;
  std::size_t total = 0, censored = 0;
  std::vector<double> x, y, se;
  bool all_zero = true, any_spread = false;
  for (const auto& [n, xs] : samples) {
    std::vector<double> exact;
    for (const auto& v : xs) {
      ++total;
      if (v) exact.push_back(*v);
      else ++censored;
    }
    if (exact.empty()) continue;
    const auto s = summarize(exact);
    for (double v : exact) all_zero = all_zero && v == 0.0;
    any_spread = any_spread || s.stderr_ > 0.0;
    x.push_back(n);
    y.push_back(s.mean);
    se.push_back(s.stderr_);
    out.means.push_back({double(n), s.mean, s.stderr_});
  }
  if (x.empty()) throw Error("subcritical_slope: every count overflowed");
  if (x.size() < 3) throw Error("subcritical_slope: fewer than 3 scales with exact counts");
  out.censored_fraction = double(censored) / double(total);
  if (all_zero) {
    out.degenerate = true;
    out.fit.n_points = int(x.size());
    out.fit.r_squared = 1.0;
    return out;
  }
  if (any_spread) {
    const double floor = 1e-9 + *std::max_element(se.begin(), se.end()) * 1e-3;
    for (double& s : se) s = std::max(s, floor);
    out.fit = detail::line_fit(x, y, &se);
  } else {
    out.fit = detail::line_fit(x, y);
  }
  return out;
}

inline SlopeFit subcritical_slope(const std::map<int, std::vector<double>>& samples) {
  std::map<int, std::vector<std::optional<double>>> m;
  for (const auto& [n, xs] : samples) m[n] = {xs.begin(), xs.end()};
  return subcritical_slope(m);
}

struct DivergenceTable {
  std::vector<std::pair<double, double>> rows;  // (p, slope)
  bool increasing = false;
};

inline DivergenceTable slope_divergence_sweep(const std::vector<double>& p_grid, const std::vector<double>& slopes) {
  if (p_grid.size() != slopes.size() || p_grid.empty())
    throw Error("slope_divergence_sweep: one slope per p required");
  DivergenceTable t;
  t.increasing = p_grid.size() >= 2;
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (i > 0 && !(p_grid[i] > p_grid[i - 1])) throw Error("slope_divergence_sweep: p grid must increase");
    if (i > 0 && !(slopes[i] > slopes[i - 1])) t.increasing = false;
    t.rows.emplace_back(p_grid[i], slopes[i]);
  }
  return t;
}

}  // namespace fpp
