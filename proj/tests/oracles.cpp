/*
 * Copyright 2026 The rnncap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "oracles.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace rnncap_tests {

double oracle_spectral_norm(const rnncap::Matrix& m) {
  // Work on the version with at least as many rows as columns; the largest
  // singular value is transpose-invariant.
  rnncap::Matrix a = m.rows() >= m.cols() ? m : rnncap::transpose(m);
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  const double eps = 1e-14;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (std::fabs(apq) <= eps * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double sign = tau >= 0.0 ? 1.0 : -1.0;
        const double t = sign / (std::fabs(tau) +
                                 std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double vp = a(i, p);
          const double vq = a(i, q);
          a(i, p) = c * vp - s * vq;
          a(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  double best = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < rows; ++i) sq += a(i, j) * a(i, j);
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double fa,
                double b, double fb, double fm, double whole, double tol,
                int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double oracle_integrate(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = simpson(a, fa, b, fb, fm);
  return adaptive(f, a, fa, b, fb, fm, whole, tol, 50);
}

namespace {

/// Signature of s - mu * g for the symmetric pencil (s, g) via an LDL^T
/// factorization: the count of negative pivots equals the count of
/// generalized eigenvalues below mu (Sylvester's law of inertia).
std::size_t negative_pivots(const std::vector<std::vector<double>>& s,
                            const std::vector<std::vector<double>>& g,
                            double mu) {
  const std::size_t k = s.size();
  std::vector<std::vector<double>> l(k, std::vector<double>(k, 0.0));
  std::vector<double> d(k, 0.0);
  std::size_t negatives = 0;
  for (std::size_t j = 0; j < k; ++j) {
    double dj = s[j][j] - mu * g[j][j];
    for (std::size_t r = 0; r < j; ++r) dj -= l[j][r] * l[j][r] * d[r];
    if (std::fabs(dj) < 1e-300) dj = 1e-300;  // jitter past exact breakdown
    d[j] = dj;
    if (dj < 0.0) ++negatives;
    for (std::size_t i = j + 1; i < k; ++i) {
      double v = s[i][j] - mu * g[i][j];
      for (std::size_t r = 0; r < j; ++r) v -= l[i][r] * l[j][r] * d[r];
      l[i][j] = v / dj;
    }
  }
  return negatives;
}

}  // namespace

double oracle_restricted_min_eigen(const std::vector<double>& q) {
  const std::size_t n = q.size();
  if (n < 2) throw std::invalid_argument("need at least two classes");
  const std::size_t k = n - 1;
  // Difference basis rows b_i = e_i - e_{i+1} span the complement of the
  // all-ones vector. With H = diag(q) - q q^T:
  //   S = B H B^T,  G = B B^T,
  // and the generalized eigenvalues of (S, G) are the eigenvalues of H
  // restricted to that subspace.
  const auto h = [&](std::size_t i, std::size_t j) {
    return (i == j ? q[i] : 0.0) - q[i] * q[j];
  };
  std::vector<std::vector<double>> s(k, std::vector<double>(k, 0.0));
  std::vector<std::vector<double>> g(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      s[i][j] = h(i, j) - h(i, j + 1) - h(i + 1, j) + h(i + 1, j + 1);
      g[i][j] = (i == j ? 2.0 : 0.0) +
                (i + 1 == j || j + 1 == i ? -1.0 : 0.0);
    }
  }
  double lo = 0.0;
  double hi = 0.0;
  for (double v : q) hi = std::max(hi, v);
  hi += 1e-12;
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (negative_pivots(s, g, mid) >= 1) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double oracle_geometric_closed(double x, std::uint64_t terms) {
  return (std::pow(x, static_cast<double>(terms)) - 1.0) / (x - 1.0);
}

double oracle_weighted_geometric_closed(double x, std::uint64_t terms) {
  const double tt = static_cast<double>(terms);
  const double xt = std::pow(x, tt);
  return (1.0 - (tt + 1.0) * xt + tt * xt * x) / ((1.0 - x) * (1.0 - x));
}

rnncap::NormProfile oracle_random_profile(rnncap::Rng& rng,
                                          bool with_entry_bound, double lo,
                                          double hi, std::size_t min_dim) {
  rnncap::NormProfile p;
  const std::uint64_t span = 7 - min_dim;
  p.d_x = min_dim + rng.next_below(span);
  p.d_h = min_dim + rng.next_below(span);
  p.d_y = min_dim + rng.next_below(span);
  p.rho_h = 1.0;
  p.B_x = rng.next_uniform(lo, hi);
  p.B_row = p.B_x;
  p.B_U = rng.next_uniform(lo, hi);
  p.B_V = rng.next_uniform(lo, hi);
  p.B_W = rng.next_uniform(lo, hi);
  p.M_U = p.B_U * rng.next_uniform(0.3, 1.0);
  p.M_V = p.B_V * rng.next_uniform(0.3, 1.0);
  p.M_W = p.B_W * rng.next_uniform(0.3, 1.0);
  p.B_x1 = rng.next_uniform(lo, hi);
  p.B_U1 = rng.next_uniform(lo, hi);
  p.B_V1 = rng.next_uniform(lo, hi);
  p.B_W1 = rng.next_uniform(lo, hi);
  p.entry_bound = with_entry_bound ? 1.0 : 0.0;
  p.validate();
  return p;
}

double oracle_sign_average(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n == 0 || n > 24) throw std::invalid_argument("need 1 <= n <= 24");
  const std::uint64_t patterns = std::uint64_t{1} << n;
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += ((mask >> i) & 1u) ? values[i] : -values[i];
    }
    total += std::fabs(sum);
  }
  return total / static_cast<double>(patterns) / static_cast<double>(n);
}

}  // namespace rnncap_tests
