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

#include "rnncap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "rnncap/matrix.hpp"
#include "rnncap/util.hpp"

namespace rnncap {

namespace {

constexpr double kSpectralSlack = 1e-8;

/// log(arg) floored at zero for arg <= 1, with a note when the floor was
/// applied. Negative log terms would silently shrink a bound below its
/// dominant factor, so they are reported instead.
double clamped_log(double arg, bool* clamped) {
  if (arg <= 1.0) {
    if (clamped != nullptr) *clamped = true;
    return 0.0;
  }
  return std::log(arg);
}

/// sum_{j=0}^{terms-1} x^j, accumulated term by term so x = 1 is exact.
double geometric_sum(double x, std::uint64_t terms) {
  double acc = 0.0;
  double power = 1.0;
  for (std::uint64_t j = 0; j < terms; ++j) {
    acc += power;
    power *= x;
  }
  return acc;
}

/// sum_{j=0}^{terms-1} (j+1) x^j, accumulated term by term.
double weighted_geometric_sum(double x, std::uint64_t terms) {
  double acc = 0.0;
  double power = 1.0;
  for (std::uint64_t j = 0; j < terms; ++j) {
    acc += static_cast<double>(j + 1) * power;
    power *= x;
  }
  return acc;
}

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

void require_horizon(std::uint64_t t) {
  require(t >= 1, "horizon t must be at least 1");
}

void require_samples(std::uint64_t n) {
  require(n >= 1, "sample count n must be at least 1");
}

}  // namespace

std::size_t NormProfile::d() const { return std::max({d_x, d_h, d_y}); }

double NormProfile::d_prime() const {
  return std::sqrt(static_cast<double>(d_x * d_h + d_h * d_h + d_h * d_y));
}

void NormProfile::validate() const {
  require(d_x >= 1 && d_h >= 1 && d_y >= 1,
          "profile dimensions must be positive");
  const double entries[] = {rho_h, B_x, B_row, B_U,  B_V,  B_W,
                            M_U,   M_V, M_W,   B_x1, B_U1, B_V1,
                            B_W1,  entry_bound};
  for (double v : entries) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("profile entries must be nonnegative");
    }
  }
  require(M_U <= B_U + kSpectralSlack, "spectral norm of U exceeds Frobenius");
  require(M_V <= B_V + kSpectralSlack, "spectral norm of V exceeds Frobenius");
  require(M_W <= B_W + kSpectralSlack, "spectral norm of W exceeds Frobenius");
}

NormProfile NormProfile::normalized() const {
  NormProfile out = *this;
  out.validate();
  out.M_U = std::min(out.M_U, out.B_U);
  out.M_V = std::min(out.M_V, out.B_V);
  out.M_W = std::min(out.M_W, out.B_W);
  return out;
}

std::uint64_t NormProfile::hash() const {
  const std::uint64_t dims[3] = {d_x, d_h, d_y};
  std::uint64_t h = fnv1a(dims, sizeof(dims));
  const double entries[] = {rho_h, B_x, B_row, B_U,  B_V,  B_W,
                            M_U,   M_V, M_W,   B_x1, B_U1, B_V1,
                            B_W1,  entry_bound};
  h = fnv1a(entries, sizeof(entries), h);
  return h;
}

namespace {

nlohmann::json profile_to_json_object(const NormProfile& p) {
  nlohmann::json j;
  j["d_x"] = p.d_x;
  j["d_h"] = p.d_h;
  j["d_y"] = p.d_y;
  j["rho_h"] = p.rho_h;
  j["B_x"] = p.B_x;
  j["B_row"] = p.B_row;
  j["B_U"] = p.B_U;
  j["B_V"] = p.B_V;
  j["B_W"] = p.B_W;
  j["M_U"] = p.M_U;
  j["M_V"] = p.M_V;
  j["M_W"] = p.M_W;
  j["B_x1"] = p.B_x1;
  j["B_U1"] = p.B_U1;
  j["B_V1"] = p.B_V1;
  j["B_W1"] = p.B_W1;
  if (p.has_entry_bound()) j["b"] = p.entry_bound;
  return j;
}

NormProfile profile_from_json_object(const nlohmann::json& j) {
  NormProfile p;
  p.d_x = j.at("d_x").get<std::size_t>();
  p.d_h = j.at("d_h").get<std::size_t>();
  p.d_y = j.at("d_y").get<std::size_t>();
  p.rho_h = j.at("rho_h").get<double>();
  p.B_x = j.at("B_x").get<double>();
  p.B_row = j.at("B_row").get<double>();
  p.B_U = j.at("B_U").get<double>();
  p.B_V = j.at("B_V").get<double>();
  p.B_W = j.at("B_W").get<double>();
  p.M_U = j.at("M_U").get<double>();
  p.M_V = j.at("M_V").get<double>();
  p.M_W = j.at("M_W").get<double>();
  p.B_x1 = j.at("B_x1").get<double>();
  p.B_U1 = j.at("B_U1").get<double>();
  p.B_V1 = j.at("B_V1").get<double>();
  p.B_W1 = j.at("B_W1").get<double>();
  p.entry_bound = j.value("b", 0.0);
  p.validate();
  return p;
}

}  // namespace

std::string norm_profile_to_json(const NormProfile& p) {
  return profile_to_json_object(p).dump(2) + "\n";
}

NormProfile norm_profile_from_json_text(const std::string& text) {
  return profile_from_json_object(nlohmann::json::parse(text));
}

std::string ProfileRecord::resolved_activation() const {
  if (!activation.empty()) return activation;
  return profile.has_entry_bound() ? "tanh" : "relu";
}

std::string profile_record_to_json(const ProfileRecord& rec) {
  nlohmann::json j = profile_to_json_object(rec.profile);
  j["dataset"] = rec.dataset;
  j["activation"] = rec.resolved_activation();
  j["loss"] = rec.loss;
  j["gamma"] = rec.gamma;
  j["t"] = rec.t;
  j["n"] = rec.n;
  return j.dump(2) + "\n";
}

ProfileRecord profile_record_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ProfileRecord rec;
  rec.profile = profile_from_json_object(j);
  rec.dataset = j.value("dataset", std::string("unknown"));
  rec.activation = j.value("activation", std::string());
  rec.loss = j.value("loss", std::string("ramp"));
  rec.gamma = j.value("gamma", 1.0);
  rec.t = j.value("t", static_cast<std::uint64_t>(0));
  rec.n = j.value("n", static_cast<std::uint64_t>(0));
  return rec;
}

RecurrenceConstants recurrence_constants(const NormProfile& p,
                                         std::uint64_t t, NormFlavor flavor) {
  p.validate();
  require_horizon(t);
  const double u_norm = flavor == NormFlavor::kFrobenius ? p.B_U : p.M_U;
  const double x = p.rho_h * u_norm;
  RecurrenceConstants out;
  out.flavor = flavor == NormFlavor::kFrobenius ? ConstantsFlavor::kFrobenius
                                                : ConstantsFlavor::kSpectral;
  out.a = p.rho_h * p.B_x;
  out.c_t = geometric_sum(x, t);
  out.b_t = t >= 2 ? weighted_geometric_sum(x, t - 1) : 0.0;
  out.g_t = p.rho_h * p.B_x * p.B_V * p.B_W *
            std::max(out.c_t, p.rho_h * p.B_U * out.b_t);
  return out;
}

double g_star(const NormProfile& p, std::uint64_t t, std::uint64_t n) {
  p.validate();
  require_horizon(t);
  require_samples(n);
  require(p.has_entry_bound(),
          "the sharpened constant needs an activation entry bound");
  const RecurrenceConstants prime =
      recurrence_constants(p, t, NormFlavor::kSpectral);
  const double nd = static_cast<double>(n) * static_cast<double>(p.d());
  const double reach = std::min(p.entry_bound * std::sqrt(nd),
                                p.rho_h * p.B_x * p.B_W * prime.c_t);
  // c'_t >= 1 always (the j = 0 term), so the ratio is well defined.
  const double amplification =
      std::max(1.0, p.rho_h * p.B_U * prime.b_t / prime.c_t);
  return p.B_V * reach * amplification;
}

RecurrenceConstants star_constants(const NormProfile& p, std::uint64_t t,
                                   std::uint64_t n) {
  RecurrenceConstants out = recurrence_constants(p, t, NormFlavor::kSpectral);
  out.g_t = g_star(p, t, n);
  out.flavor = ConstantsFlavor::kStar;
  return out;
}

double covering_number_matrix(double lambda, std::size_t d1, std::size_t d2,
                              double eps) {
  require(lambda >= 0.0, "radius must be nonnegative");
  require(d1 >= 1 && d2 >= 1, "matrix dimensions must be positive");
  require(eps > 0.0, "resolution must be positive");
  const double cells = std::ceil(lambda * lambda *
                                 static_cast<double>(d1) *
                                 static_cast<double>(d2) / (eps * eps));
  return cells * std::log(2.0 * static_cast<double>(d1) *
                          static_cast<double>(d2));
}

double covering_number_class(const NormProfile& p, std::uint64_t t,
                             double eps, NormFlavor flavor) {
  require(eps > 0.0, "resolution must be positive");
  const RecurrenceConstants rc = recurrence_constants(p, t, flavor);
  const double dd = static_cast<double>(p.d());
  return 27.0 * dd * dd * rc.g_t * rc.g_t * std::log(2.0 * dd * dd) /
         (eps * eps);
}

double dudley_bound(double covering_coefficient, double output_radius,
                    std::uint64_t n, double alpha) {
  require(covering_coefficient >= 0.0,
          "covering coefficient must be nonnegative");
  require(output_radius > 0.0, "output radius must be positive");
  require_samples(n);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double upper = 2.0 * output_radius * sqrt_n;
  require(alpha > 0.0 && alpha < upper,
          "alpha must lie inside the entropy integral range");
  return 4.0 * alpha / sqrt_n +
         12.0 * std::sqrt(covering_coefficient) /
             static_cast<double>(n) * std::log(upper / alpha);
}

BoundValue rademacher_exact(const NormProfile& p, std::uint64_t t,
                            std::uint64_t n, double rho, NormFlavor flavor) {
  require(rho > 0.0, "loss Lipschitz constant must be positive");
  require_samples(n);
  const RecurrenceConstants rc = recurrence_constants(p, t, flavor);
  const double dd = static_cast<double>(p.d());
  const double nn = static_cast<double>(n);
  const double radius = rc.a * p.B_V * p.B_W * rc.c_t;
  const double coefficient =
      72.0 * rho * dd * rc.g_t / nn * std::sqrt(3.0 * std::log(2.0 * dd * dd));
  BoundValue out;
  bool clamped = false;
  const double log_term = clamped_log(2.0 * radius * nn, &clamped);
  out.value = 8.0 * rho / nn + coefficient * log_term;
  out.log_clamped = clamped && coefficient > 0.0;
  return out;
}

BoundValue bound1(const NormProfile& p, std::uint64_t t, std::uint64_t n) {
  p.validate();
  require_horizon(t);
  require_samples(n);
  const double lambda = weighted_geometric_sum(p.rho_h * p.B_U1, t);
  BoundValue out;
  out.value = p.B_x1 * p.B_W1 * p.B_V1 * lambda / static_cast<double>(n);
  return out;
}

namespace {

/// Frobenius-to-spectral ratio squared; a zero spectral norm forces a zero
/// matrix, so the ratio contributes nothing.
double norm_ratio_squared(double frobenius, double spectral,
                          const char* name) {
  if (spectral == 0.0) {
    if (frobenius > 0.0) {
      throw std::invalid_argument(
          std::string("profile has zero spectral norm with positive "
                      "Frobenius norm for ") +
          name);
    }
    return 0.0;
  }
  return frobenius * frobenius / (spectral * spectral);
}

}  // namespace

BoundValue bound2(const NormProfile& p, std::uint64_t t, std::uint64_t n) {
  p.validate();
  require_horizon(t);
  require_samples(n);
  const double dd = static_cast<double>(p.d());
  const double tt = static_cast<double>(t);
  BoundValue out;
  const double log_d = clamped_log(dd, &out.log_clamped);
  const double growth =
      std::max(std::pow(p.rho_h * p.M_U, static_cast<double>(t - 1)), 1.0);
  const double mixed =
      std::sqrt(tt * tt * p.B_U * p.B_U +
                norm_ratio_squared(p.B_W, p.M_W, "W") +
                norm_ratio_squared(p.B_V, p.M_V, "V"));
  out.value = p.B_row * tt * dd * std::sqrt(log_d) * growth * p.M_V * p.M_W *
              mixed / std::sqrt(static_cast<double>(n));
  if (out.value == 0.0) out.log_clamped = false;
  return out;
}

BoundValue bound3(const NormProfile& p, std::uint64_t t, std::uint64_t n) {
  p.validate();
  require_horizon(t);
  require_samples(n);
  require(p.has_entry_bound(), "bound3 needs an activation entry bound");
  const RecurrenceConstants prime =
      recurrence_constants(p, t, NormFlavor::kSpectral);
  const double dp = p.d_prime();
  BoundValue out;
  const double log_dp = clamped_log(dp, &out.log_clamped);
  const double reach = std::min(p.entry_bound * std::sqrt(dp),
                                p.B_row * p.M_W * prime.c_t);
  const double stack_norm = p.B_U + p.B_W + p.B_V;
  out.value = p.B_row * p.M_W * p.M_U * reach * prime.c_t * stack_norm *
              std::sqrt(dp * log_dp) / std::sqrt(static_cast<double>(n));
  if (out.value == 0.0) out.log_clamped = false;
  return out;
}

BoundValue bound4(const NormProfile& p, std::uint64_t t, std::uint64_t n) {
  p.validate();
  require_horizon(t);
  require_samples(n);
  const RecurrenceConstants prime =
      recurrence_constants(p, t, NormFlavor::kSpectral);
  const double dd = static_cast<double>(p.d());
  const double nn = static_cast<double>(n);
  BoundValue out;
  bool clamped = false;
  const double log_d = clamped_log(dd, &clamped);
  const double log_arg =
      p.rho_h * nn * p.B_x * p.B_V * p.B_W * prime.c_t;
  const double log_term = clamped_log(log_arg, &clamped);
  out.value = prime.g_t * dd * std::sqrt(log_d) * log_term / nn;
  out.log_clamped = clamped && prime.g_t > 0.0;
  return out;
}

BoundValue bound4_star(const NormProfile& p, std::uint64_t t,
                       std::uint64_t n) {
  p.validate();
  require_horizon(t);
  require_samples(n);
  require(p.has_entry_bound(), "bound4* needs an activation entry bound");
  const RecurrenceConstants prime =
      recurrence_constants(p, t, NormFlavor::kSpectral);
  const double dd = static_cast<double>(p.d());
  const double nn = static_cast<double>(n);
  const double star = g_star(p, t, n);
  BoundValue out;
  bool clamped = false;
  const double log_d = clamped_log(dd, &clamped);
  const double reach = std::min(p.entry_bound * std::sqrt(nn * dd),
                                p.rho_h * p.B_x * p.B_W * prime.c_t);
  const double log_term = clamped_log(nn * p.B_V * reach, &clamped);
  out.value = star * dd * std::sqrt(log_d) * log_term / nn;
  out.log_clamped = clamped && star > 0.0;
  return out;
}

GeneralizationBound generalization_bound(double empirical_risk,
                                         const NormProfile& p,
                                         std::uint64_t t, std::uint64_t n,
                                         double delta, const LossSpec& loss,
                                         double omega_t, NormFlavor flavor) {
  require(empirical_risk >= 0.0, "empirical risk must be nonnegative");
  require(delta > 0.0 && delta < 1.0, "delta must be in (0, 1)");
  require_samples(n);
  if (omega_t <= 0.0) {
    const RecurrenceConstants rc =
        recurrence_constants(p, t, NormFlavor::kFrobenius);
    omega_t = rc.a * p.B_V * p.B_W * rc.c_t;
  }
  const LossConstants lc = loss_constants(loss, omega_t);
  const BoundValue rad = rademacher_exact(p, t, n, lc.rho, flavor);
  GeneralizationBound out;
  out.rademacher = rad.value;
  out.log_clamped = rad.log_clamped;
  out.stochastic = 3.0 * lc.range_bound *
                   std::sqrt(std::log(2.0 / delta) /
                             (2.0 * static_cast<double>(n)));
  out.total = empirical_risk + 2.0 * rad.value + out.stochastic;
  return out;
}

double local_complexity_scale(const NormProfile& p, std::uint64_t t,
                              double c1, double alpha, NormFlavor flavor) {
  require(c1 > 1.0, "c1 must exceed 1");
  require(alpha > 0.0, "alpha must be positive");
  const RecurrenceConstants rc = recurrence_constants(p, t, flavor);
  const double dd = static_cast<double>(p.d());
  return 3.0 * std::sqrt(3.0) * c1 / alpha * dd *
         std::sqrt(std::log(2.0 * dd * dd)) * rc.g_t;
}

double local_rademacher(const NormProfile& p, std::uint64_t t,
                        std::uint64_t n, double radius, double c1,
                        double alpha, NormFlavor flavor) {
  require(radius >= 0.0, "radius must be nonnegative");
  require_samples(n);
  return local_complexity_scale(p, t, c1, alpha, flavor) * radius /
         std::sqrt(static_cast<double>(n));
}

EstimationError estimation_error(const NormProfile& p, std::uint64_t t,
                                 std::uint64_t n, double theta_t,
                                 double omega_t, double rho,
                                 double bernstein_a, double c1, double alpha,
                                 NormFlavor flavor) {
  require(omega_t > 0.0, "omega_t must be positive");
  require(rho > 0.0, "rho must be positive");
  require(bernstein_a > 0.0, "the Bernstein constant must be positive");
  if (theta_t <= 0.0) theta_t = 0.9 / (rho * bernstein_a);
  require(rho * bernstein_a * theta_t < 1.0,
          "Bernstein compatibility requires rho * A_t * theta_t < 1");
  require_samples(n);
  const double eta = local_complexity_scale(p, t, c1, alpha, flavor);
  EstimationError out;
  out.phi_star = 48.0 * eta / (std::sqrt(static_cast<double>(n)) * theta_t);
  out.excess_risk_bound = rho * theta_t * out.phi_star * out.phi_star;
  const double nu =
      std::min(1.0 / 288.0, 1.0 / (207.0 * theta_t * omega_t));
  const double vartheta = static_cast<double>(n) * nu * theta_t * theta_t *
                          out.phi_star * out.phi_star;
  if (vartheta <= 0.0) {
    out.probability = 0.0;
    out.failure_bound = 1.0;
    return out;
  }
  const double tail =
      2.0 * std::exp(-vartheta) / (-std::expm1(-3.0 * vartheta));
  out.failure_bound = tail;
  out.probability = std::max(0.0, 1.0 - tail);
  return out;
}

namespace {

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
std::vector<double> symmetric_eigenvalues(Matrix a) {
  const std::size_t n = a.rows();
  require(n == a.cols(), "eigenvalues need a square matrix");
  if (n == 1) return {a(0, 0)};
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::fabs(v));
  const double threshold = std::max(scale, 1.0) * 1e-15;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        off = std::max(off, std::fabs(a(i, j)));
      }
    }
    if (off <= threshold) break;
    for (std::size_t pp = 0; pp + 1 < n; ++pp) {
      for (std::size_t q = pp + 1; q < n; ++q) {
        const double apq = a(pp, q);
        if (std::fabs(apq) <= threshold) continue;
        const double theta = (a(q, q) - a(pp, pp)) / (2.0 * apq);
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double tan_phi =
            sign / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double cos_phi = 1.0 / std::sqrt(tan_phi * tan_phi + 1.0);
        const double sin_phi = tan_phi * cos_phi;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, pp);
          const double akq = a(k, q);
          a(k, pp) = cos_phi * akp - sin_phi * akq;
          a(k, q) = sin_phi * akp + cos_phi * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(pp, k);
          const double aqk = a(q, k);
          a(pp, k) = cos_phi * apk - sin_phi * aqk;
          a(q, k) = sin_phi * apk + cos_phi * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  return eig;
}

}  // namespace

double bernstein_constant_ce(const std::vector<double>& q) {
  const std::size_t k = q.size();
  require(k >= 2, "class distribution needs at least two classes");
  double total = 0.0;
  for (double v : q) {
    require(v > 0.0, "class probabilities must be strictly positive");
    total += v;
  }
  require(std::fabs(total - 1.0) <= 1e-9, "class probabilities must sum to 1");

  // Hessian of the log partition: H = diag(q) - q q^T. It annihilates the
  // all-ones direction, so curvature is measured on its orthogonal
  // complement via an orthonormal Helmert basis.
  Matrix h(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      h(i, j) = (i == j ? q[i] : 0.0) - q[i] * q[j];
    }
  }
  Matrix basis(k, k - 1);
  for (std::size_t j = 1; j < k; ++j) {
    const double denom =
        std::sqrt(static_cast<double>(j) * static_cast<double>(j + 1));
    for (std::size_t i = 0; i < j; ++i) basis(i, j - 1) = 1.0 / denom;
    basis(j, j - 1) = -static_cast<double>(j) / denom;
  }
  const Matrix restricted = matmul(transpose(basis), matmul(h, basis));
  const std::vector<double> eig = symmetric_eigenvalues(restricted);
  const double smallest = *std::min_element(eig.begin(), eig.end());
  if (smallest < 1e-12) {
    throw std::invalid_argument(
        "class distribution is too degenerate for a curvature lower bound");
  }
  return 2.0 / smallest;
}

BoundSelection bound_selection_from_name(const std::string& name) {
  if (name == "all") return BoundSelection::kAll;
  if (name == "ours") return BoundSelection::kOurs;
  if (name == "competitors") return BoundSelection::kCompetitors;
  throw std::invalid_argument("unknown bound selection: " + name);
}

BoundReport compute_bound_report(const ProfileRecord& rec, std::uint64_t t,
                                 std::uint64_t n, const LossSpec& loss,
                                 double delta, double empirical_risk,
                                 double omega_t,
                                 const std::vector<std::string>& extra_flags,
                                 BoundSelection which) {
  const NormProfile p = rec.profile.normalized();
  require_horizon(t);
  require_samples(n);
  BoundReport report;
  report.dataset = rec.dataset;
  report.t = t;
  report.n = n;
  report.d_x = p.d_x;
  report.d_h = p.d_h;
  report.d_y = p.d_y;
  report.activation = rec.resolved_activation();
  report.loss = loss_kind_name(loss.kind);
  report.delta = delta;
  report.empirical_risk = empirical_risk;
  report.profile_hash = to_hex(p.hash());

  if (omega_t <= 0.0) {
    const RecurrenceConstants rc =
        recurrence_constants(p, t, NormFlavor::kFrobenius);
    omega_t = rc.a * p.B_V * p.B_W * rc.c_t;
  }
  report.omega_t = omega_t;
  const LossConstants lc = loss_constants(loss, omega_t);
  report.rho = lc.rho;
  report.range_bound = lc.range_bound;

  const bool want_competitors = which != BoundSelection::kOurs;
  const bool want_ours = which != BoundSelection::kCompetitors;
  if (want_competitors) {
    report.bound1_value = bound1(p, t, n).value;
    const BoundValue b2 = bound2(p, t, n);
    report.bound2_value = b2.value;
    if (b2.log_clamped) report.flags.push_back("log_clamped:bound2");
    if (p.has_entry_bound()) {
      const BoundValue b3 = bound3(p, t, n);
      report.bound3_value = b3.value;
      if (b3.log_clamped) report.flags.push_back("log_clamped:bound3");
    }
  }
  if (want_ours) {
    const BoundValue b4 = bound4(p, t, n);
    report.bound4_value = b4.value;
    if (b4.log_clamped) report.flags.push_back("log_clamped:bound4");
    if (p.has_entry_bound()) {
      const BoundValue b4s = bound4_star(p, t, n);
      report.bound4_star_value = b4s.value;
      if (b4s.log_clamped) report.flags.push_back("log_clamped:bound4_star");
    }
  }
  const BoundValue rad = rademacher_exact(p, t, n, lc.rho,
                                          NormFlavor::kSpectral);
  report.rademacher_value = rad.value;
  if (rad.log_clamped) report.flags.push_back("log_clamped:rademacher");
  const GeneralizationBound gen = generalization_bound(
      empirical_risk, p, t, n, delta, loss, omega_t, NormFlavor::kSpectral);
  report.theorem2_total = gen.total;
  report.stochastic_term = gen.stochastic;
  for (const std::string& f : extra_flags) report.flags.push_back(f);
  return report;
}

namespace {

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (i > 0) out += ';';
    out += flags[i];
  }
  return out;
}

}  // namespace

std::string bound_report_csv_header(
    const std::vector<std::string>& extra_headers) {
  std::string out =
      "dataset,t,n,d_x,d_h,d_y,activation,loss,bound1,bound2,bound3,bound4,"
      "bound4_star,rademacher_exact,theorem2_total,flags";
  for (const std::string& h : extra_headers) out += "," + h;
  out += "\n";
  return out;
}

std::string bound_report_csv_row(const BoundReport& report,
                                 const std::vector<std::string>& extra_cells) {
  const auto cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  std::string out;
  out += report.dataset;
  out += "," + std::to_string(report.t);
  out += "," + std::to_string(report.n);
  out += "," + std::to_string(report.d_x);
  out += "," + std::to_string(report.d_h);
  out += "," + std::to_string(report.d_y);
  out += "," + report.activation;
  out += "," + report.loss;
  out += "," + cell(report.bound1_value);
  out += "," + cell(report.bound2_value);
  out += "," + cell(report.bound3_value);
  out += "," + cell(report.bound4_value);
  out += "," + cell(report.bound4_star_value);
  out += "," + format_double(report.rademacher_value);
  out += "," + format_double(report.theorem2_total);
  out += "," + join_flags(report.flags);
  for (const std::string& c : extra_cells) out += "," + c;
  out += "\n";
  return out;
}

std::string bound_report_to_json(const BoundReport& report) {
  nlohmann::json j;
  j["inputs"]["dataset"] = report.dataset;
  j["inputs"]["t"] = report.t;
  j["inputs"]["n"] = report.n;
  j["inputs"]["d_x"] = report.d_x;
  j["inputs"]["d_h"] = report.d_h;
  j["inputs"]["d_y"] = report.d_y;
  j["inputs"]["activation"] = report.activation;
  j["inputs"]["loss"] = report.loss;
  j["inputs"]["delta"] = report.delta;
  j["inputs"]["rho"] = report.rho;
  j["inputs"]["range_bound"] = report.range_bound;
  j["inputs"]["omega_t"] = report.omega_t;
  j["inputs"]["empirical_risk"] = report.empirical_risk;
  j["inputs"]["profile_hash"] = report.profile_hash;
  const auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) {
      j["values"][key] = *v;
    } else {
      j["values"][key] = nullptr;
    }
  };
  put("bound1", report.bound1_value);
  put("bound2", report.bound2_value);
  put("bound3", report.bound3_value);
  put("bound4", report.bound4_value);
  put("bound4_star", report.bound4_star_value);
  j["values"]["rademacher_exact"] = report.rademacher_value;
  j["values"]["theorem2_total"] = report.theorem2_total;
  j["values"]["stochastic_term"] = report.stochastic_term;
  j["flags"] = report.flags;
  return j.dump(2) + "\n";
}

}  // namespace rnncap
