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

#ifndef RNNCAP_CAPACITY_HPP
#define RNNCAP_CAPACITY_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rnncap/losses.hpp"

namespace rnncap {

/// Norm summary of a weight configuration and its input distribution.
/// B_* are Frobenius norms, M_* spectral norms, *1 induced 1-norms; B_x and
/// B_row bound per-step input Euclidean norms; entry_bound is the activation
/// range bound b (0 when the activation is unbounded).
struct NormProfile {
  std::size_t d_x = 0;
  std::size_t d_h = 0;
  std::size_t d_y = 0;
  double rho_h = 1.0;
  double B_x = 0.0;
  double B_row = 0.0;
  double B_U = 0.0;
  double B_V = 0.0;
  double B_W = 0.0;
  double M_U = 0.0;
  double M_V = 0.0;
  double M_W = 0.0;
  double B_x1 = 0.0;
  double B_U1 = 0.0;
  double B_V1 = 0.0;
  double B_W1 = 0.0;
  double entry_bound = 0.0;

  bool has_entry_bound() const { return entry_bound > 0.0; }
  std::size_t d() const;
  double d_prime() const;

  /// Enforces nonnegative entries, positive dimensions, and spectral <=
  /// Frobenius within tolerance 1e-8 (small excesses are clamped in place by
  /// normalized()). Throws std::invalid_argument on violation.
  void validate() const;
  /// Copy with spectral norms clamped to their Frobenius majorants.
  NormProfile normalized() const;

  /// Stable content hash of all fields.
  std::uint64_t hash() const;
};

std::string norm_profile_to_json(const NormProfile& p);
NormProfile norm_profile_from_json_text(const std::string& text);

/// A norm profile with provenance so report rows can be labeled.
struct ProfileRecord {
  NormProfile profile;
  std::string dataset = "unknown";
  std::string activation;  // derived from entry_bound when empty
  std::string loss = "ramp";
  double gamma = 1.0;
  std::uint64_t t = 0;
  std::uint64_t n = 0;

  std::string resolved_activation() const;
};

std::string profile_record_to_json(const ProfileRecord& rec);
ProfileRecord profile_record_from_json(const std::string& text);

/// Which weight norm drives the recurrence sums: the Frobenius norm of U or
/// its spectral norm (the primed flavor).
enum class NormFlavor { kFrobenius, kSpectral };

enum class ConstantsFlavor { kFrobenius, kSpectral, kStar };

/// Unrolled-recurrence constants at horizon t:
///   a   = rho_h * B_x
///   c_t = sum_{j=0}^{t-1} x^j
///   b_t = sum_{j=0}^{t-2} (j+1) x^j
///   g_t = rho_h B_x B_V B_W max{c_t, rho_h B_U b_t}
/// with x = rho_h * B_U (Frobenius flavor) or x = rho_h * M_U (spectral
/// flavor). The Frobenius B_U always appears inside the max. All sums are
/// accumulated term by term so x = 1 needs no special casing.
struct RecurrenceConstants {
  double a = 0.0;
  double b_t = 0.0;
  double c_t = 0.0;
  double g_t = 0.0;
  ConstantsFlavor flavor = ConstantsFlavor::kFrobenius;
};

RecurrenceConstants recurrence_constants(const NormProfile& p,
                                         std::uint64_t t, NormFlavor flavor);

/// Sample-size-aware sharpening of the spectral g constant:
///   g*_t = B_V min{b sqrt(nd), rho_h B_x B_W c'_t} max{1, rho_h B_U b'_t / c'_t}.
/// Requires an entry bound. star_constants bundles it with the spectral
/// b'_t, c'_t.
double g_star(const NormProfile& p, std::uint64_t t, std::uint64_t n);
RecurrenceConstants star_constants(const NormProfile& p, std::uint64_t t,
                                   std::uint64_t n);

/// Log covering number of a Frobenius ball of radius lambda in d1 x d2
/// matrices at resolution eps: ceil(lambda^2 d1 d2 / eps^2) * log(2 d1 d2).
double covering_number_matrix(double lambda, std::size_t d1, std::size_t d2,
                              double eps);

/// Log covering number of the length-t score class at resolution eps:
/// 27 d^2 g_t^2 log(2 d^2) / eps^2.
double covering_number_class(const NormProfile& p, std::uint64_t t,
                             double eps, NormFlavor flavor);

/// Chained entropy integral for log N(eps) = C / eps^2 over (alpha, 2 r
/// sqrt(n)): 4 alpha / sqrt(n) + (12 sqrt(C) / n) log(2 r sqrt(n) / alpha).
/// Requires 0 < alpha < 2 r sqrt(n).
double dudley_bound(double covering_coefficient, double output_radius,
                    std::uint64_t n, double alpha);

/// A bound value plus a note when a logarithm argument was at or below 1 and
/// the term was floored at zero.
struct BoundValue {
  double value = 0.0;
  bool log_clamped = false;
};

/// Rademacher complexity of the loss-composed class by the entropy integral
/// at alpha = 1/sqrt(n), including the Lipschitz contraction factor rho:
///   8 rho / n + (72 rho d g_t / n) sqrt(3 log(2 d^2)) log(2 r n),
/// with output radius r = a B_V B_W c_t in the chosen flavor.
BoundValue rademacher_exact(const NormProfile& p, std::uint64_t t,
                            std::uint64_t n, double rho, NormFlavor flavor);

/// Matrix-1-norm complexity bound: B_x1 B_W1 B_V1 Lambda / n with
/// Lambda = sum_{j=0}^{t-1} (j+1) (rho_h B_U1)^j.
BoundValue bound1(const NormProfile& p, std::uint64_t t, std::uint64_t n);

/// Spectral/Frobenius mixed bound:
/// B_row t d sqrt(log d) max{(rho_h M_U)^{t-1}, 1} M_V M_W
///   sqrt(t^2 B_U^2 + B_W^2/M_W^2 + B_V^2/M_V^2) / sqrt(n).
BoundValue bound2(const NormProfile& p, std::uint64_t t, std::uint64_t n);

/// Bounded-activation competitor:
/// B_row M_W M_U min{b sqrt(d'), B_row M_W c'_t} c'_t (B_U + B_W + B_V)
///   sqrt(d' log d') / sqrt(n). Requires an entry bound.
BoundValue bound3(const NormProfile& p, std::uint64_t t, std::uint64_t n);

/// g'_t d sqrt(log d) log(rho_h n B_x B_V B_W c'_t) / n.
BoundValue bound4(const NormProfile& p, std::uint64_t t, std::uint64_t n);

/// g*_t d sqrt(log d) log(n B_V min{b sqrt(nd), rho_h B_x B_W c'_t}) / n.
/// Requires an entry bound.
BoundValue bound4_star(const NormProfile& p, std::uint64_t t,
                       std::uint64_t n);

/// High-probability excess-risk decomposition: empirical risk
/// + 2 * rademacher_exact + 3 C_t sqrt(log(2/delta) / (2n)).
struct GeneralizationBound {
  double total = 0.0;
  double rademacher = 0.0;
  double stochastic = 0.0;
  bool log_clamped = false;
};

/// omega_t <= 0 selects the analytic output bound rho_h B_x B_V B_W c_t
/// (Frobenius) for the range constant of unbounded losses.
GeneralizationBound generalization_bound(double empirical_risk,
                                         const NormProfile& p,
                                         std::uint64_t t, std::uint64_t n,
                                         double delta, const LossSpec& loss,
                                         double omega_t, NormFlavor flavor);

/// Scale factor of the local Rademacher bound: eta_t = (3 sqrt(3) c1 /
/// alpha) d sqrt(log(2 d^2)) g_t.
double local_complexity_scale(const NormProfile& p, std::uint64_t t,
                              double c1, double alpha, NormFlavor flavor);

/// Local Rademacher complexity of the radius-r loss ball:
/// eta_t * radius / sqrt(n).
double local_rademacher(const NormProfile& p, std::uint64_t t,
                        std::uint64_t n, double radius, double c1,
                        double alpha, NormFlavor flavor);

/// Estimation-error certificate for empirical risk minimization.
struct EstimationError {
  double phi_star = 0.0;
  double excess_risk_bound = 0.0;
  double probability = 0.0;
  /// Upper bound on the failure probability before clamping,
  /// 2 e^{-vartheta} / (1 - e^{-3 vartheta}). Carries the full floating
  /// range, so it stays strictly monotone where the clamped probability
  /// rounds to exactly 0 or 1.
  double failure_bound = 1.0;
};

/// phi* = 48 eta_t / (sqrt(n) theta_t); excess risk <= rho theta_t phi*^2
/// with probability 1 - 2 e^{-vartheta} / (1 - e^{-3 vartheta}), where
/// vartheta = n nu_t theta_t^2 phi*^2 and nu_t = min{1/288,
/// 1/(207 theta_t omega_t)}. Requires the Bernstein compatibility condition
/// rho * bernstein_a * theta_t < 1. theta_t <= 0 selects the default
/// 0.9 / (rho * bernstein_a).
EstimationError estimation_error(const NormProfile& p, std::uint64_t t,
                                 std::uint64_t n, double theta_t,
                                 double omega_t, double rho,
                                 double bernstein_a, double c1, double alpha,
                                 NormFlavor flavor);

/// Bernstein curvature constant of cross entropy at class distribution q:
/// 2 over the smallest eigenvalue of diag(q) - q q^T restricted to the
/// subspace orthogonal to the all-ones vector. q must be strictly positive
/// and sum to 1; throws std::invalid_argument when the restricted eigenvalue
/// degenerates (< 1e-12).
double bernstein_constant_ce(const std::vector<double>& q);

/// Which members of the bound family to evaluate in a report.
enum class BoundSelection { kAll, kOurs, kCompetitors };

BoundSelection bound_selection_from_name(const std::string& name);

/// One evaluated row of the bound family for a profile at horizon t and
/// sample count n.
struct BoundReport {
  std::string dataset = "unknown";
  std::uint64_t t = 0;
  std::uint64_t n = 0;
  std::size_t d_x = 0;
  std::size_t d_h = 0;
  std::size_t d_y = 0;
  std::string activation;
  std::string loss;
  double delta = 0.01;
  double rho = 0.0;
  double range_bound = 0.0;
  double omega_t = 0.0;
  double empirical_risk = 0.0;
  std::string profile_hash;

  std::optional<double> bound1_value;
  std::optional<double> bound2_value;
  std::optional<double> bound3_value;
  std::optional<double> bound4_value;
  std::optional<double> bound4_star_value;
  double rademacher_value = 0.0;
  double theorem2_total = 0.0;
  double stochastic_term = 0.0;
  std::vector<std::string> flags;
};

/// Evaluates the selected bounds for the record (bound3/bound4* only when
/// the profile has an entry bound; unselected bounds stay absent). The
/// complexity value and the risk decomposition are always computed.
/// omega_t <= 0 selects the analytic default. extra_flags are appended
/// verbatim.
BoundReport compute_bound_report(const ProfileRecord& rec, std::uint64_t t,
                                 std::uint64_t n, const LossSpec& loss,
                                 double delta, double empirical_risk,
                                 double omega_t,
                                 const std::vector<std::string>& extra_flags =
                                     {},
                                 BoundSelection which = BoundSelection::kAll);

/// CSV with the fixed column order dataset,t,n,d_x,d_h,d_y,activation,loss,
/// bound1,bound2,bound3,bound4,bound4_star,rademacher_exact,theorem2_total,
/// flags. Absent optional bounds render as empty fields; flags join with
/// ';'. extra_headers/extra_cells append trailing columns (used for the
/// improvement percentages).
std::string bound_report_csv_header(
    const std::vector<std::string>& extra_headers = {});
std::string bound_report_csv_row(
    const BoundReport& report,
    const std::vector<std::string>& extra_cells = {});
std::string bound_report_to_json(const BoundReport& report);

}  // namespace rnncap

#endif  // RNNCAP_CAPACITY_HPP
