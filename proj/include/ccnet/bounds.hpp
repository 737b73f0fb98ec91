#pragma once

// Closed-form delay bounds for dense and chunked codes on line networks with
// Bernoulli losses, evaluated as concrete numbers.
//
// The bounds are asymptotic statements; to evaluate them every report pins
// the same conventions:
//   * (1 + o(1)) factors are dropped;
//   * implied constants of O, Omega, o and ~ are set to 1;
//   * log is base 2, except the natural log inside gamma*;
//   * the partition count w is evaluated from its stated form, then rounded
//     up and floored at L.
// The resulting numbers are analytic curves, not guarantees at finite k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccnet/traffic.hpp"

namespace ccnet {

struct BoundInputs {
  std::size_t k = 1024;
  std::size_t L = 1;
  double epsilon = 0.01;
  std::size_t q = 1;
  /// Capacity: min p_i, or min lambda_i p_i after poisson_adjust.
  double p = 1.0;
  /// Smallest gap between consecutive success parameters (unequal case).
  double gamma_e = 0.0;
  double gamma_a = 0.1;
  double gamma_b = 0.1;
  double gamma_c = 0.1;
  /// Weight of the gamma_b^2 term in the precode expansion.
  double precode_c = 1.0;
  /// Transmission rate of the bottleneck link (1 for deterministic-regular).
  double lambda = 1.0;
  /// Growth function f(k) of the unequal-parameter average-delay results;
  /// empty selects f(k) = gamma_e log2 k.
  std::function<double(double)> f;

  double alpha() const { return static_cast<double>(k) / static_cast<double>(q); }

  double f_of(double x) const { return f ? f(x) : gamma_e * std::log2(x); }

  void validate() const {
    if (k == 0) throw std::invalid_argument("BoundInputs: k must be >= 1");
    if (L == 0) throw std::invalid_argument("BoundInputs: L must be >= 1");
    if (q == 0) throw std::invalid_argument("BoundInputs: q must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("BoundInputs: epsilon must be in (0,1)");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("BoundInputs: p must be in (0,1]");
  }
};

inline const std::vector<std::string>& bound_conventions() {
  static const std::vector<std::string> conventions = {
      "(1+o(1)) factors dropped",
      "implied constants of O/Omega/o/~ set to 1",
      "log base 2 except natural log inside gamma*",
      "w rounded up and floored at L",
  };
  return conventions;
}

struct GammaStar {
  double value = 0.0;
  /// value >= 1: the partition scheme has no valid threshold.
  bool infeasible = false;
};

/// Chernoff deviation for an expected per-partition count phi, w_T active
/// partitions and failure budget epsilon: sqrt((2 / phi) ln(2 w_T / epsilon)).
inline GammaStar gamma_star(double phi, double w_T, double epsilon) {
  if (!(phi > 0.0)) throw std::invalid_argument("gamma_star: phi must be > 0");
  if (!(w_T > 0.0)) throw std::invalid_argument("gamma_star: w_T must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("gamma_star: epsilon must be > 0");
  GammaStar g;
  g.value = std::sqrt((2.0 / phi) * std::log(2.0 * w_T / epsilon));
  g.infeasible = g.value >= 1.0;
  return g;
}

/// Time partitioning of (0, N_T] into w equal parts on each of the L links.
struct PartitionScheme {
  std::size_t w = 0;
  std::size_t w_T = 0;
  std::vector<double> phi;
  std::vector<double> gamma_star;
  std::vector<double> r;
  bool feasible = false;
};

inline PartitionScheme partition_scheme(const std::vector<double>& p, double n_t, std::size_t w, std::size_t q,
                                        double epsilon) {
  const std::size_t L = p.size();
  if (L == 0) throw std::invalid_argument("partition_scheme: need at least one link");
  if (q == 0) throw std::invalid_argument("partition_scheme: q must be >= 1");
  PartitionScheme s;
  s.w = w;
  if (w < L) return s;  // no active partitions
  s.w_T = L * (w - L + 1);
  s.feasible = true;
  for (double pi : p) {
    const double phi = pi * n_t / static_cast<double>(w * q);
    const auto g = gamma_star(phi, static_cast<double>(s.w_T * q), epsilon);
    s.phi.push_back(phi);
    s.gamma_star.push_back(g.value);
    s.r.push_back(g.infeasible ? 0.0 : std::floor((1.0 - g.value) * phi));
    s.feasible = s.feasible && !g.infeasible;
  }
  return s;
}

struct FeasibilityCheck {
  std::string condition;
  /// Requirement over available slack with implied constants 1; small means
  /// comfortably inside the asymptotic regime.
  double ratio = 0.0;
  bool warning = false;
};

struct BoundReport {
  int theorem = 0;
  std::string label;
  double value = 0.0;
  /// value - k / p.
  double overhead = 0.0;
  double w_raw = 0.0;
  double w = 0.0;
  bool w_floored = false;
  double phi = 0.0;
  double w_T = 0.0;
  double gamma_star = 0.0;
  bool gamma_star_infeasible = false;
  std::vector<FeasibilityCheck> feasibility;
  std::vector<std::string> warnings;
  /// Set when w < L before flooring, gamma* >= 1 where the proof needs it,
  /// or a feasibility ratio crossed its threshold.
  bool flagged = false;
  std::vector<std::string> conventions;
  /// Precode quantities (theorems 9-12 only).
  std::optional<double> gamma_o;
  std::optional<double> gamma_o_prime;
  std::optional<double> precode_rate;
  std::optional<double> stated_precode_rate;
};

constexpr double kDefaultFeasibilityThreshold = 0.1;

namespace detail {

inline double log_kl_eps(const BoundInputs& in) {
  return std::log2(static_cast<double>(in.k) * static_cast<double>(in.L) / in.epsilon);
}

inline void add_check(std::vector<FeasibilityCheck>& out, std::string name, double ratio, double threshold) {
  out.push_back({std::move(name), ratio, ratio > threshold});
}

inline void require_unequal(const BoundInputs& in, int thm) {
  if (!(in.gamma_e > 0.0 && in.gamma_e <= 1.0)) {
    throw std::invalid_argument("theorem " + std::to_string(thm) + " needs gamma_e in (0,1]");
  }
}

inline void require_precode(const BoundInputs& in) {
  for (double g : {in.gamma_a, in.gamma_b, in.gamma_c}) {
    if (!(g > 0.0 && g < 1.0)) throw std::invalid_argument("precode constants gamma_a, gamma_b, gamma_c must be in (0,1)");
  }
}

}  // namespace detail

/// Asymptotic-regime conditions of a theorem (1-12), as ratios.
inline std::vector<FeasibilityCheck> feasibility(const BoundInputs& in, int thm,
                                                 double threshold = kDefaultFeasibilityThreshold) {
  in.validate();
  const double k = static_cast<double>(in.k);
  const double L = static_cast<double>(in.L);
  const double q = static_cast<double>(in.q);
  const double alpha = in.alpha();
  const double lg = detail::log_kl_eps(in);
  std::vector<FeasibilityCheck> out;

  switch (thm) {
    case 1:
    case 2:
    case 5:
    case 6:
      detail::add_check(out, "q = o(k / (L log(kL/eps)))", q * L * lg / k, threshold);
      break;
    case 3:
    case 7: {
      detail::require_unequal(in, thm);
      const double ge = in.gamma_e;
      detail::add_check(out, "q = o(gamma_e^3 k / (L log(kL/eps)))", q * L * lg / (ge * ge * ge * k), threshold);
      break;
    }
    case 4:
    case 8: {
      detail::require_unequal(in, thm);
      const double ge = in.gamma_e;
      const double f = in.f_of(k);
      detail::add_check(out, "q = o(gamma_e k / (f(k) L log(kL/eps)))", q * f * L * lg / (ge * k), threshold);
      detail::add_check(out, "f(k) = o(gamma_e k / log(kL/eps))", f * lg / (ge * k), threshold);
      break;
    }
    case 9:
    case 10:
    case 11:
    case 12: {
      detail::require_precode(in);
      const double ga = in.gamma_a, gb = in.gamma_b, gc = in.gamma_c;
      const double lbc = std::log2(L / (gb * gc));
      if (thm == 9) {
        detail::add_check(out, "alpha = Omega(L^4 log(L/gamma_b))", std::pow(L, 4) * std::log2(L / gb) / alpha,
                          threshold);
        detail::add_check(out, "alpha = Omega((L/gamma_c^3) log(L/(gamma_b gamma_c)))", L / (gc * gc * gc) * lbc / alpha,
                          threshold);
      } else if (thm == 10) {
        detail::add_check(out, "alpha = Omega((L/gamma_c) log(L/(gamma_b gamma_c)))", L / gc * lbc / alpha, threshold);
      } else if (thm == 11) {
        detail::require_unequal(in, thm);
        const double ge = in.gamma_e;
        detail::add_check(out, "alpha = Omega((L/gamma_c^3) log(L/(gamma_b gamma_c)))", L / (gc * gc * gc) * lbc / alpha,
                          threshold);
        detail::add_check(out, "alpha = Omega((L/gamma_e^3) log(L/(gamma_e gamma_b)))",
                          L / (ge * ge * ge) * std::log2(L / (ge * gb)) / alpha, threshold);
      } else {
        detail::require_unequal(in, thm);
        const double ge = in.gamma_e;
        detail::add_check(out, "alpha = Omega((L/(gamma_e^2 gamma_c)) log(L/(gamma_b gamma_c)))",
                          L / (ge * ge * gc) * lbc / alpha, threshold);
      }
      detail::add_check(out, "alpha^2/(gamma_a^2 gamma_b^2) = o(k / log(1/eps))",
                        alpha * alpha * std::log2(1.0 / in.epsilon) / (ga * ga * gb * gb * k), threshold);
      break;
    }
    default:
      throw std::invalid_argument("feasibility: theorem must be in 1..12");
  }
  return out;
}

/// Delay (theorems 1, 3, 5, 7) or average-delay (2, 4, 6, 8) bound of a dense
/// code (q = 1) or a chunked code with q chunks.
inline BoundReport delay_bound(int thm, const BoundInputs& in, double threshold = kDefaultFeasibilityThreshold) {
  in.validate();
  if (thm < 1 || thm > 8) throw std::invalid_argument("delay_bound: theorem must be in 1..8");
  if (thm <= 4 && in.q != 1) throw std::invalid_argument("delay_bound: theorems 1-4 are dense codes (q = 1)");
  const bool unequal = thm == 3 || thm == 4 || thm == 7 || thm == 8;
  if (unequal) detail::require_unequal(in, thm);

  const double k = static_cast<double>(in.k);
  const double L = static_cast<double>(in.L);
  const double q = static_cast<double>(in.q);
  const double p = in.p;
  const double eps = in.epsilon;
  const double lg_kl = detail::log_kl_eps(in);

  BoundReport rep;
  rep.theorem = thm;
  rep.conventions = bound_conventions();

  switch (thm) {
    case 1:
      rep.label = "dense code, coding delay";
      rep.w_raw = std::cbrt(k * L * L / lg_kl);
      break;
    case 2:
      rep.label = "dense code, average coding delay";
      rep.w_raw = std::sqrt(k * L / lg_kl);
      break;
    case 3:
      rep.label = "dense code, coding delay, unequal parameters";
      rep.w_raw = in.gamma_e * std::cbrt(k * L * L / lg_kl);
      break;
    case 4:
      rep.label = "dense code, average coding delay, unequal parameters";
      rep.w_raw = in.gamma_e * k / (in.f_of(k) * lg_kl);
      break;
    case 5:
      rep.label = "chunked code, coding delay";
      rep.w_raw = std::cbrt(k * L * L / (q * lg_kl));
      break;
    case 6:
      rep.label = "chunked code, average coding delay";
      rep.w_raw = std::sqrt(k * L / (q * lg_kl));
      break;
    case 7:
      rep.label = "chunked code, coding delay, unequal parameters";
      rep.w_raw = in.gamma_e * std::cbrt(k * L * L / (q * lg_kl));
      break;
    case 8:
      rep.label = "chunked code, average coding delay, unequal parameters";
      rep.w_raw = in.gamma_e * k / (q * in.f_of(k) * lg_kl);
      break;
  }
  const double w_up = std::ceil(rep.w_raw);
  rep.w_floored = !(w_up >= L);
  const double w = rep.w_floored ? L : w_up;
  rep.w = w;

  switch (thm) {
    case 1: {
      const double lg = std::log2(w * L / eps);
      rep.value = (k + k * L / w + std::sqrt(k * (w * lg)) + w * lg) / p;
      break;
    }
    case 2: {
      const double lg = std::log2(w * L / eps);
      rep.value = (k + k * L / w + w * lg) / p;
      break;
    }
    case 3: {
      const double lg = std::log2(w * L / eps);
      rep.value = (k + k * L / w + std::sqrt(k * (w * lg))) / p;
      break;
    }
    case 4:
      rep.value = (k + k * L / w) / p;
      break;
    case 5: {
      const double lg = std::log2(w * q * L / eps);
      rep.value = (k + k * L / w + std::sqrt(k * (w * q * lg)) + w * q * lg) / p;
      break;
    }
    case 6: {
      const double lg = std::log2(w * q * L / eps);
      rep.value = (k + k * L / w + w * q * lg) / p;
      break;
    }
    case 7: {
      const double lg = std::log2(w * q * L / eps);
      rep.value = (k + k * L / w + std::sqrt(k * (w * q * lg))) / p;
      break;
    }
    case 8:
      rep.value = (k + k * L / w) / p;
      break;
  }
  rep.overhead = rep.value - k / p;

  // Partition thresholds at N_T = value, with epsilon split over the q chunks.
  const double w_T = L * (w - L + 1.0);
  rep.w_T = w_T;
  rep.phi = p * rep.value / (w * q);
  if (w_T > 0.0) {
    const auto g = gamma_star(rep.phi, w_T * q, eps);
    rep.gamma_star = g.value;
    const bool needs_threshold = thm % 2 == 1;  // average-delay proofs use phi itself
    rep.gamma_star_infeasible = g.infeasible && needs_threshold;
  }

  rep.feasibility = feasibility(in, thm, threshold);
  if (rep.w_floored) rep.warnings.push_back("w below L before flooring; no active partitions at the stated w");
  if (rep.gamma_star_infeasible) rep.warnings.push_back("gamma* >= 1; partition threshold undefined");
  for (const auto& c : rep.feasibility) {
    if (c.warning) rep.warnings.push_back("condition not met: " + c.condition);
  }
  rep.flagged = !rep.warnings.empty();
  return rep;
}

/// Coding-delay bound of a chunked code with precoding. One value serves
/// theorems 9-12; they differ only in their conditions on alpha.
inline BoundReport ccp_delay_bound(const BoundInputs& in, int thm = 9,
                                   double threshold = kDefaultFeasibilityThreshold) {
  in.validate();
  detail::require_precode(in);
  if (thm < 9 || thm > 12) throw std::invalid_argument("ccp_delay_bound: theorem must be in 9..12");
  const double k = static_cast<double>(in.k);
  const double ga = in.gamma_a, gb = in.gamma_b, gc = in.gamma_c;

  BoundReport rep;
  rep.theorem = thm;
  rep.label = "chunked code with precoding";
  rep.conventions = bound_conventions();
  rep.conventions.push_back("O(gamma_b^2) term evaluated as precode_c * gamma_b^2");
  rep.gamma_o_prime = (1.0 + ga) * gb + in.precode_c * gb * gb;
  rep.gamma_o = gc + (1.0 + gc) * *rep.gamma_o_prime;
  rep.value = (1.0 + gc) * (1.0 + (1.0 + ga) * gb + in.precode_c * gb * gb) * k / in.p;
  rep.overhead = rep.value - k / in.p;
  rep.precode_rate = 1.0 - (1.0 + ga) * gb;
  rep.stated_precode_rate = 1.0 - ga;
  rep.feasibility = feasibility(in, thm, threshold);
  for (const auto& c : rep.feasibility) {
    if (c.warning) rep.warnings.push_back("condition not met: " + c.condition);
  }
  rep.flagged = !rep.warnings.empty();
  return rep;
}

/// Overhead expressions of the two comparison tables. Dense-code rows are
/// "t1-det-eta", "t1-det-avg" (arbitrary deterministic traffic),
/// "t1-arb-eta", "t1-arb-avg", "t1-uneq-eta", "t1-uneq-avg"; chunked rows
/// are "t2-det", "t2-arb-eta", "t2-arb-avg", "t2-uneq-eta", "t2-uneq-avg".
struct TableRow {
  std::string id;
  std::string description;
  /// Overhead or average overhead.
  double eta = 0.0;
  std::optional<double> w;
  std::optional<double> m;
  std::vector<FeasibilityCheck> alpha_conditions;
};

inline const std::vector<std::string>& table_row_ids() {
  static const std::vector<std::string> ids = {
      "t1-det-eta", "t1-det-avg", "t1-arb-eta", "t1-arb-avg",  "t1-uneq-eta", "t1-uneq-avg",
      "t2-det",     "t2-arb-eta", "t2-arb-avg", "t2-uneq-eta", "t2-uneq-avg",
  };
  return ids;
}

inline TableRow overhead_table(const std::string& row, const BoundInputs& in,
                               double threshold = kDefaultFeasibilityThreshold) {
  in.validate();
  const auto& ids = table_row_ids();
  if (std::find(ids.begin(), ids.end(), row) == ids.end()) {
    throw std::invalid_argument("overhead_table: unknown row '" + row + "'");
  }
  const double k = static_cast<double>(in.k);
  const double L = static_cast<double>(in.L);
  const double alpha = in.alpha();
  const double p = in.p;
  const double eps = in.epsilon;
  const double lg = detail::log_kl_eps(in);
  const auto round_w = [&](double raw) {
    const double up = std::ceil(raw);
    return up >= L ? up : L;
  };
  const auto m_of = [&](double w) { return k * w / alpha * std::log2(k * L * w / (alpha * eps)); };

  TableRow out;
  out.id = row;
  auto& cond = out.alpha_conditions;

  if (row == "t1-det-eta" || row == "t1-det-avg") {
    out.description = "chunked code, arbitrary deterministic traffic";
    out.eta = k * L * std::cbrt(lg / alpha);
    detail::add_check(cond, "alpha = omega(L^3 log(kL/eps))", L * L * L * lg / alpha, threshold);
  } else if (row == "t1-arb-eta") {
    out.description = "chunked code, Bernoulli losses, arbitrary parameters, overhead";
    const double w = round_w(std::cbrt(alpha * L * L / lg));
    const double m = m_of(w);
    out.w = w;
    out.m = m;
    out.eta = (k * L / w + std::sqrt(k * m) + m) / p;
    detail::add_check(cond, "alpha = omega(L log(kL/eps))", L * lg / alpha, threshold);
  } else if (row == "t1-arb-avg") {
    out.description = "chunked code, Bernoulli losses, arbitrary parameters, average overhead";
    const double w = round_w(std::sqrt(alpha * L / lg));
    const double m = m_of(w);
    out.w = w;
    out.m = m;
    out.eta = (k * L / w + m) / p;
    detail::add_check(cond, "alpha = omega(L log(kL/eps))", L * lg / alpha, threshold);
  } else if (row == "t1-uneq-eta") {
    detail::require_unequal(in, 7);
    const double ge = in.gamma_e;
    out.description = "chunked code, Bernoulli losses, unequal parameters, overhead";
    const double w = round_w(std::cbrt(ge * ge * ge * alpha * L * L / lg));
    const double m = m_of(w);
    out.w = w;
    out.m = m;
    out.eta = (k * L / w + std::sqrt(k * m)) / p;
    detail::add_check(cond, "alpha = omega((L/gamma_e^3) log(kL/eps))", L / (ge * ge * ge) * lg / alpha, threshold);
  } else if (row == "t1-uneq-avg") {
    detail::require_unequal(in, 8);
    const double ge = in.gamma_e;
    const double f = in.f_of(k);
    out.description = "chunked code, Bernoulli losses, unequal parameters, average overhead";
    const double w = round_w(ge * alpha / (f * lg));
    out.w = w;
    out.m = m_of(w);
    out.eta = (k * L / w) / p;
    detail::add_check(cond, "alpha = omega(f(k) (L/gamma_e) log(kL/eps))", f * L / ge * lg / alpha, threshold);
  } else {
    detail::require_precode(in);
    const double ga = in.gamma_a, gb = in.gamma_b, gc = in.gamma_c;
    const double gamma_o_prime = (1.0 + ga) * gb + in.precode_c * gb * gb;
    const double gamma_o = gc + (1.0 + gc) * gamma_o_prime;
    const double lbc = std::log2(L / (gb * gc));
    if (row == "t2-det") {
      out.description = "chunked code with precoding, arbitrary deterministic traffic";
      out.eta = gamma_o * k;
      detail::add_check(cond, "alpha = Omega((L^3/gamma_c^3) log(L/(gamma_b gamma_c)))",
                        L * L * L / (gc * gc * gc) * lbc / alpha, threshold);
    } else if (row == "t2-arb-eta") {
      out.description = "chunked code with precoding, Bernoulli losses, arbitrary parameters, overhead";
      out.eta = gamma_o * k / p;
      detail::add_check(cond, "alpha = Omega((L/gamma_c^3) log(L/(gamma_b gamma_c)))", L / (gc * gc * gc) * lbc / alpha,
                        threshold);
      detail::add_check(cond, "alpha = Omega(L^4 log(L/gamma_b))", std::pow(L, 4) * std::log2(L / gb) / alpha, threshold);
    } else if (row == "t2-arb-avg") {
      out.description = "chunked code with precoding, Bernoulli losses, arbitrary parameters, average overhead";
      out.eta = gamma_o * k / p;
      detail::add_check(cond, "alpha = Omega((L/gamma_c) log(L/(gamma_b gamma_c)))", L / gc * lbc / alpha, threshold);
    } else if (row == "t2-uneq-eta") {
      detail::require_unequal(in, 11);
      const double ge = in.gamma_e;
      out.description = "chunked code with precoding, Bernoulli losses, unequal parameters, overhead";
      out.eta = gamma_o * k / p;
      detail::add_check(cond, "alpha = Omega((L/gamma_c^3) log(L/(gamma_b gamma_c)))", L / (gc * gc * gc) * lbc / alpha,
                        threshold);
      detail::add_check(cond, "alpha = Omega((L/gamma_e^3) log(L/(gamma_b gamma_e)))",
                        L / (ge * ge * ge) * std::log2(L / (gb * ge)) / alpha, threshold);
    } else {
      detail::require_unequal(in, 12);
      const double ge = in.gamma_e;
      out.description = "chunked code with precoding, Bernoulli losses, unequal parameters, average overhead";
      out.eta = gamma_o * k / p;
      detail::add_check(cond, "alpha = Omega((L/(gamma_e^2 gamma_c)) log(L/(gamma_b gamma_c)))",
                        L / (ge * ge * gc) * lbc / alpha, threshold);
    }
    detail::add_check(cond, "alpha = o(sqrt(gamma_a^2 gamma_b^2 k / log(1/eps)))",
                      alpha / std::sqrt(ga * ga * gb * gb * k / std::log2(1.0 / eps)), threshold);
  }
  return out;
}

/// Index of the link with the smallest lambda_i p_i (first one on ties).
inline std::size_t bottleneck_link(const std::vector<LinkParams>& links) {
  if (links.empty()) throw std::invalid_argument("bottleneck_link: no links");
  std::size_t mu = 0;
  for (std::size_t i = 1; i < links.size(); ++i) {
    if (links[i].capacity() < links[mu].capacity()) mu = i;
  }
  return mu;
}

/// Poisson transmissions: the bounds apply with p replaced by lambda_mu p_mu
/// of the bottleneck link mu.
inline BoundInputs poisson_adjust(BoundInputs in, const std::vector<LinkParams>& links) {
  const std::size_t mu = bottleneck_link(links);
  in.lambda = links[mu].schedule == Schedule::poisson ? links[mu].lambda : 1.0;
  in.p = links[mu].capacity();
  return in;
}

}  // namespace ccnet
