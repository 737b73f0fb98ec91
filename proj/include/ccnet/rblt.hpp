#pragma once

// Random block lower-triangular (RBLT) matrices and tail bounds on their rank
// deficiency.
//
// An RBLT matrix has w block rows of height r and w block columns of widths
// r_1..r_w. Block (i, j) is uniformly random when j <= i; blocks above the
// diagonal are arbitrary, and here either zero or uniformly random.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ccnet/gf2.hpp"
#include "ccnet/rng.hpp"

namespace ccnet {

enum class UpperFill { zeros, uniform };

struct RbltSpec {
  std::size_t w = 0;
  std::size_t r = 0;
  std::vector<std::size_t> r_list;
  UpperFill upper_fill = UpperFill::zeros;

  void validate() const {
    if (r_list.size() != w) throw std::invalid_argument("RbltSpec: r_list must have w entries");
  }

  std::size_t n_rows() const { return w * r; }
  std::size_t n_cols() const { return std::accumulate(r_list.begin(), r_list.end(), std::size_t{0}); }
  std::size_t r_min() const { return r_list.empty() ? 0 : *std::min_element(r_list.begin(), r_list.end()); }
  std::size_t r_max() const { return r_list.empty() ? 0 : *std::max_element(r_list.begin(), r_list.end()); }
};

inline BitMatrix sample_rblt(const RbltSpec& spec, Rng& rng) {
  spec.validate();
  BitMatrix t(spec.n_rows(), spec.n_cols());
  std::size_t col0 = 0;
  for (std::size_t j = 0; j < spec.w; ++j) {
    const std::size_t width = spec.r_list[j];
    for (std::size_t i = 0; i < spec.w; ++i) {
      if (j > i && spec.upper_fill == UpperFill::zeros) continue;
      for (std::size_t a = 0; a < spec.r; ++a) {
        BitVector& row = t.row(i * spec.r + a);
        for (std::size_t b = 0; b < width; b += 64) {
          const std::size_t n = std::min<std::size_t>(64, width - b);
          std::uint64_t word = rng.bits();
          for (std::size_t c = 0; c < n; ++c, word >>= 1) row.assign(col0 + b + c, word & 1U);
        }
      }
    }
    col0 += width;
  }
  return t;
}

/// An evaluated probability bound. Values of 1 or more are returned as is
/// and marked vacuous.
struct BoundValue {
  double value = 0.0;
  bool vacuous = false;
  std::size_t u = 0;
};

namespace detail {
inline BoundValue rblt_bound(std::size_t u, double lead, long long exponent) {
  BoundValue b;
  b.u = u;
  b.value = static_cast<double>(u) * lead * std::ldexp(1.0, static_cast<int>(exponent));
  b.vacuous = b.value >= 1.0;
  return b;
}
}  // namespace detail

/// Bound on Pr{rank(T) < n - gamma} for r_j <= r, where n = sum r_j (T tall,
/// deficiency measured against the column count).
inline BoundValue lemma2_bound(const RbltSpec& spec, std::size_t gamma) {
  spec.validate();
  for (std::size_t rj : spec.r_list) {
    if (rj > spec.r) throw std::invalid_argument("lemma2_bound: requires every r_j <= r");
  }
  const std::size_t n = spec.n_cols();
  if (n == 0 || gamma > n - 1) throw std::invalid_argument("lemma2_bound: requires 0 <= gamma <= n - 1");
  const std::size_t r_min = spec.r_min();
  if (r_min == 0) throw std::invalid_argument("lemma2_bound: r_min = 0 leaves u undefined");
  const std::size_t u = (n - gamma + r_min - 1) / r_min;
  const auto ll = [](std::size_t x) { return static_cast<long long>(x); };
  const long long exponent = -ll(gamma) + ll(n) - ll(spec.w * spec.r) + (ll(spec.r) - ll(r_min)) * (ll(u) - 1);
  const double lead = 1.0 - std::ldexp(1.0, -static_cast<int>(spec.r_max()));
  return detail::rblt_bound(u, lead, exponent);
}

/// Bound on Pr{rank(T) < n - gamma} for r_j >= r, where n = w r (T wide,
/// deficiency measured against the row count).
inline BoundValue lemma3_bound(const RbltSpec& spec, std::size_t gamma) {
  spec.validate();
  for (std::size_t rj : spec.r_list) {
    if (rj < spec.r) throw std::invalid_argument("lemma3_bound: requires every r_j >= r");
  }
  const std::size_t n = spec.n_rows();
  if (n == 0 || gamma > n - 1) throw std::invalid_argument("lemma3_bound: requires 0 <= gamma <= n - 1");
  if (spec.r == 0) throw std::invalid_argument("lemma3_bound: r = 0 leaves u undefined");
  const std::size_t u = (n - gamma + spec.r - 1) / spec.r;
  const std::size_t r_min = spec.r_min();
  const auto ll = [](std::size_t x) { return static_cast<long long>(x); };
  const long long exponent = -ll(gamma) + ll(n) - ll(spec.w * r_min) + (ll(r_min) - ll(spec.r)) * (ll(u) - 1);
  const double lead = 1.0 - std::ldexp(1.0, -static_cast<int>(spec.r));
  return detail::rblt_bound(u, lead, exponent);
}

struct DeficiencyEstimate {
  double frequency = 0.0;
  /// Three binomial standard errors.
  double half_width = 0.0;
  std::size_t deficient = 0;
  std::size_t trials = 0;
};

/// Fraction of sampled RBLT matrices whose rank falls below n_target - gamma.
inline DeficiencyEstimate estimate_rank_deficiency(const RbltSpec& spec, std::size_t gamma,
                                                   std::size_t n_target, std::size_t trials, Rng& rng) {
  if (trials == 0) throw std::invalid_argument("estimate_rank_deficiency: trials must be >= 1");
  DeficiencyEstimate est;
  est.trials = trials;
  if (gamma >= n_target) return est;
  const std::size_t needed = n_target - gamma;
  for (std::size_t t = 0; t < trials; ++t) {
    if (rank(sample_rblt(spec, rng)) < needed) ++est.deficient;
  }
  const double f = static_cast<double>(est.deficient) / static_cast<double>(trials);
  est.frequency = f;
  est.half_width = 3.0 * std::sqrt(f * (1.0 - f) / static_cast<double>(trials));
  return est;
}

}  // namespace ccnet
