#pragma once

// Trial fan-out and order-statistic summaries.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <type_traits>
#include <vector>

namespace ccnet {

/// Runs fn(0) .. fn(n-1) on up to `workers` threads. Results are stored by
/// trial index, so the output does not depend on scheduling.
template <class Fn>
auto run_trials(std::size_t n, std::size_t workers, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<R> out(n);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

/// Empirical quantile at `level` with an order-statistic confidence band.
struct QuantileEstimate {
  double level = 0.5;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  /// Fewer than 1 / (1 - level) samples: the tail order statistic is not
  /// resolved.
  bool underpowered = false;
};

/// Smallest sample x whose empirical CDF reaches `level`, i.e. the
/// ceil(level * n)-th order statistic. The band takes the order statistics
/// at n * level -/+ 1.96 binomial standard deviations.
inline QuantileEstimate empirical_quantile(std::vector<double> samples, double level) {
  if (samples.empty()) throw std::invalid_argument("empirical_quantile: no samples");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("empirical_quantile: level must be in (0,1)");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  const auto at = [&](double rank) {
    const double clamped = std::clamp(rank, 1.0, n);
    return samples[static_cast<std::size_t>(clamped) - 1];
  };
  QuantileEstimate q;
  q.level = level;
  q.n = samples.size();
  q.value = at(std::ceil(level * n - 1e-9));
  const double spread = 1.96 * std::sqrt(n * level * (1.0 - level));
  q.ci_low = at(std::floor(n * level - spread));
  q.ci_high = at(std::ceil(n * level + spread));
  q.underpowered = n * (1.0 - level) < 1.0 - 1e-9;
  return q;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Unbiased sample variance.
inline double variance_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace ccnet
