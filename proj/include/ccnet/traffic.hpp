#pragma once

// Transmission schedules and Bernoulli losses on the links of a line network.
//
// A link is either deterministic-regular (one transmission per integer slot)
// or Poisson (exponential inter-transmission times of rate lambda). Each
// transmission independently succeeds with probability p. Transmissions are
// generated first and then thinned, so attempt counts and success counts are
// both available.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccnet/rng.hpp"
#include "ccnet/text.hpp"

namespace ccnet {

enum class Schedule { deterministic, poisson };

struct LinkParams {
  Schedule schedule = Schedule::deterministic;
  double lambda = 1.0;
  double p = 1.0;

  static LinkParams deterministic(double p) { return {Schedule::deterministic, 1.0, p}; }
  static LinkParams poisson(double lambda, double p) { return {Schedule::poisson, lambda, p}; }

  /// Mean successes per time unit.
  double capacity() const { return schedule == Schedule::poisson ? lambda * p : p; }

  void validate() const {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("LinkParams: p must be in (0,1]");
    if (schedule == Schedule::poisson && !(lambda > 0.0 && lambda <= 1.0)) {
      throw std::invalid_argument("LinkParams: lambda must be in (0,1]");
    }
  }
};

struct NetworkParams {
  std::vector<LinkParams> links;
  double horizon = 0.0;

  std::size_t L() const { return links.size(); }

  void validate() const {
    if (links.empty()) throw std::invalid_argument("NetworkParams: need at least one link");
    for (const auto& l : links) l.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("NetworkParams: horizon must be > 0");
  }
};

/// Smallest per-link capacity.
inline double bottleneck_capacity(const std::vector<LinkParams>& links) {
  double c = INFINITY;
  for (const auto& l : links) c = std::min(c, l.capacity());
  return c;
}

struct TransmissionEvent {
  double time = 0.0;
  bool success = false;
};

/// Endless transmission sequence of one link.
class LinkProcess {
 public:
  LinkProcess(const LinkParams& params, std::uint64_t seed) : params_(params), rng_(seed) {
    params_.validate();
  }

  TransmissionEvent next() {
    if (params_.schedule == Schedule::deterministic) {
      now_ += 1.0;
    } else {
      now_ += rng_.exponential(params_.lambda);
    }
    return {now_, rng_.bernoulli(params_.p)};
  }

 private:
  LinkParams params_;
  Rng rng_;
  double now_ = 0.0;
};

/// Stream seed of link `link` under a traffic seed.
inline std::uint64_t link_seed(std::uint64_t traffic_seed, std::size_t link) {
  return derive_seed(traffic_seed, Stream::traffic, link);
}

/// Successful-transmission times per link on (0, horizon], plus the number of
/// transmission attempts in the same window.
struct TrafficTrace {
  std::vector<std::vector<double>> success_times;
  std::vector<std::size_t> transmissions;
  double horizon = 0.0;

  std::size_t L() const { return success_times.size(); }
  std::size_t successes(std::size_t link) const { return success_times.at(link).size(); }
};

inline TrafficTrace sample_trace(const NetworkParams& net, std::uint64_t traffic_seed) {
  net.validate();
  TrafficTrace tr;
  tr.horizon = net.horizon;
  tr.success_times.resize(net.L());
  tr.transmissions.assign(net.L(), 0);
  for (std::size_t i = 0; i < net.L(); ++i) {
    LinkProcess proc(net.links[i], link_seed(traffic_seed, i));
    for (auto ev = proc.next(); ev.time <= net.horizon; ev = proc.next()) {
      ++tr.transmissions[i];
      if (ev.success) tr.success_times[i].push_back(ev.time);
    }
  }
  return tr;
}

/// Success parameters p_1 > ... > p_L with consecutive gaps `gap` and
/// p_L = p_min.
inline std::vector<double> make_unequal_params(std::size_t L, double p_min, double gap) {
  if (L == 0) throw std::invalid_argument("make_unequal_params: L must be >= 1");
  if (!(p_min > 0.0 && p_min <= 1.0)) throw std::invalid_argument("make_unequal_params: p_min must be in (0,1]");
  if (L > 1 && !(gap > 0.0)) throw std::invalid_argument("make_unequal_params: gap must be > 0");
  const double top = p_min + static_cast<double>(L - 1) * gap;
  if (top > 1.0 + 1e-12) throw std::invalid_argument("make_unequal_params: p_min + (L-1) gap exceeds 1");
  std::vector<double> p(L);
  for (std::size_t i = 0; i < L; ++i) p[i] = p_min + static_cast<double>(L - 1 - i) * gap;
  return p;
}

/// CSV with header `link_index,time`, one record per success, links in
/// ascending order and times ascending within a link.
inline void write_trace_csv(std::ostream& os, const TrafficTrace& tr) {
  CsvWriter w(os);
  w.row({"link_index", "time"});
  for (std::size_t i = 0; i < tr.L(); ++i) {
    for (double t : tr.success_times[i]) w.row({format_number(std::uint64_t{i}), format_number(t)});
  }
}

/// Reads a trace written by write_trace_csv; leading '#' lines are skipped.
/// Attempt counts are not part of the format and are set to the success
/// counts.
inline TrafficTrace read_trace_csv(std::istream& is, std::size_t L, double horizon) {
  TrafficTrace tr;
  tr.horizon = horizon;
  tr.success_times.resize(L);
  std::string line;
  while (std::getline(is, line) && line.rfind('#', 0) == 0) {
  }
  if (!is || split_csv_record(line) != std::vector<std::string>{"link_index", "time"}) {
    throw std::invalid_argument("read_trace_csv: missing 'link_index,time' header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv_record(line);
    if (f.size() != 2) throw std::invalid_argument("read_trace_csv: expected two fields");
    const auto link = parse_u64(f[0]);
    const double t = parse_double(f[1]);
    if (link >= L) throw std::invalid_argument("read_trace_csv: link index out of range");
    if (!(t > 0.0 && t <= horizon)) throw std::invalid_argument("read_trace_csv: time outside (0, horizon]");
    auto& times = tr.success_times[link];
    if (!times.empty() && !(t > times.back())) {
      throw std::invalid_argument("read_trace_csv: times must increase strictly within a link");
    }
    times.push_back(t);
  }
  tr.transmissions.resize(L);
  for (std::size_t i = 0; i < L; ++i) tr.transmissions[i] = tr.success_times[i].size();
  return tr;
}

}  // namespace ccnet
