#pragma once

// Event-driven execution of the chunked code over a line network of L links
// (nodes v_0 .. v_L), and Monte Carlo estimators built on it.
//
// Timing: successful packets arrive with zero delay, but a node only combines
// packets that arrived strictly before the current event time. Events that
// share a time stamp are processed as one group: every emission of the group
// is formed first (links in ascending order), then all are delivered. On
// deterministic-regular links this is slot-by-slot store-and-forward.
//
// Randomness: node i draws its chunk choices and combination coefficients
// from stream (code_seed, code, i), link i draws transmissions and losses
// from (traffic_seed, traffic, i), payloads come from (code_seed, message)
// and the precode generator from (code_seed, precode). Holding code_seed
// fixed while varying traffic_seed therefore keeps the code realization and
// changes only the traffic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ccnet/codes.hpp"
#include "ccnet/gf2.hpp"
#include "ccnet/rng.hpp"
#include "ccnet/stats.hpp"
#include "ccnet/traffic.hpp"

namespace ccnet {

/// Either run until decoding completes, giving up at cap_factor * k / c time
/// units (c the bottleneck capacity), or run for a fixed time N_T.
struct Horizon {
  enum class Kind { run_to_decode, fixed };
  Kind kind = Kind::run_to_decode;
  double value = 20.0;

  static Horizon run_to_decode(double cap_factor = 20.0) { return {Kind::run_to_decode, cap_factor}; }
  static Horizon fixed(double n_t) { return {Kind::fixed, n_t}; }
  bool is_fixed() const { return kind == Kind::fixed; }
};

struct SimConfig {
  CodeParams code;
  std::optional<PrecodeParams> precode;
  std::vector<LinkParams> links;
  std::uint64_t code_seed = 1;
  std::uint64_t traffic_seed = 1;
  Horizon horizon;
  bool record_trajectory = true;

  std::size_t L() const { return links.size(); }

  void validate() const {
    code.validate();
    if (precode) precode->validate();
    if (links.empty()) throw std::invalid_argument("SimConfig: need at least one link");
    for (const auto& l : links) l.validate();
    if (horizon.is_fixed() ? !(horizon.value >= 0.0) : !(horizon.value > 0.0)) {
      throw std::invalid_argument("SimConfig: horizon value must be positive");
    }
  }

  SimConfig with_seeds(std::uint64_t code, std::uint64_t traffic) const {
    SimConfig c = *this;
    c.code_seed = code;
    c.traffic_seed = traffic;
    return c;
  }
};

/// How the message maps onto chunks. Without a precode the chunked code
/// carries the k message vectors directly; with one it carries the
/// n_intermediate precoded vectors, zero-padded to a multiple of alpha.
struct CodeLayout {
  std::size_t k = 0;
  std::size_t alpha = 0;
  std::size_t n_coded = 0;
  std::size_t n_padded = 0;
  std::size_t q = 0;
  std::size_t m = 0;

  CodeParams chunked() const { return {n_padded, q, m}; }
};

inline CodeLayout layout_of(const SimConfig& cfg) {
  CodeLayout lay;
  lay.k = cfg.code.k;
  lay.alpha = cfg.code.alpha();
  lay.m = cfg.code.m;
  if (cfg.precode) {
    lay.n_coded = cfg.precode->n_intermediate(lay.k);
    lay.n_padded = cfg.precode->padded_size(lay.k, lay.alpha);
  } else {
    lay.n_coded = lay.n_padded = lay.k;
  }
  lay.q = lay.n_padded / lay.alpha;
  return lay;
}

/// The source message of a configuration (empty in coefficient-only mode).
inline std::vector<BitVector> source_message(const SimConfig& cfg) {
  if (cfg.code.m == 0) return {};
  Rng rng(cfg.code_seed, Stream::message);
  return random_message(cfg.code.k, cfg.code.m, rng);
}

inline Precode make_precode(const SimConfig& cfg) {
  if (!cfg.precode) throw std::invalid_argument("make_precode: configuration has no precode");
  Rng rng(cfg.code_seed, Stream::precode);
  return Precode(cfg.code.k, *cfg.precode, rng);
}

struct RankSample {
  double time = 0.0;
  std::size_t rank = 0;
};

struct SimResult {
  /// Decoding completion time; empty when the cap or the fixed horizon was
  /// reached first.
  std::optional<double> coding_delay;
  bool cap_exceeded = false;
  double end_time = 0.0;
  std::vector<std::optional<double>> chunk_decode_times;
  /// Share of the (non-padding) coded vectors lying in chunks that were not
  /// decodable at end_time.
  double undecodable_fraction = 1.0;
  std::vector<RankSample> rank_trajectory;
  std::vector<std::size_t> successes;
  std::vector<std::size_t> transmissions;
  /// Decoded message, payload mode only.
  std::optional<std::vector<BitVector>> recovered;

  double delay_or_infinity() const {
    return coding_delay ? *coding_delay : std::numeric_limits<double>::infinity();
  }
};

namespace detail {

class LinkFeed {
 public:
  explicit LinkFeed(LinkProcess proc) : src_(std::move(proc)) {}
  explicit LinkFeed(const std::vector<double>& recorded) : src_(Recorded{&recorded, 0}) {}

  std::optional<TransmissionEvent> next() {
    if (auto* proc = std::get_if<LinkProcess>(&src_)) return proc->next();
    auto& rec = std::get<Recorded>(src_);
    if (rec.pos == rec.times->size()) return std::nullopt;
    return TransmissionEvent{(*rec.times)[rec.pos++], true};
  }

 private:
  struct Recorded {
    const std::vector<double>* times;
    std::size_t pos;
  };
  std::variant<LinkProcess, Recorded> src_;
};

class Session {
 public:
  Session(const SimConfig& cfg, std::vector<LinkFeed> feeds, double feed_end)
      : cfg_(cfg), lay_(layout_of(cfg)), cc_(lay_.chunked()), feeds_(std::move(feeds)), sink_(cc_) {
    const std::size_t L = cfg.L();
    for (std::size_t i = 1; i < L; ++i) buffers_.emplace_back(cc_);
    for (std::size_t i = 0; i < L; ++i) node_rng_.emplace_back(cfg.code_seed, Stream::code, i);

    message_ = source_message(cfg);
    if (cfg.precode) precode_.emplace(make_precode(cfg));
    if (lay_.m > 0) {
      source_vectors_ = precode_ ? precode_->encode(message_) : message_;
      source_vectors_.resize(lay_.n_padded, BitVector(lay_.m));
    }

    if (cfg.horizon.is_fixed()) {
      stop_time_ = std::min(cfg.horizon.value, feed_end);
    } else {
      stop_time_ = std::min(cfg.horizon.value * static_cast<double>(lay_.n_padded) / bottleneck_capacity(cfg.links),
                            feed_end);
    }

    result_.chunk_decode_times.assign(lay_.q, std::nullopt);
    result_.successes.assign(L, 0);
    result_.transmissions.assign(L, 0);
    recovered_.assign(lay_.n_coded, false);

    for (std::size_t idx = lay_.n_coded; idx < lay_.n_padded; ++idx) {
      sink_.mark_known(idx / lay_.alpha, idx % lay_.alpha, BitVector(lay_.m));
    }
    sample_rank(0.0);
  }

  SimResult run() {
    const std::size_t L = cfg_.L();
    std::vector<std::optional<TransmissionEvent>> pending(L);
    for (std::size_t i = 0; i < L; ++i) pending[i] = feeds_[i].next();

    std::vector<std::pair<std::size_t, Packet>> outgoing;
    double last_time = 0.0;
    bool done = false;
    while (!done) {
      double t = std::numeric_limits<double>::infinity();
      for (const auto& ev : pending) {
        if (ev) t = std::min(t, ev->time);
      }
      if (!(t <= stop_time_)) break;

      outgoing.clear();
      for (std::size_t i = 0; i < L; ++i) {
        if (!pending[i] || pending[i]->time != t) continue;
        ++result_.transmissions[i];
        if (pending[i]->success) {
          ++result_.successes[i];
          outgoing.emplace_back(i, emit(i));
        }
        pending[i] = feeds_[i].next();
      }
      for (auto& [link, pkt] : outgoing) {
        if (deliver(link, pkt, t)) done = true;
      }
      last_time = t;
    }

    result_.end_time = done || !cfg_.horizon.is_fixed() ? last_time : stop_time_;
    result_.cap_exceeded = !result_.coding_delay && !cfg_.horizon.is_fixed();
    finish();
    return std::move(result_);
  }

 private:
  Packet emit(std::size_t link) {
    if (link == 0) return source_emit(cc_, source_vectors_, node_rng_[0]);
    return recode(buffers_[link - 1], cc_, node_rng_[link]);
  }

  // Returns true once the run can stop.
  bool deliver(std::size_t link, const Packet& pkt, double t) {
    if (link + 1 < cfg_.L()) {
      buffers_[link].store(pkt);
      return false;
    }
    const auto outcome = sink_.receive(pkt);
    if (outcome.innovative) sample_rank(t);
    if (!outcome.chunk_now_decodable) return false;

    result_.chunk_decode_times[pkt.chunk] = t;
    const std::size_t lo = pkt.chunk * lay_.alpha;
    const std::size_t hi = std::min(lo + lay_.alpha, lay_.n_coded);
    for (std::size_t idx = lo; idx < hi; ++idx) recovered_[idx] = true;
    recovered_count_ += hi > lo ? hi - lo : 0;

    if (!result_.coding_delay) {
      if (precode_) {
        if (recovered_count_ >= lay_.k && precode_->deficit(recovered_indices()) == 0) result_.coding_delay = t;
      } else if (sink_.complete()) {
        result_.coding_delay = t;
      }
    }
    if (sink_.complete()) return true;
    return result_.coding_delay.has_value() && !cfg_.horizon.is_fixed();
  }

  std::vector<std::size_t> recovered_indices() const {
    std::vector<std::size_t> out;
    out.reserve(recovered_count_);
    for (std::size_t i = 0; i < recovered_.size(); ++i) {
      if (recovered_[i]) out.push_back(i);
    }
    return out;
  }

  void sample_rank(double t) {
    if (cfg_.record_trajectory) result_.rank_trajectory.push_back({t, sink_.total_rank()});
  }

  void finish() {
    result_.undecodable_fraction =
        static_cast<double>(lay_.n_coded - recovered_count_) / static_cast<double>(lay_.n_coded);
    if (lay_.m == 0 || !result_.coding_delay) return;

    if (!precode_) {
      std::vector<BitVector> msg;
      msg.reserve(lay_.k);
      for (std::size_t c = 0; c < lay_.q; ++c) {
        auto part = sink_.decode_chunk(c);
        msg.insert(msg.end(), part->begin(), part->end());
      }
      result_.recovered = std::move(msg);
      return;
    }
    std::vector<RecoveredVector> rows;
    for (std::size_t c = 0; c < lay_.q; ++c) {
      if (!sink_.chunk_decodable(c)) continue;
      auto part = sink_.decode_chunk(c);
      for (std::size_t j = 0; j < lay_.alpha; ++j) {
        const std::size_t idx = c * lay_.alpha + j;
        if (idx < lay_.n_coded) rows.push_back({idx, std::move((*part)[j])});
      }
    }
    auto decoded = precode_->decode(rows);
    if (decoded.ok()) result_.recovered = std::move(decoded.message);
  }

  const SimConfig& cfg_;
  CodeLayout lay_;
  CodeParams cc_;
  std::vector<LinkFeed> feeds_;
  std::vector<NodeBuffer> buffers_;
  std::vector<Rng> node_rng_;
  SinkDecoder sink_;
  std::vector<BitVector> message_;
  std::vector<BitVector> source_vectors_;
  std::optional<Precode> precode_;
  double stop_time_ = 0.0;
  std::vector<bool> recovered_;
  std::size_t recovered_count_ = 0;
  SimResult result_;
};

}  // namespace detail

/// One execution with traffic generated from cfg.traffic_seed.
inline SimResult run_once(const SimConfig& cfg) {
  cfg.validate();
  std::vector<detail::LinkFeed> feeds;
  for (std::size_t i = 0; i < cfg.L(); ++i) {
    feeds.emplace_back(LinkProcess(cfg.links[i], link_seed(cfg.traffic_seed, i)));
  }
  return detail::Session(cfg, std::move(feeds), std::numeric_limits<double>::infinity()).run();
}

/// One execution replaying a recorded trace; the run ends no later than the
/// trace horizon. cfg.links still sets the capacity used for the cap.
inline SimResult run_once(const SimConfig& cfg, const TrafficTrace& trace) {
  cfg.validate();
  if (trace.L() != cfg.L()) throw std::invalid_argument("run_once: trace has a different link count");
  std::vector<detail::LinkFeed> feeds;
  for (std::size_t i = 0; i < cfg.L(); ++i) feeds.emplace_back(trace.success_times[i]);
  return detail::Session(cfg, std::move(feeds), trace.horizon).run();
}

/// Chunked code with precoding; the coding delay is the first time the
/// recovered intermediate vectors determine the whole message.
inline SimResult run_ccp(const SimConfig& cfg) {
  if (!cfg.precode) throw std::invalid_argument("run_ccp: configuration has no precode");
  return run_once(cfg);
}

struct DelayQuantile {
  QuantileEstimate quantile;
  /// Infinite when any trial failed to complete.
  double mean = 0.0;
  std::vector<double> delays;
  std::size_t incomplete = 0;
};

/// (1 - epsilon)-quantile of the coding delay over joint code and traffic
/// randomness. Trial i uses seeds (code_seed + i, traffic_seed + i).
inline DelayQuantile estimate_delay_quantile(const SimConfig& cfg, std::size_t trials, double epsilon,
                                             std::size_t workers = 1) {
  cfg.validate();
  if (trials == 0) throw std::invalid_argument("estimate_delay_quantile: trials must be >= 1");
  SimConfig base = cfg;
  base.record_trajectory = false;
  DelayQuantile out;
  out.delays = run_trials(trials, workers, [&](std::size_t i) {
    return run_once(base.with_seeds(base.code_seed + i, base.traffic_seed + i)).delay_or_infinity();
  });
  for (double d : out.delays) out.incomplete += std::isinf(d) ? 1 : 0;
  out.mean = mean_of(out.delays);
  out.quantile = empirical_quantile(out.delays, 1.0 - epsilon);
  return out;
}

struct AverageDelayEstimate {
  QuantileEstimate quantile;
  /// Traffic-averaged delay of each code realization.
  std::vector<double> code_means;
};

/// For code realizations code_seed + i, averages the delay over traffic seeds
/// traffic_seed + j (j < traffic_trials), then takes the (1 - epsilon)-
/// quantile across code realizations.
inline AverageDelayEstimate estimate_average_delay(const SimConfig& cfg, std::size_t code_trials,
                                                   std::size_t traffic_trials, double epsilon,
                                                   std::size_t workers = 1) {
  cfg.validate();
  if (code_trials == 0 || traffic_trials == 0) {
    throw std::invalid_argument("estimate_average_delay: trial counts must be >= 1");
  }
  SimConfig base = cfg;
  base.record_trajectory = false;
  AverageDelayEstimate out;
  out.code_means = run_trials(code_trials, workers, [&](std::size_t i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < traffic_trials; ++j) {
      sum += run_once(base.with_seeds(base.code_seed + i, base.traffic_seed + j)).delay_or_infinity();
    }
    return sum / static_cast<double>(traffic_trials);
  });
  out.quantile = empirical_quantile(out.code_means, 1.0 - epsilon);
  return out;
}

struct UndecodableStats {
  double mean = 0.0;
  double variance = 0.0;
  double threshold = 0.0;
  /// Share of trials whose fraction exceeded the threshold.
  double exceedance = 0.0;
  std::vector<double> fractions;
};

/// Undecodable fraction at a fixed horizon over `trials` seed pairs.
inline UndecodableStats measure_undecodable_fraction(const SimConfig& cfg, std::size_t trials, double threshold,
                                                     std::size_t workers = 1) {
  cfg.validate();
  if (!cfg.horizon.is_fixed()) throw std::invalid_argument("measure_undecodable_fraction: needs a fixed horizon");
  if (trials == 0) throw std::invalid_argument("measure_undecodable_fraction: trials must be >= 1");
  SimConfig base = cfg;
  base.record_trajectory = false;
  UndecodableStats out;
  out.threshold = threshold;
  out.fractions = run_trials(trials, workers, [&](std::size_t i) {
    return run_once(base.with_seeds(base.code_seed + i, base.traffic_seed + i)).undecodable_fraction;
  });
  out.mean = mean_of(out.fractions);
  out.variance = variance_of(out.fractions);
  std::size_t over = 0;
  for (double f : out.fractions) over += f > threshold ? 1 : 0;
  out.exceedance = static_cast<double>(over) / static_cast<double>(trials);
  return out;
}

}  // namespace ccnet
