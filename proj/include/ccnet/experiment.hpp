#pragma once

// Batch experiments behind the ccnet tool. Each command reads a flat
// key = value settings map, expands its sweep axes into a grid, validates
// every grid point, then runs and renders a CSV table and a JSON summary.
// Both outputs echo the resolved settings, defaults included.
//
// Sweep axes are comma-separated lists: k, q, L, lambda, epsilon. The p key
// holds one per-link list per sweep point, points separated by ';'
// ("0.9,0.8;0.7,0.7"); a single value is broadcast to all L links.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccnet/bounds.hpp"
#include "ccnet/rblt.hpp"
#include "ccnet/simulator.hpp"
#include "ccnet/text.hpp"
#include "ccnet/traffic.hpp"

namespace ccnet::experiment {

using nlohmann::json;

/// Invalid or inconsistent settings, detected before any work starts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class Parse>
auto convert(const std::string& key, const std::string& text, Parse parse) -> decltype(parse(text)) {
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace detail

/// Settings with typed access. Reads record the value in effect so the
/// resolved configuration can be echoed; keys never read are rejected.
class Settings {
 public:
  /// Lines of the form `key = value`; blank lines and '#' comments ignored.
  static Settings parse(std::istream& is) {
    Settings s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (detail::trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      }
      const auto key = detail::trim(std::string_view(line).substr(0, eq));
      if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      s.set(key, detail::trim(std::string_view(line).substr(eq + 1)));
    }
    return s;
  }

  static Settings from_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
    return parse(is);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    const std::string v = it == values_.end() ? fallback : it->second;
    resolved_[key] = v;
    return v;
  }

  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
    return detail::convert(key, str(key, std::to_string(fallback)), parse_u64);
  }

  double real(const std::string& key, double fallback) const {
    return detail::convert(key, str(key, format_number(fallback)), parse_double);
  }

  std::vector<std::string> strs(const std::string& key, const std::string& fallback) const {
    return detail::split(str(key, fallback), ',');
  }

  std::vector<std::uint64_t> u64s(const std::string& key, const std::string& fallback) const {
    std::vector<std::uint64_t> out;
    for (const auto& f : strs(key, fallback)) out.push_back(detail::convert(key, f, parse_u64));
    return out;
  }

  std::vector<double> reals(const std::string& key, const std::string& fallback) const {
    std::vector<double> out;
    for (const auto& f : strs(key, fallback)) out.push_back(detail::convert(key, f, parse_double));
    return out;
  }

  /// ';'-separated groups of ','-separated numbers.
  std::vector<std::vector<double>> real_groups(const std::string& key, const std::string& fallback) const {
    std::vector<std::vector<double>> out;
    for (const auto& group : detail::split(str(key, fallback), ';')) {
      std::vector<double> g;
      for (const auto& f : detail::split(group, ',')) g.push_back(detail::convert(key, f, parse_double));
      if (g.empty()) throw ConfigError("config key '" + key + "': empty group");
      out.push_back(std::move(g));
    }
    return out;
  }

  void reject_unused() const {
    std::string unknown;
    for (const auto& [k, v] : values_) {
      if (!resolved_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys for this command: " + unknown);
  }

  json resolved() const { return json(resolved_); }

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
};

struct RunOptions {
  std::size_t workers = 1;
};

struct Output {
  /// Header-first CSV, preceded by a `# config=<json>` line.
  std::string csv;
  json summary;
};

/// One network and code-size combination of a sweep.
struct GridPoint {
  std::size_t k = 0;
  std::size_t q = 1;
  std::vector<double> p;
  double lambda = 1.0;
  double epsilon = 0.1;

  std::size_t L() const { return p.size(); }

  std::vector<LinkParams> links(Schedule s) const {
    std::vector<LinkParams> out;
    for (double pi : p) out.push_back(s == Schedule::poisson ? LinkParams::poisson(lambda, pi) : LinkParams::deterministic(pi));
    return out;
  }

  /// Smallest gap between consecutive links' success parameters (0 for L = 1).
  double gamma_e() const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < p.size(); ++i) g = std::min(g, std::abs(p[i - 1] - p[i]));
    return std::isfinite(g) ? g : 0.0;
  }

  std::string p_text() const {
    std::string s;
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ";" : "") + format_number(p[i]);
    return s;
  }

  json to_json() const {
    return {{"k", k}, {"q", q}, {"L", L()}, {"p", p}, {"lambda", lambda}, {"epsilon", epsilon}};
  }
};

namespace detail {

inline Schedule read_schedule(const Settings& s) {
  const auto v = s.str("schedule", "deterministic");
  if (v == "deterministic") return Schedule::deterministic;
  if (v == "poisson") return Schedule::poisson;
  throw ConfigError("config key 'schedule': expected deterministic or poisson, got '" + v + "'");
}

inline std::vector<GridPoint> read_grid(const Settings& s, Schedule sched) {
  const auto ks = s.u64s("k", "64");
  const auto qs = s.u64s("q", "1");
  const auto Ls = s.u64s("L", "");
  const auto ps = s.real_groups("p", "0.9");
  const auto lambdas = s.reals("lambda", "1");
  const auto epss = s.reals("epsilon", "0.1");

  std::vector<GridPoint> grid;
  const std::vector<std::uint64_t> L_axis = Ls.empty() ? std::vector<std::uint64_t>{0} : Ls;
  for (auto k : ks)
    for (auto q : qs)
      for (auto L : L_axis)
        for (const auto& group : ps)
          for (double lambda : lambdas)
            for (double eps : epss) {
              GridPoint g;
              g.k = k;
              g.q = q;
              g.lambda = lambda;
              g.epsilon = eps;
              if (L == 0) {
                g.p = group;
              } else if (group.size() == 1) {
                g.p.assign(L, group[0]);
              } else if (group.size() == L) {
                g.p = group;
              } else {
                throw ConfigError("config key 'p': group of " + std::to_string(group.size()) +
                                  " values does not match L = " + std::to_string(L));
              }
              grid.push_back(std::move(g));
            }

  for (const auto& g : grid) {
    try {
      CodeParams{g.k, g.q, 0}.validate();
      for (const auto& l : g.links(sched)) l.validate();
      if (g.L() == 0) throw std::invalid_argument("need at least one link");
      if (!(g.epsilon > 0.0 && g.epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0,1)");
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("grid point ") + g.to_json().dump() + ": " + e.what());
    }
  }
  return grid;
}

inline std::uint64_t trials_of(const Settings& s, std::uint64_t fallback) {
  const auto n = s.u64("trials", fallback);
  if (n == 0) throw ConfigError("config key 'trials': must be >= 1");
  return n;
}

inline BoundInputs bound_inputs(const GridPoint& g, Schedule sched, const Settings& s, bool precode = false) {
  BoundInputs in;
  in.k = g.k;
  in.L = g.L();
  in.q = g.q;
  in.epsilon = g.epsilon;
  in.p = *std::min_element(g.p.begin(), g.p.end());
  in.gamma_e = s.has("gamma_e") ? s.real("gamma_e", 0.0) : g.gamma_e();
  if (precode) {
    in.gamma_a = s.real("gamma_a", 0.1);
    in.gamma_b = s.real("gamma_b", 0.1);
    in.gamma_c = s.real("gamma_c", 0.1);
    in.precode_c = s.real("precode_c", 1.0);
  }
  if (sched == Schedule::poisson) in = poisson_adjust(in, g.links(sched));
  return in;
}

inline json report_json(const BoundReport& r) {
  json checks = json::array();
  for (const auto& c : r.feasibility) checks.push_back({{"condition", c.condition}, {"ratio", number(c.ratio)}, {"warning", c.warning}});
  json j = {{"theorem", r.theorem},
            {"label", r.label},
            {"value", number(r.value)},
            {"overhead", number(r.overhead)},
            {"w_raw", number(r.w_raw)},
            {"w", number(r.w)},
            {"w_floored", r.w_floored},
            {"phi", number(r.phi)},
            {"w_T", number(r.w_T)},
            {"gamma_star", number(r.gamma_star)},
            {"gamma_star_infeasible", r.gamma_star_infeasible},
            {"feasibility", checks},
            {"warnings", r.warnings},
            {"flagged", r.flagged},
            {"conventions", r.conventions}};
  if (r.gamma_o) j["gamma_o"] = *r.gamma_o;
  if (r.gamma_o_prime) j["gamma_o_prime"] = *r.gamma_o_prime;
  if (r.precode_rate) j["precode_rate"] = *r.precode_rate;
  if (r.stated_precode_rate) j["stated_precode_rate"] = *r.stated_precode_rate;
  return j;
}

inline json quantile_json(const QuantileEstimate& q) {
  return {{"level", q.level},
          {"value", number(q.value)},
          {"ci_low", number(q.ci_low)},
          {"ci_high", number(q.ci_high)},
          {"n", q.n},
          {"underpowered", q.underpowered}};
}

inline std::string bool_text(bool b) { return b ? "1" : "0"; }

inline std::string delay_text(const std::optional<double>& d) { return d ? format_number(*d) : std::string("inf"); }

class Table {
 public:
  Table(const json& config, std::vector<std::string> header) : writer_(os_) {
    os_ << "# config=" << config.dump() << '\n';
    writer_.row(header);
  }
  void row(const std::vector<std::string>& fields) { writer_.row(fields); }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  CsvWriter writer_;
};

inline json summary(const std::string& command, const Settings& s, json results) {
  return {{"command", command}, {"config", s.resolved()}, {"results", std::move(results)}};
}

struct TrialRecord {
  std::optional<double> delay;
  double fraction = 1.0;
  std::size_t successes = 0;
  std::size_t transmissions = 0;
  /// Payload mode: decoded message equals the source; unset otherwise.
  std::optional<bool> exact;
};

inline TrialRecord record_of(const SimConfig& cfg, const SimResult& r) {
  TrialRecord t;
  t.delay = r.coding_delay;
  t.fraction = r.undecodable_fraction;
  for (auto x : r.successes) t.successes += x;
  for (auto x : r.transmissions) t.transmissions += x;
  if (cfg.code.m > 0) t.exact = r.recovered.has_value() && *r.recovered == source_message(cfg);
  return t;
}

inline std::string exact_text(const std::optional<bool>& e) { return e ? bool_text(*e) : std::string(); }

inline Horizon read_horizon(const Settings& s, const std::string& fallback) {
  const auto h = s.str("horizon", fallback);
  const double cap = s.real("cap_factor", 20.0);
  if (!(cap > 0.0)) throw ConfigError("config key 'cap_factor': must be > 0");
  if (h == "run") return Horizon::run_to_decode(cap);
  try {
    const double v = parse_double(h);
    if (!(v >= 0.0)) throw std::invalid_argument("negative");
    return Horizon::fixed(v);
  } catch (const std::invalid_argument&) {
    throw ConfigError("config key 'horizon': expected 'run' or a non-negative time, got '" + h + "'");
  }
}

}  // namespace detail

/// Coding-delay quantiles over joint code and traffic randomness.
inline Output cmd_simulate(const Settings& s, const RunOptions& opt) {
  const auto sched = detail::read_schedule(s);
  const auto grid = detail::read_grid(s, sched);
  const auto trials = detail::trials_of(s, 100);
  const auto seed = s.u64("seed", 1);
  const auto traffic_seed = s.u64("traffic_seed", seed);
  const auto m = s.u64("m", 0);
  const auto horizon = detail::read_horizon(s, "run");
  const auto thm = static_cast<int>(s.u64("theorem", 5));
  if (thm < 5 || thm > 8) throw ConfigError("config key 'theorem': simulate compares against theorems 5-8");
  std::vector<BoundInputs> inputs;
  for (const auto& g : grid) inputs.push_back(detail::bound_inputs(g, sched, s));
  for (const auto& in : inputs) {
    try {
      delay_bound(thm, in);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  s.reject_unused();

  detail::Table table(s.resolved(), {"k", "q", "L", "p", "lambda", "trial", "code_seed", "traffic_seed", "coding_delay",
                                     "undecodable_fraction", "successes", "transmissions", "recovered"});
  json results = json::array();
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const auto& g = grid[gi];
    SimConfig cfg;
    cfg.code = {g.k, g.q, m};
    cfg.links = g.links(sched);
    cfg.horizon = horizon;
    cfg.record_trajectory = false;
    cfg.validate();
    const auto recs = run_trials(trials, opt.workers, [&](std::size_t i) {
      const auto c = cfg.with_seeds(seed + i, traffic_seed + i);
      return detail::record_of(c, run_once(c));
    });
    std::vector<double> delays, fractions;
    std::size_t exact = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      delays.push_back(r.delay ? *r.delay : std::numeric_limits<double>::infinity());
      fractions.push_back(r.fraction);
      exact += r.exact.value_or(false);
      table.row({format_number(std::uint64_t{g.k}), format_number(std::uint64_t{g.q}), format_number(std::uint64_t{g.L()}),
                 g.p_text(), format_number(g.lambda), format_number(std::uint64_t{i}), format_number(seed + i),
                 format_number(traffic_seed + i), detail::delay_text(r.delay), format_number(r.fraction),
                 format_number(std::uint64_t{r.successes}), format_number(std::uint64_t{r.transmissions}),
                 detail::exact_text(r.exact)});
    }
    const auto q = empirical_quantile(delays, 1.0 - g.epsilon);
    const double capacity = bottleneck_capacity(cfg.links);
    const double mean = mean_of(delays);
    const auto bound = delay_bound(thm, inputs[gi]);
    json j = g.to_json();
    j["trials"] = trials;
    j["incomplete"] = std::count_if(delays.begin(), delays.end(), [](double d) { return std::isinf(d); });
    j["mean_delay"] = detail::number(mean);
    j["mean_over_capacity"] = detail::number(mean / (static_cast<double>(g.k) / capacity));
    j["quantile"] = detail::quantile_json(q);
    j["mean_undecodable_fraction"] = mean_of(fractions);
    if (m > 0) j["recovered_exact"] = exact;
    j["bound"] = detail::report_json(bound);
    results.push_back(std::move(j));
  }
  return {table.str(), detail::summary("simulate", s, std::move(results))};
}

/// Average coding delay: traffic-averaged delay per code realization, then
/// its quantile over code realizations.
inline Output cmd_average(const Settings& s, const RunOptions& opt) {
  const auto sched = detail::read_schedule(s);
  const auto grid = detail::read_grid(s, sched);
  const auto trials = detail::trials_of(s, 50);
  const auto traffic_trials = s.u64("traffic_trials", 20);
  if (traffic_trials == 0) throw ConfigError("config key 'traffic_trials': must be >= 1");
  const auto seed = s.u64("seed", 1);
  const auto traffic_seed = s.u64("traffic_seed", seed);
  const auto horizon = detail::read_horizon(s, "run");
  const auto thm = static_cast<int>(s.u64("theorem", 6));
  if (thm != 6 && thm != 8) throw ConfigError("config key 'theorem': average compares against theorem 6 or 8");
  std::vector<BoundInputs> inputs;
  for (const auto& g : grid) inputs.push_back(detail::bound_inputs(g, sched, s));
  for (const auto& in : inputs) {
    try {
      delay_bound(thm, in);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  s.reject_unused();

  detail::Table table(s.resolved(), {"k", "q", "L", "p", "lambda", "code_index", "code_seed", "mean_delay"});
  json results = json::array();
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const auto& g = grid[gi];
    SimConfig cfg;
    cfg.code = {g.k, g.q, 0};
    cfg.links = g.links(sched);
    cfg.horizon = horizon;
    cfg.code_seed = seed;
    cfg.traffic_seed = traffic_seed;
    const auto est = estimate_average_delay(cfg, trials, traffic_trials, g.epsilon, opt.workers);
    for (std::size_t i = 0; i < est.code_means.size(); ++i) {
      table.row({format_number(std::uint64_t{g.k}), format_number(std::uint64_t{g.q}), format_number(std::uint64_t{g.L()}),
                 g.p_text(), format_number(g.lambda), format_number(std::uint64_t{i}), format_number(seed + i),
                 format_number(est.code_means[i])});
    }
    json j = g.to_json();
    j["code_trials"] = trials;
    j["traffic_trials"] = traffic_trials;
    j["quantile"] = detail::quantile_json(est.quantile);
    j["bound"] = detail::report_json(delay_bound(thm, inputs[gi]));
    results.push_back(std::move(j));
  }
  return {table.str(), detail::summary("average", s, std::move(results))};
}

/// Chunked code with precoding at a fixed horizon; by default the horizon is
/// (1 + gamma_c)(1 + (1 + gamma_a) gamma_b) k / p.
inline Output cmd_ccp(const Settings& s, const RunOptions& opt) {
  const auto sched = detail::read_schedule(s);
  const auto grid = detail::read_grid(s, sched);
  const auto trials = detail::trials_of(s, 50);
  const auto seed = s.u64("seed", 1);
  const auto traffic_seed = s.u64("traffic_seed", seed);
  const auto m = s.u64("m", 8);
  PrecodeParams pp{s.real("gamma_a", 0.1), s.real("gamma_b", 0.1), s.real("precode_c", 1.0)};
  const double gamma_c = s.real("gamma_c", 0.1);
  const auto horizon_text = s.str("horizon", "ccp");
  const double cap = s.real("cap_factor", 20.0);
  try {
    pp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(gamma_c > 0.0 && gamma_c < 1.0)) throw ConfigError("config key 'gamma_c': must be in (0,1)");
  std::vector<BoundInputs> inputs;
  for (const auto& g : grid) inputs.push_back(detail::bound_inputs(g, sched, s, true));
  std::optional<Horizon> explicit_horizon;
  if (horizon_text != "ccp") {
    Settings h;
    h.set("horizon", horizon_text);
    h.set("cap_factor", format_number(cap));
    explicit_horizon = detail::read_horizon(h, "run");
  }
  s.reject_unused();

  const double threshold = pp.correctable_fraction();
  detail::Table table(s.resolved(), {"k", "q", "L", "p", "lambda", "trial", "code_seed", "traffic_seed", "horizon",
                                     "undecodable_fraction", "qualifies", "precode_decoded", "recovered", "coding_delay"});
  json results = json::array();
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const auto& g = grid[gi];
    SimConfig cfg;
    cfg.code = {g.k, g.q, m};
    cfg.precode = pp;
    cfg.links = g.links(sched);
    cfg.record_trajectory = false;
    const double capacity = bottleneck_capacity(cfg.links);
    const double n_t = (1.0 + gamma_c) * (1.0 + threshold) * static_cast<double>(g.k) / capacity;
    cfg.horizon = explicit_horizon ? *explicit_horizon : Horizon::fixed(n_t);
    cfg.validate();
    const auto recs = run_trials(trials, opt.workers, [&](std::size_t i) {
      const auto c = cfg.with_seeds(seed + i, traffic_seed + i);
      return detail::record_of(c, run_ccp(c));
    });
    std::vector<double> fractions;
    std::size_t qualifying = 0, qualifying_decoded = 0, decoded = 0, exceed = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      const bool qualifies = r.fraction <= threshold;
      const bool dec = m > 0 ? r.exact.value_or(false) : r.delay.has_value();
      fractions.push_back(r.fraction);
      qualifying += qualifies;
      qualifying_decoded += qualifies && dec;
      decoded += dec;
      exceed += !qualifies;
      table.row({format_number(std::uint64_t{g.k}), format_number(std::uint64_t{g.q}), format_number(std::uint64_t{g.L()}),
                 g.p_text(), format_number(g.lambda), format_number(std::uint64_t{i}), format_number(seed + i),
                 format_number(traffic_seed + i), format_number(cfg.horizon.value), format_number(r.fraction),
                 detail::bool_text(qualifies), detail::bool_text(r.delay.has_value()), detail::exact_text(r.exact),
                 detail::delay_text(r.delay)});
    }
    auto in = inputs[gi];
    in.gamma_a = pp.gamma_a;
    in.gamma_b = pp.gamma_b;
    in.gamma_c = gamma_c;
    in.precode_c = pp.c;
    json j = g.to_json();
    j["trials"] = trials;
    j["horizon"] = cfg.horizon.value;
    j["threshold"] = threshold;
    j["mean_undecodable_fraction"] = mean_of(fractions);
    j["variance_undecodable_fraction"] = variance_of(fractions);
    j["exceedance_rate"] = static_cast<double>(exceed) / static_cast<double>(trials);
    j["qualifying_trials"] = qualifying;
    j["qualifying_decoded"] = qualifying_decoded;
    j["decoded"] = decoded;
    const auto lay = layout_of(cfg);
    j["n_intermediate"] = lay.n_coded;
    j["n_padded"] = lay.n_padded;
    j["bound"] = detail::report_json(ccp_delay_bound(in));
    results.push_back(std::move(j));
  }
  return {table.str(), detail::summary("ccp", s, std::move(results))};
}

/// Closed-form bounds and table rows over the sweep grid.
inline Output cmd_bounds(const Settings& s, const RunOptions&) {
  const auto sched = detail::read_schedule(s);
  const auto grid = detail::read_grid(s, sched);
  const auto theorems = s.u64s("theorems", "1,2,5,6,9");
  const auto rows = s.strs("rows", "");
  const double threshold = s.real("threshold", kDefaultFeasibilityThreshold);
  std::vector<BoundInputs> inputs;
  for (const auto& g : grid) inputs.push_back(detail::bound_inputs(g, sched, s, true));

  struct Item {
    std::string kind, id;
    std::size_t point;
    std::optional<BoundReport> report;
    std::optional<TableRow> row;
  };
  std::vector<Item> items;
  try {
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      for (auto t : theorems) {
        const int thm = static_cast<int>(t);
        if (thm < 1 || thm > 12) throw std::invalid_argument("theorem must be in 1..12");
        auto in = inputs[gi];
        if (thm <= 4) in.q = 1;  // dense code
        Item it{"theorem", std::to_string(thm), gi, std::nullopt, std::nullopt};
        it.report = thm <= 8 ? delay_bound(thm, in, threshold) : ccp_delay_bound(in, thm, threshold);
        items.push_back(std::move(it));
      }
      for (const auto& id : rows) {
        Item it{"table", id, gi, std::nullopt, std::nullopt};
        it.row = overhead_table(id, inputs[gi], threshold);
        items.push_back(std::move(it));
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  s.reject_unused();

  detail::Table table(s.resolved(), {"kind", "id", "k", "q", "L", "epsilon", "p", "value", "w", "overhead",
                                     "value_over_capacity", "flagged", "warnings"});
  json results = json::array();
  for (const auto& it : items) {
    const auto& in = inputs[it.point];
    const double kp = static_cast<double>(in.k) / in.p;
    json j = grid[it.point].to_json();
    j["effective_p"] = in.p;
    j["gamma_e"] = in.gamma_e;
    j["kind"] = it.kind;
    j["id"] = it.id;
    std::string value, w, overhead, ratio, flagged, warnings;
    if (it.report) {
      const auto& r = *it.report;
      value = format_number(r.value);
      w = r.theorem <= 8 ? format_number(r.w) : "";
      overhead = format_number(r.overhead);
      ratio = format_number(r.value / kp);
      flagged = detail::bool_text(r.flagged);
      for (const auto& msg : r.warnings) warnings += (warnings.empty() ? "" : "; ") + msg;
      j["report"] = detail::report_json(r);
    } else {
      const auto& r = *it.row;
      value = format_number(r.eta);
      w = r.w ? format_number(*r.w) : "";
      overhead = value;
      bool any = false;
      json conds = json::array();
      for (const auto& c : r.alpha_conditions) {
        any = any || c.warning;
        if (c.warning) warnings += (warnings.empty() ? "condition not met: " : "; ") + c.condition;
        conds.push_back({{"condition", c.condition}, {"ratio", detail::number(c.ratio)}, {"warning", c.warning}});
      }
      flagged = detail::bool_text(any);
      j["row"] = {{"description", r.description},
                  {"eta", detail::number(r.eta)},
                  {"w", r.w ? json(*r.w) : json(nullptr)},
                  {"m", r.m ? json(*r.m) : json(nullptr)},
                  {"alpha_conditions", conds}};
    }
    table.row({it.kind, it.id, format_number(std::uint64_t{in.k}), format_number(std::uint64_t{it.report && it.report->theorem <= 4 ? 1 : in.q}),
               format_number(std::uint64_t{in.L}), format_number(in.epsilon), format_number(in.p), value, w, overhead, ratio,
               flagged, warnings});
    results.push_back(std::move(j));
  }
  auto out = detail::summary("bounds", s, std::move(results));
  out["conventions"] = bound_conventions();
  out["label"] = "analytic curves under stated conventions, not finite-k guarantees";
  return {table.str(), out};
}

/// Empirical RBLT rank deficiency against the lemma bounds.
inline Output cmd_rblt_check(const Settings& s, const RunOptions& opt) {
  const auto rs = s.u64s("r", "3");
  const auto r_lists = s.real_groups("r_list", "3,3");
  const auto gammas = s.u64s("gamma", "2");
  const auto fills = s.strs("upper_fill", "zeros,uniform");
  const auto lemma_pref = s.str("lemma", "auto");
  const auto trials = detail::trials_of(s, 10000);
  const auto seed = s.u64("seed", 1);

  struct Point {
    RbltSpec spec;
    int lemma;
    std::size_t gamma;
    std::size_t n_target;
    BoundValue bound;
  };
  std::vector<Point> points;
  for (auto r : rs)
    for (const auto& group : r_lists)
      for (const auto& fill : fills)
        for (auto gamma : gammas) {
          RbltSpec spec;
          spec.r = r;
          spec.w = group.size();
          for (double x : group) {
            if (!(x >= 0.0) || x != std::floor(x)) throw ConfigError("config key 'r_list': entries must be integers");
            spec.r_list.push_back(static_cast<std::size_t>(x));
          }
          if (fill == "zeros") {
            spec.upper_fill = UpperFill::zeros;
          } else if (fill == "uniform") {
            spec.upper_fill = UpperFill::uniform;
          } else {
            throw ConfigError("config key 'upper_fill': expected zeros or uniform, got '" + fill + "'");
          }
          const bool all_le = std::all_of(spec.r_list.begin(), spec.r_list.end(), [&](auto x) { return x <= r; });
          const bool all_ge = std::all_of(spec.r_list.begin(), spec.r_list.end(), [&](auto x) { return x >= r; });
          int lemma = 0;
          if (lemma_pref == "2" || (lemma_pref == "auto" && all_le)) {
            lemma = 2;
          } else if (lemma_pref == "3" || (lemma_pref == "auto" && all_ge)) {
            lemma = 3;
          } else if (lemma_pref == "auto") {
            throw ConfigError("config key 'r_list': entries straddle r; neither lemma applies");
          } else {
            throw ConfigError("config key 'lemma': expected auto, 2 or 3");
          }
          Point pt{spec, lemma, gamma, lemma == 2 ? spec.n_cols() : spec.n_rows(), {}};
          try {
            pt.bound = lemma == 2 ? lemma2_bound(spec, gamma) : lemma3_bound(spec, gamma);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
          }
          points.push_back(std::move(pt));
        }
  s.reject_unused();

  const auto ests = run_trials(points.size(), opt.workers, [&](std::size_t i) {
    Rng rng(seed, Stream::matrix, i);
    return estimate_rank_deficiency(points[i].spec, points[i].gamma, points[i].n_target, trials, rng);
  });
  detail::Table table(s.resolved(), {"w", "r", "r_list", "upper_fill", "lemma", "gamma", "n_target", "bound", "vacuous",
                                     "empirical", "half_width", "margin", "pass"});
  json results = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    const auto& e = ests[i];
    std::string rl;
    for (std::size_t j = 0; j < pt.spec.r_list.size(); ++j) rl += (j ? ";" : "") + std::to_string(pt.spec.r_list[j]);
    const double margin = pt.bound.value + e.half_width - e.frequency;
    const bool pass = margin >= 0.0;
    const std::string fill = pt.spec.upper_fill == UpperFill::zeros ? "zeros" : "uniform";
    table.row({format_number(std::uint64_t{pt.spec.w}), format_number(std::uint64_t{pt.spec.r}), rl, fill,
               std::to_string(pt.lemma), format_number(std::uint64_t{pt.gamma}), format_number(std::uint64_t{pt.n_target}),
               format_number(pt.bound.value), detail::bool_text(pt.bound.vacuous), format_number(e.frequency),
               format_number(e.half_width), format_number(margin), detail::bool_text(pass)});
    results.push_back({{"w", pt.spec.w},
                       {"r", pt.spec.r},
                       {"r_list", pt.spec.r_list},
                       {"upper_fill", fill},
                       {"lemma", pt.lemma},
                       {"gamma", pt.gamma},
                       {"n_target", pt.n_target},
                       {"bound", pt.bound.value},
                       {"u", pt.bound.u},
                       {"vacuous", pt.bound.vacuous},
                       {"empirical", e.frequency},
                       {"half_width", e.half_width},
                       {"trials", e.trials},
                       {"pass", pass}});
  }
  return {table.str(), detail::summary("rblt-check", s, std::move(results))};
}

/// Paired empirical and analytic delays along the sweep, for plots of
/// delay / (k / capacity) against k.
inline Output cmd_compare(const Settings& s, const RunOptions& opt) {
  const auto sched = detail::read_schedule(s);
  const auto grid = detail::read_grid(s, sched);
  const auto trials = detail::trials_of(s, 100);
  const auto seed = s.u64("seed", 1);
  const auto traffic_seed = s.u64("traffic_seed", seed);
  const auto horizon = detail::read_horizon(s, "run");
  const auto thm = static_cast<int>(s.u64("theorem", 5));
  if (thm < 5 || thm > 8) throw ConfigError("config key 'theorem': compare uses theorems 5-8");
  std::vector<BoundInputs> inputs;
  for (const auto& g : grid) inputs.push_back(detail::bound_inputs(g, sched, s));
  for (const auto& in : inputs) {
    try {
      delay_bound(thm, in);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  s.reject_unused();

  detail::Table table(s.resolved(), {"k", "q", "L", "p", "lambda", "epsilon", "trials", "empirical_quantile",
                                     "empirical_mean", "bound", "quantile_over_capacity", "mean_over_capacity",
                                     "bound_over_capacity"});
  json results = json::array();
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const auto& g = grid[gi];
    SimConfig cfg;
    cfg.code = {g.k, g.q, 0};
    cfg.links = g.links(sched);
    cfg.horizon = horizon;
    cfg.code_seed = seed;
    cfg.traffic_seed = traffic_seed;
    const auto est = estimate_delay_quantile(cfg, trials, g.epsilon, opt.workers);
    const auto bound = delay_bound(thm, inputs[gi]);
    const double unit = static_cast<double>(g.k) / bottleneck_capacity(cfg.links);
    table.row({format_number(std::uint64_t{g.k}), format_number(std::uint64_t{g.q}), format_number(std::uint64_t{g.L()}),
               g.p_text(), format_number(g.lambda), format_number(g.epsilon), format_number(std::uint64_t{trials}),
               format_number(est.quantile.value), format_number(est.mean), format_number(bound.value),
               format_number(est.quantile.value / unit), format_number(est.mean / unit), format_number(bound.value / unit)});
    json j = g.to_json();
    j["trials"] = trials;
    j["incomplete"] = est.incomplete;
    j["quantile"] = detail::quantile_json(est.quantile);
    j["mean_delay"] = detail::number(est.mean);
    j["bound"] = detail::report_json(bound);
    results.push_back(std::move(j));
  }
  return {table.str(), detail::summary("compare", s, std::move(results))};
}

/// Samples one traffic realization and writes its success times.
inline Output cmd_trace_export(const Settings& s, const RunOptions&) {
  const auto sched = detail::read_schedule(s);
  const auto grid = detail::read_grid(s, sched);
  const double horizon = s.real("horizon", 1000.0);
  const auto seed = s.u64("seed", 1);
  const auto traffic_seed = s.u64("traffic_seed", seed);
  if (grid.size() != 1) throw ConfigError("trace-export needs exactly one network (no sweep)");
  if (!(horizon > 0.0)) throw ConfigError("config key 'horizon': must be > 0");
  s.reject_unused();

  const auto tr = sample_trace({grid[0].links(sched), horizon}, traffic_seed);
  std::ostringstream os;
  os << "# config=" << s.resolved().dump() << '\n';
  write_trace_csv(os, tr);
  json links = json::array();
  for (std::size_t i = 0; i < tr.L(); ++i) {
    links.push_back({{"link", i},
                     {"transmissions", tr.transmissions[i]},
                     {"successes", tr.successes(i)},
                     {"success_rate_per_time", static_cast<double>(tr.successes(i)) / horizon}});
  }
  json results = json::array({{{"horizon", horizon}, {"traffic_seed", traffic_seed}, {"links", links}}});
  return {os.str(), detail::summary("trace-export", s, std::move(results))};
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"simulate", "average", "ccp", "bounds", "rblt-check", "compare",
                                                 "trace-export"};
  return names;
}

inline Output run_command(const std::string& name, const Settings& s, const RunOptions& opt) {
  if (name == "simulate") return cmd_simulate(s, opt);
  if (name == "average") return cmd_average(s, opt);
  if (name == "ccp") return cmd_ccp(s, opt);
  if (name == "bounds") return cmd_bounds(s, opt);
  if (name == "rblt-check") return cmd_rblt_check(s, opt);
  if (name == "compare") return cmd_compare(s, opt);
  if (name == "trace-export") return cmd_trace_export(s, opt);
  throw ConfigError("unknown command '" + name + "'");
}

/// Writes <dir>/<name>.csv and/or <dir>/<name>.json; returns the paths.
inline std::vector<std::filesystem::path> write_output(const Output& out, const std::string& name,
                                                       const std::filesystem::path& dir, bool csv, bool json_file) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto put = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    os << text;
    written.push_back(p);
  };
  if (csv) put(dir / (name + ".csv"), out.csv);
  if (json_file) put(dir / (name + ".json"), out.summary.dump(2) + "\n");
  return written;
}

}  // namespace ccnet::experiment
