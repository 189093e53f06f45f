#pragma once

// Experiment driver: spec parsing (flags + flat key=value config file),
// single-realization convergence traces and Monte-Carlo SNR sweeps, written
// as CSV.

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wsrpso/bd.hpp"
#include "wsrpso/channel.hpp"
#include "wsrpso/errors.hpp"
#include "wsrpso/link.hpp"
#include "wsrpso/pso.hpp"
#include "wsrpso/system_model.hpp"

namespace wsrpso {

enum class Mode { convergence, sweep };
enum class Method { pso, bd };

struct ExperimentSpec {
  SystemConfig system;  // p_max follows from each SNR point
  std::vector<double> snr_db_list;
  std::size_t n_realizations = 20;
  PsoParams pso;
  std::uint64_t master_seed = 1;
  Mode mode = Mode::convergence;
  std::string out_path;
};

struct SweepRow {
  double snr_db = 0.0;
  Method method = Method::pso;
  double mean_wsr = 0.0;
  double std_wsr = 0.0;
  std::size_t n = 0;
};

/// Thrown by parse_spec when --help was given; what() is the usage text.
class HelpRequested : public Error {
 public:
  using Error::Error;
};

/// P_max for an SNR in dB at the configured noise power.
inline double p_max_from_snr_db(double snr_db, double noise_power = 1.0) {
  return noise_power * std::pow(10.0, snr_db / 10.0);
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline const char* to_string(Method m) { return m == Method::pso ? "pso" : "bd"; }

namespace detail {

// Canonical key: lowercase, no leading dashes, no '-' or '_'.
inline std::string canonical_key(std::string key) {
  std::string out;
  for (char c : key)
    if (c != '-' && c != '_') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct KnownKey {
  const char* flag;  // CLI spelling without leading dashes
  const char* help;
};

inline const std::vector<KnownKey>& known_keys() {
  static const std::vector<KnownKey> keys{
      {"mode", "convergence | sweep"},
      {"users", "number of users K (default 3)"},
      {"nt", "transmit antennas (default 6)"},
      {"nr", "receive antennas per user (default 2)"},
      {"streams", "streams per user d (default 1)"},
      {"weights", "comma-separated user weights (default all 1)"},
      {"snr-db", "comma-separated SNR list in dB (default 10 for convergence, 0,5,...,25 for sweep)"},
      {"realizations", "channel realizations per SNR point (default 20)"},
      {"swarm-size", "particles S (default 100)"},
      {"iters", "iterations K_max (default 300)"},
      {"seed", "master seed (default 1)"},
      {"out", "output CSV path"},
      {"r-mode", "scalar | per-entry (default scalar)"},
      {"plateau-stop", "stop after 100 iterations without improvement (default false)"},
      {"c0", "inertia weight (default 0.7)"},
      {"c1", "cognitive weight (default 1.494)"},
      {"c2", "social weight (default 1.494)"},
      {"workers", "worker threads (default 1)"},
  };
  return keys;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path,
                                                           std::vector<std::string>& errors) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(path + ":" + std::to_string(lineno) + ": expected key=value");
      continue;
    }
    out[canonical_key(trim(line.substr(0, eq)))] = trim(line.substr(eq + 1));
  }
  return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) parts.push_back(trim(cur));
  return parts;
}

inline std::optional<double> to_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

inline std::optional<std::uint64_t> to_count(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
    return std::nullopt;
  try {
    return std::stoull(s);
  } catch (...) {
    return std::nullopt;
  }
}

inline std::optional<bool> to_bool(const std::string& s) {
  const std::string v = canonical_key(s);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  return std::nullopt;
}

}  // namespace detail

/// Builds an ExperimentSpec from command-line arguments (program name
/// excluded). A --config file supplies flat key=value pairs; flags override
/// it. Every problem found is reported in one ValidationError.
inline ExperimentSpec parse_spec(const std::vector<std::string>& args) {
  CLI::App app{"Weighted sum-rate transceiver design for the MIMO broadcast channel"};
  std::map<std::string, std::string> cli_values;
  std::string config_path;
  bool plateau_flag = false;
  app.add_option("--config", config_path, "flat key=value config file");
  for (const auto& key : detail::known_keys()) {
    const std::string name = std::string("--") + key.flag;
    if (std::string(key.flag) == "plateau-stop") {
      app.add_flag(name, plateau_flag, key.help);
    } else {
      app.add_option_function<std::string>(
          name, [&cli_values, k = detail::canonical_key(key.flag)](const std::string& v) { cli_values[k] = v; },
          key.help);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw ValidationError(std::string("command line: ") + e.what());
  }
  if (plateau_flag) cli_values["plateaustop"] = "true";

  std::vector<std::string> errors;
  std::map<std::string, std::string> values;
  if (!config_path.empty()) {
    values = detail::read_config_file(config_path, errors);
    for (const auto& [k, v] : values) {
      const bool known = std::any_of(detail::known_keys().begin(), detail::known_keys().end(),
                                     [&](const auto& kk) { return detail::canonical_key(kk.flag) == k; });
      if (!known) errors.push_back("config: unknown key '" + k + "'");
    }
  }
  for (const auto& [k, v] : cli_values) values[k] = v;

  auto get = [&](const char* key) -> std::optional<std::string> {
    const auto it = values.find(detail::canonical_key(key));
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
  auto count = [&](const char* key, auto& target) {
    if (auto v = get(key)) {
      if (auto n = detail::to_count(*v))
        target = static_cast<std::remove_reference_t<decltype(target)>>(*n);
      else
        errors.push_back(std::string(key) + ": expected a non-negative integer, got '" + *v + "'");
    }
  };
  auto real = [&](const char* key, double& target) {
    if (auto v = get(key)) {
      if (auto x = detail::to_double(*v))
        target = *x;
      else
        errors.push_back(std::string(key) + ": expected a number, got '" + *v + "'");
    }
  };
  auto real_list = [&](const char* key, std::vector<double>& target) -> bool {
    auto v = get(key);
    if (!v) return false;
    target.clear();
    for (const auto& part : detail::split_list(*v)) {
      if (auto x = detail::to_double(part)) {
        target.push_back(*x);
      } else {
        errors.push_back(std::string(key) + ": expected a comma-separated list of numbers, got '" + *v + "'");
        target.clear();
        break;
      }
    }
    return true;
  };

  ExperimentSpec spec;
  if (auto m = get("mode")) {
    if (*m == "convergence")
      spec.mode = Mode::convergence;
    else if (*m == "sweep")
      spec.mode = Mode::sweep;
    else
      errors.push_back("mode: expected 'convergence' or 'sweep', got '" + *m + "'");
  } else {
    errors.emplace_back("mode: required (convergence or sweep)");
  }
  if (auto o = get("out"))
    spec.out_path = *o;
  else
    errors.emplace_back("out: required output path");

  auto& sys = spec.system;
  count("users", sys.users);
  count("nt", sys.tx_antennas);
  count("nr", sys.rx_antennas);
  count("streams", sys.streams);
  sys.noise_power = 1.0;
  if (!real_list("weights", sys.weights)) sys.weights.assign(sys.users, 1.0);
  if (!real_list("snr-db", spec.snr_db_list)) {
    spec.snr_db_list = spec.mode == Mode::sweep ? std::vector<double>{0, 5, 10, 15, 20, 25} : std::vector<double>{10};
  }
  count("realizations", spec.n_realizations);
  count("swarm-size", spec.pso.swarm_size);
  count("iters", spec.pso.max_iters);
  count("seed", spec.master_seed);
  count("workers", spec.pso.workers);
  real("c0", spec.pso.c0);
  real("c1", spec.pso.c1);
  real("c2", spec.pso.c2);
  if (auto r = get("r-mode")) {
    const auto v = detail::canonical_key(*r);
    if (v == "scalar" || v == "scalarperparticle")
      spec.pso.r_mode = RandomMode::scalar_per_particle;
    else if (v == "perentry")
      spec.pso.r_mode = RandomMode::per_entry;
    else
      errors.push_back("r-mode: expected 'scalar' or 'per-entry', got '" + *r + "'");
  }
  if (auto p = get("plateau-stop")) {
    if (auto b = detail::to_bool(*p))
      spec.pso.plateau_stop = *b;
    else
      errors.push_back("plateau-stop: expected true or false, got '" + *p + "'");
  }

  if (spec.snr_db_list.empty()) errors.emplace_back("snr-db: list must be non-empty");
  if (spec.n_realizations < 1) errors.emplace_back("realizations must be >= 1");
  if (!spec.snr_db_list.empty()) sys.p_max = p_max_from_snr_db(spec.snr_db_list.front(), sys.noise_power);
  for (auto& e : validate(sys).errors) errors.push_back(std::move(e));
  for (auto& e : validate_params(spec.pso)) errors.push_back(std::move(e));

  if (!errors.empty()) throw ValidationError(std::move(errors));
  return spec;
}

inline void write_convergence_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
  out << "iteration,gbest_wsr_bits\n";
  for (const auto& t : trace) out << t.iteration << ',' << format_number(t.gbest_value) << '\n';
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "snr_db,method,mean_wsr_bits,std_wsr_bits,n\n";
  for (const auto& r : rows)
    out << format_number(r.snr_db) << ',' << to_string(r.method) << ',' << format_number(r.mean_wsr) << ','
        << format_number(r.std_wsr) << ',' << r.n << '\n';
}

namespace detail {

inline void require_monotone(const std::vector<TracePoint>& trace, const std::string& where) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i].gbest_value < trace[i - 1].gbest_value)
      throw NumericalError(where + ": global best decreased at iteration " + std::to_string(trace[i].iteration));
}

template <class Write>
void write_file(const std::string& path, Write&& write) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file '" + path + "'");
  write(out);
  out.flush();
  if (!out) throw IoError("failed writing output file '" + path + "'");
}

}  // namespace detail

/// Global-best trace for realization 0 at the first SNR point.
inline std::vector<TracePoint> convergence_trace(const ExperimentSpec& spec, std::ostream& log) {
  SystemConfig cfg = spec.system;
  cfg.p_max = p_max_from_snr_db(spec.snr_db_list.front(), cfg.noise_power);
  const ChannelSet h = gen_channels(cfg, spec.master_seed, 0);
  log << "convergence: seed=" << spec.master_seed << " channel stream=(channel,0) snr_db="
      << format_number(spec.snr_db_list.front()) << '\n';
  const auto bd = bd_design(cfg, h);
  const double bd_value = weighted_sum_rate(cfg, h, bd.f, bd.w);
  auto result = optimize(cfg, h, spec.pso, SwarmSeed{spec.master_seed, 0}, bd.f);
  detail::require_monotone(result.trace, "convergence");
  if (result.gbest_value < bd_value - 1e-9)
    throw NumericalError("convergence: PSO result fell below the BD baseline");
  log << "convergence: bd=" << format_number(bd_value) << " pso=" << format_number(result.gbest_value) << '\n';
  return std::move(result.trace);
}

inline std::vector<TracePoint> run_convergence(const ExperimentSpec& spec, std::ostream& log = std::cerr) {
  if (spec.mode != Mode::convergence) throw ValidationError("run_convergence: mode must be convergence");
  auto trace = convergence_trace(spec, log);
  detail::write_file(spec.out_path, [&](std::ostream& out) { write_convergence_csv(out, trace); });
  return trace;
}

/// Per-realization WSR pair at one SNR point.
struct RealizationResult {
  double pso = 0.0;
  double bd = 0.0;
};

/// BD (scored with its own decoders through the general evaluator) and PSO
/// seeded with the BD precoders, for one channel realization.
inline RealizationResult run_realization(const SystemConfig& cfg, const PsoParams& params, std::uint64_t master_seed,
                                         std::uint64_t realization) {
  const ChannelSet h = gen_channels(cfg, master_seed, realization);
  const auto bd = bd_design(cfg, h);
  RealizationResult r;
  r.bd = weighted_sum_rate(cfg, h, bd.f, bd.w);
  PsoParams serial = params;
  serial.workers = 1;
  const auto res = optimize(cfg, h, serial, SwarmSeed{master_seed, realization}, bd.f);
  detail::require_monotone(res.trace, "realization " + std::to_string(realization));
  r.pso = res.gbest_value;
  if (r.pso < r.bd - 1e-9)
    throw NumericalError("realization " + std::to_string(realization) + ": PSO WSR " + format_number(r.pso) +
                         " below BD WSR " + format_number(r.bd));
  return r;
}

inline std::vector<SweepRow> sweep_rows(const ExperimentSpec& spec, std::ostream& log) {
  std::vector<SweepRow> rows;
  const std::size_t n = spec.n_realizations;
  for (const double snr : spec.snr_db_list) {
    SystemConfig cfg = spec.system;
    cfg.p_max = p_max_from_snr_db(snr, cfg.noise_power);
    std::vector<RealizationResult> results(n);
    detail::parallel_for(n, spec.pso.workers, [&](std::size_t r) {
      results[r] = run_realization(cfg, spec.pso, spec.master_seed, r);
    });
    for (std::size_t r = 0; r < n; ++r)
      log << "sweep: snr_db=" << format_number(snr) << " realization=" << r << " seed=" << spec.master_seed
          << " streams=(channel," << r << ")/(velocity," << r << ",*,*) bd=" << format_number(results[r].bd)
          << " pso=" << format_number(results[r].pso) << '\n';

    for (const Method m : {Method::pso, Method::bd}) {
      double sum = 0.0;
      for (const auto& r : results) sum += m == Method::pso ? r.pso : r.bd;
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (const auto& r : results) {
        const double dv = (m == Method::pso ? r.pso : r.bd) - mean;
        ss += dv * dv;
      }
      const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      rows.push_back({snr, m, mean, sd, n});
    }
  }
  return rows;
}

inline std::vector<SweepRow> run_sweep(const ExperimentSpec& spec, std::ostream& log = std::cerr) {
  if (spec.mode != Mode::sweep) throw ValidationError("run_sweep: mode must be sweep");
  auto rows = sweep_rows(spec, log);
  detail::write_file(spec.out_path, [&](std::ostream& out) { write_sweep_csv(out, rows); });
  return rows;
}

}  // namespace wsrpso
