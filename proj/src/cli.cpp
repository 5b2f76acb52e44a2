#include "mmv/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>  // vendored nlohmann/json single header

#include "mmv/amp.hpp"
#include "mmv/io.hpp"
#include "mmv/phase.hpp"
#include "mmv/se.hpp"

namespace mmv {
namespace {

using ordered_json = nlohmann::ordered_json;

// ---- value parsing ----------------------------------------------------------

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
  }
}

long long parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as an integer");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + text +
                      "' as a nonnegative integer");
  }
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const std::string& f : split_commas(text)) out.push_back(parse_double(key, f));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

// "v" -> single-point grid; "lo,hi,steps" -> inclusive linear grid.
GridSpec parse_grid(const std::string& key, const std::string& text) {
  const std::vector<std::string> fields = split_commas(text);
  if (fields.size() == 1) {
    const double v = parse_double(key, fields[0]);
    return GridSpec{v, v, 1};
  }
  if (fields.size() == 3) {
    GridSpec g;
    g.lo = parse_double(key, fields[0]);
    g.hi = parse_double(key, fields[1]);
    g.steps = static_cast<int>(parse_int(key, fields[2]));
    if (g.steps < 1) throw ConfigError("key '" + key + "': steps must be >= 1");
    return g;
  }
  throw ConfigError("key '" + key + "': expected 'value' or 'lo,hi,steps', got '" + text + "'");
}

// ---- resolved settings ------------------------------------------------------

// Wraps the merged key=value map: typed getters record every resolved value
// (defaults included) so the sidecar can show the full effective config.
class Settings {
 public:
  Settings(const RunConfig& config, std::set<std::string> allowed,
           const std::vector<std::string>& required)
      : values_(config.values) {
    allowed.insert("config");
    for (const auto& [key, value] : values_) {
      (void)value;
      if (!allowed.count(key))
        throw ConfigError("unknown key '" + key + "' for subcommand '" + config.subcommand +
                          "'");
    }
    for (const std::string& key : required)
      if (!values_.count(key))
        throw ConfigError("missing required key '" + key + "' for subcommand '" +
                          config.subcommand + "'");
    for (const auto& [key, value] : values_) resolved_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const auto it = values_.find(key);
    const std::string v = it == values_.end() ? fallback : it->second;
    resolved_[key] = v;
    return v;
  }

  std::string req_string(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    resolved_[key] = it->second;
    return it->second;
  }

  double get_double(const std::string& key, double fallback) {
    const auto it = values_.find(key);
    const double v = it == values_.end() ? fallback : parse_double(key, it->second);
    resolved_[key] = format_double(v);
    return v;
  }

  double req_double(const std::string& key) {
    const double v = parse_double(key, req_string(key));
    resolved_[key] = format_double(v);
    return v;
  }

  long long get_int(const std::string& key, long long fallback) {
    const auto it = values_.find(key);
    const long long v = it == values_.end() ? fallback : parse_int(key, it->second);
    resolved_[key] = std::to_string(v);
    return v;
  }

  long long req_int(const std::string& key) { return parse_int(key, req_string(key)); }

  std::uint64_t get_seed(std::uint64_t fallback) {
    const auto it = values_.find("seed");
    const std::uint64_t v = it == values_.end() ? fallback : parse_u64("seed", it->second);
    resolved_["seed"] = std::to_string(v);
    return v;
  }

  // Noise variance from exactly one of 'delta' (linear) / 'delta_db'.
  double resolve_delta() {
    const bool lin = values_.count("delta"), db = values_.count("delta_db");
    if (lin == db)
      throw ConfigError("specify exactly one of 'delta' and 'delta_db'");
    const double v = lin ? parse_double("delta", values_.at("delta"))
                         : from_db(parse_double("delta_db", values_.at("delta_db")));
    resolved_["delta"] = format_double(v);
    resolved_["delta_db"] = format_double(to_db(v));
    return v;
  }

  GridSpec req_grid(const std::string& key) {
    const GridSpec g = parse_grid(key, req_string(key));
    return g;
  }

  int jobs() { return static_cast<int>(get_int("jobs", 0)); }

  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> resolved_;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

// Data file + sidecar writer shared by all data-producing subcommands.
void write_outputs(const std::string& out_path, const std::string& csv,
                   const std::string& subcommand, const Settings& settings,
                   double wall_seconds, ordered_json extra = ordered_json::object()) {
  write_text_file(out_path, csv);
  ordered_json side;
  const auto newline = csv.find('\n');
  side["schema"] = csv.substr(10, newline - 10);  // after "# schema: "
  side["tool_version"] = kToolVersion;
  side["subcommand"] = subcommand;
  side["db_convention"] = "x_dB = 10*log10(x)";
  ordered_json cfg = ordered_json::object();
  for (const auto& [key, value] : settings.resolved()) cfg[key] = value;
  side["config"] = cfg;
  for (auto& [key, value] : extra.items()) side[key] = value;
  side["timestamp_utc"] = utc_timestamp();
  side["wall_time_seconds"] = wall_seconds;
  write_text_file(out_path + ".meta.json", side.dump(2) + "\n");
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---- subcommand handlers ----------------------------------------------------

int cmd_free_energy(const RunConfig& config) {
  Settings s(config,
             {"rho", "j", "delta", "delta_db", "r", "e_min", "e_max", "n_grid", "out"},
             {"rho", "j", "r", "out"});
  Stopwatch timer;
  PriorParams prior{s.req_double("rho"), static_cast<int>(s.req_int("j"))};
  const double delta = s.resolve_delta();
  const std::vector<double> rates = parse_double_list("r", s.req_string("r"));
  const double e_min = s.get_double("e_min", delta * 1e-3);
  const double e_max = s.get_double("e_max", 1.05 * prior.rho);
  const int n_grid = static_cast<int>(s.get_int("n_grid", kDefaultProfileGrid));
  std::vector<FreeEnergyProfile> curves;
  for (double R : rates)
    curves.push_back(profile(ProblemParams{prior, delta, R}, e_min, e_max, n_grid));
  write_outputs(s.req_string("out"), csv_free_energy(curves), config.subcommand, s,
                timer.seconds());
  return 0;
}

int cmd_profile(const RunConfig& config) {
  Settings s(config,
             {"rho", "j", "delta", "delta_db", "r", "e_min", "e_max", "n_grid", "out"},
             {"rho", "j", "r", "out"});
  Stopwatch timer;
  PriorParams prior{s.req_double("rho"), static_cast<int>(s.req_int("j"))};
  const double delta = s.resolve_delta();
  ProblemParams params{prior, delta, s.req_double("r")};
  const double e_min = s.get_double("e_min", delta * 1e-3);
  const double e_max = s.get_double("e_max", 1.05 * prior.rho);
  const int n_grid = static_cast<int>(s.get_int("n_grid", kDefaultProfileGrid));
  const FreeEnergyProfile p = profile(params, e_min, e_max, n_grid);
  ordered_json extra;
  extra["degenerate"] = p.degenerate;
  extra["anomalous"] = p.anomalous;
  write_outputs(s.req_string("out"), csv_profile(p), config.subcommand, s, timer.seconds(),
                extra);
  return 0;
}

int cmd_mmse(const RunConfig& config) {
  Settings s(config, {"rho", "j", "delta", "delta_db", "r", "out"}, {"rho", "j", "r", "out"});
  Stopwatch timer;
  PriorParams prior{s.req_double("rho"), static_cast<int>(s.req_int("j"))};
  ProblemParams params{prior, s.resolve_delta(), s.req_double("r")};
  const double value = mmse(params);
  write_outputs(s.req_string("out"), csv_mmse(params, value), config.subcommand, s,
                timer.seconds());
  return 0;
}

int cmd_complex_mmse(const RunConfig& config) {
  Settings s(config, {"setting", "rho", "delta", "delta_db", "r", "out"},
             {"rho", "r", "out"});
  Stopwatch timer;
  const std::string setting_name = s.get_string("setting", "complex_real");
  const auto setting = setting_from_string(setting_name);
  if (!setting || (*setting != Setting::complex_real && *setting != Setting::complex_complex))
    throw ConfigError("key 'setting': expected complex_real or complex_complex, got '" +
                      setting_name + "'");
  // Complex super symbols are [real, imag] pairs: the J=2 problem exactly.
  PriorParams prior{s.req_double("rho"), 2};
  ProblemParams params{prior, s.resolve_delta(), s.req_double("r")};
  const double value = mmse(params);
  ordered_json extra;
  extra["setting"] = setting_name;
  extra["note"] = "complex entries map to J=2 super symbols; mmse is per real component";
  write_outputs(s.req_string("out"), csv_mmse(params, value), config.subcommand, s,
                timer.seconds(), extra);
  return 0;
}

int cmd_phase_diagram(const RunConfig& config) {
  Settings s(config, {"rho", "j", "delta_db", "r", "jobs", "out"},
             {"rho", "j", "delta_db", "r", "out"});
  Stopwatch timer;
  PriorParams prior{s.req_double("rho"), static_cast<int>(s.req_int("j"))};
  const GridSpec delta_spec = s.req_grid("delta_db");
  const GridSpec r_spec = s.req_grid("r");
  const PhaseDiagram diagram = phase_diagram(prior, delta_spec, r_spec, s.jobs());
  ordered_json anomalies = ordered_json::array();
  for (const PhaseCell& c : diagram.cells) {
    if (!c.error.empty())
      anomalies.push_back({{"delta_dB", c.delta_db}, {"R", c.R}, {"error", c.error}});
  }
  ordered_json extra;
  extra["anomalies"] = anomalies;
  write_outputs(s.req_string("out"), csv_phase_diagram(diagram), config.subcommand, s,
                timer.seconds(), extra);
  return 0;
}

int cmd_thresholds(const RunConfig& config) {
  Settings s(config, {"rho", "j", "delta_db", "r_lo", "r_hi", "kinds", "r_tol", "out"},
             {"rho", "j", "delta_db", "r_lo", "r_hi", "out"});
  Stopwatch timer;
  PriorParams prior{s.req_double("rho"), static_cast<int>(s.req_int("j"))};
  const GridSpec delta_spec = s.req_grid("delta_db");
  const double r_lo = s.req_double("r_lo");
  const double r_hi = s.req_double("r_hi");
  ThresholdOptions opts;
  opts.r_tol = s.get_double("r_tol", opts.r_tol);
  std::vector<double> delta_grid;
  for (double db : delta_spec.points()) delta_grid.push_back(from_db(db));
  std::vector<ThresholdCurve> curves;
  for (const std::string& name : split_commas(s.get_string("kinds", "bp,low_noise,critical"))) {
    const auto kind = threshold_kind_from_string(name);
    if (!kind)
      throw ConfigError("key 'kinds': expected bp, low_noise, or critical, got '" + name + "'");
    curves.push_back(threshold_curve(*kind, prior, delta_grid, r_lo, r_hi, opts));
  }
  write_outputs(s.req_string("out"), csv_thresholds(curves), config.subcommand, s,
                timer.seconds());
  return 0;
}

int cmd_se(const RunConfig& config) {
  Settings s(config, {"rho", "j", "delta", "delta_db", "r", "e0", "tol", "max_iter", "out"},
             {"rho", "j", "r", "out"});
  Stopwatch timer;
  PriorParams prior{s.req_double("rho"), static_cast<int>(s.req_int("j"))};
  ProblemParams params{prior, s.resolve_delta(), s.req_double("r")};
  const double e0 = s.get_double("e0", prior.rho);
  SeOptions opts;
  opts.tol = s.get_double("tol", opts.tol);
  opts.max_iter = static_cast<int>(s.get_int("max_iter", opts.max_iter));
  const SeTrace trace = se_fixed_point(params, e0, opts);
  ordered_json extra;
  extra["converged"] = trace.converged;
  extra["fixed_point"] = trace.fixed_point;
  write_outputs(s.req_string("out"), csv_se_trace(trace), config.subcommand, s,
                timer.seconds(), extra);
  return 0;
}

int cmd_amp_sim(const RunConfig& config) {
  Settings s(config,
             {"setting", "rho", "j", "delta_db", "r", "n", "n_trials", "t_max", "epsilon",
              "damping", "v_init", "seed", "jobs", "out"},
             {"rho", "j", "delta_db", "r", "n", "n_trials", "out"});
  Stopwatch timer;
  const std::string setting_name = s.get_string("setting", "mmv1");
  const auto setting = setting_from_string(setting_name);
  if (!setting) throw ConfigError("key 'setting': unknown setting '" + setting_name + "'");
  PriorParams prior{s.req_double("rho"), static_cast<int>(s.req_int("j"))};
  AmpConfig amp_config;
  amp_config.t_max = static_cast<int>(s.get_int("t_max", amp_config.t_max));
  amp_config.epsilon = s.get_double("epsilon", amp_config.epsilon);
  amp_config.damping = s.get_double("damping", amp_config.damping);
  const std::string v_init = s.get_string("v_init", "as_printed");
  if (v_init == "prior_variance")
    amp_config.v_init = VarianceInit::prior_variance;
  else if (v_init != "as_printed")
    throw ConfigError("key 'v_init': expected as_printed or prior_variance, got '" + v_init +
                      "'");
  const AmpSweep sweep =
      amp_sweep(*setting, prior, s.req_grid("delta_db").points(), s.req_grid("r").points(),
                static_cast<Eigen::Index>(s.req_int("n")),
                static_cast<int>(s.req_int("n_trials")), amp_config, s.get_seed(1), s.jobs());
  ordered_json cells = ordered_json::array();
  for (const SweepCell& c : sweep.cells) {
    ordered_json jc;
    jc["delta_dB"] = c.delta_db;
    jc["R"] = c.R;
    jc["median_mse"] = c.median_mse;
    jc["se_mse"] = c.se_mse;
    jc["ratio_ln"] = c.ratio_ln;
    if (!c.error.empty()) jc["error"] = c.error;
    ordered_json trials = ordered_json::array();
    for (const SweepTrial& t : c.trials) {
      ordered_json jt;
      jt["trial"] = t.trial;
      jt["iterations"] = t.iterations;
      jt["mse"] = t.mse;
      jt["converged"] = t.converged;
      jt["diverged"] = t.diverged;
      jt["mse_trace"] = t.mse_trace;
      if (!t.error.empty()) jt["error"] = t.error;
      trials.push_back(jt);
    }
    jc["trials"] = trials;
    cells.push_back(jc);
  }
  ordered_json extra;
  extra["cells"] = cells;
  write_outputs(s.req_string("out"), csv_amp_sweep(sweep), config.subcommand, s,
                timer.seconds(), extra);
  return 0;
}

int cmd_lemma1_check(const RunConfig& config) {
  Settings s(config,
             {"settings", "estimator", "rho", "j", "delta", "delta_db", "r", "n", "n_mc",
              "seed", "jobs", "out"},
             {"rho", "j", "r", "n", "n_mc", "out"});
  Stopwatch timer;
  PriorParams prior{s.req_double("rho"), static_cast<int>(s.req_int("j"))};
  const double delta = s.resolve_delta();
  const double R = s.req_double("r");
  const auto N = static_cast<Eigen::Index>(s.req_int("n"));
  const int n_mc = static_cast<int>(s.req_int("n_mc"));
  const std::string estimator_name = s.get_string("estimator", "prior_draw");
  const auto estimator = estimator_spec_from_string(estimator_name);
  if (!estimator)
    throw ConfigError("key 'estimator': expected perfect, prior_draw, or zero, got '" +
                      estimator_name + "'");
  const std::uint64_t seed = s.get_seed(1);
  std::vector<Lemma1Row> rows;
  for (const std::string& name : split_commas(s.get_string("settings", "mmv1,mmv2"))) {
    const auto setting = setting_from_string(name);
    if (!setting) throw ConfigError("key 'settings': unknown setting '" + name + "'");
    rows.push_back(
        {*setting, *estimator,
         empirical_v_covariance(*setting, prior, delta, R, N, *estimator, n_mc, seed,
                                s.jobs())});
  }
  write_outputs(s.req_string("out"), csv_lemma1(rows), config.subcommand, s, timer.seconds());
  return 0;
}

int cmd_plot_script(const RunConfig& config) {
  Settings s(config, {"csv", "kind", "out"}, {"csv", "out"});
  const std::string script = plot_script(s.req_string("csv"), s.get_string("kind", "auto"));
  write_text_file(s.req_string("out"), script);
  return 0;
}

constexpr const char* kUsage =
    R"(usage: mmv <subcommand> [--config FILE] [key=value | --key value]...

subcommands:
  free-energy   F(E) curves for one or more rates     (rho, j, delta|delta_db, r=list, out)
  profile       one F(E) curve with refined maxima    (rho, j, delta|delta_db, r, out)
  mmse          replica-predicted MMSE at one point   (rho, j, delta|delta_db, r, out)
  complex-mmse  MMSE for the complex channels         (rho, delta|delta_db, r, out)
  phase-diagram (delta, R) sweep of mmse/region       (rho, j, delta_db=lo,hi,n, r=lo,hi,n, out)
  thresholds    bp/low_noise/critical boundary rates  (rho, j, delta_db=lo,hi,n, r_lo, r_hi, out)
  se            scalar MSE recursion trace            (rho, j, delta|delta_db, r, out)
  amp-sim       iterative-solver sweep vs prediction  (rho, j, delta_db, r, n, n_trials, out)
  lemma1-check  residual covariance role estimates    (rho, j, delta|delta_db, r, n, n_mc, out)
  plot-script   matplotlib script for a produced CSV  (csv, out)

Every data run writes <out> plus a <out>.meta.json sidecar. dB values use
x_dB = 10*log10(x). Exit codes: 0 ok, 2 config error, 3 numerical failure.
)";

}  // namespace

RunConfig parse_args(const std::vector<std::string>& args) {
  if (args.empty()) throw ConfigError(std::string("no subcommand given\n") + kUsage);
  RunConfig config;
  config.subcommand = args[0];

  std::vector<std::pair<std::string, std::string>> cli_pairs;
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string key, value;
    const std::string& tok = args[i];
    if (tok.rfind("--", 0) == 0) {
      const auto eq = tok.find('=');
      if (eq != std::string::npos) {
        key = tok.substr(2, eq - 2);
        value = tok.substr(eq + 1);
      } else {
        key = tok.substr(2);
        if (i + 1 >= args.size())
          throw ConfigError("flag '--" + key + "' expects a value");
        value = args[++i];
      }
    } else {
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw ConfigError("cannot parse argument '" + tok + "' (expected key=value or --key)");
      key = tok.substr(0, eq);
      value = tok.substr(eq + 1);
    }
    if (key.empty()) throw ConfigError("empty key in argument '" + tok + "'");
    if (key == "config")
      config_path = value;
    else
      cli_pairs.emplace_back(key, value);
  }

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto begin = line.find_first_not_of(" \t\r");
      if (begin == std::string::npos) continue;
      const auto end = line.find_last_not_of(" \t\r");
      line = line.substr(begin, end - begin + 1);
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(config_path + ":" + std::to_string(line_no) +
                          ": expected key=value, got '" + line + "'");
      const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return std::string();
        return s.substr(b, s.find_last_not_of(" \t") - b + 1);
      };
      config.values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    config.values["config"] = config_path;
  }
  for (const auto& [key, value] : cli_pairs) config.values[key] = value;  // flags win
  return config;
}

int run(const RunConfig& config) {
  if (config.subcommand == "free-energy") return cmd_free_energy(config);
  if (config.subcommand == "profile") return cmd_profile(config);
  if (config.subcommand == "mmse") return cmd_mmse(config);
  if (config.subcommand == "complex-mmse") return cmd_complex_mmse(config);
  if (config.subcommand == "phase-diagram") return cmd_phase_diagram(config);
  if (config.subcommand == "thresholds") return cmd_thresholds(config);
  if (config.subcommand == "se") return cmd_se(config);
  if (config.subcommand == "amp-sim") return cmd_amp_sim(config);
  if (config.subcommand == "lemma1-check") return cmd_lemma1_check(config);
  if (config.subcommand == "plot-script") return cmd_plot_script(config);
  throw ConfigError("unknown subcommand '" + config.subcommand + "'\n" + kUsage);
}

int main_impl(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  auto emit_error = [](const std::string& type, const std::string& message) {
    ordered_json rec;
    rec["error"] = {{"type", type}, {"message", message}};
    std::cerr << rec.dump() << "\n";
  };
  try {
    if (!args.empty() && (args[0] == "help" || args[0] == "--help" || args[0] == "-h")) {
      std::cout << kUsage;
      return 0;
    }
    return run(parse_args(args));
  } catch (const ConfigError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const NumericalError& e) {
    emit_error("numerical", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 3;
  }
}

}  // namespace mmv
