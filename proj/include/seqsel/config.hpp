#pragma once

// Run configuration: flat `key = value` documents with `#` comments, named
// presets, validation, and a JSON echo for manifests.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "seqsel/errors.hpp"
#include "seqsel/fiber.hpp"

namespace seqsel {

enum class SelectionMode { bs, bound };

inline const char* to_string(SelectionMode m) { return m == SelectionMode::bs ? "bs" : "bound"; }

struct RunConfig {
  // link
  int spans = 10;
  double span_km = 100.0;
  double alpha_db_km = 0.2;
  double dispersion_ps_nm_km = 17.0;
  double gamma_w_km = 1.3;
  double nf_db = 5.0;
  double wavelength_nm = 1550.0;
  // wdm
  int num_channels = 1;
  double symbol_rate = 46.5e9;
  double spacing = 50e9;
  double rolloff = 0.05;
  int sim_sps = 4;
  int channel_steps_per_span = 100;
  // shaping
  int block_len = 256;
  long max_energy = 0;  // 0: smallest bound reaching 2^bits_per_block
  int bits_per_block = 333;
  // sequence
  int n = 256;
  double n_sxs = 1.125;
  // sweep
  std::vector<int> nt_list{1, 4, 16, 64};
  std::vector<int> nst_list{1, 2, 4, 16};
  bool ideal_ssfm = true;
  int ideal_steps_per_span = 100;
  SelectionMode mode = SelectionMode::bs;
  double eta = 0.0;  // 0: 1 / N_t
  double launch_power_dbm = 4.0;  // one channel needs more power than a WDM comb to leave the linear regime
  std::uint64_t master_seed = 1;
  int num_sequences = 50;
  // metric engine
  int essfm_taps = 8;
  StepDistribution step_distribution = StepDistribution::log_spaced;
  bool fit = true;
  int training_sequences = 4;
  std::string coeff_cache;
  // execution
  int workers = 0;  // 0: hardware concurrency
  bool record_timing = false;

  LinkConfig link() const {
    LinkConfig l;
    l.spans = spans;
    l.fiber.alpha_db_km = alpha_db_km;
    l.fiber.beta2_ps2_km = beta2_from_dispersion(dispersion_ps_nm_km, wavelength_nm);
    l.fiber.gamma_w_km = gamma_w_km;
    l.fiber.length_km = span_km;
    l.edfa_noise_figure_db = nf_db;
    l.center_wavelength_nm = wavelength_nm;
    return l;
  }

  double launch_power_w() const { return 1e-3 * std::pow(10.0, launch_power_dbm / 10.0); }
};

namespace detail {

struct ConfigField {
  const char* key;
  std::function<void(RunConfig&, std::string_view, int)> set;
  std::function<nlohmann::json(const RunConfig&)> get;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline long long parse_int(std::string_view key, std::string_view v, int line) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc{} || r.ptr != end) throw ConfigError(std::string(key), line, "expected an integer, got '" + std::string(v) + "'");
  return out;
}

inline double parse_real(std::string_view key, std::string_view v, int line) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(out))
    throw ConfigError(std::string(key), line, "expected a number, got '" + s + "'");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key), line, "expected true or false, got '" + std::string(v) + "'");
}

inline std::vector<int> parse_int_list(std::string_view key, std::string_view v, int line) {
  std::vector<int> out;
  while (true) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (item.empty()) throw ConfigError(std::string(key), line, "empty list element");
    out.push_back(static_cast<int>(parse_int(key, item, line)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

template <class T>
void in_range(std::string_view key, T v, T lo, T hi, int line) {
  if (v < lo || v > hi) {
    std::ostringstream ss;
    ss << "value " << v << " outside [" << lo << ", " << hi << "]";
    throw ConfigError(std::string(key), line, ss.str());
  }
}

inline ConfigField int_field(const char* key, int RunConfig::*member, int lo, int hi) {
  return {key,
          [=](RunConfig& c, std::string_view v, int line) {
            const auto x = parse_int(key, v, line);
            in_range<long long>(key, x, lo, hi, line);
            c.*member = static_cast<int>(x);
          },
          [=](const RunConfig& c) { return nlohmann::json(c.*member); }};
}

inline ConfigField real_field(const char* key, double RunConfig::*member, double lo, double hi) {
  return {key,
          [=](RunConfig& c, std::string_view v, int line) {
            const double x = parse_real(key, v, line);
            in_range(key, x, lo, hi, line);
            c.*member = x;
          },
          [=](const RunConfig& c) { return nlohmann::json(c.*member); }};
}

inline ConfigField bool_field(const char* key, bool RunConfig::*member) {
  return {key, [=](RunConfig& c, std::string_view v, int line) { c.*member = parse_bool(key, v, line); },
          [=](const RunConfig& c) { return nlohmann::json(c.*member); }};
}

inline ConfigField list_field(const char* key, std::vector<int> RunConfig::*member, int lo, int hi) {
  return {key,
          [=](RunConfig& c, std::string_view v, int line) {
            auto xs = parse_int_list(key, v, line);
            for (int x : xs) in_range(key, x, lo, hi, line);
            c.*member = std::move(xs);
          },
          [=](const RunConfig& c) { return nlohmann::json(c.*member); }};
}

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    f.push_back(int_field("spans", &RunConfig::spans, 1, 1000));
    f.push_back(real_field("span_km", &RunConfig::span_km, 1e-3, 1e4));
    f.push_back(real_field("alpha_db_km", &RunConfig::alpha_db_km, 0.0, 10.0));
    f.push_back(real_field("dispersion_ps_nm_km", &RunConfig::dispersion_ps_nm_km, -100.0, 100.0));
    f.push_back(real_field("gamma_w_km", &RunConfig::gamma_w_km, 0.0, 100.0));
    f.push_back(real_field("nf_db", &RunConfig::nf_db, 0.0, 30.0));
    f.push_back(real_field("wavelength_nm", &RunConfig::wavelength_nm, 500.0, 3000.0));
    f.push_back(int_field("num_channels", &RunConfig::num_channels, 1, 63));
    f.push_back(real_field("symbol_rate", &RunConfig::symbol_rate, 1e6, 1e13));
    f.push_back(real_field("spacing", &RunConfig::spacing, 1e6, 1e13));
    f.push_back(real_field("rolloff", &RunConfig::rolloff, 0.0, 1.0));
    f.push_back(int_field("sim_sps", &RunConfig::sim_sps, 2, 64));
    f.push_back(int_field("channel_steps_per_span", &RunConfig::channel_steps_per_span, 1, 100000));
    f.push_back(int_field("block_len", &RunConfig::block_len, 1, 4096));
    f.push_back({"max_energy",
                 [](RunConfig& c, std::string_view v, int line) {
                   const auto x = parse_int("max_energy", v, line);
                   in_range<long long>("max_energy", x, 0, 1LL << 40, line);
                   c.max_energy = static_cast<long>(x);
                 },
                 [](const RunConfig& c) { return nlohmann::json(c.max_energy); }});
    f.push_back(int_field("bits_per_block", &RunConfig::bits_per_block, 0, 100000));
    f.push_back(int_field("n", &RunConfig::n, 1, 1 << 20));
    f.push_back(real_field("n_sxs", &RunConfig::n_sxs, 1.0 + 1e-9, 64.0));
    f.push_back(list_field("nt_list", &RunConfig::nt_list, 1, 1 << 16));
    f.push_back(list_field("nst_list", &RunConfig::nst_list, 1, 100000));
    f.push_back(bool_field("ideal_ssfm", &RunConfig::ideal_ssfm));
    f.push_back(int_field("ideal_steps_per_span", &RunConfig::ideal_steps_per_span, 1, 100000));
    f.push_back({"mode",
                 [](RunConfig& c, std::string_view v, int line) {
                   if (v == "bs") c.mode = SelectionMode::bs;
                   else if (v == "bound") c.mode = SelectionMode::bound;
                   else throw ConfigError("mode", line, "expected bs or bound, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) { return nlohmann::json(to_string(c.mode)); }});
    f.push_back(real_field("eta", &RunConfig::eta, 0.0, 1.0));
    f.push_back(real_field("launch_power_dbm", &RunConfig::launch_power_dbm, -50.0, 40.0));
    f.push_back({"master_seed",
                 [](RunConfig& c, std::string_view v, int line) {
                   std::uint64_t out = 0;
                   const auto* end = v.data() + v.size();
                   const auto r = std::from_chars(v.data(), end, out);
                   if (r.ec != std::errc{} || r.ptr != end)
                     throw ConfigError("master_seed", line, "expected a non-negative integer, got '" + std::string(v) + "'");
                   c.master_seed = out;
                 },
                 [](const RunConfig& c) { return nlohmann::json(c.master_seed); }});
    f.push_back(int_field("num_sequences", &RunConfig::num_sequences, 1, 1 << 24));
    f.push_back(int_field("essfm_taps", &RunConfig::essfm_taps, 1, 4096));
    f.push_back({"step_distribution",
                 [](RunConfig& c, std::string_view v, int line) {
                   if (v == "uniform") c.step_distribution = StepDistribution::uniform;
                   else if (v == "log_spaced") c.step_distribution = StepDistribution::log_spaced;
                   else throw ConfigError("step_distribution", line, "expected uniform or log_spaced, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) {
                   return nlohmann::json(c.step_distribution == StepDistribution::uniform ? "uniform" : "log_spaced");
                 }});
    f.push_back(bool_field("fit", &RunConfig::fit));
    f.push_back(int_field("training_sequences", &RunConfig::training_sequences, 1, 10000));
    f.push_back({"coeff_cache", [](RunConfig& c, std::string_view v, int) { c.coeff_cache = std::string(v); },
                 [](const RunConfig& c) { return nlohmann::json(c.coeff_cache); }});
    f.push_back(int_field("workers", &RunConfig::workers, 0, 4096));
    f.push_back(bool_field("record_timing", &RunConfig::record_timing));
    return f;
  }();
  return fields;
}

}  // namespace detail

/// Desk scale: one channel, ten spans, short sequences, 4 dBm.
inline RunConfig desk_preset() { return RunConfig{}; }

/// Five 46.5 GBd channels on a 50 GHz grid over 30 x 100 km at 1 dBm, n = 512.
inline RunConfig paper_preset() {
  RunConfig c;
  c.spans = 30;
  c.span_km = 100.0;
  c.nf_db = 5.0;
  c.num_channels = 5;
  c.symbol_rate = 46.5e9;
  c.spacing = 50e9;
  c.rolloff = 0.05;
  c.sim_sps = 8;
  c.n = 512;
  c.n_sxs = 1.125;
  c.launch_power_dbm = 1.0;
  c.nt_list = {1, 2, 4, 8, 16, 32, 64};
  c.nst_list = {1, 2, 4, 8, 16};
  c.num_sequences = 50;
  return c;
}

inline std::vector<std::string> preset_names() { return {"desk", "paper"}; }

inline RunConfig preset(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw ParameterError("unknown preset '" + name + "'");
}

/// Cross-field checks that single-key ranges cannot express.
inline void validate(const RunConfig& c) {
  auto fail = [](const char* key, const std::string& msg) { throw ConfigError(key, 0, msg); };
  if ((4L * c.n) % c.block_len != 0) fail("block_len", "block length must divide 4 n");
  if (c.num_channels % 2 == 0) fail("num_channels", "channel count must be odd so one channel sits at the centre");
  if (c.nt_list.empty()) fail("nt_list", "needs at least one entry");
  if (c.nst_list.empty() && !c.ideal_ssfm) fail("nst_list", "no metric engines selected");
  for (int nt : c.nt_list)
    if (c.mode == SelectionMode::bs && (nt & (nt - 1)) != 0) fail("nt_list", "BS mode needs powers of two");
  const double nsamp = c.n * c.n_sxs;
  if (std::abs(nsamp - std::round(nsamp)) > 1e-9) fail("n_sxs", "n * n_sxs must be an integer");
  if (c.n_sxs <= 1.0 + c.rolloff && std::abs(c.n_sxs - std::round(c.n_sxs)) > 1e-12)
    fail("n_sxs", "fractional oversampling must exceed 1 + rolloff");
  if (c.sim_sps * c.symbol_rate <= (c.num_channels - 1) * c.spacing + (1.0 + c.rolloff) * c.symbol_rate)
    fail("sim_sps", "simulation bandwidth does not cover the WDM comb");
  if (c.spacing < (1.0 + c.rolloff) * c.symbol_rate * (1.0 - 1e-9) && c.num_channels > 1)
    fail("spacing", "channels overlap");
  if (c.n < 50) fail("n", "need at least 50 symbols per sequence for AIR estimation");
}

/// Parses a config document. `preset = name` selects the base, other keys override it.
inline RunConfig parse_config(std::string_view text) {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::string base = "desk";
  int base_line = 0;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = detail::trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) throw ConfigError(std::string(raw), lineno, "expected 'key = value'");
    const std::string key(detail::trim(raw.substr(0, eq)));
    const std::string value(detail::trim(raw.substr(eq + 1)));
    if (key.empty()) throw ConfigError("", lineno, "missing key");
    if (value.empty()) throw ConfigError(key, lineno, "missing value");
    for (const auto& e : entries)
      if (e.key == key) throw ConfigError(key, lineno, "duplicate key (first set on line " + std::to_string(e.line) + ")");
    if (key == "preset") {
      if (base_line) throw ConfigError(key, lineno, "duplicate key");
      base = value;
      base_line = lineno;
      continue;
    }
    entries.push_back({key, value, lineno});
  }

  RunConfig cfg;
  try {
    cfg = preset(base);
  } catch (const ParameterError&) {
    throw ConfigError("preset", base_line, "unknown preset '" + base + "'");
  }
  const auto& fields = detail::config_fields();
  for (const auto& e : entries) {
    const auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return e.key == f.key; });
    if (it == fields.end()) throw ConfigError(e.key, e.line, "unknown key");
    it->set(cfg, e.value, e.line);
  }
  try {
    validate(cfg);
  } catch (const ConfigError& err) {
    int line = 0;
    for (const auto& e : entries)
      if (e.key == err.key()) line = e.line;
    throw ConfigError(err.key(), line, err.reason());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", 0, "cannot read file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Every field, keyed as in config documents.
inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : detail::config_fields()) j[f.key] = f.get(c);
  return j;
}

/// Config document reproducing `c` exactly (round-trips through parse_config).
inline std::string config_to_text(const RunConfig& c) {
  std::ostringstream out;
  for (const auto& f : detail::config_fields()) {
    const auto v = f.get(c);
    if (v.is_string() && v.get<std::string>().empty()) continue;  // empty value means unset
    out << f.key << " = ";
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i].get<int>();
    } else if (v.is_string()) {
      out << v.get<std::string>();
    } else if (v.is_number_float()) {
      char buf[64];
      const auto r = std::to_chars(buf, buf + sizeof buf, v.get<double>());  // shortest exact form
      out << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
    } else {
      out << v.dump();
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace seqsel
