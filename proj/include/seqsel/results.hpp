#pragma once

// Sweep result persistence: fixed-column CSV and a JSON run manifest.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "seqsel/config.hpp"
#include "seqsel/sweep.hpp"

#ifndef SEQSEL_VERSION
#define SEQSEL_VERSION "unknown"
#endif

namespace seqsel {

inline constexpr const char* kCsvHeader = "N_t,N_st,mode,se,cost,mean_metric,pilot_loss,bound_loss,seed,wall_time_s";

inline std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// CSV text. wall_time_s is written as 0 unless `with_timing`, so outputs are reproducible byte for byte.
inline std::string records_to_csv(const std::vector<SweepRecord>& records, bool with_timing) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.n_tested << ',' << (r.ideal ? std::string("ideal") : std::to_string(r.n_steps)) << ','
        << to_string(r.mode) << ',' << format_g12(r.se) << ',' << format_g12(r.cost) << ','
        << format_g12(r.mean_metric) << ',' << format_g12(r.pilot_loss) << ',' << format_g12(r.bound_loss) << ','
        << r.seed << ',' << format_g12(with_timing ? r.wall_time_s : 0.0) << '\n';
  }
  return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

/// Parses CSV written by records_to_csv. The ideal engine's N_st is not in the CSV and reads back as 0.
inline std::vector<SweepRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParameterError("results CSV: unexpected header");
  std::vector<SweepRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 10) throw ParameterError("results CSV: expected 10 columns at line " + std::to_string(lineno));
    SweepRecord r;
    try {
      r.n_tested = std::stoi(f[0]);
      r.ideal = f[1] == "ideal";
      r.n_steps = r.ideal ? 0 : std::stoi(f[1]);
      if (f[2] == "bs") r.mode = SelectionMode::bs;
      else if (f[2] == "bound") r.mode = SelectionMode::bound;
      else throw ParameterError("bad mode");
      r.se = std::stod(f[3]);
      r.cost = std::stod(f[4]);
      r.mean_metric = std::stod(f[5]);
      r.pilot_loss = std::stod(f[6]);
      r.bound_loss = std::stod(f[7]);
      r.seed = std::stoull(f[8]);
      r.wall_time_s = std::stod(f[9]);
    } catch (const std::exception&) {
      throw ParameterError("results CSV: malformed value at line " + std::to_string(lineno));
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunTimes {
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
};

inline nlohmann::json manifest_json(const RunConfig& cfg, const std::vector<SweepRecord>& records, const RunTimes& times,
                                    int workers) {
  nlohmann::json j;
  j["tool"] = "seqsel";
  j["version"] = SEQSEL_VERSION;
  j["started_utc"] = utc_timestamp(times.started);
  j["finished_utc"] = utc_timestamp(times.finished);
  j["workers"] = workers;
  j["config"] = config_to_json(cfg);
  j["csv_columns"] = kCsvHeader;
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& r : records) {
    recs.push_back({{"N_t", r.n_tested},
                    {"N_st", r.ideal ? nlohmann::json("ideal") : nlohmann::json(r.n_steps)},
                    {"total_steps", r.n_steps},
                    {"se", r.se},
                    {"se_stderr", r.se_stderr},
                    {"mean_metric", r.mean_metric},
                    {"metric_stderr", r.metric_stderr},
                    {"cost", r.cost},
                    {"wall_time_s", r.wall_time_s}});
  }
  return j;
}

/// Writes `<dir>/results.csv` and `<dir>/manifest.json`.
inline void emit_results(const std::vector<SweepRecord>& records, const std::string& csv_path,
                         const std::string& manifest_path, const RunConfig& cfg, const RunTimes& times, int workers) {
  if (records.empty()) throw ParameterError("no records to emit");
  write_text(csv_path, records_to_csv(records, cfg.record_timing));
  write_text(manifest_path, manifest_json(cfg, records, times, workers).dump(2) + "\n");
}

}  // namespace seqsel
