// Command-line front end: sweeps, cost evaluation, coefficient fitting, presets.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "seqsel/seqsel.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kFailureExit = 1;

int cmd_run(const std::string& config_path, const std::string& out_dir, bool quiet) {
  const auto cfg = seqsel::load_config(config_path);
  const int workers = seqsel::resolve_workers(cfg.workers);
  std::filesystem::create_directories(out_dir);

  seqsel::CoefficientCache cache;
  if (!cfg.coeff_cache.empty()) cache = seqsel::CoefficientCache::load(cfg.coeff_cache);
  const auto before = cache.size();

  seqsel::SweepOptions opt;
  opt.workers = workers;
  opt.cache = &cache;
  if (!quiet)
    opt.on_record = [](const seqsel::SweepRecord& r) {
      std::fprintf(stderr, "N_t=%-4d N_st=%-6s se=%.4f cost=%.1f metric=%.4g (%.1fs)\n", r.n_tested,
                   r.ideal ? "ideal" : std::to_string(r.n_steps).c_str(), r.se, r.cost, r.mean_metric, r.wall_time_s);
    };
  seqsel::RunTimes times{std::chrono::system_clock::now(), {}};
  const auto records = seqsel::run_sweep(cfg, opt);
  times.finished = std::chrono::system_clock::now();

  if (!cfg.coeff_cache.empty() && cache.size() != before) cache.save(cfg.coeff_cache);
  const auto dir = std::filesystem::path(out_dir);
  seqsel::emit_results(records, (dir / "results.csv").string(), (dir / "manifest.json").string(), cfg, times, workers);
  if (!quiet) std::fprintf(stderr, "wrote %zu records to %s\n", records.size(), out_dir.c_str());
  return 0;
}

int cmd_fit(const std::string& config_path, std::string cache_path) {
  auto cfg = seqsel::load_config(config_path);
  if (cache_path.empty()) cache_path = cfg.coeff_cache;
  if (cache_path.empty()) throw seqsel::ConfigError("coeff_cache", 0, "fit needs a cache path (config key or --cache)");
  cfg.fit = true;
  auto cache = seqsel::CoefficientCache::load(cache_path);
  const auto ctx = seqsel::SweepContext::make(cfg);
  const auto fitted = seqsel::prepare_coefficients(ctx, cache);
  cache.save(cache_path);
  for (int nst : cfg.nst_list) {
    const auto* c = cache.find(seqsel::coefficient_key(ctx, nst));
    std::printf("N_st=%d:", nst);
    for (double v : *c) std::printf(" %.6g", v);
    std::printf("\n");
  }
  std::fprintf(stderr, "fitted %zu new coefficient sets, cache %s holds %zu\n", fitted, cache_path.c_str(),
               cache.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence-selection cost/gain simulator"};
  app.set_version_flag("--version", SEQSEL_VERSION);
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", cache_path;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run the (N_t, N_st) sweep and write results.csv + manifest.json");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--quiet", quiet, "Suppress progress lines");

  double nt = 1, nsxs = 1, nsamp = 512, nst = 1, nsb = 1;
  auto* cost = app.add_subcommand("cost", "Print real multiplications per 2D symbol");
  cost->add_option("--Nt", nt, "Tested sequences")->required();
  cost->add_option("--nsxs", nsxs, "Samples per symbol")->required();
  cost->add_option("--N", nsamp, "Samples per sequence")->required();
  cost->add_option("--Nst", nst, "ESSFM steps")->required();
  cost->add_option("--Nsb", nsb, "Subbands")->default_val(1);

  auto* fit = app.add_subcommand("fit", "Fit ESSFM coefficients for a config and store them in the cache");
  fit->add_option("--config", config_path, "Config file")->required();
  fit->add_option("--cache", cache_path, "Cache file (overrides coeff_cache)");

  auto* presets = app.add_subcommand("presets", "List named presets, or print one as a config document");
  std::string preset_name;
  presets->add_option("name", preset_name, "Preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigExit;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, quiet);
    if (*cost) {
      std::printf("%.12g\n", seqsel::cost_rm_per_2d({nt, nsxs, nsamp, nst, nsb}));
      return 0;
    }
    if (*fit) return cmd_fit(config_path, cache_path);
    if (*presets) {
      if (preset_name.empty()) {
        for (const auto& p : seqsel::preset_names()) std::printf("%s\n", p.c_str());
      } else {
        std::printf("%s", seqsel::config_to_text(seqsel::preset(preset_name)).c_str());
      }
      return 0;
    }
  } catch (const seqsel::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigExit;
  } catch (const seqsel::ParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return *cost ? kConfigExit : kFailureExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailureExit;
  }
  return kFailureExit;
}
