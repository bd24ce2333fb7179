#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "seqsel/config.hpp"

using namespace seqsel;

namespace {

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return ConfigError("", 0, "");
}

bool same(const RunConfig& a, const RunConfig& b) { return config_to_json(a) == config_to_json(b); }

}  // namespace

TEST(Config, EmptyDocumentGivesDeskDefaults) {
  const auto c = parse_config("");
  EXPECT_TRUE(same(c, desk_preset()));
  EXPECT_EQ(c.spans, 10);
  EXPECT_EQ(c.num_channels, 1);
  EXPECT_EQ(c.n, 256);
  EXPECT_DOUBLE_EQ(c.n_sxs, 1.125);
  EXPECT_EQ(c.nt_list, (std::vector<int>{1, 4, 16, 64}));
  EXPECT_EQ(c.mode, SelectionMode::bs);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, CommentsWhitespaceAndOverrides) {
  const auto c = parse_config("# header\n  spans = 4   # short link\n\nnt_list = 1, 2 ,8\nmode = bound\neta = 0.25\n");
  EXPECT_EQ(c.spans, 4);
  EXPECT_EQ(c.nt_list, (std::vector<int>{1, 2, 8}));
  EXPECT_EQ(c.mode, SelectionMode::bound);
  EXPECT_DOUBLE_EQ(c.eta, 0.25);
}

TEST(Config, PaperPresetValues) {
  const auto c = parse_config("preset = paper\n");
  EXPECT_EQ(c.spans, 30);
  EXPECT_EQ(c.num_channels, 5);
  EXPECT_DOUBLE_EQ(c.symbol_rate, 46.5e9);
  EXPECT_DOUBLE_EQ(c.spacing, 50e9);
  EXPECT_DOUBLE_EQ(c.launch_power_dbm, 1.0);
  EXPECT_EQ(c.n, 512);
  EXPECT_EQ(c.nt_list, (std::vector<int>{1, 2, 4, 8, 16, 32, 64}));
  EXPECT_NO_THROW(validate(c));
  const auto o = parse_config("spans = 5\npreset = paper\n");  // preset position is irrelevant
  EXPECT_EQ(o.spans, 5);
  EXPECT_EQ(o.num_channels, 5);
}

TEST(Config, OutOfRangeValueNamesKeyAndLine) {
  const auto e = config_error("n = 256\nspans = -1\n");
  EXPECT_EQ(e.key(), "spans");
  EXPECT_EQ(e.line(), 2);
  EXPECT_NE(std::string(e.what()).find("spans"), std::string::npos);
}

TEST(Config, RejectsUnknownDuplicateAndMalformed) {
  EXPECT_EQ(config_error("spnas = 3\n").key(), "spnas");
  const auto dup = config_error("spans = 3\nspans = 4\n");
  EXPECT_EQ(dup.key(), "spans");
  EXPECT_EQ(dup.line(), 2);
  EXPECT_EQ(config_error("spans 3\n").line(), 1);
  EXPECT_EQ(config_error("preset = huge\n").key(), "preset");
}

TEST(Config, RejectsTypeMismatch) {
  EXPECT_EQ(config_error("spans = ten\n").key(), "spans");
  EXPECT_EQ(config_error("spans = 2.5\n").key(), "spans");
  EXPECT_EQ(config_error("gamma_w_km = fast\n").key(), "gamma_w_km");
  EXPECT_EQ(config_error("fit = maybe\n").key(), "fit");
  EXPECT_EQ(config_error("nt_list = 1,x\n").key(), "nt_list");
  EXPECT_EQ(config_error("mode = greedy\n").key(), "mode");
}

TEST(Config, CrossFieldChecksReportOffendingKey) {
  const auto e = config_error("\nnt_list = 1, 3\n");
  EXPECT_EQ(e.key(), "nt_list");
  EXPECT_EQ(e.line(), 2);
  EXPECT_EQ(config_error("num_channels = 2\n").key(), "num_channels");
  EXPECT_EQ(config_error("block_len = 300\n").key(), "block_len");
  EXPECT_NO_THROW(parse_config("mode = bound\nnt_list = 1, 3\n"));  // bound mode takes any N_t
}

TEST(Config, JsonEchoCoversEveryField) {
  const auto j = config_to_json(desk_preset());
  for (const char* key : {"spans", "span_km", "alpha_db_km", "dispersion_ps_nm_km", "gamma_w_km", "nf_db",
                          "num_channels", "symbol_rate", "spacing", "rolloff", "sim_sps", "block_len", "n", "n_sxs",
                          "nt_list", "nst_list", "ideal_ssfm", "mode", "launch_power_dbm", "master_seed",
                          "num_sequences", "essfm_taps", "fit", "workers", "record_timing"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["mode"], "bs");
  EXPECT_EQ(j["nt_list"].size(), 4u);
}

TEST(Config, TextRoundTripIsExact) {
  for (const auto& name : preset_names()) {
    auto c = preset(name);
    c.master_seed = 0xfeedfacecafebeefULL;
    c.launch_power_dbm = 0.1;
    c.coeff_cache = "/tmp/coeffs.txt";
    EXPECT_TRUE(same(parse_config(config_to_text(c)), c)) << name;
  }
  EXPECT_TRUE(same(parse_config(config_to_text(desk_preset())), desk_preset()));
}

TEST(Config, LoadFromFile) {
  const std::string path = ::testing::TempDir() + "seqsel_cfg_test.cfg";
  {
    std::ofstream(path) << "spans = 3\n";
  }
  EXPECT_EQ(load_config(path).spans, 3);
  std::remove(path.c_str());
  EXPECT_THROW(load_config(path), ConfigError);
}
