#include <gtest/gtest.h>

#include "seqsel/pulse.hpp"
#include "seqsel/receiver.hpp"
#include "test_support.hpp"

using namespace seqsel;

namespace {

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

/// Off-centre symbol-spaced energy of the pulse cascade relative to the main tap, in dB.
double cascade_isi_db(const PulseShape& p, int sps) {
  const auto c = convolve(p.taps, p.taps);
  const long mid = static_cast<long>(c.size() / 2);
  double isi = 0.0;
  for (long k = mid % sps; k < static_cast<long>(c.size()); k += sps)
    if (k != mid) isi += c[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(k)];
  return 10.0 * std::log10(isi / (c[static_cast<std::size_t>(mid)] * c[static_cast<std::size_t>(mid)]));
}

CVec qam_symbols(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 7);
  CVec v(n);
  for (auto& s : v) s = {2.0 * d(rng) - 7.0, 2.0 * d(rng) - 7.0};
  return v;
}

}  // namespace

TEST(RrcTaps, SymmetricUnitEnergyAtPaperRolloff) {
  for (int span : {8, 32, 64}) {
    for (double sps : {1.125, 2.0, 8.0}) {
      const auto p = rrc_taps(0.05, span, sps);
      double e = 0.0;
      for (double t : p.taps) e += t * t;
      EXPECT_NEAR(e, 1.0, 1e-9);
      for (std::size_t i = 0; i < p.taps.size(); ++i)
        EXPECT_NEAR(p.taps[i], p.taps[p.taps.size() - 1 - i], 1e-12 * std::abs(p.taps[p.center()]));
    }
  }
}

TEST(RrcTaps, ZeroRolloffApproachesSinc) {
  const auto p = rrc_taps(0.0, 512, 2.0);
  const double ratio = p.taps[p.center() + 1] / p.taps[p.center()];
  EXPECT_NEAR(ratio, 2.0 / std::numbers::pi, 1e-3);
  EXPECT_NEAR(p.taps[p.center() + 2] / p.taps[p.center()], 0.0, 1e-3);
}

TEST(RrcTaps, SingularPointsUseAnalyticLimits) {
  // with rolloff 0.25, t = 1/(4 beta) = 1 symbol is a sample at sps = 4
  const auto p = rrc_taps(0.25, 16, 4.0);
  const double b = 0.25, a = std::numbers::pi / (4.0 * b);
  const double limit = b / std::numbers::sqrt2 *
                       ((1.0 + 2.0 / std::numbers::pi) * std::sin(a) + (1.0 - 2.0 / std::numbers::pi) * std::cos(a));
  const double centre = 1.0 - b + 4.0 * b / std::numbers::pi;
  EXPECT_NEAR(p.taps[p.center() + 4] / p.taps[p.center()], limit / centre, 1e-12);
  EXPECT_TRUE(std::isfinite(p.taps[p.center() + 4]));
}

TEST(RrcTaps, CascadeIsNearlyIsiFree) {
  EXPECT_LE(cascade_isi_db(rrc_taps(0.05, 64, 2.0), 2), -40.0);
  EXPECT_LE(cascade_isi_db(rrc_taps(0.05, 128, 4.0), 4), -40.0);
}

TEST(RrcTaps, RejectsBadParameters) {
  EXPECT_THROW(rrc_taps(-0.1, 16, 2.0), ParameterError);
  EXPECT_THROW(rrc_taps(1.5, 16, 2.0), ParameterError);
  EXPECT_THROW(rrc_taps(0.1, 1, 2.0), ParameterError);
  EXPECT_THROW(rrc_taps(0.1, 16, 1.0), ParameterError);
}

TEST(Shaping, ZeroSymbolsGiveZeroSignal) {
  const CVec zeros(32);
  const auto p = rrc_taps(0.05, 16, 2.0);
  const auto s = upsample_and_shape(zeros, zeros, 2.0, p);
  EXPECT_EQ(s.size(), 64u);
  EXPECT_EQ(s.sample_sum_energy(), 0.0);
  const auto f = upsample_and_shape(zeros, zeros, 1.125, rrc_taps(0.05, 16, 1.125));
  EXPECT_EQ(f.size(), 36u);
  EXPECT_EQ(f.sample_sum_energy(), 0.0);
}

TEST(Shaping, SingleSymbolReproducesShiftedTaps) {
  const std::size_t n = 128, pos = 10;
  CVec sx(n), sy(n);
  sx[pos] = 1.0;
  const auto p = rrc_taps(0.05, 16, 2.0);
  const auto s = upsample_and_shape(sx, sy, 2.0, p);
  const long half = static_cast<long>(p.center());
  for (long m = -half; m <= half; ++m) {
    const long idx = (static_cast<long>(2 * pos) + m + static_cast<long>(2 * n)) % static_cast<long>(2 * n);
    EXPECT_NEAR(std::abs(s.x[static_cast<std::size_t>(idx)] - p.taps[static_cast<std::size_t>(m + half)]), 0.0, 1e-12);
  }
  EXPECT_EQ(oracle::sum_norm(s.y), 0.0);
}

TEST(Shaping, FractionalRateBackToBackRecovery) {
  const std::size_t n = 64;
  const auto sx = qam_symbols(n, 1), sy = qam_symbols(n, 2);
  const auto p = rrc_taps(0.05, 64, 1.125);
  const auto s = upsample_and_shape(sx, sy, 1.125, p, 46.5e9);
  EXPECT_EQ(s.size(), 72u);
  EXPECT_DOUBLE_EQ(s.sample_rate, 46.5e9 * 1.125);
  const auto r = matched_filter_downsample(s, p, 1.125, n);
  double rms = std::sqrt(oracle::sum_norm(sx) / n);
  EXPECT_LE(oracle::max_abs_diff(r.x, sx) / rms, 1e-3);
  EXPECT_LE(oracle::max_abs_diff(r.y, sy) / rms, 1e-3);
}

TEST(Shaping, IntegerRateBackToBackRecovery) {
  const std::size_t n = 256;
  const auto sx = qam_symbols(n, 3), sy = qam_symbols(n, 4);
  const auto p = rrc_taps(0.05, static_cast<int>(n), 2.0);
  const auto s = upsample_and_shape(sx, sy, 2.0, p);
  const auto r = matched_filter_downsample(s, p, 2.0, n);
  double rms = std::sqrt(oracle::sum_norm(sx) / n);
  EXPECT_LE(oracle::max_abs_diff(r.x, sx) / rms, 1e-3);
  EXPECT_LE(oracle::max_abs_diff(r.y, sy) / rms, 1e-3);
}

TEST(Shaping, MeanPowerMatchesSymbolEnergyOverSps) {
  const std::size_t n = 512;
  const auto sx = qam_symbols(n, 5), sy = qam_symbols(n, 6);
  const double es = (oracle::sum_norm(sx) + oracle::sum_norm(sy)) / n;
  for (double sps : {1.125, 2.0}) {
    const auto s = upsample_and_shape(sx, sy, sps, rrc_taps(0.05, static_cast<int>(n), sps));
    EXPECT_NEAR(s.mean_power() / (es / sps), 1.0, 0.05) << sps;
  }
}

TEST(Shaping, RejectsSubNyquistRates) {
  const CVec v(16, cplx{1.0, 0.0});
  const auto p = rrc_taps(0.05, 8, 2.0);
  EXPECT_THROW(upsample_and_shape(v, v, 1.0, p), ParameterError);
  EXPECT_THROW(upsample_and_shape(v, v, 0.5, p), ParameterError);
  EXPECT_THROW(upsample_and_shape(v, v, 4.0, p), ParameterError);  // taps designed for 2 sps
}
