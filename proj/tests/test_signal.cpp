#include <gtest/gtest.h>

#include "seqsel/pulse.hpp"
#include "seqsel/signal.hpp"
#include "test_support.hpp"

using namespace seqsel;

namespace {

DualPolSignal cw(std::size_t n, double fs, cplx ax, cplx ay) {
  return make_signal(CVec(n, ax), CVec(n, ay), fs);
}

std::size_t peak_bin(const CVec& v) {
  const auto spec = fft_forward(v);
  std::size_t best = 0;
  for (std::size_t k = 1; k < spec.size(); ++k)
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  return best;
}

/// Random spectrum confined to |f| <= half_bw.
DualPolSignal band_limited(std::size_t size, double fs, double half_bw, std::uint64_t seed) {
  auto sx = oracle::random_cvec(size, seed), sy = oracle::random_cvec(size, seed + 1);
  for (std::size_t k = 0; k < size; ++k) {
    if (std::abs(static_cast<double>(signed_bin(k, size)) * fs / static_cast<double>(size)) > half_bw) {
      sx[k] = 0.0;
      sy[k] = 0.0;
    }
  }
  return make_signal(fft_inverse(sx), fft_inverse(sy), fs);
}

}  // namespace

TEST(DualPolSignal, InvariantsEnforced) {
  EXPECT_THROW(make_signal({}, {}, 1.0), ParameterError);
  EXPECT_THROW(make_signal(CVec(4), CVec(3), 1.0), ParameterError);
  EXPECT_THROW(make_signal(CVec(4), CVec(4), 0.0), ParameterError);
}

TEST(SpectralGrid, BinSpacingAndSnap) {
  const auto s = cw(400, 200e9, 1.0, 0.0);
  const auto g = SpectralGrid::of(s);
  EXPECT_EQ(g.fft_size, 400u);
  EXPECT_DOUBLE_EQ(g.bin_spacing, 0.5e9);
  EXPECT_DOUBLE_EQ(g.snap(10.2e9), 10.0e9);
}

TEST(FrequencyShift, ZeroIsIdentity) {
  const auto s = make_signal(oracle::random_cvec(64, 1), oracle::random_cvec(64, 2), 10.0);
  const auto out = frequency_shift(s, 0.0);
  EXPECT_EQ(out.x, s.x);
  EXPECT_EQ(out.y, s.y);
}

TEST(FrequencyShift, ForwardThenBackRestoresAndPreservesEnergy) {
  const auto s = make_signal(oracle::random_cvec(300, 3), oracle::random_cvec(300, 4), 100e9);
  const auto a = frequency_shift(s, 13.7e9);
  EXPECT_NEAR(a.sample_sum_energy() / s.sample_sum_energy(), 1.0, 1e-14);
  const auto b = frequency_shift(a, -13.7e9);
  EXPECT_LT(oracle::rel_diff(b.x, s.x), 1e-12);
  EXPECT_LT(oracle::rel_diff(b.y, s.y), 1e-12);
}

TEST(FrequencyShift, CwLandsOnExpectedBin) {
  const auto s = cw(400, 200e9, 1.0, 1.0);
  const auto shifted = frequency_shift(s, 10e9);
  EXPECT_EQ(peak_bin(shifted.x), 20u);
  EXPECT_THROW(frequency_shift(s, 100e9), ParameterError);
}

TEST(WdmMultiplex, SingleChannelIsIdentity) {
  const auto s = make_signal(oracle::random_cvec(64, 5), oracle::random_cvec(64, 6), 10.0);
  const std::vector<DualPolSignal> chans(1, s);
  const auto out = wdm_multiplex(chans, 1.0);
  EXPECT_EQ(out.x, s.x);
  EXPECT_EQ(out.y, s.y);
}

TEST(WdmMultiplex, TwoTonesAtPlusMinusHalfSpacing) {
  const std::vector<DualPolSignal> chans{cw(400, 200e9, 1.0, 0.0), cw(400, 200e9, 1.0, 0.0)};
  const auto out = wdm_multiplex(chans, 50e9);
  const auto spec = fft_forward(out.x);
  // +25 GHz is bin 50, -25 GHz is bin 350 at 0.5 GHz spacing
  std::vector<std::size_t> order(spec.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(spec[a]) > std::abs(spec[b]); });
  std::vector<std::size_t> top{order[0], order[1]};
  std::sort(top.begin(), top.end());
  EXPECT_EQ(top[0], 50u);
  EXPECT_EQ(top[1], 350u);
}

TEST(WdmMultiplex, DisjointChannelsAddPower) {
  std::vector<DualPolSignal> chans;
  double single = 0.0;
  for (int k = 0; k < 5; ++k) {
    chans.push_back(band_limited(2048, 372e9, 24.4e9, 10 + 2 * k));
    single += chans.back().mean_power();
  }
  const double spacing = SpectralGrid::of(chans[0]).snap(50e9);
  const auto out = wdm_multiplex(chans, spacing);
  EXPECT_NEAR(out.mean_power() / single, 1.0, 1e-6);
}

TEST(WdmMultiplex, IsLinear) {
  const std::size_t n = 64;
  std::vector<DualPolSignal> a, b, sum;
  for (int k = 0; k < 3; ++k) {
    a.push_back(make_signal(oracle::random_cvec(n, 20 + k), oracle::random_cvec(n, 30 + k), 8.0));
    b.push_back(make_signal(oracle::random_cvec(n, 40 + k), oracle::random_cvec(n, 50 + k), 8.0));
    DualPolSignal s = a.back();
    for (std::size_t i = 0; i < n; ++i) {
      s.x[i] += b.back().x[i];
      s.y[i] += b.back().y[i];
    }
    sum.push_back(s);
  }
  const auto ma = wdm_multiplex(a, 1.3), mb = wdm_multiplex(b, 1.3), ms = wdm_multiplex(sum, 1.3);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_LE(std::abs(ms.x[i] - ma.x[i] - mb.x[i]), 1e-12);
    EXPECT_LE(std::abs(ms.y[i] - ma.y[i] - mb.y[i]), 1e-12);
  }
}

TEST(WdmMultiplex, RejectsMismatchedChannels) {
  const std::vector<DualPolSignal> lens{cw(64, 8.0, 1.0, 0.0), cw(32, 8.0, 1.0, 0.0)};
  EXPECT_THROW(wdm_multiplex(lens, 1.0), ParameterError);
  const std::vector<DualPolSignal> rates{cw(64, 8.0, 1.0, 0.0), cw(64, 4.0, 1.0, 0.0)};
  EXPECT_THROW(wdm_multiplex(rates, 1.0), ParameterError);
}
