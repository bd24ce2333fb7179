#pragma once

// Mixed-radix complex FFT (Stockham autosort, radices 4/2/3 specialised, generic
// odd radix otherwise). Forward is unscaled; inverse carries the 1/K factor.

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "seqsel/errors.hpp"

namespace seqsel {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

namespace detail {

// Plain product without the NaN/Inf recovery branch of operator*.
inline cplx cmul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline cplx unit_root(std::size_t num, std::size_t den) {
  const double ang = -2.0 * std::numbers::pi * static_cast<double>(num % den) / static_cast<double>(den);
  return {std::cos(ang), std::sin(ang)};
}

}  // namespace detail

class FftPlan {
 public:
  explicit FftPlan(std::size_t size) : size_(size) {
    require(size >= 1, "empty signal");
    std::size_t rest = size;
    std::vector<std::size_t> radices;
    while (rest % 4 == 0) { radices.push_back(4); rest /= 4; }
    while (rest % 2 == 0) { radices.push_back(2); rest /= 2; }
    for (std::size_t p = 3; p * p <= rest; p += 2)
      while (rest % p == 0) { radices.push_back(p); rest /= p; }
    if (rest > 1) radices.push_back(rest);

    std::size_t sub = size;
    std::size_t stride = 1;
    for (auto r : radices) {
      Stage st;
      st.radix = r;
      st.m = sub / r;
      st.stride = stride;
      st.twiddles.resize(st.m * r);
      for (std::size_t p = 0; p < st.m; ++p)
        for (std::size_t k = 0; k < r; ++k) st.twiddles[p * r + k] = detail::unit_root(p * k, sub);
      if (r > 4) {
        st.roots.resize(r);
        for (std::size_t k = 0; k < r; ++k) st.roots[k] = detail::unit_root(k, r);
      }
      stages_.push_back(std::move(st));
      sub /= r;
      stride *= r;
    }
  }

  std::size_t size() const noexcept { return size_; }

  void forward(std::span<cplx> data) const {
    require(data.size() == size_, "fft: size mismatch with plan");
    run(data);
  }

  void inverse(std::span<cplx> data) const {
    require(data.size() == size_, "fft: size mismatch with plan");
    for (auto& v : data) v = std::conj(v);
    run(data);
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& v : data) v = std::conj(v) * scale;
  }

 private:
  struct Stage {
    std::size_t radix = 1;
    std::size_t m = 1;
    std::size_t stride = 1;
    CVec twiddles;  // [p * radix + k] = w_sub^(p k)
    CVec roots;     // w_radix^k, generic radix only
  };

  void run(std::span<cplx> data) const {
    if (size_ == 1) return;
    thread_local CVec scratch;
    if (scratch.size() < size_) scratch.resize(size_);
    cplx* x = data.data();
    cplx* y = scratch.data();
    CVec gathered;
    for (const auto& st : stages_) {
      const std::size_t r = st.radix, m = st.m, s = st.stride;
      if (r == 4) {
        for (std::size_t p = 0; p < m; ++p) {
          const cplx* tw = &st.twiddles[p * 4];
          for (std::size_t q = 0; q < s; ++q) {
            const cplx a0 = x[q + s * p], a1 = x[q + s * (p + m)];
            const cplx a2 = x[q + s * (p + 2 * m)], a3 = x[q + s * (p + 3 * m)];
            const cplx t0 = a0 + a2, t1 = a0 - a2, t2 = a1 + a3;
            const cplx t3{(a1 - a3).imag(), -(a1 - a3).real()};  // -j (a1 - a3)
            y[q + s * (4 * p)] = t0 + t2;
            y[q + s * (4 * p + 1)] = detail::cmul(t1 + t3, tw[1]);
            y[q + s * (4 * p + 2)] = detail::cmul(t0 - t2, tw[2]);
            y[q + s * (4 * p + 3)] = detail::cmul(t1 - t3, tw[3]);
          }
        }
      } else if (r == 2) {
        for (std::size_t p = 0; p < m; ++p) {
          const cplx w = st.twiddles[p * 2 + 1];
          for (std::size_t q = 0; q < s; ++q) {
            const cplx a = x[q + s * p], b = x[q + s * (p + m)];
            y[q + s * (2 * p)] = a + b;
            y[q + s * (2 * p + 1)] = detail::cmul(a - b, w);
          }
        }
      } else if (r == 3) {
        const double c = -0.5, sn = -std::sqrt(3.0) / 2.0;  // w_3 = c + j sn
        for (std::size_t p = 0; p < m; ++p) {
          const cplx* tw = &st.twiddles[p * 3];
          for (std::size_t q = 0; q < s; ++q) {
            const cplx a0 = x[q + s * p], a1 = x[q + s * (p + m)], a2 = x[q + s * (p + 2 * m)];
            const cplx sum = a1 + a2, dif = a1 - a2;
            const cplx base = a0 + c * sum;
            const cplx rot{-sn * dif.imag(), sn * dif.real()};  // j sn (a1 - a2)
            y[q + s * (3 * p)] = a0 + sum;
            y[q + s * (3 * p + 1)] = detail::cmul(base + rot, tw[1]);
            y[q + s * (3 * p + 2)] = detail::cmul(base - rot, tw[2]);
          }
        }
      } else {
        gathered.resize(r);
        for (std::size_t p = 0; p < m; ++p) {
          const cplx* tw = &st.twiddles[p * r];
          for (std::size_t q = 0; q < s; ++q) {
            for (std::size_t j = 0; j < r; ++j) gathered[j] = x[q + s * (p + j * m)];
            for (std::size_t k = 0; k < r; ++k) {
              cplx acc = gathered[0];
              std::size_t idx = 0;
              for (std::size_t j = 1; j < r; ++j) {
                idx += k;
                if (idx >= r) idx -= r;
                acc += detail::cmul(gathered[j], st.roots[idx]);
              }
              y[q + s * (r * p + k)] = detail::cmul(acc, tw[k]);
            }
          }
        }
      }
      std::swap(x, y);
    }
    if (x != data.data()) std::copy(x, x + size_, data.data());
  }

  std::size_t size_;
  std::vector<Stage> stages_;
};

/// Shared, immutable plan for a given size. Safe to call concurrently.
inline const FftPlan& fft_plan(std::size_t size) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<const FftPlan>> plans;
  std::lock_guard lock(mutex);
  auto& slot = plans[size];
  if (!slot) slot = std::make_unique<const FftPlan>(size);
  return *slot;
}

inline CVec fft_forward(std::span<const cplx> samples) {
  require(!samples.empty(), "empty signal");
  CVec out(samples.begin(), samples.end());
  fft_plan(out.size()).forward(out);
  return out;
}

inline CVec fft_inverse(std::span<const cplx> spectrum) {
  require(!spectrum.empty(), "empty signal");
  CVec out(spectrum.begin(), spectrum.end());
  fft_plan(out.size()).inverse(out);
  return out;
}

/// Signed bin index in FFT order: 0, 1, ..., ceil(K/2)-1, -floor(K/2), ..., -1.
inline long signed_bin(std::size_t bin, std::size_t size) {
  const auto b = static_cast<long>(bin);
  return bin < (size + 1) / 2 ? b : b - static_cast<long>(size);
}

/// Bin frequencies in Hz, FFT order.
inline std::vector<double> fft_frequencies(std::size_t size, double sample_rate) {
  std::vector<double> f(size);
  for (std::size_t k = 0; k < size; ++k)
    f[k] = static_cast<double>(signed_bin(k, size)) * sample_rate / static_cast<double>(size);
  return f;
}

}  // namespace seqsel
