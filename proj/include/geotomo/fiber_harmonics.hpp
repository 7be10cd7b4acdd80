#pragma once

// Antipodal extension of fan-beam data to the full fiber, the fiberwise
// Hilbert transform (H u)_k = -i sgn(k) u_k and restriction back to influx.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include "geotomo/ray_transform.hpp"

namespace geotomo {

enum class Parity { odd, even };
enum class Formula { frc, hrc };

/// n_beta fibers of 2 n_alpha uniform samples over alpha in [-pi/2, 3pi/2).
struct ExtendedFiberData {
  InfluxGrid grid;
  Parity parity = Parity::odd;
  std::vector<double> values;  // index i * 2 n_alpha + j

  std::size_t fiber_length() const { return 2 * grid.n_alpha; }
  double at(std::size_t i, std::size_t j) const { return values[i * fiber_length() + j]; }
};

namespace detail {

// FFTW planning is not thread-safe.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftwTransform {
 public:
  explicit FftwTransform(std::size_t n) : n_(n) {
    std::lock_guard lock(fftw_planner_mutex());
    buf_ = fftw_alloc_complex(n);
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(len, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(len, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftwTransform() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buf_);
  }
  FftwTransform(const FftwTransform&) = delete;
  FftwTransform& operator=(const FftwTransform&) = delete;

  /// In-place Hilbert multiplier on buffer(); Nyquist zeroed for even n.
  void apply_hilbert() {
    fftw_execute(forward_);
    const std::size_t half = n_ / 2;
    for (std::size_t k = 0; k < n_; ++k) {
      const double re = buf_[k][0];
      const double im = buf_[k][1];
      if (k == 0 || (n_ % 2 == 0 && k == half)) {
        buf_[k][0] = buf_[k][1] = 0.0;
      } else if (k <= half) {  // -i * z
        buf_[k][0] = im;
        buf_[k][1] = -re;
      } else {  // +i * z
        buf_[k][0] = -im;
        buf_[k][1] = re;
      }
    }
    fftw_execute(backward_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      buf_[k][0] *= scale;
      buf_[k][1] *= scale;
    }
  }

  fftw_complex* buffer() { return buf_; }

 private:
  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace detail

/// Hilbert transform of one uniformly sampled periodic fiber.
inline std::vector<std::complex<double>> hilbert_periodic(std::span<const std::complex<double>> fiber) {
  if (fiber.size() < 4) throw UsageError("Hilbert transform needs at least 4 fiber samples");
  detail::FftwTransform t(fiber.size());
  for (std::size_t k = 0; k < fiber.size(); ++k) {
    t.buffer()[k][0] = fiber[k].real();
    t.buffer()[k][1] = fiber[k].imag();
  }
  t.apply_hilbert();
  std::vector<std::complex<double>> out(fiber.size());
  for (std::size_t k = 0; k < fiber.size(); ++k) out[k] = {t.buffer()[k][0], t.buffer()[k][1]};
  return out;
}

/// w(beta, alpha + pi) = -w (odd) or +w (even).
inline ExtendedFiberData extend(const FanBeamData& data, Parity parity) {
  ExtendedFiberData e{data.grid, parity, std::vector<double>(data.grid.n_beta * 2 * data.grid.n_alpha)};
  const std::size_t na = data.grid.n_alpha;
  const double sign = parity == Parity::odd ? -1.0 : 1.0;
  for (std::size_t i = 0; i < data.grid.n_beta; ++i)
    for (std::size_t j = 0; j < na; ++j) {
      e.values[i * 2 * na + j] = data.at(i, j);
      e.values[i * 2 * na + j + na] = sign * data.at(i, j);
    }
  return e;
}

/// Per-beta Hilbert transform of the extended fibers. The optional
/// residue receives the largest discarded imaginary part.
inline ExtendedFiberData hilbert_fiber(const ExtendedFiberData& e, double* imag_residue = nullptr) {
  const std::size_t len = e.fiber_length();
  if (len < 4) throw UsageError("Hilbert transform needs at least 4 fiber samples");
  ExtendedFiberData out = e;
  detail::FftwTransform t(len);
  double residue = 0.0;
  for (std::size_t i = 0; i < e.grid.n_beta; ++i) {
    for (std::size_t j = 0; j < len; ++j) {
      t.buffer()[j][0] = e.values[i * len + j];
      t.buffer()[j][1] = 0.0;
    }
    t.apply_hilbert();
    for (std::size_t j = 0; j < len; ++j) {
      out.values[i * len + j] = t.buffer()[j][0];
      residue = std::max(residue, std::abs(t.buffer()[j][1]));
    }
  }
  if (imag_residue) *imag_residue = residue;
  return out;
}

/// The influx half alpha in (-pi/2, pi/2).
inline FanBeamData restrict(const ExtendedFiberData& e) {
  FanBeamData out(e.grid);
  const std::size_t na = e.grid.n_alpha;
  for (std::size_t i = 0; i < e.grid.n_beta; ++i)
    for (std::size_t j = 0; j < na; ++j) out.at(i, j) = e.values[i * 2 * na + j];
  return out;
}

/// frc: H applied to the odd part of I0 f; hrc: H applied to the even part of
/// I1[X_perp h]. The boundary function carries the data on one half of each
/// fiber and zero on the other, so its parity projection is half the
/// antipodal extension.
inline FanBeamData prep(const FanBeamData& data, Formula formula) {
  FanBeamData w = restrict(hilbert_fiber(extend(data, formula == Formula::frc ? Parity::odd : Parity::even)));
  for (double& v : w.values) v *= 0.5;
  return w;
}

}  // namespace geotomo
