#include "cineflow/mri_op.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace cineflow::mri {

MriSystem::MriSystem(CoilMaps coils, SamplingMask mask)
    : coils_(std::move(coils)),
      mask_(std::move(mask)),
      fft_(std::make_shared<const CenteredFft2>(coils_.nx(), coils_.ny())) {
  if (mask_.nx_full() != coils_.nx()) {
    throw Error(ErrorKind::DimMismatch, "mask row count " + std::to_string(mask_.nx_full()) +
                                            " does not match coil map Nx " + std::to_string(coils_.nx()));
  }
  check_sequence_dims(image_dims());
}

MriSystem MriSystem::with_mask(SamplingMask mask) const {
  MriSystem out = *this;
  if (mask.nx_full() != coils_.nx()) throw Error(ErrorKind::DimMismatch, "mask does not match coil maps");
  out.mask_ = std::move(mask);
  return out;
}

namespace {

void zero_unsampled(const SamplingMask& mask, int t, int nx, int ny, std::span<Complex> k) {
  for (int x = 0; x < nx; ++x) {
    if (!mask.sampled(t, x)) std::fill_n(k.begin() + static_cast<std::size_t>(x) * ny, ny, Complex{});
  }
}

void check_rho(const MriSystem& sys, const ImageSequence& rho) {
  require_same_dims(sys.image_dims(), rho.dims(), "image vs MRI system");
}

void check_y(const MriSystem& sys, const KSpaceData& y) {
  require_same_dims(sys.image_dims(), y.dims(), "k-space vs MRI system");
  if (y.coils() != sys.coils().count()) throw Error(ErrorKind::DimMismatch, "k-space coil count mismatch");
}

}  // namespace

KSpaceData forward(const MriSystem& sys, const ImageSequence& rho) {
  check_rho(sys, rho);
  const Dims d = rho.dims();
  KSpaceData y(d, sys.coils().count(), sys.mask());
  std::vector<Complex> z(d.frame_size());
  for (int t = 0; t < d.nt; ++t) {
    auto img = rho.frame(t);
    for (int c = 0; c < sys.coils().count(); ++c) {
      auto cm = sys.coils().coil(c);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = cm[i] * img[i];
      auto k = y.image(t, c);
      sys.fft().forward(z, k);
      zero_unsampled(sys.mask(), t, d.nx, d.ny, k);
    }
  }
  return y;
}

ImageSequence adjoint(const MriSystem& sys, const KSpaceData& y) {
  check_y(sys, y);
  const Dims d = y.dims();
  ImageSequence out(d);
  std::vector<Complex> k(d.frame_size()), z(d.frame_size());
  for (int t = 0; t < d.nt; ++t) {
    auto acc = out.frame(t);
    for (int c = 0; c < sys.coils().count(); ++c) {
      auto src = y.image(t, c);
      std::copy(src.begin(), src.end(), k.begin());
      zero_unsampled(sys.mask(), t, d.nx, d.ny, k);
      sys.fft().inverse(k, z);
      auto cm = sys.coils().coil(c);
      for (std::size_t i = 0; i < z.size(); ++i) acc[i] += std::conj(cm[i]) * z[i];
    }
  }
  return out;
}

namespace {

// Shared loop for A^*(A rho - y) (y may be null for A^*A rho); returns the
// squared residual norm.
double normal_residual(const MriSystem& sys, const ImageSequence& rho, const KSpaceData* y, ImageSequence& out) {
  const Dims d = rho.dims();
  std::vector<Complex> z(d.frame_size()), k(d.frame_size());
  double value = 0;
  for (int t = 0; t < d.nt; ++t) {
    auto img = rho.frame(t);
    auto acc = out.frame(t);
    for (int c = 0; c < sys.coils().count(); ++c) {
      auto cm = sys.coils().coil(c);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = cm[i] * img[i];
      sys.fft().forward(z, k);
      for (int x = 0; x < d.nx; ++x) {
        auto row = std::span<Complex>(k).subspan(static_cast<std::size_t>(x) * d.ny, d.ny);
        if (!sys.mask().sampled(t, x)) {
          std::fill(row.begin(), row.end(), Complex{});
          continue;
        }
        if (y) {
          auto meas = y->image(t, c).subspan(static_cast<std::size_t>(x) * d.ny, d.ny);
          for (int j = 0; j < d.ny; ++j) {
            row[j] -= meas[j];
            value += std::norm(row[j]);
          }
        }
      }
      sys.fft().inverse(k, z);
      for (std::size_t i = 0; i < z.size(); ++i) acc[i] += std::conj(cm[i]) * z[i];
    }
  }
  return value;
}

}  // namespace

ImageSequence normal(const MriSystem& sys, const ImageSequence& rho) {
  check_rho(sys, rho);
  ImageSequence out(rho.dims());
  normal_residual(sys, rho, nullptr, out);
  return out;
}

DataTerm data_term_and_grad(const MriSystem& sys, const ImageSequence& rho, const KSpaceData& y) {
  check_rho(sys, rho);
  check_y(sys, y);
  DataTerm out{0.0, ImageSequence(rho.dims())};
  out.value = normal_residual(sys, rho, &y, out.grad);
  for (auto& g : out.grad.values()) g *= 2.0;
  return out;
}

double data_term(const MriSystem& sys, const ImageSequence& rho, const KSpaceData& y) {
  check_y(sys, y);
  auto k = forward(sys, rho);
  double value = 0;
  auto a = k.values();
  auto b = y.values();
  for (std::size_t i = 0; i < a.size(); ++i) value += std::norm(a[i] - b[i]);
  return value;
}

// ---------------------------------------------------------------------------
// Sampling masks

int round_count(double x) { return static_cast<int>(std::floor(x + 0.5)); }

MaskLayout mask_layout(int nx_full, double central_frac) {
  MaskLayout m;
  m.total = round_count(0.25 * nx_full);
  m.central = std::min(round_count(central_frac * nx_full), m.total);
  // Block starts floor(n/2) rows before the DC row; even counts are one row longer on the low side.
  m.central_begin = nx_full / 2 - m.central / 2;
  m.above = m.central_begin;
  m.below = nx_full - (m.central_begin + m.central);
  return m;
}

namespace {

// Draws k distinct rows from [lo, lo + n) avoiding `previous`, by rejection.
std::vector<int> draw_disjoint(std::mt19937_64& rng, int lo, int n, int k, const std::vector<int>& previous) {
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = lo + i;
  const std::set<int> prev(previous.begin(), previous.end());
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<int> pick;
    std::sample(pool.begin(), pool.end(), std::back_inserter(pick), k, rng);
    const bool clash = std::any_of(pick.begin(), pick.end(), [&](int r) { return prev.count(r) != 0; });
    if (!clash) return pick;
  }
  throw Error(ErrorKind::Infeasible, "disjointness infeasible: rejection sampling exhausted");
}

}  // namespace

SamplingMask make_mask(int nt, int nx_full, Acceleration accel, double central_frac, std::uint64_t seed) {
  if (nt < 1) throw Error(ErrorKind::Invariant, "mask needs Nt ≥ 1");
  if (accel == Acceleration::Full) return SamplingMask::full(nt, nx_full);
  if (nx_full < 8) throw Error(ErrorKind::Invariant, "mask needs Nx_full ≥ 8");
  if (central_frac < 0 || central_frac > 0.25) {
    throw Error(ErrorKind::Invariant, "central fraction must lie in [0, 0.25]");
  }
  const MaskLayout m = mask_layout(nx_full, central_frac);
  const int outer = m.total - m.central;
  const int base = outer / 2;
  const bool odd = outer % 2 != 0;

  // Each side must hold the draws of two consecutive frames without overlap.
  const int pair = 2 * base + (odd ? 1 : 0);
  if (nt > 1 && (pair > m.above || pair > m.below)) {
    throw Error(ErrorKind::Infeasible, "disjointness infeasible: too few outer rows for consecutive frames");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> rows(nt);
  std::vector<int> prev_above, prev_below;
  for (int t = 0; t < nt; ++t) {
    // An odd outer count cannot be split evenly; the spare row alternates sides by frame.
    const int k_above = base + (odd && t % 2 == 1 ? 1 : 0);
    const int k_below = base + (odd && t % 2 == 0 ? 1 : 0);
    auto above = draw_disjoint(rng, 0, m.above, k_above, prev_above);
    auto below = draw_disjoint(rng, m.central_begin + m.central, m.below, k_below, prev_below);
    auto& r = rows[t];
    r.insert(r.end(), above.begin(), above.end());
    for (int i = 0; i < m.central; ++i) r.push_back(m.central_begin + i);
    r.insert(r.end(), below.begin(), below.end());
    prev_above = std::move(above);
    prev_below = std::move(below);
  }
  return SamplingMask(nx_full, std::move(rows));
}

}  // namespace cineflow::mri
