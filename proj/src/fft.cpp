#include "cineflow/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <vector>

namespace cineflow {

namespace {
// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct CenteredFft2::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

CenteredFft2::CenteredFft2(int nx, int ny) : nx_(nx), ny_(ny), plans_(std::make_unique<Plans>()) {
  if (nx < 1 || ny < 1) throw Error(ErrorKind::Invariant, "FFT dims must be positive");
  std::vector<Complex> a(static_cast<std::size_t>(nx) * ny), b(a.size());
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->fwd = fftw_plan_dft_2d(nx, ny, pa, pb, FFTW_FORWARD, flags);
  plans_->inv = fftw_plan_dft_2d(nx, ny, pa, pb, FFTW_BACKWARD, flags);
  if (!plans_->fwd || !plans_->inv) throw Error(ErrorKind::Invariant, "FFTW planning failed");
}

CenteredFft2::~CenteredFft2() = default;

void CenteredFft2::forward(std::span<const Complex> in, std::span<Complex> out) const { run(true, in, out); }

void CenteredFft2::inverse(std::span<const Complex> in, std::span<Complex> out) const { run(false, in, out); }

void CenteredFft2::run(bool fwd, std::span<const Complex> in, std::span<Complex> out) const {
  const std::size_t n = static_cast<std::size_t>(nx_) * ny_;
  if (in.size() != n || out.size() != n) throw Error(ErrorKind::DimMismatch, "FFT buffer size mismatch");
  const int hx = nx_ / 2, hy = ny_ / 2;
  std::vector<Complex> a(n), b(n);
  // ifftshift on the way in
  for (int x = 0; x < nx_; ++x) {
    const int sx = (x + hx) % nx_;
    for (int y = 0; y < ny_; ++y) a[static_cast<std::size_t>(x) * ny_ + y] = in[static_cast<std::size_t>(sx) * ny_ + (y + hy) % ny_];
  }
  fftw_execute_dft(fwd ? plans_->fwd : plans_->inv, reinterpret_cast<fftw_complex*>(a.data()),
                   reinterpret_cast<fftw_complex*>(b.data()));
  // fftshift on the way out
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int x = 0; x < nx_; ++x) {
    const int sx = (x - hx + nx_) % nx_;
    for (int y = 0; y < ny_; ++y) {
      out[static_cast<std::size_t>(x) * ny_ + y] = scale * b[static_cast<std::size_t>(sx) * ny_ + (y - hy + ny_) % ny_];
    }
  }
}

}  // namespace cineflow
