#pragma once

#include <memory>
#include <span>

#include "cineflow/grid.hpp"

namespace cineflow {

// Unitary 2-D DFT with the zero frequency at (nx/2, ny/2) in both the image
// and the k-space index; numerically fftshift(fft2(ifftshift(x))) / sqrt(nx ny).
// Plans are built with FFTW_ESTIMATE so results are reproducible run to run.
class CenteredFft2 {
 public:
  CenteredFft2(int nx, int ny);
  ~CenteredFft2();
  CenteredFft2(const CenteredFft2&) = delete;
  CenteredFft2& operator=(const CenteredFft2&) = delete;

  int nx() const { return nx_; }
  int ny() const { return ny_; }

  // Safe to call concurrently; `in` and `out` may alias.
  void forward(std::span<const Complex> in, std::span<Complex> out) const;
  void inverse(std::span<const Complex> in, std::span<Complex> out) const;

 private:
  void run(bool fwd, std::span<const Complex> in, std::span<Complex> out) const;

  int nx_;
  int ny_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace cineflow
