#pragma once

#include <cstdint>
#include <memory>

#include "cineflow/fft.hpp"
#include "cineflow/grid.hpp"

namespace cineflow::mri {

enum class Acceleration { Full, FourX };

// Per-frame measurement operator (A_t rho_t)_i = S_t F C_i rho_t with static
// coil maps C_i, the centered unitary DFT F, and row selection S_t.
class MriSystem {
 public:
  MriSystem(CoilMaps coils, SamplingMask mask);

  const CoilMaps& coils() const { return coils_; }
  const SamplingMask& mask() const { return mask_; }
  // Image dims implied by the system.
  Dims image_dims() const { return {mask_.nt(), coils_.nx(), coils_.ny()}; }
  const CenteredFft2& fft() const { return *fft_; }

  // Same coils, different sampling.
  MriSystem with_mask(SamplingMask mask) const;

 private:
  CoilMaps coils_;
  SamplingMask mask_;
  std::shared_ptr<const CenteredFft2> fft_;
};

KSpaceData forward(const MriSystem& sys, const ImageSequence& rho);

// Conjugate transpose: zero-fill, inverse DFT, multiply by conj(C_i), sum coils.
ImageSequence adjoint(const MriSystem& sys, const KSpaceData& y);

// A^* A rho without materializing k-space.
ImageSequence normal(const MriSystem& sys, const ImageSequence& rho);

struct DataTerm {
  double value = 0;
  ImageSequence grad;  // 2 A^*(A rho - y); real/imag parts are d/d rho^1, d/d rho^2
};

// sum_t ||A_t rho_t - y_t||^2 and its gradient.
DataTerm data_term_and_grad(const MriSystem& sys, const ImageSequence& rho, const KSpaceData& y);
double data_term(const MriSystem& sys, const ImageSequence& rho, const KSpaceData& y);

// Cartesian row mask: `FourX` keeps round(0.25 nx) rows per frame, a fixed
// central block of round(central_frac nx) rows plus random outer rows split
// between the two sides; outer sets of consecutive frames never overlap.
SamplingMask make_mask(int nt, int nx_full, Acceleration accel, double central_frac, std::uint64_t seed);

// Row counts used by make_mask for the given size.
struct MaskLayout {
  int total = 0;
  int central = 0;
  int central_begin = 0;  // first row of the central block
  int above = 0;          // rows available before the block
  int below = 0;          // rows available after the block
};
MaskLayout mask_layout(int nx_full, double central_frac);

// round-half-away-from-zero on nonnegative values
int round_count(double x);

}  // namespace cineflow::mri
