#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "cineflow/grid.hpp"
#include "cineflow/mri_op.hpp"
#include "cineflow/objective.hpp"
#include "cineflow/solver.hpp"

// Synthetic cine data: a complex phantom advected by a smooth velocity
// field, static coil maps, noisy undersampled measurements, and the dynamic
// mask the metrics are restricted to.
namespace cineflow::sim {

struct PhantomSpec {
  Dims dims{8, 48, 48};
  std::uint64_t seed = 1;

  bool operator==(const PhantomSpec&) const = default;
};

// Pixel position of the moving chamber in frame 0.
std::pair<double, double> chamber_center(const PhantomSpec& spec);
double chamber_radius(const PhantomSpec& spec);

// Single-frame complex image (nt = 1): smooth magnitude blobs with max 1,
// times exp(i phi) for a smooth low-order phase phi.
ImageSequence make_phantom_frame0(const PhantomSpec& spec);

// Phase map used by make_phantom_frame0 (radians), for inspection and tests.
RealField phantom_phase(const PhantomSpec& spec);

enum class VelocityPattern { Cardiac, Translation, Zero };

const char* name(VelocityPattern p);
VelocityPattern parse_pattern(const std::string& s);

struct VelocitySpec {
  VelocityPattern pattern = VelocityPattern::Cardiac;
  std::uint64_t seed = 2;
  double amplitude = 0.5;         // peak |v| in px/frame before capping
  double max_displacement = 0.5;  // cap on per-frame |v|
  double sigma_space = 2.0;
  double sigma_time = 1.0;
  double imag_fraction = 0.2;     // relative size of Im v (cardiac pattern)
  double translate_x = 0.5;       // translation pattern, px/frame
  double translate_y = 0.0;
  double center_x = -1;           // contraction center; negative = image center
  double center_y = -1;
  double radius = 10.0;           // contraction envelope radius in px

  bool operator==(const VelocitySpec&) const = default;
};

VelocityField make_velocity_field(const Dims& dims, const VelocitySpec& spec);

// Explicit Euler integration of dt rho + sum_k v_k conj(d_k rho) = 0 with
// central differences; `substeps` Euler steps of size 1/substeps per frame,
// using the velocity of the frame being advanced. Throws Divergence if the
// sup-norm grows past 10x that of frame0.
ImageSequence advect(const ImageSequence& frame0, const VelocityField& v, int substeps);

// Nc smooth coil maps (Gaussian magnitudes centered on the field-of-view
// border, linear phases), scaled so max RSS = 1. Nc = 1 gives the identity coil.
CoilMaps make_coil_maps(int nc, int nx, int ny, std::uint64_t seed);

struct NoiseSpec {
  double eta = 0.01;  // std relative to peak fully-sampled k-space magnitude
  std::uint64_t seed = 5;

  bool operator==(const NoiseSpec&) const = default;
};

// y = A rho + eta * peak * (g1 + i g2) / sqrt(2) on sampled entries.
KSpaceData synthesize_measurements(const ImageSequence& rho_gt, const mri::MriSystem& sys, const NoiseSpec& noise);

// Pixels whose temporal std of |rho| exceeds tau * max std, dilated by a
// disk of radius dilate_px. Throws Invariant on a static sequence.
SpatialMask dynamic_mask(const ImageSequence& rho_gt, double tau = 0.2, int dilate_px = 3);

// OF reconstruction of fully sampled data with alpha3 multiplied by `boost`.
std::pair<ImageSequence, VelocityField> dynamic_ground_truth(const KSpaceData& y_full, const mri::MriSystem& sys,
                                                             ModelParams mp, const SolverParams& sp,
                                                             double boost = 10.0);

}  // namespace cineflow::sim
