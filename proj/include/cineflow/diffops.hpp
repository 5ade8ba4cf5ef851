#pragma once

#include <span>
#include <vector>

#include "cineflow/grid.hpp"

// Finite-difference stencils on (t, x, y) grids and their exact transposes.
//
// The optical-flow term uses forward differences in time and central
// differences in space; the smoothness priors use forward differences in
// space. All stencils use Neumann (replicate) boundaries:
//
//   forward:  out[i] = u[i+1] - u[i],        out[N-1] = 0
//   central:  out[i] = (u[i+1] - u[i-1]) / 2 with u[-1] = u[0], u[N] = u[N-1]
//
// Every function is templated on the scalar type (double or Complex); the
// stencils have real coefficients, so applying them to a complex field is the
// same as applying them to the real and imaginary parts separately.
namespace cineflow::diffops {

enum class Stencil { ForwardTime, CentralX, CentralY, ForwardX, ForwardY };

inline constexpr Stencil kAllStencils[] = {Stencil::ForwardTime, Stencil::CentralX, Stencil::CentralY,
                                           Stencil::ForwardX, Stencil::ForwardY};

const char* name(Stencil s);

// out = D u. `out` must not alias `in`.
template <class T>
void apply(Stencil s, const Dims& d, std::span<const T> in, std::span<T> out);

// out += D^T w. `out` must not alias `w`.
template <class T>
void adjoint_add(Stencil s, const Dims& d, std::span<const T> w, std::span<T> out);

template <class T>
Grid3<T> apply(Stencil s, const Grid3<T>& u) {
  Grid3<T> out(u.dims());
  apply<T>(s, u.dims(), u.values(), out.values());
  return out;
}

template <class T>
Grid3<T> adjoint_of(Stencil s, const Grid3<T>& w) {
  Grid3<T> out(w.dims());
  adjoint_add<T>(s, w.dims(), w.values(), out.values());
  return out;
}

inline RealField d_forward_time(const RealField& u) { return apply(Stencil::ForwardTime, u); }
inline RealField d_central_x(const RealField& u) { return apply(Stencil::CentralX, u); }
inline RealField d_central_y(const RealField& u) { return apply(Stencil::CentralY, u); }
inline RealField d_forward_x(const RealField& u) { return apply(Stencil::ForwardX, u); }
inline RealField d_forward_y(const RealField& u) { return apply(Stencil::ForwardY, u); }

// Normalized 1-D Gaussian taps for offsets -R..R, R = ceil(4 sigma).
std::vector<double> gaussian_kernel(double sigma);

// Separable Gaussian blur over x and y of every frame, replicate boundaries.
// sigma == 0 returns the input unchanged.
template <class T>
Grid3<T> gaussian_smooth(const Grid3<T>& u, double sigma);

// Blur along t only (used when generating smooth synthetic velocities).
template <class T>
Grid3<T> gaussian_smooth_time(const Grid3<T>& u, double sigma);

}  // namespace cineflow::diffops
