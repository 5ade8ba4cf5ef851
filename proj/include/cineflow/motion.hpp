#pragma once

#include "cineflow/grid.hpp"

// Complex optical-flow operator
//
//   M(rho, v) = [ dt rho1 + <v1, grad rho1> + <v2, grad rho2> ]
//               [ dt rho2 + <v2, grad rho1> - <v1, grad rho2> ]
//
// for rho = rho1 + i rho2 and v = v1 + i v2. Equivalently
// r1 + i r2 = dt rho + sum_k v_k conj(d_k rho), i.e. the complex inner product
// <a, b> = sum_k a_k conj(b_k). dt is a forward difference, d_k central.
//
// M is real-linear in rho for fixed v and affine in v for fixed rho; the
// Jacobian adjoints below are exact transposes under <a, b> = Re sum a conj(b).
namespace cineflow::motion {

enum class FlowCoupling {
  Complex,     // the complex model above
  Decoupled,   // Re v drives rho1, Im v drives rho2
  SharedReal,  // Re v drives both parts, Im v unused
};

const char* name(FlowCoupling c);
FlowCoupling parse_coupling(const std::string& s);

// Residual pair (r1, r2) stored as r1 + i r2 per (t, x, y).
struct FlowResidual {
  Grid3<Complex> r;

  RealField r1() const;
  RealField r2() const;
};

FlowResidual flow_residual(const ImageSequence& rho, const VelocityField& v,
                           FlowCoupling coupling = FlowCoupling::Complex);

// Spatial part only, v -> M(rho, v) - dt rho.
FlowResidual apply_v_jacobian(const ImageSequence& rho, const VelocityField& dv,
                              FlowCoupling coupling = FlowCoupling::Complex);

// Transpose of rho -> M(rho, v); real/imag parts are gradients w.r.t. rho1, rho2.
ImageSequence rho_jacobian_adjoint(const VelocityField& v, const FlowResidual& w,
                                   FlowCoupling coupling = FlowCoupling::Complex);

// Transpose of v -> M(rho, v) - dt rho.
VelocityField v_jacobian_adjoint(const ImageSequence& rho, const FlowResidual& w,
                                 FlowCoupling coupling = FlowCoupling::Complex);

}  // namespace cineflow::motion
