#include "cineflow/motion.hpp"

#include "cineflow/diffops.hpp"

namespace cineflow::motion {

using diffops::Stencil;

const char* name(FlowCoupling c) {
  switch (c) {
    case FlowCoupling::Complex: return "complex";
    case FlowCoupling::Decoupled: return "decoupled";
    case FlowCoupling::SharedReal: return "shared-real";
  }
  return "?";
}

FlowCoupling parse_coupling(const std::string& s) {
  if (s == "complex") return FlowCoupling::Complex;
  if (s == "decoupled") return FlowCoupling::Decoupled;
  if (s == "shared-real") return FlowCoupling::SharedReal;
  throw Error(ErrorKind::Usage, "unknown flow coupling '" + s + "'");
}

RealField FlowResidual::r1() const {
  RealField out(r.dims());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i].real();
  return out;
}

RealField FlowResidual::r2() const {
  RealField out(r.dims());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i].imag();
  return out;
}

namespace {

// Velocity component acting on a spatial derivative g.
inline Complex couple(FlowCoupling c, Complex v, Complex g) {
  switch (c) {
    case FlowCoupling::Complex: return v * std::conj(g);
    case FlowCoupling::Decoupled: return {v.real() * g.real(), v.imag() * g.imag()};
    case FlowCoupling::SharedReal: return v.real() * g;
  }
  return {};
}

// q such that <couple(v, g), w> = <g, q> for all g.
inline Complex couple_adjoint_in_g(FlowCoupling c, Complex v, Complex w) {
  switch (c) {
    case FlowCoupling::Complex: return v * std::conj(w);
    case FlowCoupling::Decoupled: return {v.real() * w.real(), v.imag() * w.imag()};
    case FlowCoupling::SharedReal: return v.real() * w;
  }
  return {};
}

// q such that <couple(v, g), w> = <v, q> for all v.
inline Complex couple_adjoint_in_v(FlowCoupling c, Complex g, Complex w) {
  switch (c) {
    case FlowCoupling::Complex: return g * w;
    case FlowCoupling::Decoupled: return {g.real() * w.real(), g.imag() * w.imag()};
    case FlowCoupling::SharedReal: return {g.real() * w.real() + g.imag() * w.imag(), 0.0};
  }
  return {};
}

void check(const Dims& a, const Dims& b) { require_same_dims(a, b, "optical flow operands"); }

}  // namespace

FlowResidual flow_residual(const ImageSequence& rho, const VelocityField& v, FlowCoupling coupling) {
  check(rho.dims(), v.dims());
  const Dims d = rho.dims();
  FlowResidual out{Grid3<Complex>(d)};
  std::vector<Complex> gx(d.size()), gy(d.size());
  diffops::apply<Complex>(Stencil::ForwardTime, d, rho.values(), out.r.values());
  diffops::apply<Complex>(Stencil::CentralX, d, rho.values(), gx);
  diffops::apply<Complex>(Stencil::CentralY, d, rho.values(), gy);
  auto vx = v.vx();
  auto vy = v.vy();
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.r[i] += couple(coupling, vx[i], gx[i]) + couple(coupling, vy[i], gy[i]);
  }
  return out;
}

FlowResidual apply_v_jacobian(const ImageSequence& rho, const VelocityField& dv, FlowCoupling coupling) {
  check(rho.dims(), dv.dims());
  const Dims d = rho.dims();
  FlowResidual out{Grid3<Complex>(d)};
  std::vector<Complex> gx(d.size()), gy(d.size());
  diffops::apply<Complex>(Stencil::CentralX, d, rho.values(), gx);
  diffops::apply<Complex>(Stencil::CentralY, d, rho.values(), gy);
  auto vx = dv.vx();
  auto vy = dv.vy();
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.r[i] = couple(coupling, vx[i], gx[i]) + couple(coupling, vy[i], gy[i]);
  }
  return out;
}

ImageSequence rho_jacobian_adjoint(const VelocityField& v, const FlowResidual& w, FlowCoupling coupling) {
  check(v.dims(), w.r.dims());
  const Dims d = v.dims();
  ImageSequence out(d);
  std::vector<Complex> qx(d.size()), qy(d.size());
  auto vx = v.vx();
  auto vy = v.vy();
  for (std::size_t i = 0; i < d.size(); ++i) {
    qx[i] = couple_adjoint_in_g(coupling, vx[i], w.r[i]);
    qy[i] = couple_adjoint_in_g(coupling, vy[i], w.r[i]);
  }
  diffops::adjoint_add<Complex>(Stencil::ForwardTime, d, w.r.values(), out.values());
  diffops::adjoint_add<Complex>(Stencil::CentralX, d, qx, out.values());
  diffops::adjoint_add<Complex>(Stencil::CentralY, d, qy, out.values());
  return out;
}

VelocityField v_jacobian_adjoint(const ImageSequence& rho, const FlowResidual& w, FlowCoupling coupling) {
  check(rho.dims(), w.r.dims());
  const Dims d = rho.dims();
  VelocityField out(d);
  std::vector<Complex> gx(d.size()), gy(d.size());
  diffops::apply<Complex>(Stencil::CentralX, d, rho.values(), gx);
  diffops::apply<Complex>(Stencil::CentralY, d, rho.values(), gy);
  auto ox = out.vx();
  auto oy = out.vy();
  for (std::size_t i = 0; i < d.size(); ++i) {
    ox[i] = couple_adjoint_in_v(coupling, gx[i], w.r[i]);
    oy[i] = couple_adjoint_in_v(coupling, gy[i], w.r[i]);
  }
  return out;
}

}  // namespace cineflow::motion
