#include "cineflow/objective.hpp"

#include <random>

#include "cineflow/diffops.hpp"

namespace cineflow {

void ModelParams::validate() const {
  if (alpha1 < 0 || alpha2 < 0 || alpha3 < 0) throw Error(ErrorKind::Invariant, "alpha_i must be ≥ 0");
  if (!(eps1 > 0) || !(eps2 > 0) || !(eps3 > 0)) throw Error(ErrorKind::Invariant, "eps_i must be > 0");
}

}  // namespace cineflow

namespace cineflow::objective {

using diffops::Stencil;

HuberResult huber_value_grad(std::span<const double> x, int dim, double eps) {
  if (!(eps > 0)) throw Error(ErrorKind::Invariant, "Huber eps must be > 0");
  if (dim < 1 || x.size() % dim != 0) throw Error(ErrorKind::DimMismatch, "Huber input is not a whole number of sites");
  HuberResult out{0.0, std::vector<double>(x.size())};
  for (std::size_t s = 0; s < x.size(); s += dim) {
    double n2 = 0;
    for (int k = 0; k < dim; ++k) n2 += x[s + k] * x[s + k];
    if (n2 <= eps * eps) {
      out.value += n2 / (2 * eps);
      for (int k = 0; k < dim; ++k) out.grad[s + k] = x[s + k] / eps;
    } else {
      const double n = std::sqrt(n2);
      out.value += n - 0.5 * eps;
      for (int k = 0; k < dim; ++k) out.grad[s + k] = x[s + k] / n;
    }
  }
  return out;
}

namespace {

// Huber over the forward spatial gradient of a complex field, with the real
// and imaginary parts as separate 2-vector sites. If `grad` is non-empty,
// adds weight * D^T(huber') into it.
double gradient_huber(const Dims& d, std::span<const Complex> u, double eps, double weight,
                      std::span<Complex> grad) {
  std::vector<Complex> fx(d.size()), fy(d.size());
  diffops::apply<Complex>(Stencil::ForwardX, d, u, fx);
  diffops::apply<Complex>(Stencil::ForwardY, d, u, fy);
  double value = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double ga, gb, gc, gd;
    value += huber_site(fx[i].real(), fy[i].real(), eps, ga, gb);
    value += huber_site(fx[i].imag(), fy[i].imag(), eps, gc, gd);
    fx[i] = weight * Complex(ga, gc);
    fy[i] = weight * Complex(gb, gd);
  }
  if (!grad.empty()) {
    diffops::adjoint_add<Complex>(Stencil::ForwardX, d, fx, grad);
    diffops::adjoint_add<Complex>(Stencil::ForwardY, d, fy, grad);
  }
  return value;
}

// Huber of the flow residual with (r1, r2) as one site; overwrites r with
// the Huber gradient when `want_grad`.
double residual_huber(motion::FlowResidual& r, double eps, bool want_grad) {
  double value = 0;
  for (auto& z : r.r.values()) {
    double ga, gb;
    value += huber_site(z.real(), z.imag(), eps, ga, gb);
    if (want_grad) z = Complex(ga, gb);
  }
  return value;
}

}  // namespace

Objective::Objective(const mri::MriSystem& sys, const KSpaceData& y, ModelParams params)
    : sys_(sys), y_(y), params_(params) {
  params_.validate();
}

Terms Objective::terms(const ImageSequence& rho, const VelocityField& v) const {
  require_same_dims(rho.dims(), v.dims(), "image vs velocity");
  Terms t;
  t.data = mri::data_term(sys_, rho, y_);
  if (params_.alpha1 > 0) t.r1 = gradient_huber(rho.dims(), rho.values(), params_.eps1, 0, {});
  if (params_.alpha2 > 0) {
    t.r2 = gradient_huber(v.dims(), v.vx(), params_.eps2, 0, {}) +
           gradient_huber(v.dims(), v.vy(), params_.eps2, 0, {});
  }
  if (params_.alpha3 > 0) {
    auto r = motion::flow_residual(rho, v, params_.coupling);
    t.r3 = residual_huber(r, params_.eps3, false);
  }
  return t;
}

double Objective::total(const Terms& t) const {
  double f = t.data;
  if (params_.alpha1 > 0) f += params_.alpha1 * t.r1;
  if (params_.alpha2 > 0) f += params_.alpha2 * t.r2;
  if (params_.alpha3 > 0) f += params_.alpha3 * t.r3;
  return f;
}

double Objective::value(const ImageSequence& rho, const VelocityField& v) const { return total(terms(rho, v)); }

ImageSequence Objective::grad_rho(const ImageSequence& rho, const VelocityField& v) const {
  require_same_dims(rho.dims(), v.dims(), "image vs velocity");
  auto g = mri::data_term_and_grad(sys_, rho, y_).grad;
  if (params_.alpha1 > 0) gradient_huber(rho.dims(), rho.values(), params_.eps1, params_.alpha1, g.values());
  if (params_.alpha3 > 0) {
    auto r = motion::flow_residual(rho, v, params_.coupling);
    residual_huber(r, params_.eps3, true);
    auto back = motion::rho_jacobian_adjoint(v, r, params_.coupling);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += params_.alpha3 * back[i];
  }
  return g;
}

VelocityField Objective::grad_v(const ImageSequence& rho, const VelocityField& v) const {
  require_same_dims(rho.dims(), v.dims(), "image vs velocity");
  VelocityField g(v.dims());
  if (params_.alpha2 > 0) {
    gradient_huber(v.dims(), v.vx(), params_.eps2, params_.alpha2, g.vx());
    gradient_huber(v.dims(), v.vy(), params_.eps2, params_.alpha2, g.vy());
  }
  if (params_.alpha3 > 0) {
    auto r = motion::flow_residual(rho, v, params_.coupling);
    residual_huber(r, params_.eps3, true);
    auto back = motion::v_jacobian_adjoint(rho, r, params_.coupling);
    auto gv = g.values();
    auto bv = back.values();
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += params_.alpha3 * bv[i];
  }
  return g;
}

double objective_value(const ImageSequence& rho, const VelocityField& v, const KSpaceData& y,
                       const mri::MriSystem& sys, const ModelParams& params) {
  return Objective(sys, y, params).value(rho, v);
}

ImageSequence grad_rho(const ImageSequence& rho, const VelocityField& v, const KSpaceData& y,
                       const mri::MriSystem& sys, const ModelParams& params) {
  return Objective(sys, y, params).grad_rho(rho, v);
}

VelocityField grad_v(const ImageSequence& rho, const VelocityField& v, const KSpaceData& y,
                     const mri::MriSystem& sys, const ModelParams& params) {
  return Objective(sys, y, params).grad_v(rho, v);
}

// ---------------------------------------------------------------------------
// Lipschitz estimation

namespace {

constexpr std::uint64_t kPowerSeed = 0x5eedc0ffeeULL;

double norm(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// ||Op x|| at the last normalized iterate; Op must be symmetric PSD.
template <class Field, class Op>
double power_iteration(Field x, Op&& op) {
  std::mt19937_64 rng(kPowerSeed);
  std::normal_distribution<double> gauss;
  auto xs = x.flat();
  for (double& v : xs) v = gauss(rng);
  double n = norm(xs);
  for (double& v : xs) v /= n;
  double lambda = 0;
  for (int it = 0; it < kPowerIterations; ++it) {
    Field y = op(x);
    lambda = norm(y.flat());
    if (lambda == 0) return 0;
    auto ys = y.flat();
    for (double& v : ys) v /= lambda;
    x = std::move(y);
  }
  return lambda;
}

}  // namespace

double lambda_data(const mri::MriSystem& sys) {
  return power_iteration(ImageSequence(sys.image_dims()),
                         [&](const ImageSequence& x) { return mri::normal(sys, x); });
}

double lambda_gradient(const Dims& dims) {
  return power_iteration(RealField(dims), [&](const RealField& x) {
    RealField fx(dims), fy(dims), out(dims);
    diffops::apply<double>(Stencil::ForwardX, dims, x.values(), fx.values());
    diffops::apply<double>(Stencil::ForwardY, dims, x.values(), fy.values());
    diffops::adjoint_add<double>(Stencil::ForwardX, dims, fx.values(), out.values());
    diffops::adjoint_add<double>(Stencil::ForwardY, dims, fy.values(), out.values());
    return out;
  });
}

double lambda_flow_rho(const VelocityField& v, motion::FlowCoupling c) {
  return power_iteration(ImageSequence(v.dims()), [&](const ImageSequence& x) {
    return motion::rho_jacobian_adjoint(v, motion::flow_residual(x, v, c), c);
  });
}

double lambda_flow_v(const ImageSequence& rho, motion::FlowCoupling c) {
  return power_iteration(VelocityField(rho.dims()), [&](const VelocityField& x) {
    return motion::v_jacobian_adjoint(rho, motion::apply_v_jacobian(rho, x, c), c);
  });
}

double lipschitz_rho(double lam_data, double lam_grad, const VelocityField& v, const ModelParams& p) {
  double l = 2.0 * lam_data;
  if (p.alpha1 > 0) l += p.alpha1 / p.eps1 * lam_grad;
  if (p.alpha3 > 0) l += p.alpha3 / p.eps3 * lambda_flow_rho(v, p.coupling);
  return std::max(kLipschitzSafety * l, kLipschitzFloor);
}

double lipschitz_rho(const mri::MriSystem& sys, const VelocityField& v, const ModelParams& p) {
  p.validate();
  const double lg = p.alpha1 > 0 ? lambda_gradient(v.dims()) : 0.0;
  return lipschitz_rho(lambda_data(sys), lg, v, p);
}

double lipschitz_v(double lam_grad, const ImageSequence& rho, const ModelParams& p) {
  double l = 0;
  if (p.alpha2 > 0) l += p.alpha2 / p.eps2 * lam_grad;
  if (p.alpha3 > 0) l += p.alpha3 / p.eps3 * lambda_flow_v(rho, p.coupling);
  return std::max(kLipschitzSafety * l, kLipschitzFloor);
}

double lipschitz_v(const ImageSequence& rho, const ModelParams& p) {
  p.validate();
  const double lg = p.alpha2 > 0 ? lambda_gradient(rho.dims()) : 0.0;
  return lipschitz_v(lg, rho, p);
}

}  // namespace cineflow::objective
