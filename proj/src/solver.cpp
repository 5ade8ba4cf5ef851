#include "cineflow/solver.hpp"

#include <cstdio>

#include "cineflow/diffops.hpp"

namespace cineflow {

void SolverParams::validate() const {
  if (sigma < 0) throw Error(ErrorKind::Invariant, "sigma must be ≥ 0");
  if (n_outer < 1 || n_rho < 1 || n_v < 1) throw Error(ErrorKind::Invariant, "iteration counts must be ≥ 1");
  if (!(delta > 0)) throw Error(ErrorKind::Invariant, "delta must be > 0");
}

namespace solver {

double norm(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double relative_change(std::span<const double> x_new, std::span<const double> x_old) {
  const double num = distance(x_new, x_old);
  const double den = norm(x_old);
  if (den == 0) return num == 0 ? 0.0 : INFINITY;
  return num / den;
}

}  // namespace solver

const char* name(ModelType m) {
  switch (m) {
    case ModelType::FW: return "fw";
    case ModelType::DT: return "dt";
    case ModelType::OF: return "of";
    case ModelType::CheatOF: return "cheat-of";
  }
  return "?";
}

ModelType parse_model(const std::string& s) {
  if (s == "fw") return ModelType::FW;
  if (s == "dt") return ModelType::DT;
  if (s == "of") return ModelType::OF;
  if (s == "cheat-of") return ModelType::CheatOF;
  throw Error(ErrorKind::Usage, "unknown model '" + s + "' (expected fw, dt, of or cheat-of)");
}

ModelParams effective_params(ModelType m, ModelParams p) {
  if (m == ModelType::FW) p.alpha3 = 0;
  if (m != ModelType::OF) p.alpha2 = 0;
  return p;
}

VelocityField smooth_velocity(const VelocityField& v, double sigma) {
  if (sigma == 0) return v;
  return VelocityField(diffops::gaussian_smooth(v.vx_sequence(), sigma),
                       diffops::gaussian_smooth(v.vy_sequence(), sigma));
}

namespace {

template <FlatField Field>
double gradient_norm(const Field& g) {
  return solver::norm(g.flat());
}

}  // namespace

Reconstruction reconstruct(const KSpaceData& y, const mri::MriSystem& sys, const ModelKind& model,
                           const ModelParams& mp_in, const SolverParams& sp) {
  sp.validate();
  const Dims d = sys.image_dims();
  require_same_dims(d, y.dims(), "k-space vs MRI system");
  const ModelParams mp = effective_params(model.type, mp_in);
  const objective::Objective obj(sys, y, mp);

  VelocityField v_fixed(d);
  if (model.type == ModelType::CheatOF) {
    if (!model.v_gt) throw Error(ErrorKind::Usage, "cheat-of needs ground-truth velocities");
    require_same_dims(d, model.v_gt->dims(), "ground-truth velocity");
    v_fixed = *model.v_gt;
  }

  const double lam_data = objective::lambda_data(sys);
  const double lam_grad = (mp.alpha1 > 0 || mp.alpha2 > 0) ? objective::lambda_gradient(d) : 0.0;

  ImageSequence rho0 = sp.init == SolverParams::Init::Adjoint ? mri::adjoint(sys, y) : ImageSequence(d);

  Reconstruction out;

  if (model.type != ModelType::OF) {
    const double L = objective::lipschitz_rho(lam_data, lam_grad, v_fixed, mp);
    const double f0 = obj.value(rho0, v_fixed);
    auto grad = [&](const ImageSequence& r) { return obj.grad_rho(r, v_fixed); };
    auto res = solver::fista(grad, L, rho0, sp.n_rho, sp.delta);
    TraceRow row{1, "rho", res.iterations, f0, obj.value(res.x, v_fixed), gradient_norm(grad(res.x)),
                 res.rel_change};
    out.trace.push_back(row);
    out.rho = std::move(res.x);
    out.v = std::move(v_fixed);
    out.converged = res.early_stopped;
    return out;
  }

  ImageSequence rho = rho0, rho_hat = rho0;
  VelocityField v(d), v_hat(d);
  for (int i = 1; i <= sp.n_outer; ++i) {
    const double sigma_i = sp.sigma / i;

    const double L_rho = objective::lipschitz_rho(lam_data, lam_grad, v_hat, mp);
    const double f_rho0 = obj.value(rho_hat, v_hat);
    auto g_rho = [&](const ImageSequence& r) { return obj.grad_rho(r, v_hat); };
    auto rres = solver::fista(g_rho, L_rho, rho_hat, sp.n_rho, sp.delta);
    out.trace.push_back({i, "rho", rres.iterations, f_rho0, obj.value(rres.x, v_hat),
                         gradient_norm(g_rho(rres.x)), rres.rel_change});
    ImageSequence rho_next = std::move(rres.x);
    rho_hat = diffops::gaussian_smooth(rho_next, sigma_i);

    const double L_v = objective::lipschitz_v(lam_grad, rho_hat, mp);
    const double f_v0 = obj.value(rho_hat, v_hat);
    auto g_v = [&](const VelocityField& w) { return obj.grad_v(rho_hat, w); };
    auto vres = solver::fista(g_v, L_v, v_hat, sp.n_v, sp.delta);
    out.trace.push_back({i, "v", vres.iterations, f_v0, obj.value(rho_hat, vres.x), gradient_norm(g_v(vres.x)),
                         vres.rel_change});
    VelocityField v_next = std::move(vres.x);
    v_hat = smooth_velocity(v_next, sigma_i);

    const double test = 0.5 * solver::relative_change(v_next.flat(), v.flat()) +
                        0.5 * solver::relative_change(rho_next.flat(), rho.flat());
    rho = std::move(rho_next);
    v = std::move(v_next);

    const double f_now = obj.value(rho, v);
    const double gr = gradient_norm(obj.grad_rho(rho, v));
    const double gv = gradient_norm(obj.grad_v(rho, v));
    out.trace.push_back({i, "outer", 0, f_now, f_now, std::sqrt(gr * gr + gv * gv), test});
    if (test < sp.delta) {
      out.converged = true;
      break;
    }
  }
  out.rho = std::move(rho);
  out.v = std::move(v);
  return out;
}

namespace {

std::string fmt_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "outer_iter,subproblem,inner_iters,F_value,grad_norm,rel_change\r\n";
  for (const auto& r : trace) {
    out += std::to_string(r.outer_iter) + "," + r.subproblem + "," + std::to_string(r.inner_iters) + "," +
           fmt_double(r.f_value) + "," + fmt_double(r.grad_norm) + "," + fmt_double(r.rel_change) + "\r\n";
  }
  return out;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
  write_file_atomic(path, trace_csv(trace));
}

}  // namespace cineflow
