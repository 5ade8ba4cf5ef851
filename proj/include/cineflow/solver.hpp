#pragma once

#include <cmath>
#include <concepts>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cineflow/grid.hpp"
#include "cineflow/mri_op.hpp"
#include "cineflow/objective.hpp"

namespace cineflow {

// Anything the optimizer can treat as one real vector.
template <class F>
concept FlatField = std::copy_constructible<F> && requires(F f, const F cf) {
  { f.flat() } -> std::convertible_to<std::span<double>>;
  { cf.flat() } -> std::convertible_to<std::span<const double>>;
};

struct SolverParams {
  enum class Init { Zero, Adjoint };

  double sigma = 0;  // initial smoothing width, decays as sigma / i_outer
  int n_outer = 200;
  int n_rho = 1400;
  int n_v = 3200;
  double delta = 1e-5;
  Init init = Init::Zero;

  void validate() const;
  bool operator==(const SolverParams&) const = default;
};

namespace solver {

double norm(std::span<const double> x);
double distance(std::span<const double> a, std::span<const double> b);

// ||x_new - x_old|| / ||x_old||. A zero denominator gives 0 when the
// numerator is also zero and +inf otherwise.
double relative_change(std::span<const double> x_new, std::span<const double> x_old);

// Momentum update t_{j+1} = (1 + sqrt(1 + 4 t_j^2)) / 2.
inline double next_momentum(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

template <FlatField Field>
struct FistaState {
  Field x_prev;
  Field x_cur;
  Field x_hat;
  double t_momentum = 1.0;
  int j = 0;
  double last_rel_change = INFINITY;
};

template <FlatField Field>
struct FistaResult {
  Field x;
  int iterations = 0;
  bool early_stopped = false;
  double rel_change = INFINITY;
};

// Accelerated gradient descent for a smooth f with gradient Lipschitz
// constant L:
//   x_j     = xhat_j - grad f(xhat_j) / L
//   t_{j+1} = (1 + sqrt(1 + 4 t_j^2)) / 2
//   xhat_{j+1} = x_j + (t_j - 1) / t_{j+1} (x_j - x_{j-1})
// stopping once ||x_j - x_{j-1}|| / ||x_{j-1}|| < delta.
// Throws Divergence if a gradient is non-finite.
template <FlatField Field, class Grad>
FistaResult<Field> fista(Grad&& grad, double lipschitz, const Field& x_init, int n, double delta) {
  if (!(lipschitz > 0) || !std::isfinite(lipschitz)) throw Error(ErrorKind::Invariant, "FISTA needs 0 < L < inf");
  if (n < 1) throw Error(ErrorKind::Invariant, "FISTA needs n ≥ 1");
  FistaState<Field> s{x_init, x_init, x_init};
  const double step = 1.0 / lipschitz;
  bool stopped = false;
  for (s.j = 1; s.j <= n; ++s.j) {
    const Field g = grad(static_cast<const Field&>(s.x_hat));
    auto gf = g.flat();
    if (!all_finite(std::span<const double>(gf.data(), gf.size()))) {
      throw Error(ErrorKind::Divergence, "divergence: non-finite gradient at FISTA iteration " + std::to_string(s.j));
    }
    auto xc = s.x_cur.flat();
    auto xh = s.x_hat.flat();
    for (std::size_t i = 0; i < xc.size(); ++i) xc[i] = xh[i] - step * gf[i];

    const double t_next = next_momentum(s.t_momentum);
    if (!(t_next > s.t_momentum)) throw Error(ErrorKind::Divergence, "FISTA momentum failed to increase");
    const double beta = (s.t_momentum - 1.0) / t_next;
    auto xp = s.x_prev.flat();
    for (std::size_t i = 0; i < xc.size(); ++i) xh[i] = xc[i] + beta * (xc[i] - xp[i]);
    s.t_momentum = t_next;

    s.last_rel_change = relative_change(s.x_cur.flat(), s.x_prev.flat());
    std::copy(xc.begin(), xc.end(), xp.begin());
    if (s.last_rel_change < delta) {
      stopped = true;
      break;
    }
  }
  const int used = stopped ? s.j : n;
  return {std::move(s.x_cur), used, stopped, s.last_rel_change};
}

}  // namespace solver

enum class ModelType { FW, DT, OF, CheatOF };

const char* name(ModelType m);
ModelType parse_model(const std::string& s);

// Reconstruction model; CheatOF carries the velocity it is frozen to.
struct ModelKind {
  ModelType type = ModelType::OF;
  std::optional<VelocityField> v_gt;

  static ModelKind fw() { return {ModelType::FW, std::nullopt}; }
  static ModelKind dt() { return {ModelType::DT, std::nullopt}; }
  static ModelKind of() { return {ModelType::OF, std::nullopt}; }
  static ModelKind cheat_of(VelocityField v) { return {ModelType::CheatOF, std::move(v)}; }
};

struct TraceRow {
  int outer_iter = 0;
  std::string subproblem;  // "rho", "v" or "outer"
  int inner_iters = 0;
  double f_start = 0;      // F when the sub-solve began (not written to CSV)
  double f_value = 0;      // F at exit
  double grad_norm = 0;    // norm of the block gradient at exit
  double rel_change = 0;   // last FISTA relative change, or the outer test value
};

struct Reconstruction {
  ImageSequence rho;
  VelocityField v;
  std::vector<TraceRow> trace;
  bool converged = false;
};

// Joint reconstruction. OF alternates FISTA on rho and v with decaying
// Gaussian smoothing of both; FW, DT and CheatOF run a single FISTA on rho
// with v frozen to 0, 0, v_gt (FW additionally drops alpha2 and alpha3).
Reconstruction reconstruct(const KSpaceData& y, const mri::MriSystem& sys, const ModelKind& model,
                           const ModelParams& mp, const SolverParams& sp);

// Effective model parameters for a model type (FW zeroes alpha2, alpha3; the
// fixed-velocity models zero alpha2).
ModelParams effective_params(ModelType m, ModelParams p);

// CSV columns: outer_iter,subproblem,inner_iters,F_value,grad_norm,rel_change
std::string trace_csv(const std::vector<TraceRow>& trace);
void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path);

VelocityField smooth_velocity(const VelocityField& v, double sigma);

}  // namespace cineflow
