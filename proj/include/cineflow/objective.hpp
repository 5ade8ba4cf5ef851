#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cineflow/grid.hpp"
#include "cineflow/motion.hpp"
#include "cineflow/mri_op.hpp"

namespace cineflow {

// Weights and Huber thresholds of
//   F(rho, v) = sum_t ||A_t rho_t - y_t||^2 + a1 R1(rho) + a2 R2(v) + a3 R3(M(rho, v)).
struct ModelParams {
  double alpha1 = 0;
  double alpha2 = 0;
  double alpha3 = 0;
  double eps1 = 0.01;
  double eps2 = 0.01;
  double eps3 = 0.01;
  motion::FlowCoupling coupling = motion::FlowCoupling::Complex;

  // Throws Invariant on negative alpha or nonpositive eps.
  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

}  // namespace cineflow

namespace cineflow::objective {

// h_eps for one site vector; writes dh/dx into grad.
inline double huber_site(double a, double b, double eps, double& ga, double& gb) {
  const double n2 = a * a + b * b;
  if (n2 <= eps * eps) {
    ga = a / eps;
    gb = b / eps;
    return n2 / (2 * eps);
  }
  const double n = std::sqrt(n2);
  ga = a / n;
  gb = b / n;
  return n - 0.5 * eps;
}

struct HuberResult {
  double value = 0;
  std::vector<double> grad;
};

// H_eps(x) = sum_sites h_eps(x_site) for x holding consecutive `dim`-vectors.
HuberResult huber_value_grad(std::span<const double> x, int dim, double eps);

// Unweighted pieces of F.
struct Terms {
  double data = 0;
  double r1 = 0;  // H(grad rho1) + H(grad rho2)
  double r2 = 0;  // sum of H over the four velocity-component gradients
  double r3 = 0;  // H(M(rho, v)) with (r1, r2) as one site vector
};

class Objective {
 public:
  Objective(const mri::MriSystem& sys, const KSpaceData& y, ModelParams params);

  const ModelParams& params() const { return params_; }
  const mri::MriSystem& system() const { return sys_; }

  Terms terms(const ImageSequence& rho, const VelocityField& v) const;
  double value(const ImageSequence& rho, const VelocityField& v) const;
  double total(const Terms& t) const;

  ImageSequence grad_rho(const ImageSequence& rho, const VelocityField& v) const;
  VelocityField grad_v(const ImageSequence& rho, const VelocityField& v) const;

 private:
  const mri::MriSystem& sys_;
  const KSpaceData& y_;
  ModelParams params_;
};

double objective_value(const ImageSequence& rho, const VelocityField& v, const KSpaceData& y,
                       const mri::MriSystem& sys, const ModelParams& params);
ImageSequence grad_rho(const ImageSequence& rho, const VelocityField& v, const KSpaceData& y,
                       const mri::MriSystem& sys, const ModelParams& params);
VelocityField grad_v(const ImageSequence& rho, const VelocityField& v, const KSpaceData& y,
                     const mri::MriSystem& sys, const ModelParams& params);

// Lipschitz bounds for the two partial gradients. Each lambda_max is a
// 50-step power iteration from a seeded random start, scaled by 1.1.
inline constexpr int kPowerIterations = 50;
inline constexpr double kLipschitzSafety = 1.1;
inline constexpr double kLipschitzFloor = 1e-8;

double lambda_data(const mri::MriSystem& sys);                 // lambda_max(A^*A)
double lambda_gradient(const Dims& dims);                      // lambda_max(D^T D), forward 2-D gradient
double lambda_flow_rho(const VelocityField& v, motion::FlowCoupling c);   // lambda_max(J_v^T J_v)
double lambda_flow_v(const ImageSequence& rho, motion::FlowCoupling c);   // lambda_max(J_rho^T J_rho)

// Bound for rho -> grad_rho F(rho, v). The lambda_data / lambda_gradient
// overload reuses estimates that do not depend on v.
double lipschitz_rho(const mri::MriSystem& sys, const VelocityField& v, const ModelParams& params);
double lipschitz_rho(double lam_data, double lam_grad, const VelocityField& v, const ModelParams& params);

// Bound for v -> grad_v F(rho, v), floored at 1e-8.
double lipschitz_v(const ImageSequence& rho, const ModelParams& params);
double lipschitz_v(double lam_grad, const ImageSequence& rho, const ModelParams& params);

}  // namespace cineflow::objective
