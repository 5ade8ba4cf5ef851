#include <doctest.h>

#include "cineflow/diffops.hpp"
#include "cineflow/motion.hpp"
#include "support.hpp"

using namespace cineflow;
using motion::FlowCoupling;
using motion::FlowResidual;

namespace {

double residual_dot(const FlowResidual& a, const FlowResidual& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.r.size(); ++i) s += std::real(a.r[i] * std::conj(b.r[i]));
  return s;
}

FlowResidual random_residual(const Dims& d, std::mt19937_64& rng) { return {testutil::random_complex(d, rng)}; }

double max_diff(const Grid3<Complex>& a, const Grid3<Complex>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ImageSequence real_only(const ImageSequence& z) {
  ImageSequence out(z.dims());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].real();
  return out;
}

}  // namespace

TEST_CASE("residual rows match the expanded real system") {
  std::mt19937_64 rng(10);
  const Dims d{3, 5, 6};
  const auto rho = testutil::random_complex(d, rng);
  const auto v = testutil::random_velocity(d, rng);
  const auto r = motion::flow_residual(rho, v);

  using testutil::naive_apply;
  const auto p1 = testutil::real_part(rho), p2 = testutil::imag_part(rho);
  const auto t1 = naive_apply(testutil::naive_forward_time, p1), t2 = naive_apply(testutil::naive_forward_time, p2);
  const auto x1 = naive_apply(testutil::naive_central_x, p1), x2 = naive_apply(testutil::naive_central_x, p2);
  const auto y1 = naive_apply(testutil::naive_central_y, p1), y2 = naive_apply(testutil::naive_central_y, p2);
  const auto r1 = r.r1(), r2 = r.r2();
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double v1x = v.vx()[i].real(), v2x = v.vx()[i].imag();
    const double v1y = v.vy()[i].real(), v2y = v.vy()[i].imag();
    const double e1 = t1[i] + (v1x * x1[i] + v1y * y1[i]) + (v2x * x2[i] + v2y * y2[i]);
    const double e2 = t2[i] + (v2x * x1[i] + v2y * y1[i]) - (v1x * x2[i] + v1y * y2[i]);
    CHECK(std::abs(r1[i] - e1) < 1e-12);
    CHECK(std::abs(r2[i] - e2) < 1e-12);
  }
}

TEST_CASE("residual equals the complex-arithmetic form") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const Dims d{4, 6, 5};
    const auto rho = testutil::random_complex(d, rng);
    const auto v = testutil::random_velocity(d, rng);
    CHECK(max_diff(motion::flow_residual(rho, v).r, testutil::naive_flow_residual(rho, v)) < 1e-12);
  }
}

TEST_CASE("zero velocity leaves the time derivative") {
  std::mt19937_64 rng(12);
  const Dims d{3, 5, 5};
  const auto rho = testutil::random_complex(d, rng);
  const auto r = motion::flow_residual(rho, VelocityField(d));
  CHECK(max_diff(r.r, testutil::naive_apply_complex(testutil::naive_forward_time, rho)) < 1e-14);
}

TEST_CASE("constant image has zero residual for any velocity") {
  std::mt19937_64 rng(13);
  const Dims d{3, 5, 4};
  const ImageSequence rho(d, Complex(0.4, -1.3));
  const auto r = motion::flow_residual(rho, testutil::random_velocity(d, rng));
  for (const auto& z : r.r.values()) CHECK(z == Complex(0));
}

TEST_CASE("real image and real velocity give the classical residual") {
  std::mt19937_64 rng(14);
  const Dims d{3, 6, 6};
  const auto rho = real_only(testutil::random_complex(d, rng));
  const VelocityField v(real_only(testutil::random_complex(d, rng)), real_only(testutil::random_complex(d, rng)));
  const auto r = motion::flow_residual(rho, v);
  const auto p = testutil::real_part(rho);
  const auto dt = testutil::naive_apply(testutil::naive_forward_time, p);
  const auto dx = testutil::naive_apply(testutil::naive_central_x, p);
  const auto dy = testutil::naive_apply(testutil::naive_central_y, p);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    CHECK(r.r[i].imag() == 0.0);
    CHECK(std::abs(r.r[i].real() - (dt[i] + v.vx()[i].real() * dx[i] + v.vy()[i].real() * dy[i])) < 1e-12);
  }
}

TEST_CASE("bilinearity") {
  std::mt19937_64 rng(15);
  const Dims d{3, 5, 6};
  const double a = 0.7, b = -1.9;
  const auto rho = testutil::random_complex(d, rng), rho2 = testutil::random_complex(d, rng);
  const auto v = testutil::random_velocity(d, rng), v2 = testutil::random_velocity(d, rng);

  ImageSequence mix(d);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * rho[i] + b * rho2[i];
  const auto lhs = motion::flow_residual(mix, v).r;
  const auto ra = motion::flow_residual(rho, v).r, rb = motion::flow_residual(rho2, v).r;
  for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - (a * ra[i] + b * rb[i])) < 1e-12);

  // affine in v: the spatial part is linear
  VelocityField vmix(d);
  for (std::size_t i = 0; i < vmix.flat().size(); ++i) vmix.flat()[i] = a * v.flat()[i] + b * v2.flat()[i];
  const auto jl = motion::apply_v_jacobian(rho, vmix).r;
  const auto ja = motion::apply_v_jacobian(rho, v).r, jb = motion::apply_v_jacobian(rho, v2).r;
  for (std::size_t i = 0; i < jl.size(); ++i) CHECK(std::abs(jl[i] - (a * ja[i] + b * jb[i])) < 1e-12);

  const auto dt = motion::flow_residual(rho, VelocityField(d)).r;
  const auto full = motion::flow_residual(rho, v).r;
  for (std::size_t i = 0; i < full.size(); ++i) CHECK(std::abs(full[i] - (dt[i] + ja[i])) < 1e-12);
}

TEST_CASE("jacobian adjoints pass dot-product tests for every coupling") {
  std::mt19937_64 rng(16);
  for (auto mode : {FlowCoupling::Complex, FlowCoupling::Decoupled, FlowCoupling::SharedReal}) {
    CAPTURE(motion::name(mode));
    for (int rep = 0; rep < 20; ++rep) {
      const Dims d{3, 5, 7};
      const auto rho = testutil::random_complex(d, rng);
      const auto v = testutil::random_velocity(d, rng);
      const auto w = random_residual(d, rng);

      const double lr = residual_dot(motion::flow_residual(rho, v, mode), w);
      const double rr = testutil::dot(rho.flat(), motion::rho_jacobian_adjoint(v, w, mode).flat());
      CHECK(testutil::rel_discrepancy(lr, rr) < 1e-10);

      const double lv = residual_dot(motion::apply_v_jacobian(rho, v, mode), w);
      const double rv = testutil::dot(v.flat(), motion::v_jacobian_adjoint(rho, w, mode).flat());
      CHECK(testutil::rel_discrepancy(lv, rv) < 1e-10);
    }
  }
}

TEST_CASE("adjoint edge cases") {
  std::mt19937_64 rng(17);
  const Dims d{3, 5, 5};
  const auto rho = testutil::random_complex(d, rng);
  const auto v = testutil::random_velocity(d, rng);
  const FlowResidual zero{Grid3<Complex>(d)};
  for (const auto held = motion::rho_jacobian_adjoint(v, zero); double x : held.flat()) CHECK(x == 0.0);
  for (const auto held = motion::v_jacobian_adjoint(rho, zero); double x : held.flat()) CHECK(x == 0.0);

  // v = 0: adjoint of the forward time difference applied to both parts
  const auto w = random_residual(d, rng);
  const auto a = motion::rho_jacobian_adjoint(VelocityField(d), w);
  const auto cols = testutil::assemble(rho.flat().size(), [&](const std::vector<double>& e) {
    ImageSequence z(d);
    std::copy(e.begin(), e.end(), z.flat().begin());
    return testutil::to_vec(testutil::naive_apply_complex(testutil::naive_forward_time, z).flat());
  });
  CHECK(testutil::max_abs_diff(a.flat(), testutil::matvec_transpose(cols, w.r.flat())) < 1e-12);

  // spatially constant image: no sensitivity to v
  ImageSequence flat(d);
  for (int t = 0; t < d.nt; ++t)
    for (auto& z : flat.frame(t)) z = Complex(t, -2.0 * t);
  for (const auto held = motion::v_jacobian_adjoint(flat, w); double x : held.flat()) CHECK(x == 0.0);
}

namespace {

// Central differences of 0.5 ||M(rho, v)||^2 against v_jacobian_adjoint(rho, M(rho, v)).
// Returns the worst error relative to max(1, |analytic|) over the chosen components.
double v_gradient_fd_error(const ImageSequence& rho, VelocityField v, bool imaginary_only) {
  auto energy = [&](const VelocityField& u) {
    const auto r = motion::flow_residual(rho, u);
    double s = 0;
    for (const auto& z : r.r.values()) s += std::norm(z);
    return 0.5 * s;
  };
  const auto g = motion::v_jacobian_adjoint(rho, motion::flow_residual(rho, v));
  const double h = 1e-6;
  double worst = 0;
  for (std::size_t i = 0; i < v.flat().size(); ++i) {
    if (imaginary_only && i % 2 == 0) continue;
    const double keep = v.flat()[i];
    v.flat()[i] = keep + h;
    const double fp = energy(v);
    v.flat()[i] = keep - h;
    const double fm = energy(v);
    v.flat()[i] = keep;
    const double an = g.flat()[i];
    worst = std::max(worst, std::abs((fp - fm) / (2 * h) - an) / std::max(1.0, std::abs(an)));
  }
  return worst;
}

}  // namespace

TEST_CASE("v gradient of the squared residual matches finite differences") {
  std::mt19937_64 rng(18);
  const Dims d{3, 6, 6};
  SUBCASE("real image and velocity, imaginary velocity block") {
    const auto rho = real_only(testutil::random_complex(d, rng));
    const VelocityField v(real_only(testutil::random_complex(d, rng)), real_only(testutil::random_complex(d, rng)));
    CHECK(v_gradient_fd_error(rho, v, true) < 1e-6);
  }
  SUBCASE("complex image and velocity, all components") {
    CHECK(v_gradient_fd_error(testutil::random_complex(d, rng), testutil::random_velocity(d, rng), false) < 1e-6);
  }
}

TEST_CASE("translating blob is nearly annihilated by its velocity") {
  const int n = 64, nt = 4;
  const double shift = 1.0, width = 8.0;
  const Dims d{nt, n, n};
  ImageSequence rho(d);
  for (int t = 0; t < nt; ++t)
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        const double cx = 28.0 + shift * t, cy = 32.0;
        rho(t, x, y) = std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * width * width));
      }
  // the forward time difference is zero on the last frame, so the matching
  // velocity is zero there as well
  VelocityField v(d);
  for (int t = 0; t + 1 < nt; ++t)
    for (int p = 0; p < n * n; ++p) v.vx()[static_cast<std::size_t>(t) * n * n + p] = shift;
  auto energy = [&](const VelocityField& u) {
    double s = 0;
    const auto r = motion::flow_residual(rho, u);
    for (const auto& z : r.r.values()) s += std::norm(z);
    return s;
  };
  const double moving = energy(v), still = energy(VelocityField(d));
  CAPTURE(moving);
  CAPTURE(still);
  CHECK(still >= 100.0 * moving);
}

TEST_CASE("dimension mismatch") {
  CHECK_THROWS_AS(motion::flow_residual(ImageSequence(Dims{2, 4, 4}), VelocityField(Dims{2, 4, 5})), Error);
  CHECK_THROWS_AS(motion::v_jacobian_adjoint(ImageSequence(Dims{2, 4, 4}), FlowResidual{Grid3<Complex>(Dims{3, 4, 4})}),
                  Error);
}
