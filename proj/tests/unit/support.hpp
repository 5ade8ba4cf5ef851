#pragma once

// Random instances and naive reference implementations shared by the tests.
// The oracles here are written from the defining formulas with plain loops
// and never call into the library's stencil or FFT code.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "cineflow/grid.hpp"
#include "cineflow/mri_op.hpp"

namespace testutil {

using cineflow::Complex;
using cineflow::Dims;
using cineflow::ImageSequence;
using cineflow::RealField;
using cineflow::VelocityField;

inline RealField random_real(const Dims& d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  RealField f(d);
  for (auto& v : f.values()) v = g(rng);
  return f;
}

inline ImageSequence random_complex(const Dims& d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ImageSequence f(d);
  for (auto& v : f.values()) v = Complex(g(rng), g(rng));
  return f;
}

inline VelocityField random_velocity(const Dims& d, std::mt19937_64& rng) {
  return VelocityField(random_complex(d, rng), random_complex(d, rng));
}

inline cineflow::CoilMaps random_coils(int nc, int nx, int ny, std::mt19937_64& rng) {
  return cineflow::CoilMaps(random_complex(Dims{nc, nx, ny}, rng));
}

// Random row subset per frame (at least one row each).
inline cineflow::SamplingMask random_mask(int nt, int nx, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(0.5);
  std::vector<std::vector<int>> rows(nt);
  for (auto& r : rows) {
    for (int x = 0; x < nx; ++x)
      if (keep(rng)) r.push_back(x);
    if (r.empty()) r.push_back(static_cast<int>(rng() % nx));
  }
  return cineflow::SamplingMask(nx, rows);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance_flat(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double rel_discrepancy(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// ---- stencil oracles (formulas written out per boundary case)

inline double naive_forward_time(const RealField& u, int t, int x, int y) {
  if (t == u.dims().nt - 1) return 0.0;
  return u(t + 1, x, y) - u(t, x, y);
}

inline double naive_forward_x(const RealField& u, int t, int x, int y) {
  if (x == u.dims().nx - 1) return 0.0;
  return u(t, x + 1, y) - u(t, x, y);
}

inline double naive_forward_y(const RealField& u, int t, int x, int y) {
  if (y == u.dims().ny - 1) return 0.0;
  return u(t, x, y + 1) - u(t, x, y);
}

inline double naive_central_x(const RealField& u, int t, int x, int y) {
  const int n = u.dims().nx;
  if (x == 0) return (u(t, 1, y) - u(t, 0, y)) / 2;
  if (x == n - 1) return (u(t, n - 1, y) - u(t, n - 2, y)) / 2;
  return (u(t, x + 1, y) - u(t, x - 1, y)) / 2;
}

inline double naive_central_y(const RealField& u, int t, int x, int y) {
  const int n = u.dims().ny;
  if (y == 0) return (u(t, x, 1) - u(t, x, 0)) / 2;
  if (y == n - 1) return (u(t, x, n - 1) - u(t, x, n - 2)) / 2;
  return (u(t, x, y + 1) - u(t, x, y - 1)) / 2;
}

using RealStencil = double (*)(const RealField&, int, int, int);

inline RealField naive_apply(RealStencil f, const RealField& u) {
  RealField out(u.dims());
  const Dims d = u.dims();
  for (int t = 0; t < d.nt; ++t)
    for (int x = 0; x < d.nx; ++x)
      for (int y = 0; y < d.ny; ++y) out(t, x, y) = f(u, t, x, y);
  return out;
}

inline RealField real_part(const ImageSequence& z) {
  RealField out(z.dims());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].real();
  return out;
}

inline RealField imag_part(const ImageSequence& z) {
  RealField out(z.dims());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].imag();
  return out;
}

inline ImageSequence naive_apply_complex(RealStencil f, const ImageSequence& u) {
  const auto re = naive_apply(f, real_part(u));
  const auto im = naive_apply(f, imag_part(u));
  ImageSequence out(u.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Complex(re[i], im[i]);
  return out;
}

// r1 + i r2 = dt rho + vx conj(dx rho) + vy conj(dy rho), computed in complex
// arithmetic from the naive stencils.
inline ImageSequence naive_flow_residual(const ImageSequence& rho, const VelocityField& v) {
  const auto dt = naive_apply_complex(naive_forward_time, rho);
  const auto dx = naive_apply_complex(naive_central_x, rho);
  const auto dy = naive_apply_complex(naive_central_y, rho);
  ImageSequence r(rho.dims());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = dt[i] + v.vx()[i] * std::conj(dx[i]) + v.vy()[i] * std::conj(dy[i]);
  }
  return r;
}

// ---- direct centered unitary DFT: X[k] = N^-1/2 sum_n x[n] exp(-2 pi i (k-c)(n-c)/N), c = N/2

inline std::vector<Complex> naive_centered_dft(std::span<const Complex> img, int nx, int ny) {
  const int cx = nx / 2, cy = ny / 2;
  std::vector<Complex> out(img.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(nx) * ny);
  for (int kx = 0; kx < nx; ++kx) {
    for (int ky = 0; ky < ny; ++ky) {
      Complex s = 0;
      for (int x = 0; x < nx; ++x) {
        for (int y = 0; y < ny; ++y) {
          const double ph = -2.0 * std::numbers::pi *
                            (static_cast<double>((kx - cx) * (x - cx)) / nx + static_cast<double>((ky - cy) * (y - cy)) / ny);
          s += img[static_cast<std::size_t>(x) * ny + y] * std::polar(1.0, ph);
        }
      }
      out[static_cast<std::size_t>(kx) * ny + ky] = scale * s;
    }
  }
  return out;
}

// Forward operator from the definition: multiply by coil, direct DFT, drop rows.
inline cineflow::KSpaceData naive_forward(const cineflow::CoilMaps& coils, const cineflow::SamplingMask& mask,
                                          const ImageSequence& rho) {
  const Dims d = rho.dims();
  cineflow::KSpaceData y(d, coils.count(), mask);
  std::vector<Complex> tmp(d.frame_size());
  for (int t = 0; t < d.nt; ++t) {
    for (int c = 0; c < coils.count(); ++c) {
      for (std::size_t p = 0; p < tmp.size(); ++p) tmp[p] = coils.coil(c)[p] * rho.frame(t)[p];
      const auto k = naive_centered_dft(tmp, d.nx, d.ny);
      for (int x = 0; x < d.nx; ++x) {
        if (!mask.sampled(t, x)) continue;
        for (int yy = 0; yy < d.ny; ++yy) y(t, c, x, yy) = k[static_cast<std::size_t>(x) * d.ny + yy];
      }
    }
  }
  return y;
}

// Dense matrix of a real-linear map between flat real vectors, by probing
// basis vectors. Column j is op(e_j).
inline std::vector<std::vector<double>> assemble(std::size_t n_in,
                                                 const std::function<std::vector<double>(const std::vector<double>&)>& op) {
  std::vector<std::vector<double>> cols;
  std::vector<double> e(n_in, 0.0);
  for (std::size_t j = 0; j < n_in; ++j) {
    e[j] = 1.0;
    cols.push_back(op(e));
    e[j] = 0.0;
  }
  return cols;
}

inline std::vector<double> matvec(const std::vector<std::vector<double>>& cols, std::span<const double> x) {
  std::vector<double> out(cols.empty() ? 0 : cols[0].size(), 0.0);
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += cols[j][i] * x[j];
  return out;
}

inline std::vector<double> matvec_transpose(const std::vector<std::vector<double>>& cols, std::span<const double> y) {
  std::vector<double> out(cols.size(), 0.0);
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < y.size(); ++i) out[j] += cols[j][i] * y[i];
  return out;
}

inline std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---- metrics oracles

inline double naive_psnr(const std::vector<double>& gt, const std::vector<double>& rec, const std::vector<int>& mask,
                         double range) {
  double sse = 0;
  int n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask[i]) continue;
    sse += (rec[i] - gt[i]) * (rec[i] - gt[i]);
    ++n;
  }
  return 10.0 * std::log10(range * range / (sse / n));
}

// Scalar-loop SSIM: for each valid center, 7x7 window means, sample
// variances and covariance (divide by 48), SSIM formula, averaged over mask.
inline double naive_ssim(const std::vector<double>& a, const std::vector<double>& b, const std::vector<int>& mask,
                         int nx, int ny, double range) {
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  double total = 0;
  int count = 0;
  for (int x = 3; x < nx - 3; ++x) {
    for (int y = 3; y < ny - 3; ++y) {
      if (!mask[x * ny + y]) continue;
      double ma = 0, mb = 0;
      for (int i = -3; i <= 3; ++i)
        for (int j = -3; j <= 3; ++j) {
          ma += a[(x + i) * ny + y + j];
          mb += b[(x + i) * ny + y + j];
        }
      ma /= 49;
      mb /= 49;
      double va = 0, vb = 0, cov = 0;
      for (int i = -3; i <= 3; ++i)
        for (int j = -3; j <= 3; ++j) {
          const double da = a[(x + i) * ny + y + j] - ma;
          const double db = b[(x + i) * ny + y + j] - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      va /= 48;
      vb /= 48;
      cov /= 48;
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

}  // namespace testutil
