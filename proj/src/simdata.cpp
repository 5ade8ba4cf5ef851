#include "cineflow/simdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cineflow/diffops.hpp"
#include "cineflow/motion.hpp"

namespace cineflow::sim {

namespace {

struct Blob {
  double u, w;    // center in normalized coords [-1, 1]
  double ru, rw;  // radii in normalized coords
  double amp;
};

struct PhantomLayout {
  std::vector<Blob> blobs;  // blobs[1] is the chamber
  double pa, pb, pc, pd;    // phase coefficients
};

PhantomLayout layout(const PhantomSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const double j1 = 0.05 * jitter(rng), j2 = 0.05 * jitter(rng), j3 = 0.08 * jitter(rng);
  PhantomLayout l;
  const Blob chamber{-0.08 + j1, 0.06 + j2, 0.30 * (1 + j3), 0.24 * (1 + j3), 0.55};
  l.blobs = {
      {0.0, 0.0, 0.82, 0.70, 0.30},  // body
      chamber,
      {chamber.u, chamber.w, chamber.ru * 1.35, chamber.rw * 1.35, 0.15},  // wall around the chamber
      {0.50 + 0.03 * jitter(rng), -0.45, 0.13, 0.16, 0.40},
      {-0.50, 0.50 + 0.03 * jitter(rng), 0.11, 0.09, 0.30},
  };
  std::uniform_real_distribution<double> coef(0.0, 1.0);
  l.pa = 1.0 + 0.4 * coef(rng);
  l.pb = 0.6 + 0.4 * coef(rng);
  l.pc = 0.4 * (coef(rng) - 0.5);
  l.pd = 0.3 * (coef(rng) - 0.5);
  return l;
}

double normalized(int i, int n) { return (i - 0.5 * n) / (0.5 * n); }

}  // namespace

std::pair<double, double> chamber_center(const PhantomSpec& spec) {
  const auto l = layout(spec);
  const auto& c = l.blobs[1];
  return {0.5 * spec.dims.nx * (1 + c.u), 0.5 * spec.dims.ny * (1 + c.w)};
}

double chamber_radius(const PhantomSpec& spec) {
  const auto& c = layout(spec).blobs[1];
  return 0.5 * (c.ru * 0.5 * spec.dims.nx + c.rw * 0.5 * spec.dims.ny);
}

RealField phantom_phase(const PhantomSpec& spec) {
  const auto l = layout(spec);
  const Dims d{1, spec.dims.nx, spec.dims.ny};
  RealField phi(d);
  for (int x = 0; x < d.nx; ++x) {
    const double u = normalized(x, d.nx);
    for (int y = 0; y < d.ny; ++y) {
      const double w = normalized(y, d.ny);
      phi(0, x, y) = l.pa * u + l.pb * w + l.pc * u * w + l.pd * (u * u - w * w);
    }
  }
  return phi;
}

ImageSequence make_phantom_frame0(const PhantomSpec& spec) {
  check_sequence_dims(spec.dims);
  const auto l = layout(spec);
  const Dims d{1, spec.dims.nx, spec.dims.ny};
  const double edge_px = 1.0;
  RealField mag(d);
  for (const auto& b : l.blobs) {
    const double r_px = std::min(b.ru * 0.5 * d.nx, b.rw * 0.5 * d.ny);
    for (int x = 0; x < d.nx; ++x) {
      const double u = (normalized(x, d.nx) - b.u) / b.ru;
      for (int y = 0; y < d.ny; ++y) {
        const double w = (normalized(y, d.ny) - b.w) / b.rw;
        const double r = std::sqrt(u * u + w * w);
        mag(0, x, y) += b.amp * 0.5 * (1.0 - std::tanh((r - 1.0) * r_px / edge_px));
      }
    }
  }
  const double peak = *std::max_element(mag.values().begin(), mag.values().end());
  const auto phi = phantom_phase(spec);
  ImageSequence out(d);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::polar(mag[i] / peak, phi[i]);
  return out;
}

const char* name(VelocityPattern p) {
  switch (p) {
    case VelocityPattern::Cardiac: return "cardiac";
    case VelocityPattern::Translation: return "translation";
    case VelocityPattern::Zero: return "zero";
  }
  return "?";
}

VelocityPattern parse_pattern(const std::string& s) {
  if (s == "cardiac") return VelocityPattern::Cardiac;
  if (s == "translation") return VelocityPattern::Translation;
  if (s == "zero") return VelocityPattern::Zero;
  throw Error(ErrorKind::Usage, "unknown velocity pattern '" + s + "'");
}

namespace {

double peak_speed(const VelocityField& v) {
  double peak = 0;
  auto vx = v.vx();
  auto vy = v.vy();
  for (std::size_t i = 0; i < vx.size(); ++i) peak = std::max(peak, std::sqrt(std::norm(vx[i]) + std::norm(vy[i])));
  return peak;
}

}  // namespace

VelocityField make_velocity_field(const Dims& dims, const VelocitySpec& spec) {
  check_sequence_dims(dims);
  VelocityField v(dims);
  switch (spec.pattern) {
    case VelocityPattern::Zero:
      return v;
    case VelocityPattern::Translation:
      std::fill(v.vx().begin(), v.vx().end(), Complex(spec.translate_x, 0));
      std::fill(v.vy().begin(), v.vy().end(), Complex(spec.translate_y, 0));
      return v;
    case VelocityPattern::Cardiac:
      break;
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const double cx = (spec.center_x < 0 ? 0.5 * dims.nx : spec.center_x) + 0.5 * jitter(rng);
  const double cy = (spec.center_y < 0 ? 0.5 * dims.ny : spec.center_y) + 0.5 * jitter(rng);
  const double rot_sign = jitter(rng) < 0 ? -1.0 : 1.0;
  const double radius = spec.radius * (1.0 + 0.1 * jitter(rng));

  // Contraction then expansion, returning to rest at the last frame; the
  // forward time difference vanishes there, so a consistent velocity must too.
  RealField profile(Dims{dims.nt, 1, 1});
  for (int t = 0; t < dims.nt; ++t) {
    profile[t] = dims.nt > 1 ? std::sin(2.0 * std::numbers::pi * t / (dims.nt - 1)) : 0.0;
  }
  profile = diffops::gaussian_smooth_time(profile, spec.sigma_time);
  profile[dims.nt - 1] = 0.0;

  ImageSequence vx(dims), vy(dims);
  for (int t = 0; t < dims.nt; ++t) {
    for (int x = 0; x < dims.nx; ++x) {
      const double dx = x - cx;
      for (int y = 0; y < dims.ny; ++y) {
        const double dy = y - cy;
        const double env = std::exp(-(dx * dx + dy * dy) / (2 * radius * radius)) / radius;
        const double s = profile[t];
        vx(t, x, y) = s * env * Complex(-dx, -rot_sign * spec.imag_fraction * dy);
        vy(t, x, y) = s * env * Complex(-dy, rot_sign * spec.imag_fraction * dx);
      }
    }
  }
  v = VelocityField(diffops::gaussian_smooth(vx, spec.sigma_space), diffops::gaussian_smooth(vy, spec.sigma_space));

  const double peak = peak_speed(v);
  if (peak > 0) {
    const double scale = std::min(spec.amplitude, spec.max_displacement) / peak;
    for (auto& z : v.values()) z *= scale;
  }
  return v;
}

ImageSequence advect(const ImageSequence& frame0, const VelocityField& v, int substeps) {
  if (substeps < 1) throw Error(ErrorKind::Invariant, "advection needs substeps ≥ 1");
  if (frame0.dims().nt != 1) throw Error(ErrorKind::DimMismatch, "advection starts from a single frame");
  const Dims d = v.dims();
  if (frame0.dims().nx != d.nx || frame0.dims().ny != d.ny) {
    throw Error(ErrorKind::DimMismatch, "frame0 does not match velocity dims");
  }
  const Dims fd{1, d.nx, d.ny};
  const double dtau = 1.0 / substeps;
  double sup0 = 0;
  for (const auto& z : frame0.values()) sup0 = std::max(sup0, std::abs(z));

  ImageSequence out(d);
  std::copy(frame0.values().begin(), frame0.values().end(), out.frame(0).begin());
  std::vector<Complex> cur(frame0.values().begin(), frame0.values().end());
  std::vector<Complex> gx(fd.size()), gy(fd.size());
  for (int t = 0; t + 1 < d.nt; ++t) {
    auto vx = v.vx().subspan(t * fd.size(), fd.size());
    auto vy = v.vy().subspan(t * fd.size(), fd.size());
    for (int s = 0; s < substeps; ++s) {
      diffops::apply<Complex>(diffops::Stencil::CentralX, fd, cur, gx);
      diffops::apply<Complex>(diffops::Stencil::CentralY, fd, cur, gy);
      for (std::size_t i = 0; i < cur.size(); ++i) {
        cur[i] -= dtau * (vx[i] * std::conj(gx[i]) + vy[i] * std::conj(gy[i]));
      }
    }
    double sup = 0;
    for (const auto& z : cur) sup = std::max(sup, std::abs(z));
    if (!(sup <= 10.0 * sup0) && sup > 0) {
      throw Error(ErrorKind::Divergence, "advection unstable, increase substeps");
    }
    std::copy(cur.begin(), cur.end(), out.frame(t + 1).begin());
  }
  return out;
}

CoilMaps make_coil_maps(int nc, int nx, int ny, std::uint64_t seed) {
  if (nc < 1) throw Error(ErrorKind::Invariant, "coil count must be ≥ 1");
  Grid3<Complex> maps(Dims{nc, nx, ny});
  if (nc == 1) {
    std::fill(maps.values().begin(), maps.values().end(), Complex(1.0, 0.0));
    return CoilMaps(std::move(maps));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double width = 0.4 * std::max(nx, ny);
  for (int c = 0; c < nc; ++c) {
    const double theta = 2.0 * std::numbers::pi * (c + 0.15 * uni(rng)) / nc;
    const double px = 0.5 * nx + 0.525 * nx * std::cos(theta);
    const double py = 0.5 * ny + 0.525 * ny * std::sin(theta);
    const double kx = 0.5 * std::numbers::pi * uni(rng) / nx;
    const double ky = 0.5 * std::numbers::pi * uni(rng) / ny;
    const double phase0 = std::numbers::pi * uni(rng);
    for (int x = 0; x < nx; ++x) {
      for (int y = 0; y < ny; ++y) {
        const double dx = x - px, dy = y - py;
        const double mag = std::exp(-(dx * dx + dy * dy) / (2 * width * width));
        maps(c, x, y) = std::polar(mag, phase0 + kx * (x - 0.5 * nx) + ky * (y - 0.5 * ny));
      }
    }
  }
  CoilMaps raw(maps);
  const auto rss = raw.rss();
  const double peak = *std::max_element(rss.begin(), rss.end());
  for (auto& z : maps.values()) z /= peak;
  return CoilMaps(std::move(maps));
}

KSpaceData synthesize_measurements(const ImageSequence& rho_gt, const mri::MriSystem& sys, const NoiseSpec& noise) {
  if (noise.eta < 0) throw Error(ErrorKind::Invariant, "noise level must be ≥ 0");
  KSpaceData y = mri::forward(sys, rho_gt);
  if (noise.eta == 0) return y;
  const Dims d = rho_gt.dims();
  const auto full = mri::forward(sys.with_mask(SamplingMask::full(d.nt, d.nx)), rho_gt);
  double peak = 0;
  for (const auto& z : full.values()) peak = std::max(peak, std::abs(z));
  const double sd = noise.eta * peak / std::sqrt(2.0);
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < d.nt; ++t) {
    for (int c = 0; c < y.coils(); ++c) {
      for (int x : y.mask().rows(t)) {
        for (int j = 0; j < d.ny; ++j) {
          const double g1 = gauss(rng);
          const double g2 = gauss(rng);
          y(t, c, x, j) += Complex(sd * g1, sd * g2);
        }
      }
    }
  }
  return y;
}

SpatialMask dynamic_mask(const ImageSequence& rho_gt, double tau, int dilate_px) {
  const Dims d = rho_gt.dims();
  if (d.nt < 2) throw Error(ErrorKind::Invariant, "dynamic mask needs Nt ≥ 2");
  if (tau < 0 || tau >= 1) throw Error(ErrorKind::Invariant, "dynamic mask threshold must lie in [0, 1)");
  std::vector<double> sd(d.frame_size());
  for (std::size_t p = 0; p < sd.size(); ++p) {
    double mean = 0;
    for (int t = 0; t < d.nt; ++t) mean += std::abs(rho_gt[t * d.frame_size() + p]);
    mean /= d.nt;
    double var = 0;
    for (int t = 0; t < d.nt; ++t) {
      const double e = std::abs(rho_gt[t * d.frame_size() + p]) - mean;
      var += e * e;
    }
    sd[p] = std::sqrt(var / d.nt);
  }
  const double peak = *std::max_element(sd.begin(), sd.end());
  if (peak == 0) throw Error(ErrorKind::Invariant, "no dynamic content");
  SpatialMask core{d.nx, d.ny, std::vector<std::uint8_t>(sd.size())};
  for (std::size_t p = 0; p < sd.size(); ++p) core.inside[p] = sd[p] > tau * peak ? 1 : 0;
  if (dilate_px <= 0) return core;
  SpatialMask out = core;
  const int r = dilate_px;
  for (int x = 0; x < d.nx; ++x) {
    for (int y = 0; y < d.ny; ++y) {
      if (!core(x, y)) continue;
      for (int dx = -r; dx <= r; ++dx) {
        for (int dy = -r; dy <= r; ++dy) {
          if (dx * dx + dy * dy > r * r) continue;
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= d.nx || yy >= d.ny) continue;
          out.inside[static_cast<std::size_t>(xx) * d.ny + yy] = 1;
        }
      }
    }
  }
  return out;
}

std::pair<ImageSequence, VelocityField> dynamic_ground_truth(const KSpaceData& y_full, const mri::MriSystem& sys,
                                                             ModelParams mp, const SolverParams& sp, double boost) {
  if (!sys.mask().is_full()) throw Error(ErrorKind::Invariant, "dynamic ground truth needs fully sampled data");
  mp.alpha3 *= boost;
  auto rec = reconstruct(y_full, sys, ModelKind::of(), mp, sp);
  return {std::move(rec.rho), std::move(rec.v)};
}

}  // namespace cineflow::sim
