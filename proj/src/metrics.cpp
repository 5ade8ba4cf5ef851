#include "cineflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cineflow::metrics {

namespace {

void check_inputs(const ImageSequence& gt, const ImageSequence& rec, const SpatialMask& mask) {
  require_same_dims(gt.dims(), rec.dims(), "ground truth vs reconstruction");
  if (mask.nx != gt.dims().nx || mask.ny != gt.dims().ny) {
    throw Error(ErrorKind::DimMismatch, "mask does not match image dims");
  }
  if (mask.count() == 0) throw Error(ErrorKind::Invariant, "metric mask is empty");
}

std::vector<double> magnitudes(std::span<const Complex> frame) {
  std::vector<double> out(frame.size());
  std::transform(frame.begin(), frame.end(), out.begin(), [](Complex z) { return std::abs(z); });
  return out;
}

}  // namespace

double data_range(const ImageSequence& gt) {
  if (gt.size() == 0) return 0;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& z : gt.values()) {
    lo = std::min(lo, std::abs(z));
    hi = std::max(hi, std::abs(z));
  }
  return hi - lo;
}

std::vector<double> psnr_masked(const ImageSequence& gt, const ImageSequence& rec, const SpatialMask& mask) {
  check_inputs(gt, rec, mask);
  const Dims d = gt.dims();
  const double range = data_range(gt);
  const double n = static_cast<double>(mask.count());
  std::vector<double> out(d.nt);
  for (int t = 0; t < d.nt; ++t) {
    auto g = gt.frame(t);
    auto r = rec.frame(t);
    double sse = 0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (!mask.inside[p]) continue;
      const double e = std::abs(r[p]) - std::abs(g[p]);
      sse += e * e;
    }
    out[t] = sse == 0 ? INFINITY : 10.0 * std::log10(range * range / (sse / n));
  }
  return out;
}

std::vector<double> ssim_masked(const ImageSequence& gt, const ImageSequence& rec, const SpatialMask& mask) {
  check_inputs(gt, rec, mask);
  const Dims d = gt.dims();
  const double range = data_range(gt);
  if (!(range > 0)) throw Error(ErrorKind::Invariant, "SSIM needs a ground truth with nonzero data range");
  const int pad = kSsimWindow / 2;
  const double np = kSsimWindow * kSsimWindow;
  const double cov_norm = np / (np - 1.0);
  const double c1 = (kSsimK1 * range) * (kSsimK1 * range);
  const double c2 = (kSsimK2 * range) * (kSsimK2 * range);

  std::size_t used = 0;
  for (int x = pad; x < d.nx - pad; ++x)
    for (int y = pad; y < d.ny - pad; ++y) used += mask(x, y);
  if (used == 0) throw Error(ErrorKind::Invariant, "mask has no pixels inside the SSIM valid region");

  std::vector<double> out(d.nt);
  for (int t = 0; t < d.nt; ++t) {
    const auto a = magnitudes(gt.frame(t));
    const auto b = magnitudes(rec.frame(t));
    double sum = 0;
    for (int x = pad; x < d.nx - pad; ++x) {
      for (int y = pad; y < d.ny - pad; ++y) {
        if (!mask(x, y)) continue;
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = x - pad; i <= x + pad; ++i) {
          for (int j = y - pad; j <= y + pad; ++j) {
            const double va = a[static_cast<std::size_t>(i) * d.ny + j];
            const double vb = b[static_cast<std::size_t>(i) * d.ny + j];
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        }
        const double ua = sa / np, ub = sb / np;
        const double vaa = cov_norm * (saa / np - ua * ua);
        const double vbb = cov_norm * (sbb / np - ub * ub);
        const double vab = cov_norm * (sab / np - ua * ub);
        sum += ((2 * ua * ub + c1) * (2 * vab + c2)) / ((ua * ua + ub * ub + c1) * (vaa + vbb + c2));
      }
    }
    out[t] = sum / static_cast<double>(used);
  }
  return out;
}

MetricReport aggregate(std::vector<double> psnr, std::vector<double> ssim) {
  if (psnr.empty() || psnr.size() != ssim.size()) {
    throw Error(ErrorKind::DimMismatch, "aggregate needs equally many PSNR and SSIM frames (at least one)");
  }
  MetricReport r;
  std::vector<double> finite;
  for (double p : psnr) {
    if (std::isinf(p)) ++r.inf_frames;
    else finite.push_back(p);
  }
  auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / v.size());
  };
  if (finite.empty()) {
    r.mean_psnr = INFINITY;
  } else {
    mean_std(finite, r.mean_psnr, r.std_psnr);
  }
  mean_std(ssim, r.mean_ssim, r.std_ssim);
  r.psnr = std::move(psnr);
  r.ssim = std::move(ssim);
  return r;
}

MetricReport evaluate(const ImageSequence& gt, const ImageSequence& rec, const SpatialMask& mask) {
  return aggregate(psnr_masked(gt, rec, mask), ssim_masked(gt, rec, mask));
}

std::string format_number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string metrics_csv(const MetricReport& r) {
  std::string out = "frame,psnr_db,ssim\r\n";
  for (std::size_t t = 0; t < r.psnr.size(); ++t) {
    out += std::to_string(t) + "," + format_number(r.psnr[t]) + "," + format_number(r.ssim[t]) + "\r\n";
  }
  out += "mean," + format_number(r.mean_psnr) + "," + format_number(r.mean_ssim) + "\r\n";
  out += "std," + format_number(r.std_psnr) + "," + format_number(r.std_ssim) + "\r\n";
  return out;
}

void write_metrics_csv(const MetricReport& r, const std::filesystem::path& path) {
  write_file_atomic(path, metrics_csv(r));
}

}  // namespace cineflow::metrics
