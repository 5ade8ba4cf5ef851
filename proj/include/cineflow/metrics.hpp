#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cineflow/grid.hpp"

// Masked PSNR / SSIM on magnitude images, per frame and aggregated.
namespace cineflow::metrics {

inline constexpr int kSsimWindow = 7;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// max|gt| - min|gt| over the whole sequence.
double data_range(const ImageSequence& gt);

// Per-frame 10 log10(range^2 / MSE) over masked pixels; +inf when the
// masked magnitudes agree exactly.
std::vector<double> psnr_masked(const ImageSequence& gt, const ImageSequence& rec, const SpatialMask& mask);

// Per-frame mean of the 7x7 uniform-window SSIM map (sample covariance)
// over mask pixels whose window lies fully inside the image.
std::vector<double> ssim_masked(const ImageSequence& gt, const ImageSequence& rec, const SpatialMask& mask);

struct MetricReport {
  std::vector<double> psnr;  // per frame, may contain +inf
  std::vector<double> ssim;
  double mean_psnr = 0;
  double std_psnr = 0;  // population std over finite frames
  double mean_ssim = 0;
  double std_ssim = 0;
  int inf_frames = 0;   // frames left out of the PSNR statistics
};

MetricReport aggregate(std::vector<double> psnr, std::vector<double> ssim);

MetricReport evaluate(const ImageSequence& gt, const ImageSequence& rec, const SpatialMask& mask);

// frame,psnr_db,ssim rows followed by "mean" and "std" rows.
std::string metrics_csv(const MetricReport& r);
void write_metrics_csv(const MetricReport& r, const std::filesystem::path& path);

// %.17g, with inf/nan spelled out; shared by every CSV writer.
std::string format_number(double x);

}  // namespace cineflow::metrics
