#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cineflow/grid.hpp"

// Static figure images: signed difference maps, magnitude heatmaps and
// time-space profiles, written as 8-bit RGB PNG.
namespace cineflow::figures {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  RgbImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}
  void set(int row, int col, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

std::string encode_png(const RgbImage& img);
void write_png(const RgbImage& img, const std::filesystem::path& path);

// Each pixel becomes a zoom x zoom block.
RgbImage upscale(const RgbImage& img, int zoom);

// |rec| - |gt| of one frame on a blue-white-red scale clipped at +-scale;
// pixels outside the mask are mid gray. Image rows follow x.
RgbImage difference_map(std::span<const Complex> gt, std::span<const Complex> rec, const SpatialMask& mask,
                        double scale);

// Nonnegative values on a black-red-yellow-white scale with vmax at white.
RgbImage heatmap(std::span<const double> values, int nx, int ny, double vmax);

// |rho(t, row, :)| stacked over t (one image row per frame), gray scale with
// vmax at white.
RgbImage time_space_profile(const ImageSequence& seq, int row, double vmax);

// sqrt(|vx|^2 + |vy|^2) for frame t.
std::vector<double> speed(const VelocityField& v, int t);

}  // namespace cineflow::figures
