#include "cineflow/figures.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

namespace cineflow::figures {

void RgbImage::set(int row, int col, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  auto* p = &rgb[(static_cast<std::size_t>(row) * width + col) * 3];
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}

void no_flush(png_structp) {}

std::uint8_t to_byte(double x) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(x, 0.0, 1.0))); }

}  // namespace

std::string encode_png(const RgbImage& img) {
  if (img.width < 1 || img.height < 1) throw Error(ErrorKind::Invariant, "empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorKind::Io, "png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::Io, "png: cannot create info");
  }
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "png: encoding failed");
  }
  png_set_write_fn(png, &out, append_bytes, no_flush);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r) {
    png_write_row(png, const_cast<png_bytep>(&img.rgb[static_cast<std::size_t>(r) * img.width * 3]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const RgbImage& img, const std::filesystem::path& path) { write_file_atomic(path, encode_png(img)); }

RgbImage upscale(const RgbImage& img, int zoom) {
  if (zoom < 1) throw Error(ErrorKind::Invariant, "zoom must be ≥ 1");
  RgbImage out(img.width * zoom, img.height * zoom);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const auto* p = &img.rgb[(static_cast<std::size_t>(r / zoom) * img.width + c / zoom) * 3];
      out.set(r, c, p[0], p[1], p[2]);
    }
  }
  return out;
}

RgbImage difference_map(std::span<const Complex> gt, std::span<const Complex> rec, const SpatialMask& mask,
                        double scale) {
  if (gt.size() != rec.size() || gt.size() != mask.inside.size()) {
    throw Error(ErrorKind::DimMismatch, "difference map inputs differ in size");
  }
  RgbImage img(mask.ny, mask.nx);
  for (int x = 0; x < mask.nx; ++x) {
    for (int y = 0; y < mask.ny; ++y) {
      const std::size_t p = static_cast<std::size_t>(x) * mask.ny + y;
      if (!mask.inside[p]) {
        img.set(x, y, 128, 128, 128);
        continue;
      }
      const double d = scale > 0 ? std::clamp((std::abs(rec[p]) - std::abs(gt[p])) / scale, -1.0, 1.0) : 0.0;
      if (d >= 0) img.set(x, y, 255, to_byte(1 - d), to_byte(1 - d));
      else img.set(x, y, to_byte(1 + d), to_byte(1 + d), 255);
    }
  }
  return img;
}

RgbImage heatmap(std::span<const double> values, int nx, int ny, double vmax) {
  if (values.size() != static_cast<std::size_t>(nx) * ny) throw Error(ErrorKind::DimMismatch, "heatmap size");
  RgbImage img(ny, nx);
  for (int x = 0; x < nx; ++x) {
    for (int y = 0; y < ny; ++y) {
      const double s = vmax > 0 ? std::clamp(values[static_cast<std::size_t>(x) * ny + y] / vmax, 0.0, 1.0) : 0.0;
      img.set(x, y, to_byte(3 * s), to_byte(3 * s - 1), to_byte(3 * s - 2));
    }
  }
  return img;
}

RgbImage time_space_profile(const ImageSequence& seq, int row, double vmax) {
  const Dims d = seq.dims();
  if (row < 0 || row >= d.nx) throw Error(ErrorKind::Invariant, "profile row out of range");
  RgbImage img(d.ny, d.nt);
  for (int t = 0; t < d.nt; ++t) {
    for (int y = 0; y < d.ny; ++y) {
      const auto g = to_byte(vmax > 0 ? std::abs(seq(t, row, y)) / vmax : 0.0);
      img.set(t, y, g, g, g);
    }
  }
  return img;
}

std::vector<double> speed(const VelocityField& v, int t) {
  const Dims d = v.dims();
  if (t < 0 || t >= d.nt) throw Error(ErrorKind::Invariant, "frame out of range");
  std::vector<double> out(d.frame_size());
  auto vx = v.vx().subspan(t * d.frame_size(), d.frame_size());
  auto vy = v.vy().subspan(t * d.frame_size(), d.frame_size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(std::norm(vx[i]) + std::norm(vy[i]));
  return out;
}

}  // namespace cineflow::figures
