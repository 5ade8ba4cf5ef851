#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace cineflow {

using Complex = std::complex<double>;

enum class ErrorKind {
  Io,
  Format,
  Invariant,
  NonFinite,
  DimMismatch,
  Infeasible,
  Divergence,
  Usage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct Dims {
  int nt = 0;
  int nx = 0;
  int ny = 0;

  std::size_t frame_size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t size() const { return static_cast<std::size_t>(nt) * frame_size(); }
  std::size_t index(int t, int x, int y) const {
    return (static_cast<std::size_t>(t) * nx + x) * ny + y;
  }
  bool operator==(const Dims&) const = default;
};

std::string to_string(const Dims& d);

// Throws Invariant unless nt >= 1, nx >= 2, ny >= 2.
void check_sequence_dims(const Dims& d);
void require_same_dims(const Dims& a, const Dims& b, const char* what);

// Dense (t, x, y) grid, row-major with t outermost.
template <class T>
class Grid3 {
 public:
  using value_type = T;

  Grid3() = default;
  explicit Grid3(Dims dims, T fill = T{}) : dims_(dims), data_(dims.size(), fill) {}
  Grid3(Dims dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
    if (data_.size() != dims_.size()) {
      throw Error(ErrorKind::DimMismatch, "grid payload does not match dims " + to_string(dims_));
    }
  }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int t, int x, int y) { return data_[dims_.index(t, x, y)]; }
  const T& operator()(int t, int x, int y) const { return data_[dims_.index(t, x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::span<T> frame(int t) { return values().subspan(t * dims_.frame_size(), dims_.frame_size()); }
  std::span<const T> frame(int t) const {
    return values().subspan(t * dims_.frame_size(), dims_.frame_size());
  }

  // Real-valued view: complex entries appear as interleaved (re, im) pairs.
  std::span<double> flat() {
    if constexpr (std::is_same_v<T, Complex>) {
      return {reinterpret_cast<double*>(data_.data()), 2 * data_.size()};
    } else {
      return data_;
    }
  }
  std::span<const double> flat() const {
    if constexpr (std::is_same_v<T, Complex>) {
      return {reinterpret_cast<const double*>(data_.data()), 2 * data_.size()};
    } else {
      return data_;
    }
  }

  bool operator==(const Grid3&) const = default;

 private:
  Dims dims_;
  std::vector<T> data_;
};

using RealField = Grid3<double>;

// Complex image stack rho in C^{Nt x Nx x Ny}.
using ImageSequence = Grid3<Complex>;

// Complex 2-vector velocity (vx, vy) per (t, x, y). Stored as vx followed by vy
// so that the whole field is one contiguous real vector for the optimizer.
class VelocityField {
 public:
  VelocityField() = default;
  explicit VelocityField(Dims dims) : dims_(dims), data_(2 * dims.size()) {}
  VelocityField(const ImageSequence& vx, const ImageSequence& vy);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  std::span<Complex> vx() { return std::span<Complex>(data_).first(dims_.size()); }
  std::span<Complex> vy() { return std::span<Complex>(data_).last(dims_.size()); }
  std::span<const Complex> vx() const { return std::span<const Complex>(data_).first(dims_.size()); }
  std::span<const Complex> vy() const { return std::span<const Complex>(data_).last(dims_.size()); }

  ImageSequence vx_sequence() const;
  ImageSequence vy_sequence() const;

  std::span<Complex> values() { return data_; }
  std::span<const Complex> values() const { return data_; }
  std::span<double> flat() { return {reinterpret_cast<double*>(data_.data()), 2 * data_.size()}; }
  std::span<const double> flat() const {
    return {reinterpret_cast<const double*>(data_.data()), 2 * data_.size()};
  }

  bool operator==(const VelocityField&) const = default;

 private:
  Dims dims_;
  std::vector<Complex> data_;
};

// Per-frame sorted list of sampled phase-encoding rows (k-space x index).
class SamplingMask {
 public:
  SamplingMask() = default;
  SamplingMask(int nx_full, std::vector<std::vector<int>> rows);

  static SamplingMask full(int nt, int nx_full);

  int nt() const { return static_cast<int>(rows_.size()); }
  int nx_full() const { return nx_full_; }
  const std::vector<int>& rows(int t) const { return rows_[t]; }
  bool sampled(int t, int row) const { return lookup_[static_cast<std::size_t>(t) * nx_full_ + row] != 0; }
  bool is_full() const;

  bool operator==(const SamplingMask& o) const { return nx_full_ == o.nx_full_ && rows_ == o.rows_; }

 private:
  int nx_full_ = 0;
  std::vector<std::vector<int>> rows_;
  std::vector<std::uint8_t> lookup_;
};

// Static coil sensitivities, one complex map per coil over (x, y).
class CoilMaps {
 public:
  CoilMaps() = default;
  // maps.dims().nt is the coil count.
  explicit CoilMaps(Grid3<Complex> maps);

  int count() const { return maps_.dims().nt; }
  int nx() const { return maps_.dims().nx; }
  int ny() const { return maps_.dims().ny; }
  std::span<const Complex> coil(int c) const { return maps_.frame(c); }
  const Grid3<Complex>& maps() const { return maps_; }

  // Root-sum-of-squares over coils, per pixel.
  std::vector<double> rss() const;

  bool operator==(const CoilMaps&) const = default;

 private:
  Grid3<Complex> maps_;
};

// Zero-filled measurements y, indexed (t, coil, row, col).
class KSpaceData {
 public:
  KSpaceData() = default;
  KSpaceData(Dims dims, int coils, SamplingMask mask);
  KSpaceData(Dims dims, int coils, SamplingMask mask, std::vector<Complex> samples);

  const Dims& dims() const { return dims_; }
  int coils() const { return coils_; }
  const SamplingMask& mask() const { return mask_; }

  std::size_t index(int t, int c, int x, int y) const {
    return ((static_cast<std::size_t>(t) * coils_ + c) * dims_.nx + x) * dims_.ny + y;
  }
  Complex& operator()(int t, int c, int x, int y) { return samples_[index(t, c, x, y)]; }
  const Complex& operator()(int t, int c, int x, int y) const { return samples_[index(t, c, x, y)]; }

  std::span<Complex> image(int t, int c) {
    return std::span<Complex>(samples_).subspan(index(t, c, 0, 0), dims_.frame_size());
  }
  std::span<const Complex> image(int t, int c) const {
    return std::span<const Complex>(samples_).subspan(index(t, c, 0, 0), dims_.frame_size());
  }
  std::span<Complex> values() { return samples_; }
  std::span<const Complex> values() const { return samples_; }

  // Throws Invariant if any unsampled row carries a nonzero sample.
  void check_mask_consistency() const;

  bool operator==(const KSpaceData&) const = default;

 private:
  Dims dims_;
  int coils_ = 0;
  SamplingMask mask_;
  std::vector<Complex> samples_;
};

// Binary spatial mask over (x, y).
struct SpatialMask {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> inside;

  bool operator()(int x, int y) const { return inside[static_cast<std::size_t>(x) * ny + y] != 0; }
  std::size_t count() const;
  bool operator==(const SpatialMask&) const = default;
};

bool all_finite(std::span<const Complex> v);
bool all_finite(std::span<const double> v);

// File I/O. Writes go to a temporary sibling and are renamed into place.
void save_sequence(const ImageSequence& seq, const std::filesystem::path& path);
ImageSequence load_sequence(const std::filesystem::path& path);

void save_velocity(const VelocityField& v, const std::filesystem::path& path);
VelocityField load_velocity(const std::filesystem::path& path);

void save_mask(const SamplingMask& mask, const std::filesystem::path& path);
SamplingMask load_mask(const std::filesystem::path& path);

void save_kspace(const KSpaceData& y, const std::filesystem::path& path);
KSpaceData load_kspace(const std::filesystem::path& path);

void save_coils(const CoilMaps& coils, const std::filesystem::path& path);
CoilMaps load_coils(const std::filesystem::path& path);

// Spatial masks are stored as a 1 x Nx x Ny sequence of 0/1 values.
void save_spatial_mask(const SpatialMask& mask, const std::filesystem::path& path);
SpatialMask load_spatial_mask(const std::filesystem::path& path);

// Writes bytes atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace cineflow
