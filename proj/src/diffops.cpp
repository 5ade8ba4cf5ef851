#include "cineflow/diffops.hpp"

#include <algorithm>
#include <cmath>

namespace cineflow::diffops {

const char* name(Stencil s) {
  switch (s) {
    case Stencil::ForwardTime: return "forward_time";
    case Stencil::CentralX: return "central_x";
    case Stencil::CentralY: return "central_y";
    case Stencil::ForwardX: return "forward_x";
    case Stencil::ForwardY: return "forward_y";
  }
  return "?";
}

namespace {

// Strided 1-D lines: a stencil along axis a touches n samples spaced `stride`
// apart, for every `line` start offset enumerated by for_each_line.
struct Axis {
  int n;
  std::size_t stride;
};

template <class F>
void for_each_line(Stencil s, const Dims& d, Axis& axis, F&& f) {
  const std::size_t fs = d.frame_size();
  switch (s) {
    case Stencil::ForwardTime:
      axis = {d.nt, fs};
      for (std::size_t i = 0; i < fs; ++i) f(i);
      break;
    case Stencil::CentralX:
    case Stencil::ForwardX:
      axis = {d.nx, static_cast<std::size_t>(d.ny)};
      for (int t = 0; t < d.nt; ++t)
        for (int y = 0; y < d.ny; ++y) f(t * fs + y);
      break;
    case Stencil::CentralY:
    case Stencil::ForwardY:
      axis = {d.ny, 1};
      for (int t = 0; t < d.nt; ++t)
        for (int x = 0; x < d.nx; ++x) f(t * fs + static_cast<std::size_t>(x) * d.ny);
      break;
  }
}

bool is_central(Stencil s) { return s == Stencil::CentralX || s == Stencil::CentralY; }

}  // namespace

template <class T>
void apply(Stencil s, const Dims& d, std::span<const T> in, std::span<T> out) {
  Axis ax{};
  const bool central = is_central(s);
  for_each_line(s, d, ax, [&](std::size_t base) {
    const T* u = in.data() + base;
    T* o = out.data() + base;
    const std::size_t st = ax.stride;
    const int n = ax.n;
    if (central) {
      if (n == 1) {
        o[0] = T{};
        return;
      }
      o[0] = 0.5 * (u[st] - u[0]);
      for (int i = 1; i < n - 1; ++i) o[i * st] = 0.5 * (u[(i + 1) * st] - u[(i - 1) * st]);
      o[(n - 1) * st] = 0.5 * (u[(n - 1) * st] - u[(n - 2) * st]);
    } else {
      for (int i = 0; i < n - 1; ++i) o[i * st] = u[(i + 1) * st] - u[i * st];
      o[(n - 1) * st] = T{};
    }
  });
}

template <class T>
void adjoint_add(Stencil s, const Dims& d, std::span<const T> win, std::span<T> out) {
  Axis ax{};
  const bool central = is_central(s);
  for_each_line(s, d, ax, [&](std::size_t base) {
    const T* w = win.data() + base;
    T* o = out.data() + base;
    const std::size_t st = ax.stride;
    const int n = ax.n;
    if (central) {
      // Scatter each output row i back onto its two taps min(i+1, n-1) and max(i-1, 0).
      for (int i = 0; i < n; ++i) {
        const T h = 0.5 * w[i * st];
        o[std::min(i + 1, n - 1) * st] += h;
        o[std::max(i - 1, 0) * st] -= h;
      }
    } else {
      for (int i = 0; i < n - 1; ++i) {
        o[(i + 1) * st] += w[i * st];
        o[i * st] -= w[i * st];
      }
    }
  });
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma < 0) throw Error(ErrorKind::Invariant, "gaussian sigma must be nonnegative");
  if (sigma == 0) return {1.0};
  const int r = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace {

template <class T>
void convolve_lines(Stencil axis_of, const Dims& d, std::span<const double> k, std::span<const T> in,
                    std::span<T> out) {
  Axis ax{};
  const int r = static_cast<int>(k.size() / 2);
  std::vector<T> line;
  for_each_line(axis_of, d, ax, [&](std::size_t base) {
    const int n = ax.n;
    const std::size_t st = ax.stride;
    line.resize(n);
    for (int i = 0; i < n; ++i) line[i] = in[base + i * st];
    for (int i = 0; i < n; ++i) {
      T acc{};
      for (int j = -r; j <= r; ++j) acc += k[j + r] * line[std::clamp(i + j, 0, n - 1)];
      out[base + i * st] = acc;
    }
  });
}

}  // namespace

template <class T>
Grid3<T> gaussian_smooth(const Grid3<T>& u, double sigma) {
  auto k = gaussian_kernel(sigma);
  if (k.size() == 1) return u;
  Grid3<T> tmp(u.dims());
  Grid3<T> out(u.dims());
  convolve_lines<T>(Stencil::ForwardX, u.dims(), k, u.values(), tmp.values());
  convolve_lines<T>(Stencil::ForwardY, u.dims(), k, tmp.values(), out.values());
  return out;
}

template <class T>
Grid3<T> gaussian_smooth_time(const Grid3<T>& u, double sigma) {
  auto k = gaussian_kernel(sigma);
  if (k.size() == 1) return u;
  Grid3<T> out(u.dims());
  convolve_lines<T>(Stencil::ForwardTime, u.dims(), k, u.values(), out.values());
  return out;
}

template void apply<double>(Stencil, const Dims&, std::span<const double>, std::span<double>);
template void apply<Complex>(Stencil, const Dims&, std::span<const Complex>, std::span<Complex>);
template void adjoint_add<double>(Stencil, const Dims&, std::span<const double>, std::span<double>);
template void adjoint_add<Complex>(Stencil, const Dims&, std::span<const Complex>, std::span<Complex>);
template Grid3<double> gaussian_smooth<double>(const Grid3<double>&, double);
template Grid3<Complex> gaussian_smooth<Complex>(const Grid3<Complex>&, double);
template Grid3<double> gaussian_smooth_time<double>(const Grid3<double>&, double);
template Grid3<Complex> gaussian_smooth_time<Complex>(const Grid3<Complex>&, double);

}  // namespace cineflow::diffops
