#include <doctest.h>

#include <sstream>

#include "cineflow/metrics.hpp"
#include "support.hpp"
#include "tempdir.hpp"

using namespace cineflow;

namespace {

SpatialMask full_mask(int nx, int ny) { return SpatialMask{nx, ny, std::vector<std::uint8_t>(nx * ny, 1)}; }

SpatialMask random_spatial_mask(int nx, int ny, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(0.6);
  SpatialMask m{nx, ny, std::vector<std::uint8_t>(nx * ny)};
  for (auto& b : m.inside) b = keep(rng);
  m.inside[(nx / 2) * ny + ny / 2] = 1;
  return m;
}

std::vector<double> magnitudes(std::span<const Complex> z) {
  std::vector<double> out;
  for (const auto& c : z) out.push_back(std::abs(c));
  return out;
}

ImageSequence random_magnitude_image(const Dims& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0), ph(-3.0, 3.0);
  ImageSequence s(d);
  for (auto& z : s.values()) z = std::polar(u(rng), ph(rng));
  return s;
}

// textured test image: smooth blobs plus a stripe pattern
ImageSequence textured(const Dims& d) {
  ImageSequence s(d);
  for (int t = 0; t < d.nt; ++t)
    for (int x = 0; x < d.nx; ++x)
      for (int y = 0; y < d.ny; ++y) {
        const double blob = std::exp(-((x - 10.0) * (x - 10.0) + (y - 12.0 - t) * (y - 12.0 - t)) / 18.0);
        s(t, x, y) = 0.5 * blob + 0.25 * (1 + std::sin(0.9 * x + 0.4 * y));
      }
  return s;
}

}  // namespace

TEST_CASE("data range") {
  ImageSequence g(Dims{2, 2, 2});
  g(0, 0, 0) = Complex(3, 4);
  g(1, 1, 1) = 1.0;
  g(0, 1, 0) = 0.5;
  for (auto& z : g.values())
    if (z == Complex(0)) z = 0.2;
  CHECK(metrics::data_range(g) == doctest::Approx(5.0 - 0.2));
}

TEST_CASE("PSNR closed forms") {
  const Dims d{3, 8, 8};
  ImageSequence gt(d);
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> u(0.0, 0.9);
  for (auto& z : gt.values()) z = std::polar(u(rng), 0.7);
  gt[0] = 0.0;
  gt[1] = 1.0;  // data range exactly 1
  auto mask = random_spatial_mask(8, 8, rng);

  auto rec = gt;
  for (int t = 0; t < d.nt; ++t)
    for (int x = 0; x < 8; ++x)
      for (int y = 0; y < 8; ++y)
        if (mask(x, y)) rec(t, x, y) = std::polar(std::abs(gt(t, x, y)) + 0.1, 0.7);
  for (double p : metrics::psnr_masked(gt, rec, mask)) CHECK(std::abs(p - 20.0) < 1e-9);

  for (double p : metrics::psnr_masked(gt, gt, mask)) CHECK(p == INFINITY);
  // phase differences do not count: magnitudes are compared
  auto rotated = gt;
  for (auto& z : rotated.values()) z *= std::polar(1.0, 1.3);
  for (double p : metrics::psnr_masked(gt, rotated, mask)) CHECK(p > 250.0);
}

TEST_CASE("metrics match the loop oracles") {
  std::mt19937_64 rng(41);
  const Dims d{1, 16, 16};
  for (int rep = 0; rep < 50; ++rep) {
    const auto gt = random_magnitude_image(d, rng);
    const auto rec = random_magnitude_image(d, rng);
    const auto mask = random_spatial_mask(16, 16, rng);
    const double range = metrics::data_range(gt);
    std::vector<int> m(mask.inside.begin(), mask.inside.end());
    const auto a = magnitudes(gt.values()), b = magnitudes(rec.values());
    CHECK(std::abs(metrics::psnr_masked(gt, rec, mask)[0] - testutil::naive_psnr(a, b, m, range)) < 1e-8);
    CHECK(std::abs(metrics::ssim_masked(gt, rec, mask)[0] - testutil::naive_ssim(b, a, m, 16, 16, range)) < 1e-8);
  }
}

TEST_CASE("SSIM basics") {
  std::mt19937_64 rng(42);
  const Dims d{4, 24, 24};
  const auto gt = textured(d);
  const auto mask = full_mask(24, 24);
  for (double s : metrics::ssim_masked(gt, gt, mask)) CHECK(s == 1.0);

  const ImageSequence flat(d, Complex(0.4, 0));
  for (double s : metrics::ssim_masked(gt, flat, mask)) CHECK(s < 0.5);

  const auto noisy = random_magnitude_image(d, rng);
  for (double s : metrics::ssim_masked(gt, noisy, mask)) {
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }

  // mask only on the 3-pixel border: nothing left after cropping
  SpatialMask border{24, 24, std::vector<std::uint8_t>(24 * 24, 0)};
  for (int x = 0; x < 24; ++x) border.inside[x * 24] = 1;
  CHECK_THROWS_AS(metrics::ssim_masked(gt, gt, border), Error);

  CHECK_THROWS_AS(metrics::ssim_masked(ImageSequence(d, Complex(1)), ImageSequence(d, Complex(1)), mask), Error);
  CHECK_THROWS_AS(metrics::psnr_masked(gt, ImageSequence(Dims{3, 24, 24}), mask), Error);
}

TEST_CASE("metrics ignore pixels outside the mask") {
  std::mt19937_64 rng(43);
  const Dims d{3, 20, 20};
  const auto gt = textured(d);
  auto rec = random_magnitude_image(d, rng);
  const auto mask = random_spatial_mask(20, 20, rng);
  const auto p0 = metrics::psnr_masked(gt, rec, mask);
  const auto s0 = metrics::ssim_masked(gt, rec, mask);
  // SSIM windows reach 3 px, so only pixels further than that from the mask may change
  auto far = rec;
  for (int t = 0; t < d.nt; ++t)
    for (int x = 0; x < 20; ++x)
      for (int y = 0; y < 20; ++y) {
        bool near = false;
        for (int i = -3; i <= 3; ++i)
          for (int j = -3; j <= 3; ++j) {
            const int xx = x + i, yy = y + j;
            if (xx >= 0 && yy >= 0 && xx < 20 && yy < 20 && mask(xx, yy)) near = true;
          }
        if (!mask(x, y)) rec(t, x, y) += 5.0;
        if (!near) far(t, x, y) += 5.0;
      }
  CHECK(metrics::psnr_masked(gt, rec, mask) == p0);
  CHECK(metrics::ssim_masked(gt, far, mask) == s0);
}

TEST_CASE("PSNR is invariant to a common scale") {
  std::mt19937_64 rng(44);
  const Dims d{2, 12, 12};
  const auto gt = random_magnitude_image(d, rng), rec = random_magnitude_image(d, rng);
  const auto mask = random_spatial_mask(12, 12, rng);
  auto gs = gt, rs = rec;
  for (auto& z : gs.values()) z *= 7.5;
  for (auto& z : rs.values()) z *= 7.5;
  const auto a = metrics::psnr_masked(gt, rec, mask), b = metrics::psnr_masked(gs, rs, mask);
  for (std::size_t t = 0; t < a.size(); ++t) CHECK(a[t] == doctest::Approx(b[t]).epsilon(1e-12));
}

TEST_CASE("aggregate") {
  const auto r = metrics::aggregate({30, 32, 34}, {0.8, 0.9, 1.0});
  CHECK(r.mean_psnr == doctest::Approx(32.0));
  CHECK(r.std_psnr == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(r.mean_ssim == doctest::Approx(0.9));
  CHECK(r.inf_frames == 0);

  const auto one = metrics::aggregate({25}, {0.5});
  CHECK(one.std_psnr == 0.0);
  CHECK(one.std_ssim == 0.0);

  const auto with_inf = metrics::aggregate({30, INFINITY, 34}, {1, 1, 1});
  CHECK(with_inf.inf_frames == 1);
  CHECK(with_inf.mean_psnr == doctest::Approx(32.0));
  CHECK(with_inf.std_psnr == doctest::Approx(2.0));

  CHECK(metrics::aggregate({INFINITY}, {1}).mean_psnr == INFINITY);
  CHECK_THROWS_AS(metrics::aggregate({}, {}), Error);
  CHECK_THROWS_AS(metrics::aggregate({1, 2}, {1}), Error);
}

TEST_CASE("metrics CSV recomputes") {
  std::mt19937_64 rng(45);
  const Dims d{5, 16, 16};
  const auto gt = textured(d);
  auto rec = gt;
  std::normal_distribution<double> g(0.0, 0.05);
  for (auto& z : rec.values()) z += g(rng);
  const auto report = metrics::evaluate(gt, rec, full_mask(16, 16));
  testutil::TempDir dir("metrics");
  metrics::write_metrics_csv(report, dir / "m.csv");
  const std::string text = read_file(dir / "m.csv");
  CHECK(text == metrics::metrics_csv(report));
  CHECK(text.rfind("frame,psnr_db,ssim\r\n", 0) == 0);

  // recompute mean and population std from the per-frame rows
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<double> p, s;
  double mean_p = 0, mean_s = 0, std_p = 0, std_s = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream row(line);
    std::string a, b, c;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    std::getline(row, c, ',');
    if (a == "mean") {
      mean_p = std::stod(b);
      mean_s = std::stod(c);
    } else if (a == "std") {
      std_p = std::stod(b);
      std_s = std::stod(c);
    } else {
      CHECK(std::stoi(a) == static_cast<int>(p.size()));
      p.push_back(std::stod(b));
      s.push_back(std::stod(c));
    }
  }
  REQUIRE(p.size() == 5);
  auto stats = [](const std::vector<double>& v) {
    double m = 0, var = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) var += (x - m) * (x - m);
    return std::pair{m, std::sqrt(var / v.size())};
  };
  CHECK(stats(p).first == doctest::Approx(mean_p).epsilon(1e-14));
  CHECK(stats(p).second == doctest::Approx(std_p).epsilon(1e-12));
  CHECK(stats(s).first == doctest::Approx(mean_s).epsilon(1e-14));
  CHECK(stats(s).second == doctest::Approx(std_s).epsilon(1e-12));
}

TEST_CASE("number formatting") {
  CHECK(metrics::format_number(INFINITY) == "inf");
  CHECK(metrics::format_number(-INFINITY) == "-inf");
  CHECK(metrics::format_number(NAN) == "nan");
  CHECK(metrics::format_number(0.5) == "0.5");
  CHECK(std::stod(metrics::format_number(0.1)) == 0.1);
}
