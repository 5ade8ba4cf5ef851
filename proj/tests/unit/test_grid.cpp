#include <doctest.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "cineflow/grid.hpp"
#include "support.hpp"
#include "tempdir.hpp"

using namespace cineflow;
using testutil::TempDir;

namespace {

void write_raw(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string le_doubles(std::initializer_list<double> xs) {
  std::string out;
  for (double x : xs) {
    unsigned char b[8];
    std::memcpy(b, &x, 8);
    out.append(reinterpret_cast<const char*>(b), 8);
  }
  return out;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Usage;
}

template <class F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

}  // namespace

TEST_CASE("dims invariants") {
  CHECK_NOTHROW(check_sequence_dims({1, 2, 2}));
  CHECK(kind_of([] { check_sequence_dims({0, 4, 4}); }) == ErrorKind::Invariant);
  CHECK(message_of([] { check_sequence_dims({2, 1, 4}); }).find("invariant violation: Nx ≥ 2") != std::string::npos);
  CHECK(message_of([] { check_sequence_dims({2, 4, 1}); }).find("Ny ≥ 2") != std::string::npos);
  CHECK(kind_of([] { require_same_dims({1, 2, 2}, {1, 2, 3}, "x"); }) == ErrorKind::DimMismatch);
}

TEST_CASE("sequence file layout") {
  TempDir dir("grid");
  SUBCASE("all-zero 1x2x2 has a 64-byte zero payload after the header") {
    save_sequence(ImageSequence(Dims{1, 2, 2}), dir / "z.cxseq");
    const auto bytes = read_file(dir / "z.cxseq");
    const std::string header = "CXSEQ1 1 2 2\n";
    REQUIRE(bytes.size() == header.size() + 4 * 16);
    CHECK(bytes.substr(0, header.size()) == header);
    CHECK(bytes.find_first_not_of('\0', header.size()) == std::string::npos);
  }
  SUBCASE("header records dims") {
    save_sequence(ImageSequence(Dims{8, 64, 64}), dir / "h.cxseq");
    CHECK(read_file(dir / "h.cxseq").rfind("CXSEQ1 8 64 64\n", 0) == 0);
  }
  SUBCASE("payload is little-endian interleaved re/im, t then x then y") {
    ImageSequence s(Dims{1, 2, 2});
    s(0, 0, 1) = Complex(1.5, -2.0);
    s(0, 1, 0) = Complex(0.25, 3.0);
    save_sequence(s, dir / "o.cxseq");
    const auto bytes = read_file(dir / "o.cxseq");
    CHECK(bytes.substr(13) == le_doubles({0, 0, 1.5, -2.0, 0.25, 3.0, 0, 0}));
  }
}

TEST_CASE("round trips are bit exact") {
  TempDir dir("grid_rt");
  std::mt19937_64 rng(11);
  const Dims d{4, 8, 8};

  const auto seq = testutil::random_complex(d, rng);
  save_sequence(seq, dir / "s.cxseq");
  const auto seq2 = load_sequence(dir / "s.cxseq");
  CHECK(seq2 == seq);
  CHECK(std::memcmp(seq2.values().data(), seq.values().data(), seq.size() * sizeof(Complex)) == 0);

  const auto v = testutil::random_velocity(d, rng);
  save_velocity(v, dir / "v.cxvel");
  CHECK(load_velocity(dir / "v.cxvel") == v);

  const auto mask = testutil::random_mask(d.nt, d.nx, rng);
  save_mask(mask, dir / "m.cxmask");
  CHECK(load_mask(dir / "m.cxmask") == mask);

  KSpaceData y(d, 3, mask);
  std::normal_distribution<double> g;
  for (int t = 0; t < d.nt; ++t)
    for (int c = 0; c < 3; ++c)
      for (int x : mask.rows(t))
        for (int j = 0; j < d.ny; ++j) y(t, c, x, j) = Complex(g(rng), g(rng));
  save_kspace(y, dir / "k.cxksp");
  CHECK(load_kspace(dir / "k.cxksp") == y);

  const CoilMaps coils(testutil::random_complex({2, 8, 8}, rng));
  save_coils(coils, dir / "c.cxseq");
  CHECK(load_coils(dir / "c.cxseq") == coils);

  SpatialMask sm{8, 8, std::vector<std::uint8_t>(64)};
  for (std::size_t i = 0; i < 64; i += 3) sm.inside[i] = 1;
  save_spatial_mask(sm, dir / "sm.cxseq");
  CHECK(load_spatial_mask(dir / "sm.cxseq") == sm);
}

TEST_CASE("loader errors are distinct") {
  TempDir dir("grid_err");
  const auto p = dir / "bad.cxseq";

  write_raw(p, "CXSEQ1 1 2 2\n" + le_doubles({1, 2, 3}));
  CHECK(kind_of([&] { load_sequence(p); }) == ErrorKind::Format);
  CHECK(message_of([&] { load_sequence(p); }).find("payload length mismatch") != std::string::npos);

  write_raw(p, "CXSEQ1 1 2 2\n" + le_doubles({0, 0, 0, 0, 0, 0, 0, 0, 9}));
  CHECK(message_of([&] { load_sequence(p); }).find("payload length mismatch") != std::string::npos);

  write_raw(p, "CXSEQ1 1 1 2\n" + le_doubles({0, 0, 0, 0}));
  CHECK(kind_of([&] { load_sequence(p); }) == ErrorKind::Invariant);
  CHECK(message_of([&] { load_sequence(p); }).find("invariant violation: Nx ≥ 2") != std::string::npos);

  write_raw(p, "CXSEQ2 1 2 2\n" + le_doubles({0, 0, 0, 0, 0, 0, 0, 0}));
  CHECK(kind_of([&] { load_sequence(p); }) == ErrorKind::Format);
  write_raw(p, "CXSEQ1 1 x 2\n");
  CHECK(kind_of([&] { load_sequence(p); }) == ErrorKind::Format);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  write_raw(p, "CXSEQ1 1 2 2\n" + le_doubles({0, 0, nan, 0, 0, 0, 0, 0}));
  CHECK(kind_of([&] { load_sequence(p); }) == ErrorKind::NonFinite);
  write_raw(p, "CXSEQ1 1 2 2\n" + le_doubles({0, 0, 0, 0, 0, inf, 0, 0}));
  CHECK(kind_of([&] { load_sequence(p); }) == ErrorKind::NonFinite);

  CHECK(kind_of([&] { load_sequence(dir / "missing.cxseq"); }) == ErrorKind::Io);
  CHECK(message_of([&] { load_sequence(dir / "missing.cxseq"); }).find("missing.cxseq") != std::string::npos);
}

TEST_CASE("sampling mask invariants") {
  CHECK_THROWS_AS(SamplingMask(4, {{0, 0}}), Error);
  CHECK_THROWS_AS(SamplingMask(4, {{4}}), Error);
  CHECK_THROWS_AS(SamplingMask(4, {{-1}}), Error);
  const SamplingMask m(6, {{3, 1}, {}});
  CHECK(m.rows(0) == std::vector<int>{1, 3});
  CHECK(m.sampled(0, 3));
  CHECK_FALSE(m.sampled(0, 2));
  CHECK_FALSE(m.is_full());
  const auto full = SamplingMask::full(3, 10);
  CHECK(full.is_full());
  for (int t = 0; t < 3; ++t) {
    REQUIRE(full.rows(t).size() == 10);
    for (int x = 0; x < 10; ++x) CHECK(full.rows(t)[x] == x);
  }
}

TEST_CASE("k-space rejects samples on unsampled rows") {
  TempDir dir("grid_ksp");
  const SamplingMask mask(4, {{1, 2}});
  KSpaceData y(Dims{1, 4, 3}, 1, mask);
  CHECK_NOTHROW(y.check_mask_consistency());
  y(0, 0, 0, 1) = Complex(1, 0);
  CHECK_THROWS_AS(y.check_mask_consistency(), Error);
  save_kspace(y, dir / "k.cxksp");
  CHECK(kind_of([&] { load_kspace(dir / "k.cxksp"); }) == ErrorKind::Invariant);
  CHECK_THROWS_AS(KSpaceData(Dims{2, 4, 3}, 1, mask), Error);
  CHECK_THROWS_AS(KSpaceData(Dims{1, 4, 3}, 0, mask), Error);
}

TEST_CASE("velocity layout and flat view") {
  std::mt19937_64 rng(3);
  const Dims d{2, 3, 4};
  const auto vx = testutil::random_complex(d, rng);
  const auto vy = testutil::random_complex(d, rng);
  const VelocityField v(vx, vy);
  CHECK(v.vx_sequence() == vx);
  CHECK(v.vy_sequence() == vy);
  CHECK(v.flat().size() == 4 * d.size());
  CHECK(v.flat()[0] == vx[0].real());
  CHECK(v.flat()[1] == vx[0].imag());
  CHECK(v.flat()[2 * d.size()] == vy[0].real());
  CHECK_THROWS_AS(VelocityField(vx, ImageSequence(Dims{2, 3, 5})), Error);
}

TEST_CASE("coil rss") {
  Grid3<Complex> maps(Dims{2, 2, 2});
  maps(0, 0, 0) = Complex(3, 0);
  maps(1, 0, 0) = Complex(0, 4);
  const CoilMaps c(maps);
  CHECK(c.count() == 2);
  CHECK(c.rss()[0] == doctest::Approx(5.0));
  CHECK(c.rss()[1] == 0.0);
}

TEST_CASE("finite checks") {
  std::vector<double> a{1, 2, 3};
  CHECK(all_finite(std::span<const double>(a)));
  a[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(all_finite(std::span<const double>(a)));
  std::vector<Complex> z{{1, 2}, {0, std::numeric_limits<double>::quiet_NaN()}};
  CHECK_FALSE(all_finite(std::span<const Complex>(z)));
}
