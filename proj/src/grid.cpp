#include "cineflow/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cineflow {

std::string to_string(const Dims& d) {
  return std::to_string(d.nt) + "x" + std::to_string(d.nx) + "x" + std::to_string(d.ny);
}

void check_sequence_dims(const Dims& d) {
  if (d.nt < 1) throw Error(ErrorKind::Invariant, "invariant violation: Nt ≥ 1");
  if (d.nx < 2) throw Error(ErrorKind::Invariant, "invariant violation: Nx ≥ 2");
  if (d.ny < 2) throw Error(ErrorKind::Invariant, "invariant violation: Ny ≥ 2");
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorKind::DimMismatch,
                std::string(what) + ": dims " + to_string(a) + " vs " + to_string(b));
  }
}

bool all_finite(std::span<const Complex> v) {
  return std::all_of(v.begin(), v.end(),
                     [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

VelocityField::VelocityField(const ImageSequence& vx, const ImageSequence& vy) : VelocityField(vx.dims()) {
  require_same_dims(vx.dims(), vy.dims(), "velocity components");
  std::copy(vx.values().begin(), vx.values().end(), this->vx().begin());
  std::copy(vy.values().begin(), vy.values().end(), this->vy().begin());
}

ImageSequence VelocityField::vx_sequence() const {
  return ImageSequence(dims_, std::vector<Complex>(vx().begin(), vx().end()));
}

ImageSequence VelocityField::vy_sequence() const {
  return ImageSequence(dims_, std::vector<Complex>(vy().begin(), vy().end()));
}

SamplingMask::SamplingMask(int nx_full, std::vector<std::vector<int>> rows)
    : nx_full_(nx_full), rows_(std::move(rows)) {
  if (nx_full_ < 1) throw Error(ErrorKind::Invariant, "invariant violation: Nx_full ≥ 1");
  lookup_.assign(rows_.size() * static_cast<std::size_t>(nx_full_), 0);
  for (std::size_t t = 0; t < rows_.size(); ++t) {
    auto& r = rows_[t];
    std::sort(r.begin(), r.end());
    if (std::adjacent_find(r.begin(), r.end()) != r.end()) {
      throw Error(ErrorKind::Invariant, "invariant violation: duplicate mask row in frame " + std::to_string(t));
    }
    for (int row : r) {
      if (row < 0 || row >= nx_full_) {
        throw Error(ErrorKind::Invariant, "invariant violation: mask row " + std::to_string(row) +
                                              " outside [0, " + std::to_string(nx_full_) + ")");
      }
      lookup_[t * nx_full_ + row] = 1;
    }
  }
}

SamplingMask SamplingMask::full(int nt, int nx_full) {
  std::vector<int> all(nx_full);
  for (int i = 0; i < nx_full; ++i) all[i] = i;
  return SamplingMask(nx_full, std::vector<std::vector<int>>(nt, all));
}

bool SamplingMask::is_full() const {
  return std::all_of(rows_.begin(), rows_.end(),
                     [&](const std::vector<int>& r) { return static_cast<int>(r.size()) == nx_full_; });
}

CoilMaps::CoilMaps(Grid3<Complex> maps) : maps_(std::move(maps)) {
  if (maps_.dims().nt < 1) throw Error(ErrorKind::Invariant, "invariant violation: Nc ≥ 1");
}

std::vector<double> CoilMaps::rss() const {
  std::vector<double> out(maps_.dims().frame_size(), 0.0);
  for (int c = 0; c < count(); ++c) {
    auto m = coil(c);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::norm(m[i]);
  }
  for (double& v : out) v = std::sqrt(v);
  return out;
}

KSpaceData::KSpaceData(Dims dims, int coils, SamplingMask mask)
    : KSpaceData(dims, coils, std::move(mask),
                 std::vector<Complex>(static_cast<std::size_t>(coils) * dims.size())) {}

KSpaceData::KSpaceData(Dims dims, int coils, SamplingMask mask, std::vector<Complex> samples)
    : dims_(dims), coils_(coils), mask_(std::move(mask)), samples_(std::move(samples)) {
  if (coils_ < 1) throw Error(ErrorKind::Invariant, "invariant violation: Nc ≥ 1");
  if (mask_.nt() != dims_.nt || mask_.nx_full() != dims_.nx) {
    throw Error(ErrorKind::DimMismatch, "mask shape does not match k-space dims " + to_string(dims_));
  }
  if (samples_.size() != static_cast<std::size_t>(coils_) * dims_.size()) {
    throw Error(ErrorKind::DimMismatch, "k-space payload does not match dims");
  }
}

void KSpaceData::check_mask_consistency() const {
  for (int t = 0; t < dims_.nt; ++t) {
    for (int c = 0; c < coils_; ++c) {
      for (int x = 0; x < dims_.nx; ++x) {
        if (mask_.sampled(t, x)) continue;
        for (int y = 0; y < dims_.ny; ++y) {
          if ((*this)(t, c, x, y) != Complex{}) {
            throw Error(ErrorKind::Invariant,
                        "invariant violation: nonzero sample on unsampled row " + std::to_string(x) +
                            " of frame " + std::to_string(t));
          }
        }
      }
    }
  }
}

std::size_t SpatialMask::count() const {
  return static_cast<std::size_t>(std::count_if(inside.begin(), inside.end(), [](auto b) { return b != 0; }));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void append_le_doubles(std::string& out, std::span<const double> values) {
  const std::size_t offset = out.size();
  out.resize(offset + values.size() * sizeof(double));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data() + offset, values.data(), values.size() * sizeof(double));
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto bits = std::bit_cast<std::uint64_t>(values[i]);
      for (int b = 0; b < 8; ++b) out[offset + 8 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
}

void read_le_doubles(const char* src, std::span<double> dst) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst.data(), src, dst.size() * sizeof(double));
  } else {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(src[8 * i + b])) << (8 * b);
      }
      dst[i] = std::bit_cast<double>(bits);
    }
  }
}

// Cursor over an in-memory file.
class Reader {
 public:
  Reader(std::string bytes, std::filesystem::path path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  // Reads one header line and returns its whitespace-separated tokens.
  std::vector<std::string> header(const std::string& magic, std::size_t n_fields) {
    const auto nl = bytes_.find('\n', pos_);
    if (nl == std::string::npos) fail(ErrorKind::Format, "malformed header: missing newline");
    std::istringstream line(bytes_.substr(pos_, nl - pos_));
    pos_ = nl + 1;
    std::vector<std::string> tokens;
    for (std::string tok; line >> tok;) tokens.push_back(tok);
    if (tokens.empty() || tokens[0] != magic) fail(ErrorKind::Format, "malformed header: expected " + magic);
    if (tokens.size() != n_fields + 1) fail(ErrorKind::Format, "malformed header: wrong field count");
    return {tokens.begin() + 1, tokens.end()};
  }

  int integer(const std::string& tok) {
    std::size_t used = 0;
    long value = 0;
    try {
      value = std::stol(tok, &used);
    } catch (const std::exception&) {
      fail(ErrorKind::Format, "malformed header: bad integer '" + tok + "'");
    }
    if (used != tok.size()) fail(ErrorKind::Format, "malformed header: bad integer '" + tok + "'");
    return static_cast<int>(value);
  }

  std::string line() {
    const auto nl = bytes_.find('\n', pos_);
    if (nl == std::string::npos) fail(ErrorKind::Format, "malformed mask: missing line");
    std::string out = bytes_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return out;
  }

  void doubles(std::span<double> dst) {
    const std::size_t need = dst.size() * sizeof(double);
    if (bytes_.size() - pos_ < need) fail(ErrorKind::Format, "payload length mismatch");
    read_le_doubles(bytes_.data() + pos_, dst);
    pos_ += need;
    if (!all_finite(std::span<const double>(dst.data(), dst.size()))) {
      fail(ErrorKind::NonFinite, "non-finite payload");
    }
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  void expect_end(const char* what) {
    if (remaining() != 0) fail(ErrorKind::Format, std::string(what));
  }

  [[noreturn]] void fail(ErrorKind kind, const std::string& msg) const {
    throw Error(kind, path_.string() + ": " + msg);
  }

 private:
  std::string bytes_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

std::string sequence_header(const Dims& d) {
  return "CXSEQ1 " + std::to_string(d.nt) + " " + std::to_string(d.nx) + " " + std::to_string(d.ny) + "\n";
}

void append_sequence(std::string& out, const Dims& d, std::span<const Complex> values) {
  out += sequence_header(d);
  append_le_doubles(out, {reinterpret_cast<const double*>(values.data()), 2 * values.size()});
}

ImageSequence read_sequence_block(Reader& in) {
  auto f = in.header("CXSEQ1", 3);
  Dims d{in.integer(f[0]), in.integer(f[1]), in.integer(f[2])};
  try {
    check_sequence_dims(d);
  } catch (const Error& e) {
    in.fail(e.kind(), e.what());
  }
  ImageSequence seq(d);
  in.doubles(seq.flat());
  return seq;
}

std::string mask_text(const SamplingMask& mask) {
  std::string out = "CXMASK1 " + std::to_string(mask.nt()) + " " + std::to_string(mask.nx_full()) + "\n";
  for (int t = 0; t < mask.nt(); ++t) {
    const auto& rows = mask.rows(t);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(rows[i]);
    }
    out += '\n';
  }
  return out;
}

SamplingMask read_mask_block(Reader& in) {
  auto f = in.header("CXMASK1", 2);
  const int nt = in.integer(f[0]);
  const int nx_full = in.integer(f[1]);
  if (nt < 1 || nx_full < 1) in.fail(ErrorKind::Invariant, "invariant violation: mask dims must be positive");
  std::vector<std::vector<int>> rows(nt);
  for (int t = 0; t < nt; ++t) {
    std::istringstream line(in.line());
    for (std::string tok; line >> tok;) rows[t].push_back(in.integer(tok));
  }
  try {
    return SamplingMask(nx_full, std::move(rows));
  } catch (const Error& e) {
    in.fail(e.kind(), e.what());
  }
}

Reader open(const std::filesystem::path& path) { return Reader(read_file(path), path); }

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void save_sequence(const ImageSequence& seq, const std::filesystem::path& path) {
  std::string out;
  append_sequence(out, seq.dims(), seq.values());
  write_file_atomic(path, out);
}

ImageSequence load_sequence(const std::filesystem::path& path) {
  auto in = open(path);
  auto seq = read_sequence_block(in);
  in.expect_end("payload length mismatch");
  return seq;
}

void save_velocity(const VelocityField& v, const std::filesystem::path& path) {
  std::string out;
  append_sequence(out, v.dims(), v.vx());
  append_sequence(out, v.dims(), v.vy());
  write_file_atomic(path, out);
}

VelocityField load_velocity(const std::filesystem::path& path) {
  auto in = open(path);
  auto vx = read_sequence_block(in);
  auto vy = read_sequence_block(in);
  in.expect_end("payload length mismatch");
  if (!(vx.dims() == vy.dims())) in.fail(ErrorKind::DimMismatch, "velocity components differ in dims");
  return VelocityField(vx, vy);
}

void save_mask(const SamplingMask& mask, const std::filesystem::path& path) {
  write_file_atomic(path, mask_text(mask));
}

SamplingMask load_mask(const std::filesystem::path& path) {
  auto in = open(path);
  auto mask = read_mask_block(in);
  in.expect_end("trailing bytes after mask");
  return mask;
}

void save_kspace(const KSpaceData& y, const std::filesystem::path& path) {
  const auto& d = y.dims();
  std::string out = "CXKSP1 " + std::to_string(d.nt) + " " + std::to_string(y.coils()) + " " +
                    std::to_string(d.nx) + " " + std::to_string(d.ny) + "\n";
  append_le_doubles(out, {reinterpret_cast<const double*>(y.values().data()), 2 * y.values().size()});
  out += mask_text(y.mask());
  write_file_atomic(path, out);
}

KSpaceData load_kspace(const std::filesystem::path& path) {
  auto in = open(path);
  auto f = in.header("CXKSP1", 4);
  Dims d{in.integer(f[0]), in.integer(f[2]), in.integer(f[3])};
  const int nc = in.integer(f[1]);
  try {
    check_sequence_dims(d);
  } catch (const Error& e) {
    in.fail(e.kind(), e.what());
  }
  if (nc < 1) in.fail(ErrorKind::Invariant, "invariant violation: Nc ≥ 1");
  std::vector<Complex> samples(static_cast<std::size_t>(nc) * d.size());
  in.doubles({reinterpret_cast<double*>(samples.data()), 2 * samples.size()});
  auto mask = read_mask_block(in);
  in.expect_end("trailing bytes after k-space mask");
  try {
    KSpaceData y(d, nc, std::move(mask), std::move(samples));
    y.check_mask_consistency();
    return y;
  } catch (const Error& e) {
    in.fail(e.kind(), e.what());
  }
}

void save_coils(const CoilMaps& coils, const std::filesystem::path& path) { save_sequence(coils.maps(), path); }

CoilMaps load_coils(const std::filesystem::path& path) { return CoilMaps(load_sequence(path)); }

void save_spatial_mask(const SpatialMask& mask, const std::filesystem::path& path) {
  ImageSequence seq(Dims{1, mask.nx, mask.ny});
  for (std::size_t i = 0; i < mask.inside.size(); ++i) seq[i] = mask.inside[i] ? 1.0 : 0.0;
  save_sequence(seq, path);
}

SpatialMask load_spatial_mask(const std::filesystem::path& path) {
  auto seq = load_sequence(path);
  if (seq.dims().nt != 1) throw Error(ErrorKind::Format, path.string() + ": spatial mask must have Nt = 1");
  SpatialMask mask{seq.dims().nx, seq.dims().ny, std::vector<std::uint8_t>(seq.size())};
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] != Complex{0.0} && seq[i] != Complex{1.0}) {
      throw Error(ErrorKind::Format, path.string() + ": spatial mask values must be 0 or 1");
    }
    mask.inside[i] = seq[i] == Complex{1.0} ? 1 : 0;
  }
  return mask;
}

}  // namespace cineflow
