#include "speckle/frame_stack.hpp"

#include <zlib.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "speckle/error.hpp"

namespace speckle {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'S', 'P', 'K', 'L'};
constexpr std::size_t kHeaderSize = 4 + 2 + 4 + 4 + 4 + 1 + 4;

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > in_.size()) {
      throw FormatError(ErrorKind::TruncatedFile,
                        std::string("file ends inside ") + what + " (need " +
                            std::to_string(pos_ + n) + " bytes, have " +
                            std::to_string(in_.size()) + ")",
                        in_.size());
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  const std::uint8_t* take(std::size_t n, const char* what) {
    need(n, what);
    const std::uint8_t* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t position() const noexcept { return pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

const char* kind_name(SourceKind kind) {
  return kind == SourceKind::OneSource ? "one" : "two";
}

const char* polarization_name(PolarizationMode mode) {
  return mode == PolarizationMode::SinglePol ? "single" : "unpolarized";
}

std::string take_key(std::map<std::string, std::string>& kv, const std::string& key,
                     const std::string& fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::string v = std::move(it->second);
  kv.erase(it);
  return v;
}

double take_double(std::map<std::string, std::string>& kv, const std::string& key,
                   double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const double v = parse_double(it->second);
  kv.erase(it);
  return v;
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::InvalidArgument, "not an unsigned integer: '" + text + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error(ErrorKind::InvalidArgument, "cannot format number");
  return std::string(buf.data(), ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::InvalidArgument, "not a number: '" + text + "'");
  }
  return v;
}

void FrameStack::validate() const {
  if (frames.empty()) return;
  const Frame& first = frames.front();
  for (const Frame& f : frames) {
    require(f.pixels.same_shape(first.pixels), ErrorKind::ShapeMismatch,
            "frames differ in shape");
    require(f.bit_depth == first.bit_depth, ErrorKind::ShapeMismatch,
            "frames differ in bit depth");
    const auto top = static_cast<std::uint16_t>((1u << f.bit_depth) - 1u);
    for (std::uint16_t v : f.pixels) {
      require(v <= top, ErrorKind::InvalidArgument, "pixel value exceeds bit depth");
    }
  }
  require(static_cast<std::size_t>(meta.detector.width_px) == first.pixels.cols() &&
              static_cast<std::size_t>(meta.detector.height_px) == first.pixels.rows() &&
              meta.detector.bit_depth == first.bit_depth,
          ErrorKind::ShapeMismatch, "detector metadata disagrees with the pixel data");
}

std::map<std::string, std::string> meta_to_map(const StackMeta& meta,
                                               const std::vector<Frame>& frames) {
  std::map<std::string, std::string> kv = meta.extra;
  kv["acquisition.exposure_time_s"] = format_double(meta.exposure_time_s);
  kv["acquisition.frame_interval_s"] = format_double(meta.frame_interval_s);
  kv["created_utc"] = meta.created_utc;
  kv["detector.bit_depth"] = std::to_string(meta.detector.bit_depth);
  kv["detector.distance_z_m"] = format_double(meta.detector.distance_z);
  kv["detector.gain"] = format_double(meta.detector.gain);
  kv["detector.height_px"] = std::to_string(meta.detector.height_px);
  kv["detector.pixel_pitch_m"] = format_double(meta.detector.pixel_pitch);
  kv["detector.width_px"] = std::to_string(meta.detector.width_px);
  kv["fiber.core_radius_m"] = format_double(meta.fiber.core_radius);
  kv["fiber.numerical_aperture"] = format_double(meta.fiber.numerical_aperture);
  kv["fiber.wavelength_m"] = format_double(meta.fiber.wavelength);
  if (meta.fiber.refractive_indices) {
    kv["fiber.n1"] = format_double(meta.fiber.refractive_indices->core);
    kv["fiber.n2"] = format_double(meta.fiber.refractive_indices->cladding);
  }
  kv["geometry.aperture_radius_m"] = format_double(meta.geometry.aperture_radius);
  kv["geometry.kind"] = kind_name(meta.geometry.kind);
  if (meta.geometry.lattice_pitch) {
    kv["geometry.lattice_pitch_m"] = format_double(*meta.geometry.lattice_pitch);
  }
  kv["geometry.separation_m"] = format_double(meta.geometry.separation);
  kv["master_seed"] = std::to_string(meta.master_seed);
  kv["noise.offset"] = format_double(meta.noise.offset);
  kv["noise.read_noise_sigma"] = format_double(meta.noise.read_noise_sigma);
  kv["polarization"] = polarization_name(meta.polarization);

  std::string indices;
  std::string saturated;
  saturated.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0) indices += ',';
    indices += std::to_string(frames[i].exposure_index);
    saturated += frames[i].saturation_flag ? '1' : '0';
  }
  kv["frames.exposure_index"] = indices;
  kv["frames.saturated"] = saturated;
  return kv;
}

std::vector<std::uint8_t> encode_stack(const FrameStack& stack) {
  stack.validate();
  const auto kv = meta_to_map(stack.meta, stack.frames);
  std::string meta_text;
  for (const auto& [key, value] : kv) {
    require(key.find_first_of("=\n") == std::string::npos &&
                value.find('\n') == std::string::npos,
            ErrorKind::InvalidArgument, "metadata key/value contains a reserved character");
    meta_text += key;
    meta_text += '=';
    meta_text += value;
    meta_text += '\n';
  }

  const int bit_depth = stack.frames.empty() ? stack.meta.detector.bit_depth
                                             : stack.frames.front().bit_depth;
  const std::size_t width = stack.frames.empty() ? 0 : stack.width();
  const std::size_t height = stack.frames.empty() ? 0 : stack.height();
  const std::size_t sample_bytes = bit_depth <= 8 ? 1 : 2;

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + meta_text.size() +
              stack.frames.size() * width * height * sample_bytes + 4);
  Writer w(out);
  w.bytes(kMagic.data(), kMagic.size());
  w.u16(kStackFormatVersion);
  w.u32(static_cast<std::uint32_t>(width));
  w.u32(static_cast<std::uint32_t>(height));
  w.u32(static_cast<std::uint32_t>(stack.frames.size()));
  w.u8(static_cast<std::uint8_t>(bit_depth));
  w.u32(static_cast<std::uint32_t>(meta_text.size()));
  w.bytes(meta_text.data(), meta_text.size());
  for (const Frame& f : stack.frames) {
    for (std::uint16_t v : f.pixels) {
      if (sample_bytes == 1) {
        w.u8(static_cast<std::uint8_t>(v));
      } else {
        w.u16(v);
      }
    }
  }
  w.u32(crc32_of(out.data(), out.size()));
  return out;
}

FrameStack decode_stack(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  const std::uint8_t* magic = in.take(4, "magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), magic)) {
    throw FormatError(ErrorKind::BadMagic, "not an SPKL frame stack", 0);
  }
  const std::uint16_t version = in.u16("version");
  if (version != kStackFormatVersion) {
    throw FormatError(ErrorKind::VersionMismatch,
                      "format version " + std::to_string(version) + ", reader supports " +
                          std::to_string(kStackFormatVersion),
                      4);
  }
  const std::uint32_t width = in.u32("header");
  const std::uint32_t height = in.u32("header");
  const std::uint32_t count = in.u32("header");
  const int bit_depth = in.u8("header");
  const std::uint32_t meta_length = in.u32("header");
  if (bit_depth < 1 || bit_depth > 16) {
    throw FormatError(ErrorKind::InvalidArgument, "bit depth out of range", in.position() - 5);
  }
  const auto* meta_ptr = reinterpret_cast<const char*>(in.take(meta_length, "metadata block"));
  const std::string meta_text(meta_ptr, meta_length);

  const std::size_t sample_bytes = bit_depth <= 8 ? 1 : 2;
  const std::size_t frame_bytes = std::size_t{width} * height * sample_bytes;
  in.need(frame_bytes * count, "frame payload");
  const std::size_t payload_start = in.position();
  in.take(frame_bytes * count, "frame payload");
  const std::size_t crc_offset = in.position();
  const std::uint32_t stored_crc = in.u32("checksum");
  if (in.position() != bytes.size()) {
    throw FormatError(ErrorKind::InvalidArgument, "trailing bytes after checksum", in.position());
  }
  const std::uint32_t actual_crc = crc32_of(bytes.data(), crc_offset);
  if (stored_crc != actual_crc) {
    throw FormatError(ErrorKind::ChecksumMismatch, "CRC-32 mismatch", crc_offset);
  }

  std::map<std::string, std::string> kv;
  std::istringstream lines(meta_text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(ErrorKind::InvalidArgument, "metadata line without '='", kHeaderSize);
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  FrameStack stack;
  StackMeta& m = stack.meta;
  m.format_version = version;
  m.exposure_time_s = take_double(kv, "acquisition.exposure_time_s", 0.0);
  m.frame_interval_s = take_double(kv, "acquisition.frame_interval_s", 0.0);
  m.created_utc = take_key(kv, "created_utc", m.created_utc);
  m.detector.bit_depth = static_cast<int>(
      parse_u64(take_key(kv, "detector.bit_depth", std::to_string(bit_depth))));
  m.detector.distance_z = take_double(kv, "detector.distance_z_m", 0.0);
  m.detector.gain = take_double(kv, "detector.gain", 1.0);
  m.detector.height_px =
      static_cast<int>(parse_u64(take_key(kv, "detector.height_px", std::to_string(height))));
  m.detector.pixel_pitch = take_double(kv, "detector.pixel_pitch_m", 0.0);
  m.detector.width_px =
      static_cast<int>(parse_u64(take_key(kv, "detector.width_px", std::to_string(width))));
  m.fiber.core_radius = take_double(kv, "fiber.core_radius_m", 0.0);
  m.fiber.numerical_aperture = take_double(kv, "fiber.numerical_aperture", 0.0);
  m.fiber.wavelength = take_double(kv, "fiber.wavelength_m", 0.0);
  if (kv.count("fiber.n1") && kv.count("fiber.n2")) {
    m.fiber.refractive_indices =
        RefractiveIndices{take_double(kv, "fiber.n1", 0.0), take_double(kv, "fiber.n2", 0.0)};
  }
  m.geometry.aperture_radius = take_double(kv, "geometry.aperture_radius_m", 0.0);
  m.geometry.kind =
      take_key(kv, "geometry.kind", "one") == "two" ? SourceKind::TwoSources : SourceKind::OneSource;
  if (kv.count("geometry.lattice_pitch_m")) {
    m.geometry.lattice_pitch = take_double(kv, "geometry.lattice_pitch_m", 0.0);
  }
  m.geometry.separation = take_double(kv, "geometry.separation_m", 0.0);
  m.master_seed = parse_u64(take_key(kv, "master_seed", "0"));
  m.noise.offset = take_double(kv, "noise.offset", 0.0);
  m.noise.read_noise_sigma = take_double(kv, "noise.read_noise_sigma", 0.0);
  m.polarization = take_key(kv, "polarization", "single") == "unpolarized"
                       ? PolarizationMode::UnpolarizedSum
                       : PolarizationMode::SinglePol;
  const std::string indices = take_key(kv, "frames.exposure_index", "");
  const std::string saturated = take_key(kv, "frames.saturated", "");
  m.extra = std::move(kv);

  std::vector<std::uint64_t> exposure;
  if (!indices.empty()) {
    std::size_t start = 0;
    while (start <= indices.size()) {
      const auto comma = indices.find(',', start);
      const auto end = comma == std::string::npos ? indices.size() : comma;
      exposure.push_back(parse_u64(indices.substr(start, end - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }

  const std::uint8_t* p = bytes.data() + payload_start;
  stack.frames.resize(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    Frame& f = stack.frames[k];
    f.bit_depth = bit_depth;
    f.exposure_index = k < exposure.size() ? exposure[k] : k;
    f.saturation_flag = k < saturated.size() && saturated[k] == '1';
    f.pixels = Grid<std::uint16_t>(height, width);
    for (std::uint16_t& v : f.pixels) {
      if (sample_bytes == 1) {
        v = *p++;
      } else {
        v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
      }
    }
  }
  return stack;
}

void write_stack(const FrameStack& stack, const std::filesystem::path& path) {
  const auto bytes = encode_stack(stack);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path.string() + "' failed");
}

FrameStack read_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_stack(bytes);
}

}  // namespace speckle
