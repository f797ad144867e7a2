#include <doctest.h>

#include <filesystem>

#include "speckle/error.hpp"
#include "speckle/frame_stack.hpp"

using namespace speckle;

namespace {

FrameStack sample_stack(int bit_depth) {
  FrameStack s;
  s.meta.fiber = FiberSpec{100e-6, 0.39, 633e-9, std::nullopt};
  s.meta.geometry = SourceGeometry{SourceKind::TwoSources, 100e-6, 1e-3, 10e-6};
  s.meta.detector = DetectorSpec{0.2, 25e-6, 7, 5, bit_depth, 1.7};
  s.meta.noise = NoiseModel{2.0, 10.0};
  s.meta.polarization = PolarizationMode::UnpolarizedSum;
  s.meta.master_seed = 0xDEADBEEFCAFEULL;
  s.meta.created_utc = "2026-01-02T03:04:05Z";
  s.meta.frame_interval_s = 0.01;
  s.meta.exposure_time_s = 1e-3;
  s.meta.extra["note"] = "test stack";
  const int top = (1 << bit_depth) - 1;
  for (int f = 0; f < 3; ++f) {
    Frame fr;
    fr.bit_depth = bit_depth;
    fr.exposure_index = static_cast<std::uint64_t>(f + 10);
    fr.saturation_flag = f == 1;
    fr.pixels = Grid<std::uint16_t>(5, 7);
    for (std::size_t i = 0; i < fr.pixels.size(); ++i)
      fr.pixels.data()[i] = static_cast<std::uint16_t>((i * 37 + static_cast<std::size_t>(f) * 101) % static_cast<std::size_t>(top + 1));
    s.frames.push_back(fr);
  }
  return s;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no exception");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("stack round trip is bit exact for 8 and 12 bit data") {
  for (int depth : {8, 12}) {
    const FrameStack s = sample_stack(depth);
    const auto bytes = encode_stack(s);
    const FrameStack back = decode_stack(bytes);
    CHECK(back == s);
    CHECK(encode_stack(back) == bytes);
  }
  CHECK(encode_stack(sample_stack(8)).size() < encode_stack(sample_stack(12)).size());
}

TEST_CASE("stack file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "speckle_test_stack.spkl";
  const FrameStack s = sample_stack(8);
  write_stack(s, path);
  CHECK(read_stack(path) == s);
  std::filesystem::remove(path);
  CHECK(kind_of([&] { (void)read_stack(path); }) == ErrorKind::IoError);
}

TEST_CASE("corrupted stacks are rejected with the right error") {
  const auto good = encode_stack(sample_stack(8));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(kind_of([&] { (void)decode_stack(bad_magic); }) == ErrorKind::BadMagic);

  auto bad_version = good;
  bad_version[4] = 99;
  CHECK(kind_of([&] { (void)decode_stack(bad_version); }) == ErrorKind::VersionMismatch);

  auto flipped = good;
  flipped[good.size() - 10] ^= 0x01;
  CHECK(kind_of([&] { (void)decode_stack(flipped); }) == ErrorKind::ChecksumMismatch);

  const std::vector<std::uint8_t> truncated(good.begin(), good.begin() + static_cast<long>(good.size() / 2));
  try {
    (void)decode_stack(truncated);
    FAIL("expected TruncatedFile");
  } catch (const FormatError& e) {
    CHECK(e.kind() == ErrorKind::TruncatedFile);
    CHECK(e.byte_offset() == truncated.size());
  }
  CHECK(kind_of([&] { (void)decode_stack({}); }) == ErrorKind::TruncatedFile);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(kind_of([&] { (void)decode_stack(trailing); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("stack validation catches inconsistent frames") {
  FrameStack s = sample_stack(8);
  s.frames[1].pixels = Grid<std::uint16_t>(4, 7);
  CHECK(kind_of([&] { s.validate(); }) == ErrorKind::ShapeMismatch);
  s = sample_stack(8);
  s.frames[0].pixels(0, 0) = 300;
  CHECK(kind_of([&] { s.validate(); }) == ErrorKind::InvalidArgument);
  s = sample_stack(8);
  s.meta.detector.width_px = 8;
  CHECK(kind_of([&] { (void)encode_stack(s); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("double formatting round trips exactly") {
  for (double v : {0.0, 1.0, 633e-9, 0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) {
    CHECK(parse_double(format_double(v)) == v);
  }
}
