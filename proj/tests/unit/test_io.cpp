#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/config_io.hpp"
#include "core/dataset.hpp"
#include "core/digest.hpp"
#include "core/error.hpp"
#include "core/flow_io.hpp"
#include "core/image_io.hpp"
#include "core/json_canon.hpp"
#include "core/rng.hpp"
#include "support.hpp"

using namespace d2turb;
using d2turb::testing::error_code_of;
using d2turb::testing::error_message_of;
using d2turb::testing::TempDir;

namespace {

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const fs::path kGolden = D2TURB_GOLDEN_DIR;

}  // namespace

TEST_CASE("D2FL layout") {
  TempDir dir("flow");
  const fs::path p = dir.path() / "zero.d2fl";
  write_flow(p, Grid<float>(2, 2, 2, 0.0f));
  const auto bytes = read_bytes(p);
  REQUIRE(bytes.size() == 52);
  CHECK(std::memcmp(bytes.data(), "D2FL", 4) == 0);
  const unsigned char header[16] = {1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0};
  CHECK(std::memcmp(bytes.data() + 4, header, 16) == 0);
  for (std::size_t i = 20; i < 52; ++i) CHECK(bytes[i] == 0);

  Grid<float> one(1, 1, 2, 0.0f);
  one(0, 0, 0) = 1.5f;
  const auto enc = encode_flow(one);
  REQUIRE(enc.size() == 28);
  CHECK(enc[20] == 0x00);
  CHECK(enc[21] == 0x00);
  CHECK(enc[22] == 0xC0);
  CHECK(enc[23] == 0x3F);
}

TEST_CASE("D2FL matches the golden file") {
  Grid<float> f(2, 3, 2);
  const float v[2][3][2] = {{{1.5f, -0.25f}, {0.0f, 2.0f}, {-3.75f, 0.125f}},
                            {{1e-7f, -1e-7f}, {65504.0f, -0.5f}, {0.1f, 7.0f}}};
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 3; ++x) f(y, x, 0) = v[y][x][0], f(y, x, 1) = v[y][x][1];
  const auto golden = read_bytes(kGolden / "flow_2x3.d2fl");
  CHECK(encode_flow(f) == golden);
  CHECK(read_flow(kGolden / "flow_2x3.d2fl") == f);
  const FlowFileHeader h = read_flow_header(kGolden / "flow_2x3.d2fl");
  CHECK(h.height == 2);
  CHECK(h.width == 3);
}

TEST_CASE("D2FL randomized round trip") {
  TempDir dir("flowrt");
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    const std::size_t h = 1 + rng.next_u64() % 40, w = 1 + rng.next_u64() % 40;
    Grid<float> f(h, w, 2);
    for (float& x : f.values()) x = static_cast<float>((rng.uniform() - 0.5) * std::pow(10.0, rng.uniform() * 8 - 4));
    const fs::path p = dir.path() / "r.d2fl";
    write_flow(p, f);
    CHECK(read_flow(p) == f);
    CHECK(fs::file_size(p) == 20 + h * w * 8);
  }
}

TEST_CASE("D2FL rejects malformed files with named errors") {
  TempDir dir("flowbad");
  const fs::path p = dir.path() / "bad.d2fl";
  auto good = encode_flow(Grid<float>(3, 3, 2, 1.0f));

  auto bytes = good;
  bytes.resize(bytes.size() - 5);
  write_bytes(p, bytes);
  CHECK(error_code_of([&] { read_flow(p); }) == ErrorCode::Format);
  const std::string msg = error_message_of([&] { read_flow(p); });
  CHECK(msg.find("truncated") != std::string::npos);
  CHECK(msg.find(std::to_string(good.size())) != std::string::npos);
  CHECK(msg.find(std::to_string(bytes.size())) != std::string::npos);

  bytes = good;
  bytes[0] = 'X';
  write_bytes(p, bytes);
  CHECK(error_message_of([&] { read_flow(p); }).find("bad magic") != std::string::npos);

  bytes = good;
  bytes[4] = 2;
  write_bytes(p, bytes);
  CHECK(error_message_of([&] { read_flow(p); }).find("unsupported version") != std::string::npos);

  bytes = good;
  bytes[16] = 3;
  write_bytes(p, bytes);
  CHECK(error_message_of([&] { read_flow(p); }).find("bad channel count") != std::string::npos);

  bytes = std::vector<unsigned char>(good.begin(), good.begin() + 10);
  write_bytes(p, bytes);
  CHECK(error_message_of([&] { read_flow(p); }).find("truncated") != std::string::npos);

  bytes = good;
  bytes.push_back(0);
  write_bytes(p, bytes);
  CHECK(error_code_of([&] { read_flow(p); }) == ErrorCode::Format);

  CHECK(error_code_of([&] { read_flow(dir.path() / "missing.d2fl"); }) == ErrorCode::Io);
  Grid<float> nan(2, 2, 2, 0.0f);
  nan(1, 1, 1) = NAN;
  CHECK(error_code_of([&] { write_flow(p, nan); }) == ErrorCode::InvalidInput);
  CHECK(error_code_of([&] { write_flow(dir.path() / "no" / "such" / "dir.d2fl", Grid<float>(1, 1, 2, 0.0f)); }) ==
        ErrorCode::Io);
}

TEST_CASE("PNG encode and decode") {
  TempDir dir("png");
  SUBCASE("8-bit RGB round trip is pixel identical") {
    Image img(5, 7, 3);
    Rng rng(2);
    for (float& v : img.values()) v = static_cast<float>(rng.next_u64() % 256) / 255.0f;
    write_png(dir.path() / "a.png", img);
    const DecodedImage d = read_png(dir.path() / "a.png");
    CHECK(d.bit_depth == 8);
    CHECK(d.pixels.channels() == 3);
    write_png(dir.path() / "b.png", d.pixels);
    CHECK(read_png(dir.path() / "b.png").pixels == d.pixels);
    for (std::size_t i = 0; i < img.size(); ++i)
      CHECK(std::lround(d.pixels.values()[i] * 255.0f) == std::lround(img.values()[i] * 255.0f));
  }
  SUBCASE("rounding and normalisation") {
    CHECK(quantize(0.5f, 255) == 128);
    CHECK(quantize(1.0f, 65535) == 65535);
    CHECK(quantize(-0.2f, 255) == 0);
    CHECK(quantize(1.7f, 255) == 255);
    Image half(1, 1, 1, 0.5f);
    write_png(dir.path() / "h.png", half);
    CHECK(read_gray_image(dir.path() / "h.png")(0, 0, 0) == doctest::Approx(128.0 / 255.0));
    Image full(2, 2, 1, 1.0f);
    write_png(dir.path() / "d16.png", full, 16);
    const DecodedImage d = read_png(dir.path() / "d16.png");
    CHECK(d.bit_depth == 16);
    CHECK(d.pixels(1, 1, 0) == 1.0f);
    // gray replicates to RGB for the scene reader
    const Image rgb = read_rgb_image(dir.path() / "h.png");
    CHECK(rgb.channels() == 3);
    CHECK(rgb(0, 0, 2) == rgb(0, 0, 0));
    CHECK(error_code_of([&] { read_gray_image(dir.path() / "missing.png"); }) == ErrorCode::Io);
  }
  SUBCASE("clamping is counted") {
    Image img(1, 3, 1, 0.5f);
    img(0, 0, 0) = -1.0f;
    img(0, 2, 0) = 2.0f;
    CHECK(write_png(dir.path() / "c.png", img) == 2);
  }
  SUBCASE("RGB is not accepted as depth, garbage is a format error") {
    write_png(dir.path() / "rgb.png", Image(3, 3, 3, 0.2f));
    CHECK(error_code_of([&] { read_gray_image(dir.path() / "rgb.png"); }) == ErrorCode::Format);
    write_bytes(dir.path() / "junk.png", {'n', 'o', 't', 'p', 'n', 'g', 0, 0, 0, 0, 0, 0});
    CHECK(error_code_of([&] { read_png(dir.path() / "junk.png"); }) == ErrorCode::Format);
  }
}

TEST_CASE("canonical JSON") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1.0");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(1e-20) == "9.9999999999999995e-21");
  CHECK(error_code_of([] { format_double(INFINITY); }) == ErrorCode::InvalidInput);
  Json j = {{"b", 1}, {"a", Json::array({1.5, "x"})}, {"c", Json::object()}};
  CHECK(canonical_json(j) == "{\n  \"a\": [\n    1.5,\n    \"x\"\n  ],\n  \"b\": 1,\n  \"c\": {}\n}\n");
  CHECK(error_code_of([] { parse_json("{", "t"); }) == ErrorCode::Format);
}

TEST_CASE("meta.json matches the golden file") {
  MetadataRecord m;
  m.sample_id = "00007_garden";
  m.source_id = "garden";
  m.seed = 12345678901234567890ULL;
  m.d_over_r0 = 2.25;
  m.category = StrengthCategory::Medium;
  m.path_length_m = 1000.0;
  m.baseline_offset = 0.5;
  m.z_max_m = 1000.0;
  m.tilt_rms_px = 0.1;
  m.kernel_size = 33;
  m.psf_grid_y = 8;
  m.psf_grid_x = 6;
  m.flat_field_mode = false;
  m.engine_version = "0.1.0";
  m.height = 256;
  m.width = 320;
  m.psf_max_energy_outside_crop = 0.0;
  m.flow_hole_count = 3;
  m.files = {{"clean.png", sha256_hex(std::string_view("clean"))},
             {"flow_bwd.d2fl", sha256_hex(std::string_view("flow"))},
             {"tilt.png", sha256_hex(std::string_view("tilt"))},
             {"turb.png", sha256_hex(std::string_view("turb"))}};
  m.content_digest = content_digest(m.files);
  const std::string golden = read_text(kGolden / "meta.json");
  CHECK(canonical_json(metadata_to_json(m)) == golden);

  const MetadataRecord back = metadata_from_json(parse_json(golden, "golden"));
  CHECK(back.seed == m.seed);
  CHECK(back.tilt_rms_px == m.tilt_rms_px);
  CHECK(back.files == m.files);
  CHECK(back.content_digest == m.content_digest);
  CHECK(canonical_json(metadata_to_json(back)) == golden);

  Json broken = parse_json(golden, "golden");
  broken.erase("seed");
  CHECK(error_code_of([&] { metadata_from_json(broken); }) == ErrorCode::Format);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string_view("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("config parsing") {
  SUBCASE("empty file gives defaults") {
    const OpticalConfig c = parse_config_text("");
    CHECK(c == OpticalConfig{});
    CHECK(c.geometry.path_length_m == 1000.0);
    CHECK(c.zernike.kernel_size == 33);
  }
  SUBCASE("full file") {
    const OpticalConfig c = parse_config_text(R"(# comment
seed = 7
sample_count = 12
flat_field_mode = false

[geometry]
L = 800.0   # metres
s = 0.25
z_max = "scene"

[strength]
d_over_r0 = [2, 4.5]
sampling = "stratified"

[zernike]
modes = 21
pupil_resolution = 128
kernel_size = 21
grid = [4, 6]
correlation_length = inf

[tilt]
tilt_rms_px = "derived"
px_per_tilt_unit = 2.5
mode = "phase_gradient"

[output]
debug = true
depth_suffix = "-d"
)");
    CHECK(c.global_seed == 7);
    CHECK(c.sample_count == 12);
    CHECK(c.geometry.path_length_m == 800.0);
    CHECK(c.geometry.z_max_mode == ZmaxMode::Scene);
    CHECK(c.strength.d_over_r0_min == 2.0);
    CHECK(c.strength.sampling == StrengthSampling::Stratified);
    CHECK(c.zernike.grid_x == 6);
    CHECK(std::isinf(c.zernike.correlation_length));
    CHECK_FALSE(c.tilt.tilt_rms_px.has_value());
    CHECK(c.tilt.mode == TiltFieldMode::PhaseGradient);
    CHECK(c.output.debug);
    CHECK(c.output.depth_suffix == "-d");
    CHECK(parse_config_text(serialize_config(c)) == c);
  }
  SUBCASE("semantic violations name the field") {
    const std::string msg = error_message_of([] { parse_config_text("[geometry]\ns = 1.5\n"); });
    CHECK(msg.find("geometry.s") != std::string::npos);
    CHECK(msg.find("(0,1)") != std::string::npos);
    CHECK(error_code_of([] { parse_config_text("[geometry]\ns = 1.5\n"); }) == ErrorCode::Config);
    CHECK(error_message_of([] { parse_config_text("[zernike]\nkernel_sise = 3\n"); }).find("kernel_sise") != std::string::npos);
    CHECK(error_code_of([] { parse_config_text("[zernike]\nkernel_size = 32\n"); }) == ErrorCode::Config);
    CHECK(error_code_of([] { parse_config_text("[bogus]\n"); }) == ErrorCode::Config);
    CHECK(error_code_of([] { parse_config_text("seed = \"x\"\n"); }) == ErrorCode::Config);
    CHECK(error_code_of([] { parse_config_text("[strength]\nd_over_r0 = [4, 2]\n"); }) == ErrorCode::Config);
  }
  SUBCASE("syntax errors carry the line number") {
    const std::string msg = error_message_of([] { parse_config_text("seed = 1\n\n[geometry\n", "c.toml"); });
    CHECK(msg.find("c.toml:3") != std::string::npos);
    CHECK(error_code_of([] { parse_config_text("seed = 1\nseed 2\n"); }) == ErrorCode::Parse);
    CHECK(error_code_of([] { parse_config_text("seed = 1\nseed = 2\n"); }) == ErrorCode::Parse);
    CHECK(error_code_of([] { parse_config_text("x = \"open\n"); }) == ErrorCode::Parse);
  }
}

TEST_CASE("randomized config round trip") {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    OpticalConfig c;
    c.global_seed = rng.next_u64();
    c.sample_count = 1 + rng.next_u64() % 1000;
    c.flat_field_mode = rng.uniform() < 0.5;
    c.geometry.path_length_m = 1.0 + rng.uniform() * 5000.0;
    c.geometry.baseline_offset = 0.001 + 0.998 * rng.uniform();
    const double z = rng.uniform();
    c.geometry.z_max_mode = z < 0.33 ? ZmaxMode::Path : (z < 0.66 ? ZmaxMode::Scene : ZmaxMode::Fixed);
    if (c.geometry.z_max_mode == ZmaxMode::Fixed) c.geometry.z_max_m = c.geometry.path_length_m * (1.0 + rng.uniform());
    c.strength.d_over_r0_min = rng.uniform() * 3.0;
    c.strength.d_over_r0_max = c.strength.d_over_r0_min + rng.uniform() * 4.0;
    c.strength.sampling = rng.uniform() < 0.5 ? StrengthSampling::Uniform : StrengthSampling::Stratified;
    c.zernike.modes = 3 + static_cast<int>(rng.next_u64() % 60);
    c.zernike.pupil_resolution = 64 + static_cast<int>(rng.next_u64() % 200);
    c.zernike.kernel_size = 1 + 2 * static_cast<int>(rng.next_u64() % 16);
    c.zernike.grid_y = 2 + static_cast<int>(rng.next_u64() % 10);
    c.zernike.grid_x = 2 + static_cast<int>(rng.next_u64() % 10);
    c.zernike.correlation_length = rng.uniform() < 0.2 ? INFINITY : rng.uniform() * 3.0;
    if (rng.uniform() < 0.5) c.tilt.tilt_rms_px = rng.uniform() * 3.0;
    c.tilt.px_per_tilt_unit = rng.uniform() * 4.0;
    c.tilt.corr_length_px = 1.0 + rng.uniform() * 200.0;
    c.tilt.inner_scale_px = rng.uniform() * 20.0;
    c.tilt.spectral_exponent = -1.0 - rng.uniform() * 4.0;
    c.tilt.mode = rng.uniform() < 0.5 ? TiltFieldMode::Independent : TiltFieldMode::PhaseGradient;
    c.output.persist_blur = rng.uniform() < 0.5;
    c.output.debug = rng.uniform() < 0.5;
    c.output.depth_suffix = rng.uniform() < 0.5 ? "_depth" : "-z \"q\"";
    REQUIRE_NOTHROW(c.validate());
    CHECK(parse_config_text(serialize_config(c)) == c);
  }
}
