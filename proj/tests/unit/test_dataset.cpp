#include <doctest.h>

#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/dataset.hpp"
#include "core/degrade.hpp"
#include "core/digest.hpp"
#include "core/error.hpp"
#include "core/flow_io.hpp"
#include "core/image_io.hpp"
#include "core/json_canon.hpp"
#include "support.hpp"

using namespace d2turb;
using d2turb::testing::error_code_of;
using d2turb::testing::smooth_image;
using d2turb::testing::TempDir;

namespace {

OpticalConfig small_config(std::size_t samples) {
  OpticalConfig c;
  c.zernike.pupil_resolution = 64;
  c.zernike.kernel_size = 9;
  c.zernike.grid_y = 3;
  c.zernike.grid_x = 3;
  c.sample_count = samples;
  c.global_seed = 5;
  return c;
}

CleanScene ramp_scene(std::size_t h, std::size_t w, double phase, const std::string& id) {
  CleanScene s{smooth_image(h, w, phase), DepthMap{Grid<double>(h, w)}, id};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) s.depth.values(y, x) = static_cast<double>(y) / double(h - 1);
  return s;
}

std::vector<SceneInput> memory_scenes(int n) {
  std::vector<SceneInput> out;
  for (int i = 0; i < n; ++i) {
    const std::string id = "scene" + std::to_string(i);
    out.push_back({id, [i, id] { return ramp_scene(40, 48, 0.5 * i, id); }});
  }
  return out;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void flip_byte(const fs::path& p, std::size_t offset) {
  std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
  f.seekg(static_cast<std::streamoff>(offset));
  char c = 0;
  f.get(c);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(static_cast<char>(c ^ 0x5A));
}

}  // namespace

TEST_CASE("sample ids") {
  CHECK(sample_id_for(3, 10, "garden") == "00003_garden");
  CHECK(sample_id_for(42, 1000000, "a b/c") == "000042_a_b_c");
  CHECK(sample_id_for(0, 1, "") == "00000_scene");
}

TEST_CASE("write_sample produces the dataset layout") {
  TempDir dir("sample");
  OpticalConfig cfg = small_config(1);
  const OpticsContext optics(cfg.zernike);
  DegradedSample s = degrade_scene(ramp_scene(40, 48, 0.0, "r"), cfg, SampleSpec{"00000_r", 2.0, 3}, optics);
  const std::string meta_sha = write_sample(dir.path() / "00000_r", s, {});
  const fs::path d = dir.path() / "00000_r";
  for (const char* f : {"turb.png", "tilt.png", "clean.png", "flow_bwd.d2fl", "meta.json"}) CHECK(fs::exists(d / f));
  for (const char* f : {"blur.png", "flow_fwd.d2fl", "modulation.png"}) CHECK_FALSE(fs::exists(d / f));
  CHECK(meta_sha == sha256_file(d / "meta.json"));

  const MetadataRecord meta = metadata_from_json(parse_json(read_text(d / "meta.json"), "meta"));
  CHECK(meta.sample_id == "00000_r");
  CHECK(meta.source_id == "r");
  CHECK(meta.seed == 3);
  CHECK(meta.d_over_r0 == 2.0);
  CHECK(meta.category == StrengthCategory::Weak);
  CHECK(meta.height == 40);
  CHECK(meta.width == 48);
  CHECK(meta.files.size() == 4);
  CHECK(meta.files.at("turb.png") == sha256_file(d / "turb.png"));
  CHECK(read_flow(d / "flow_bwd.d2fl") == s.backward_flow.vectors);
  CHECK(read_rgb_image(d / "clean.png").height() == 40);

  cfg.output.debug = true;
  DegradedSample dbg = degrade_scene(ramp_scene(40, 48, 0.0, "r"), cfg, SampleSpec{"dbg", 2.0, 3}, optics);
  write_sample(dir.path() / "dbg", dbg, {true, false});
  for (const char* f : {"blur.png", "flow_fwd.d2fl", "modulation.png"}) CHECK(fs::exists(dir.path() / "dbg" / f));
  CHECK(read_png(dir.path() / "dbg" / "modulation.png").bit_depth == 16);
  CHECK(read_flow(dir.path() / "dbg" / "flow_fwd.d2fl") == dbg.forward_flow.vectors);
}

TEST_CASE("generated dataset is complete, valid and deterministic") {
  TempDir dir("gen");
  OpticalConfig cfg = small_config(7);
  cfg.strength.sampling = StrengthSampling::Stratified;
  const auto scenes = memory_scenes(3);
  const GenerateSummary a = generate_dataset(cfg, scenes, dir.path() / "a", {1, {}});
  CHECK(a.written == 7);
  CHECK_FALSE(a.partial());
  CHECK(a.category_counts[0] == 3);
  CHECK(a.category_counts[1] == 2);
  CHECK(a.category_counts[2] == 2);
  CHECK(fs::exists(dir.path() / "a" / "00004_scene1" / "meta.json"));

  const Json manifest = parse_json(read_text(dir.path() / "a" / "manifest.json"), "manifest");
  CHECK(manifest["sample_count"] == 7);
  CHECK(manifest["samples"].size() == 7);
  CHECK(manifest["samples"][4]["id"] == "00004_scene1");
  CHECK(manifest["samples"][4]["meta_sha256"] == sha256_file(dir.path() / "a" / "00004_scene1" / "meta.json"));
  CHECK(manifest["category_counts"]["weak"] == 3);
  CHECK(manifest.contains("created_utc"));
  CHECK(manifest["config"]["geometry"]["L"] == 1000.0);

  const ValidationReport ok = validate_dataset(dir.path() / "a");
  CHECK(ok.ok());
  CHECK(ok.samples_checked == 7);
  CHECK(ok.flows_checked > 0);

  generate_dataset(cfg, scenes, dir.path() / "b", {3, {}});
  CHECK(dataset_tree_hash(dir.path() / "a") == dataset_tree_hash(dir.path() / "b"));
  cfg.global_seed = 6;
  generate_dataset(cfg, scenes, dir.path() / "c", {3, {}});
  CHECK(dataset_tree_hash(dir.path() / "a") != dataset_tree_hash(dir.path() / "c"));

  // refuses to write into a populated directory
  CHECK(error_code_of([&] { generate_dataset(cfg, scenes, dir.path() / "a", {1, {}}); }) == ErrorCode::Io);
}

TEST_CASE("validation reports corruption by file") {
  TempDir dir("val");
  const OpticalConfig cfg = small_config(3);
  generate_dataset(cfg, memory_scenes(3), dir.path() / "d", {1, {}});
  const fs::path root = dir.path() / "d";
  REQUIRE(validate_dataset(root).ok());

  SUBCASE("flipped byte in an image") {
    flip_byte(root / "00001_scene1" / "turb.png", 100);
    const ValidationReport r = validate_dataset(root);
    REQUIRE_FALSE(r.ok());
    CHECK(r.issues[0].path == "00001_scene1/turb.png");
    CHECK(r.issues[0].message.find("digest") != std::string::npos);
  }
  SUBCASE("missing sample") {
    fs::remove_all(root / "00002_scene2");
    CHECK_FALSE(validate_dataset(root).ok());
  }
  SUBCASE("missing manifest") {
    fs::remove(root / "manifest.json");
    const ValidationReport r = validate_dataset(root);
    REQUIRE_FALSE(r.ok());
    CHECK(r.issues[0].path == "manifest.json");
  }
  SUBCASE("tampered category") {
    const fs::path meta = root / "00000_scene0" / "meta.json";
    std::string text = read_text(meta);
    for (const char* from : {"\"weak\"", "\"medium\"", "\"strong\""}) {
      const auto pos = text.find(from);
      if (pos != std::string::npos) {
        text.replace(pos, std::string(from).size(), std::string(from) == "\"weak\"" ? "\"strong\"" : "\"weak\"");
        break;
      }
    }
    std::ofstream(meta, std::ios::binary) << text;
    CHECK_FALSE(validate_dataset(root).ok());
  }
}

TEST_CASE("scene failures are skipped and reported") {
  TempDir dir("skip");
  auto scenes = memory_scenes(2);
  scenes.push_back({"broken", []() -> CleanScene { throw Error(ErrorCode::Shape, "depth and image differ"); }});
  const GenerateSummary s = generate_dataset(small_config(6), scenes, dir.path() / "d", {2, {"lonely: no depth map"}});
  CHECK(s.partial());
  CHECK(s.written == 4);
  REQUIRE(s.skipped.size() == 2);
  CHECK(s.skipped[0] == "lonely: no depth map");
  CHECK(s.skipped[1].find("broken") == 0);
  const Json manifest = parse_json(read_text(dir.path() / "d" / "manifest.json"), "manifest");
  CHECK(manifest["skipped"].size() == 2);
  CHECK(manifest["sample_count"] == 4);
  CHECK(validate_dataset(dir.path() / "d").ok());
}

TEST_CASE("scene discovery pairs images with depth maps") {
  TempDir dir("disc");
  const fs::path clean = dir.path() / "clean", depth = dir.path() / "depth";
  fs::create_directories(clean);
  fs::create_directories(depth);
  write_png(clean / "b.png", smooth_image(16, 16));
  write_png(clean / "a.png", smooth_image(16, 16));
  write_png(clean / "c.png", smooth_image(16, 16));
  write_png(depth / "a_depth.png", Image(16, 16, 1, 0.5f), 16);
  write_png(depth / "b_depth.png", Image(16, 16, 1, 0.5f), 16);
  const SceneDiscovery d = discover_scenes(clean, depth, "_depth");
  REQUIRE(d.pairs.size() == 2);
  CHECK(d.pairs[0].stem == "a");
  CHECK(d.pairs[1].stem == "b");
  CHECK(d.missing_depth == std::vector<std::string>{"c"});
  const CleanScene s = load_scene(d.pairs[0].image, d.pairs[0].depth, "a");
  CHECK(s.depth.values(3, 3) == doctest::Approx(32768.0 / 65535.0));

  write_png(depth / "c_depth.png", Image(8, 16, 1, 0.5f), 16);
  CHECK(error_code_of([&] { load_scene(clean / "c.png", depth / "c_depth.png", "c"); }) == ErrorCode::Shape);

  // shared directory: depth maps are not treated as scenes
  write_png(clean / "a_depth.png", Image(16, 16, 1, 0.5f), 16);
  const SceneDiscovery shared = discover_scenes(clean, clean, "_depth");
  CHECK(shared.pairs.size() == 1);
}

TEST_CASE("fixed point residual of a generated flow") {
  OpticalConfig cfg = small_config(1);
  cfg.tilt.tilt_rms_px = 2.0;
  const OpticsContext optics(cfg.zernike);
  const DegradedSample s = degrade_scene(ramp_scene(64, 64, 0.0, "r"), cfg, SampleSpec{"r", 3.0, 8}, optics);
  CHECK(fixed_point_residual(s.forward_flow, s.backward_flow.vectors) < kFixedPointTolerancePx);
  CHECK(fixed_point_residual(DisplacementField::zeros(16, 16), Grid<float>(16, 16, 2, 0.0f)) == 0.0);
}

TEST_CASE("degrade_files writes the tuple and the flat-field baseline") {
  TempDir dir("files");
  write_png(dir.path() / "img.png", smooth_image(40, 40));
  write_png(dir.path() / "depth.png", Image(40, 40, 1, 1.0f), 16);
  const DegradeFilesResult r = degrade_files(small_config(1), dir.path() / "img.png", dir.path() / "depth.png",
                                             dir.path() / "out", true);
  CHECK(r.flat_field_written);
  CHECK(fs::exists(dir.path() / "out" / "meta.json"));
  CHECK(fs::exists(dir.path() / "out" / "modulation.png"));
  // depth 1 with z_max = L is the flat-field configuration
  CHECK(sha256_file(dir.path() / "out" / "turb.png") == sha256_file(dir.path() / "out" / "flat_field" / "turb.png"));
  CHECK(sha256_file(dir.path() / "out" / "flow_bwd.d2fl") ==
        sha256_file(dir.path() / "out" / "flat_field" / "flow_bwd.d2fl"));
  CHECK_FALSE(inspect_path(dir.path() / "out").empty());
  CHECK(inspect_path(dir.path() / "out" / "flow_bwd.d2fl").find("40") != std::string::npos);
}
