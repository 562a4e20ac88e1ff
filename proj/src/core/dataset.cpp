#include "core/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "core/config_io.hpp"
#include "core/digest.hpp"
#include "core/error.hpp"
#include "core/flow_io.hpp"
#include "core/image_io.hpp"
#include "core/log.hpp"
#include "core/strength.hpp"

namespace d2turb {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out.empty() ? "scene" : out;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::Format, std::string("meta.json: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::Format, std::string("meta.json: field '") + key + "' has the wrong type");
  }
}

Image modulation_image(const ModulationMap& m) {
  Image out(m.values.height(), m.values.width(), 1);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = static_cast<float>(m.values.data()[i]);
  return out;
}

}  // namespace

// --- sample directory -------------------------------------------------------

Json metadata_to_json(const MetadataRecord& m) {
  Json j;
  j["format_version"] = kMetaFormatVersion;
  j["sample_id"] = m.sample_id;
  j["source_id"] = m.source_id;
  j["seed"] = m.seed;
  j["d_over_r0"] = m.d_over_r0;
  j["category"] = category_name(m.category);
  j["L"] = m.path_length_m;
  j["s"] = m.baseline_offset;
  j["z_max"] = m.z_max_m;
  j["tilt_rms_px"] = m.tilt_rms_px;
  j["kernel_size"] = m.kernel_size;
  j["psf_grid"] = Json::array({m.psf_grid_y, m.psf_grid_x});
  j["flat_field_mode"] = m.flat_field_mode;
  j["engine_version"] = m.engine_version;
  j["height"] = m.height;
  j["width"] = m.width;
  j["psf_max_energy_outside_crop"] = m.psf_max_energy_outside_crop;
  j["flow_hole_count"] = m.flow_hole_count;
  j["files"] = Json::object();
  for (const auto& [name, digest] : m.files) j["files"][name] = digest;
  j["content_digest"] = m.content_digest;
  return j;
}

MetadataRecord metadata_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Format, "meta.json: expected an object");
  MetadataRecord m;
  if (field<int>(j, "format_version") != kMetaFormatVersion) throw Error(ErrorCode::Format, "meta.json: unsupported format_version");
  m.sample_id = field<std::string>(j, "sample_id");
  m.source_id = field<std::string>(j, "source_id");
  m.seed = field<std::uint64_t>(j, "seed");
  m.d_over_r0 = field<double>(j, "d_over_r0");
  const auto category = parse_category(field<std::string>(j, "category"));
  if (!category) throw Error(ErrorCode::Format, "meta.json: unknown category");
  m.category = *category;
  m.path_length_m = field<double>(j, "L");
  m.baseline_offset = field<double>(j, "s");
  m.z_max_m = field<double>(j, "z_max");
  m.tilt_rms_px = field<double>(j, "tilt_rms_px");
  m.kernel_size = field<int>(j, "kernel_size");
  const auto grid = field<std::vector<int>>(j, "psf_grid");
  if (grid.size() != 2) throw Error(ErrorCode::Format, "meta.json: psf_grid must have two entries");
  m.psf_grid_y = grid[0];
  m.psf_grid_x = grid[1];
  m.flat_field_mode = field<bool>(j, "flat_field_mode");
  m.engine_version = field<std::string>(j, "engine_version");
  m.height = field<std::size_t>(j, "height");
  m.width = field<std::size_t>(j, "width");
  m.psf_max_energy_outside_crop = field<double>(j, "psf_max_energy_outside_crop");
  m.flow_hole_count = field<std::size_t>(j, "flow_hole_count");
  m.files = field<std::map<std::string, std::string>>(j, "files");
  m.content_digest = field<std::string>(j, "content_digest");
  return m;
}

std::string content_digest(const std::map<std::string, std::string>& files) {
  std::string lines;
  for (const auto& [name, digest] : files) {
    lines += name;
    lines.push_back('\0');
    lines += digest;
    lines.push_back('\n');
  }
  return sha256_hex(lines);
}

std::string write_sample(const fs::path& dir, DegradedSample& sample, const SampleWriteOptions& options) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message(), "io.sink");

  std::map<std::string, std::string>& files = sample.metadata.files;
  files.clear();
  auto image = [&](const char* name, const Image& img, int depth) {
    write_png(dir / name, img, depth);
    files[name] = sha256_file(dir / name);
  };
  auto flow = [&](const char* name, const Grid<float>& v) {
    write_flow(dir / name, v);
    files[name] = sha256_file(dir / name);
  };
  in_stage("io.sink", [&] {
    image("turb.png", sample.turb, 8);
    image("tilt.png", sample.tilt, 8);
    image("clean.png", sample.clean, 8);
    flow("flow_bwd.d2fl", sample.backward_flow.vectors);
    if (sample.blur) image("blur.png", *sample.blur, 8);
    if (options.debug) flow("flow_fwd.d2fl", sample.forward_flow.vectors);
    if (options.debug || options.always_modulation) image("modulation.png", modulation_image(sample.modulation), 16);
    sample.metadata.content_digest = content_digest(files);
    const std::string text = canonical_json(metadata_to_json(sample.metadata));
    write_text(dir / kMetaName, text);
  });
  return sha256_file(dir / kMetaName);
}

// --- scenes -----------------------------------------------------------------

SceneDiscovery discover_scenes(const fs::path& clean_dir, const fs::path& depth_dir, const std::string& depth_suffix) {
  std::error_code ec;
  if (!fs::is_directory(clean_dir, ec)) throw Error(ErrorCode::Io, "not a directory: " + clean_dir.string());
  if (!fs::is_directory(depth_dir, ec)) throw Error(ErrorCode::Io, "not a directory: " + depth_dir.string());
  const bool same_dir = fs::equivalent(clean_dir, depth_dir, ec);

  std::vector<fs::path> candidates;
  for (const auto& entry : fs::directory_iterator(clean_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const std::string stem = entry.path().stem().string();
    if (same_dir && !depth_suffix.empty() && stem.size() > depth_suffix.size() &&
        stem.compare(stem.size() - depth_suffix.size(), depth_suffix.size(), depth_suffix) == 0) {
      continue;
    }
    candidates.push_back(entry.path());
  }
  std::sort(candidates.begin(), candidates.end());

  SceneDiscovery out;
  for (const fs::path& image : candidates) {
    const std::string stem = image.stem().string();
    const fs::path depth = depth_dir / (stem + depth_suffix + ".png");
    if (fs::is_regular_file(depth, ec)) {
      out.pairs.push_back({stem, image, depth});
    } else {
      out.missing_depth.push_back(stem);
    }
  }
  return out;
}

CleanScene load_scene(const fs::path& image, const fs::path& depth, const std::string& identifier) {
  CleanScene scene;
  scene.identifier = identifier;
  scene.image = in_stage("io.image", [&] { return read_rgb_image(image); });
  const Image d = in_stage("io.depth", [&] { return read_gray_image(depth); });
  if (!scene.image.same_extent(d)) {
    throw Error(ErrorCode::Shape,
                "image " + image.string() + " is " + std::to_string(scene.image.height()) + "x" +
                    std::to_string(scene.image.width()) + " but depth " + depth.string() + " is " +
                    std::to_string(d.height()) + "x" + std::to_string(d.width()),
                "io.depth");
  }
  scene.depth.values = Grid<double>(d.height(), d.width());
  for (std::size_t i = 0; i < d.size(); ++i) scene.depth.values.data()[i] = d.data()[i];
  return scene;
}

std::vector<SceneInput> scene_inputs(const std::vector<ScenePair>& pairs) {
  std::vector<SceneInput> out;
  for (const ScenePair& p : pairs) {
    out.push_back({p.stem, [p] { return load_scene(p.image, p.depth, p.stem); }});
  }
  return out;
}

// --- generation -------------------------------------------------------------

std::string sample_id_for(std::size_t index, std::size_t total, const std::string& scene_id) {
  std::size_t width = 1;
  for (std::size_t v = total > 0 ? total - 1 : 0; v >= 10; v /= 10) ++width;
  width = std::max<std::size_t>(width, 5);
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return digits + "_" + sanitize(scene_id);
}

GenerateSummary generate_dataset(const OpticalConfig& config, const std::vector<SceneInput>& scenes, const fs::path& out,
                                 const GenerateOptions& options) {
  in_stage("config", [&] { config.validate(); });
  if (scenes.empty()) throw Error(ErrorCode::InvalidInput, "no scenes to generate from", "generate");
  std::error_code ec;
  if (fs::exists(out, ec)) {
    if (!fs::is_directory(out, ec) || !fs::is_empty(out, ec)) {
      throw Error(ErrorCode::Io, "output directory must be empty or absent: " + out.string(), "io.sink");
    }
  }
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out.string() + ": " + ec.message(), "io.sink");

  const OpticsContext optics(config.zernike);
  const std::size_t total = config.sample_count;

  struct Written {
    std::string id;
    std::string source;
    double d_over_r0;
    StrengthCategory category;
    std::string meta_sha256;
  };
  std::vector<std::optional<Written>> written(total);
  std::vector<std::optional<std::string>> scene_failures(scenes.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto work = [&] {
    for (std::size_t s = next++; s < scenes.size() && !abort; s = next++) {
      try {
        std::optional<CleanScene> scene;
        try {
          scene = scenes[s].load();
        } catch (const Error& e) {
          scene_failures[s] = e.what();
          logger().warn("skipping scene {}: {}", scenes[s].id, e.what());
          continue;
        }
        for (std::size_t i = s; i < total && !abort; i += scenes.size()) {
          const SampleParams params = sample_params(config, i);
          const SampleSpec spec{sample_id_for(i, total, scenes[s].id), params.d_over_r0, params.seed};
          DegradedSample sample;
          try {
            sample = degrade_scene(*scene, config, spec, optics);
          } catch (const Error& e) {
            scene_failures[s] = e.what();
            logger().warn("skipping scene {}: {}", scenes[s].id, e.what());
            break;
          }
          const std::string digest = write_sample(out / spec.sample_id, sample, {config.output.debug, false});
          written[i] = Written{spec.sample_id, scenes[s].id, spec.d_over_r0, sample.metadata.category, digest};
          logger().info("wrote {} (D/r0 {:.3f}, {})", spec.sample_id, spec.d_over_r0, category_name(sample.metadata.category));
        }
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
    }
  };
  const unsigned pool = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(scenes.size())));
  if (pool == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned t = 0; t < pool; ++t) threads.emplace_back(work);
  }
  if (fatal) std::rethrow_exception(fatal);

  GenerateSummary summary;
  summary.skipped = options.skipped;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    if (scene_failures[s]) summary.skipped.push_back(scenes[s].id + ": " + *scene_failures[s]);
  }

  Json samples = Json::array();
  for (const auto& w : written) {
    if (!w) continue;
    ++summary.written;
    ++summary.category_counts[static_cast<std::size_t>(w->category)];
    samples.push_back({{"id", w->id},
                       {"source_id", w->source},
                       {"d_over_r0", w->d_over_r0},
                       {"category", category_name(w->category)},
                       {"meta_sha256", w->meta_sha256}});
  }

  Json manifest;
  manifest["engine_version"] = kEngineVersion;
  manifest["created_utc"] = utc_timestamp();
  manifest["config"] = config_to_json(config);
  manifest["sample_count"] = summary.written;
  manifest["category_counts"] = {{"weak", summary.category_counts[0]},
                                 {"medium", summary.category_counts[1]},
                                 {"strong", summary.category_counts[2]}};
  manifest["formats"] = {{"flow", {{"magic", "D2FL"}, {"version", kFlowFormatVersion}, {"byte_order", "little"}}},
                         {"meta", kMetaFormatVersion},
                         {"image", "png"}};
  manifest["policies"] = {{"blur_padding", "reflect101"},
                          {"warp_boundary", "clamp"},
                          {"splat_method", kSplatMethod},
                          {"splat_coverage_threshold", kCoverageThreshold},
                          {"hole_fill", "onion_peel_then_jacobi"},
                          {"d_over_r0_distribution", strength_sampling_name(config.strength.sampling)}};
  manifest["samples"] = samples;
  manifest["skipped"] = summary.skipped;
  in_stage("io.sink", [&] {
    const fs::path tmp = out / (std::string(kManifestName) + ".tmp");
    write_text(tmp, canonical_json(manifest));
    std::error_code rename_ec;
    fs::rename(tmp, out / kManifestName, rename_ec);
    if (rename_ec) throw Error(ErrorCode::Io, "cannot finalise manifest: " + rename_ec.message());
  });
  return summary;
}

std::string dataset_tree_hash(const fs::path& root) {
  std::vector<std::string> rel;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), root).generic_string());
  }
  std::sort(rel.begin(), rel.end());
  std::string lines;
  for (const std::string& r : rel) {
    std::string digest;
    if (r == kManifestName) {
      Json manifest = parse_json(read_text(root / r), r);
      if (manifest.is_object()) manifest.erase("created_utc");
      digest = sha256_hex(canonical_json(manifest));
    } else {
      digest = sha256_file(root / r);
    }
    lines += r;
    lines.push_back('\0');
    lines += digest;
    lines.push_back('\n');
  }
  return sha256_hex(lines);
}

// --- validation ---------------------------------------------------------------

double fixed_point_residual(const DisplacementField& forward, const Grid<float>& backward, std::size_t border) {
  if (!forward.vectors.same_extent(backward) || backward.channels() != 2) {
    throw Error(ErrorCode::Shape, "forward and backward flows differ in size");
  }
  const Image composed = backward_warp(backward, forward);
  std::vector<double> residual;
  const std::size_t h = backward.height();
  const std::size_t w = backward.width();
  for (std::size_t y = border; y + border < h; ++y) {
    for (std::size_t x = border; x + border < w; ++x) {
      const double rx = forward.vectors(y, x, 0) + composed(y, x, 0);
      const double ry = forward.vectors(y, x, 1) + composed(y, x, 1);
      residual.push_back(std::hypot(rx, ry));
    }
  }
  if (residual.empty()) return 0.0;
  auto mid = residual.begin() + static_cast<long>(residual.size() / 2);
  std::nth_element(residual.begin(), mid, residual.end());
  return *mid;
}

ValidationReport validate_dataset(const fs::path& root, std::size_t flow_samples) {
  ValidationReport report;
  auto issue = [&](const fs::path& p, const std::string& msg) {
    report.issues.push_back({p.lexically_relative(root).generic_string(), msg});
  };

  const fs::path manifest_path = root / kManifestName;
  std::error_code ec;
  if (!fs::is_regular_file(manifest_path, ec)) {
    issue(manifest_path, "manifest missing (incomplete or interrupted dataset)");
    return report;
  }
  Json manifest;
  try {
    manifest = parse_json(read_text(manifest_path), manifest_path.string());
  } catch (const Error& e) {
    issue(manifest_path, e.message());
    return report;
  }
  if (!manifest.contains("samples") || !manifest["samples"].is_array()) {
    issue(manifest_path, "manifest has no sample list");
    return report;
  }

  std::array<std::size_t, 3> counts{};
  std::vector<std::string> listed;
  const Json& samples = manifest["samples"];
  for (std::size_t idx = 0; idx < samples.size(); ++idx) {
    const Json& entry = samples[idx];
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string()) {
      issue(manifest_path, "malformed sample entry " + std::to_string(idx));
      continue;
    }
    const std::string id = entry["id"].get<std::string>();
    listed.push_back(id);
    const fs::path dir = root / id;
    const fs::path meta_path = dir / kMetaName;
    ++report.samples_checked;
    if (!fs::is_regular_file(meta_path, ec)) {
      issue(meta_path, "listed sample is missing");
      continue;
    }
    if (entry.value("meta_sha256", std::string()) != sha256_file(meta_path)) {
      issue(meta_path, "digest mismatch against manifest");
    }
    MetadataRecord meta;
    try {
      meta = metadata_from_json(parse_json(read_text(meta_path), meta_path.string()));
    } catch (const Error& e) {
      issue(meta_path, e.message());
      continue;
    }
    if (meta.sample_id != id) issue(meta_path, "sample_id does not match directory name");
    try {
      const StrengthCategory derived = categorize_strength(meta.d_over_r0);
      if (derived != meta.category) {
        issue(meta_path, std::string("category '") + category_name(meta.category) + "' inconsistent with d_over_r0 (expected '" +
                             category_name(derived) + "')");
      }
      ++counts[static_cast<std::size_t>(derived)];
    } catch (const Error& e) {
      issue(meta_path, e.message());
    }
    for (const char* required : {"turb.png", "tilt.png", "clean.png", "flow_bwd.d2fl"}) {
      if (meta.files.count(required) == 0) issue(dir / required, "not listed in meta.json");
    }
    for (const auto& [name, digest] : meta.files) {
      const fs::path file = dir / name;
      if (!fs::is_regular_file(file, ec)) {
        issue(file, "file missing");
      } else if (sha256_file(file) != digest) {
        issue(file, "digest mismatch");
      }
    }
    if (content_digest(meta.files) != meta.content_digest) issue(meta_path, "content_digest mismatch");
  }

  // Unlisted sample directories.
  std::sort(listed.begin(), listed.end());
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (!std::binary_search(listed.begin(), listed.end(), name)) issue(entry.path(), "sample directory not in manifest");
  }

  const Json& cc = manifest.value("category_counts", Json::object());
  const std::size_t stated = manifest.value("sample_count", std::size_t{0});
  if (stated != samples.size()) issue(manifest_path, "sample_count does not match the sample list");
  const char* names[3] = {"weak", "medium", "strong"};
  for (int c = 0; c < 3; ++c) {
    if (cc.value(names[c], std::size_t{0}) != counts[c]) {
      issue(manifest_path, std::string("category count '") + names[c] + "' does not match the samples");
    }
  }

  // Flow checks on an evenly spaced subset.
  const std::size_t n = listed.size();
  const std::size_t picks = std::min(flow_samples, n);
  for (std::size_t k = 0; k < picks; ++k) {
    const std::string& id = listed[k * n / picks];
    const fs::path dir = root / id;
    try {
      const Grid<float> bwd = read_flow(dir / "flow_bwd.d2fl");
      const Image clean = read_rgb_image(dir / "clean.png");
      if (!clean.same_extent(bwd)) issue(dir / "flow_bwd.d2fl", "flow dimensions differ from the images");
      if (fs::is_regular_file(dir / "flow_fwd.d2fl", ec)) {
        const DisplacementField fwd{read_flow(dir / "flow_fwd.d2fl")};
        const double r = fixed_point_residual(fwd, bwd);
        if (!(r < kFixedPointTolerancePx)) {
          issue(dir / "flow_bwd.d2fl", "fixed-point residual " + std::to_string(r) + " px exceeds tolerance");
        }
      }
      ++report.flows_checked;
    } catch (const Error& e) {
      issue(dir, e.what());
    }
  }
  return report;
}

std::string inspect_path(const fs::path& path) {
  std::ostringstream out;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    if (fs::is_regular_file(path / kManifestName, ec)) {
      const Json m = parse_json(read_text(path / kManifestName), (path / kManifestName).string());
      out << "dataset " << path.string() << "\n";
      out << "engine_version: " << m.value("engine_version", std::string("?")) << "\n";
      out << "created_utc: " << m.value("created_utc", std::string("?")) << "\n";
      out << "sample_count: " << m.value("sample_count", 0) << "\n";
      if (m.contains("category_counts")) {
        for (const char* c : {"weak", "medium", "strong"}) out << "  " << c << ": " << m["category_counts"].value(c, 0) << "\n";
      }
      out << "tree_hash: " << dataset_tree_hash(path) << "\n";
      return out.str();
    }
    if (fs::is_regular_file(path / kMetaName, ec)) return inspect_path(path / kMetaName);
    throw Error(ErrorCode::Format, "no manifest.json or meta.json in " + path.string());
  }
  if (path.extension() == ".d2fl") {
    const FlowFileHeader h = read_flow_header(path);
    const Grid<float> v = read_flow(path);
    double max_mag = 0.0;
    double sum_sq = 0.0;
    for (std::size_t p = 0; p < v.pixel_count(); ++p) {
      const double m2 = static_cast<double>(v.data()[2 * p]) * v.data()[2 * p] +
                        static_cast<double>(v.data()[2 * p + 1]) * v.data()[2 * p + 1];
      sum_sq += m2;
      max_mag = std::max(max_mag, std::sqrt(m2));
    }
    out << "D2FL version " << h.version << "\n";
    out << "height: " << h.height << "\nwidth: " << h.width << "\nchannels: " << h.channels << "\n";
    out << "rms_magnitude_px: " << (v.pixel_count() ? std::sqrt(sum_sq / v.pixel_count()) : 0.0) << "\n";
    out << "max_magnitude_px: " << max_mag << "\n";
    return out.str();
  }
  if (path.extension() == ".json") return canonical_json(parse_json(read_text(path), path.string()));
  if (path.extension() == ".png") {
    const DecodedImage d = read_png(path);
    out << "PNG " << d.pixels.height() << "x" << d.pixels.width() << ", " << d.pixels.channels() << " channel(s), "
        << d.bit_depth << "-bit\n";
    return out.str();
  }
  throw Error(ErrorCode::Format, "cannot inspect " + path.string());
}

// --- single image -------------------------------------------------------------

DegradeFilesResult degrade_files(const OpticalConfig& config, const fs::path& image, const fs::path& depth,
                                 const fs::path& out, bool flat_field_baseline) {
  in_stage("config", [&] { config.validate(); });
  const std::string stem = image.stem().string();
  const CleanScene scene = load_scene(image, depth, stem);
  const OpticsContext optics(config.zernike);
  const SampleParams params = sample_params(config, 0);
  const SampleSpec spec{sanitize(stem), params.d_over_r0, params.seed};

  DegradeFilesResult result;
  DegradedSample sample = degrade_scene(scene, config, spec, optics);
  write_sample(out, sample, {config.output.debug, true});
  result.metadata = sample.metadata;
  if (flat_field_baseline) {
    OpticalConfig flat = config;
    flat.flat_field_mode = true;
    DegradedSample baseline = degrade_scene(scene, flat, spec, optics);
    write_sample(out / "flat_field", baseline, {config.output.debug, true});
    result.flat_field_written = true;
  }
  return result;
}

}  // namespace d2turb
