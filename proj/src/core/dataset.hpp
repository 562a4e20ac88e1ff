#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/degrade.hpp"
#include "core/json_canon.hpp"
#include "core/metadata.hpp"

namespace d2turb {

namespace fs = std::filesystem;

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kMetaName = "meta.json";

// --- sample directory -------------------------------------------------------

Json metadata_to_json(const MetadataRecord& meta);
// Throws ErrorCode::Format on missing or mistyped fields.
MetadataRecord metadata_from_json(const Json& json);

// SHA-256 over the sorted "name\0digest\n" lines.
std::string content_digest(const std::map<std::string, std::string>& files);

struct SampleWriteOptions {
  bool debug = false;             // flow_fwd.d2fl, modulation.png
  bool always_modulation = false; // modulation.png even without debug
};

// Writes the tuple into `dir` (created if needed), fills metadata file
// digests and returns the SHA-256 of the written meta.json.
std::string write_sample(const fs::path& dir, DegradedSample& sample, const SampleWriteOptions& options);

// --- scenes -----------------------------------------------------------------

struct SceneInput {
  std::string id;
  std::function<CleanScene()> load;  // may throw d2turb::Error
};

struct ScenePair {
  std::string stem;
  fs::path image;
  fs::path depth;
};

struct SceneDiscovery {
  std::vector<ScenePair> pairs;
  std::vector<std::string> missing_depth;  // clean stems without a depth map
};

// Pairs <clean_dir>/<stem>.png with <depth_dir>/<stem><suffix>.png.
SceneDiscovery discover_scenes(const fs::path& clean_dir, const fs::path& depth_dir, const std::string& depth_suffix);

// Reads the RGB image and gray depth; throws ErrorCode::Shape on a mismatch.
CleanScene load_scene(const fs::path& image, const fs::path& depth, const std::string& identifier);
std::vector<SceneInput> scene_inputs(const std::vector<ScenePair>& pairs);

// --- generation -------------------------------------------------------------

struct GenerateOptions {
  unsigned workers = 1;
  std::vector<std::string> skipped;  // reported in the manifest, e.g. unpaired inputs
};

struct GenerateSummary {
  std::size_t written = 0;
  std::array<std::size_t, 3> category_counts{};  // weak, medium, strong
  std::vector<std::string> skipped;
  bool partial() const noexcept { return !skipped.empty(); }
};

std::string sample_id_for(std::size_t index, std::size_t total, const std::string& scene_id);

// Sample i uses scene i % scenes.size() and sample_params(config, i). Scenes
// that fail to load or degrade are skipped and reported; write failures abort
// before the manifest is written. Throws ErrorCode::Io if `out` exists and is
// not an empty directory.
GenerateSummary generate_dataset(const OpticalConfig& config, const std::vector<SceneInput>& scenes, const fs::path& out,
                                 const GenerateOptions& options);

// SHA-256 over every file of the tree; manifest.json is hashed without its
// created_utc field so reruns compare equal.
std::string dataset_tree_hash(const fs::path& root);

// --- validation ---------------------------------------------------------------

struct ValidationIssue {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::size_t samples_checked = 0;
  std::size_t flows_checked = 0;
  std::vector<ValidationIssue> issues;
  bool ok() const noexcept { return issues.empty(); }
};

inline constexpr double kFixedPointTolerancePx = 0.05;

// Median |delta(x) + V_bwd(x + delta(x))| over pixels at least `border`
// pixels from the edge.
double fixed_point_residual(const DisplacementField& forward, const Grid<float>& backward, std::size_t border = 4);

// Checks manifest completeness, file digests, categories and, on up to
// `flow_samples` evenly spaced samples, flow structure plus the fixed-point
// residual when flow_fwd.d2fl is present.
ValidationReport validate_dataset(const fs::path& root, std::size_t flow_samples = 4);

// Human-readable description of a dataset, sample directory, D2FL or JSON file.
std::string inspect_path(const fs::path& path);

// --- single image -------------------------------------------------------------

struct DegradeFilesResult {
  MetadataRecord metadata;
  bool flat_field_written = false;
};

// Degrades one image with sample_params(config, 0) and writes the tuple plus
// modulation.png into `out`; with flat_field_baseline the M == 1 tuple of the
// same seed goes to `out`/flat_field.
DegradeFilesResult degrade_files(const OpticalConfig& config, const fs::path& image, const fs::path& depth,
                                 const fs::path& out, bool flat_field_baseline);

}  // namespace d2turb
