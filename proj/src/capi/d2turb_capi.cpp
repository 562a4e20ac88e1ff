#include "d2turb/d2turb.h"

#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "core/config_io.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/flow_inverse.hpp"
#include "core/flow_io.hpp"
#include "core/log.hpp"
#include "core/metadata.hpp"
#include "core/statistics.hpp"

struct d2t_config {
  d2turb::OpticalConfig value;
};

struct d2t_flow {
  d2turb::Grid<float> vectors;
};

namespace {

thread_local std::string g_last_error;

d2t_status status_of(d2turb::ErrorCode code) { return static_cast<d2t_status>(static_cast<int>(code)); }

template <typename Fn>
d2t_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const d2turb::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return D2T_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return D2T_E_INTERNAL;
  }
}

d2t_status null_arg(const char* name) {
  g_last_error = std::string("null argument: ") + name;
  return D2T_E_NULL_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

namespace {

template <typename Fn>
d2t_status mutate(d2t_config* config, Fn&& fn) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] {
    d2turb::OpticalConfig next = config->value;
    fn(next);
    next.validate();
    config->value = next;
    return D2T_OK;
  });
}

}  // namespace

extern "C" {

const char* d2t_last_error(void) { return g_last_error.c_str(); }

const char* d2t_status_name(d2t_status status) {
  switch (status) {
    case D2T_OK: return "ok";
    case D2T_E_NULL_ARGUMENT: return "null_argument";
    case D2T_E_PARTIAL: return "partial";
    default: break;
  }
  const int code = static_cast<int>(status);
  if (code >= 1 && code <= 11) return d2turb::error_code_name(static_cast<d2turb::ErrorCode>(code));
  return "unknown";
}

const char* d2t_version(void) { return d2turb::kEngineVersion; }

void d2t_string_free(char* s) { std::free(s); }

d2t_status d2t_config_default(d2t_config** out) {
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = new d2t_config{};
    return D2T_OK;
  });
}

d2t_status d2t_config_load(const char* path, d2t_config** out) {
  if (path == nullptr) return null_arg("path");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = new d2t_config{d2turb::parse_config(path)};
    return D2T_OK;
  });
}

d2t_status d2t_config_parse(const char* toml_text, d2t_config** out) {
  if (toml_text == nullptr) return null_arg("toml_text");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = new d2t_config{d2turb::parse_config_text(toml_text)};
    return D2T_OK;
  });
}

d2t_status d2t_config_to_toml(const d2t_config* config, char** out) {
  if (config == nullptr) return null_arg("config");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = dup_string(d2turb::serialize_config(config->value));
    return D2T_OK;
  });
}

void d2t_config_free(d2t_config* config) { delete config; }


d2t_status d2t_config_set_seed(d2t_config* config, uint64_t seed) {
  return mutate(config, [&](d2turb::OpticalConfig& c) { c.global_seed = seed; });
}

d2t_status d2t_config_set_sample_count(d2t_config* config, uint64_t count) {
  return mutate(config, [&](d2turb::OpticalConfig& c) { c.sample_count = static_cast<std::size_t>(count); });
}

d2t_status d2t_config_set_flat_field(d2t_config* config, int enabled) {
  return mutate(config, [&](d2turb::OpticalConfig& c) { c.flat_field_mode = enabled != 0; });
}

d2t_status d2t_config_set_d_over_r0(d2t_config* config, double lo, double hi) {
  return mutate(config, [&](d2turb::OpticalConfig& c) {
    c.strength.d_over_r0_min = lo;
    c.strength.d_over_r0_max = hi;
  });
}

d2t_status d2t_config_set_tilt_rms(d2t_config* config, double tilt_rms_px) {
  return mutate(config, [&](d2turb::OpticalConfig& c) {
    if (tilt_rms_px < 0.0) {
      c.tilt.tilt_rms_px.reset();
    } else {
      c.tilt.tilt_rms_px = tilt_rms_px;
    }
  });
}

d2t_status d2t_config_set_debug(d2t_config* config, int enabled) {
  return mutate(config, [&](d2turb::OpticalConfig& c) { c.output.debug = enabled != 0; });
}

d2t_status d2t_config_get_seed(const d2t_config* config, uint64_t* seed) {
  if (config == nullptr) return null_arg("config");
  if (seed == nullptr) return null_arg("seed");
  *seed = config->value.global_seed;
  return D2T_OK;
}

d2t_status d2t_flow_create(uint32_t height, uint32_t width, const float* data, d2t_flow** out) {
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    if (height == 0 || width == 0) throw d2turb::Error(d2turb::ErrorCode::InvalidInput, "flow dimensions must be positive");
    auto flow = new d2t_flow{d2turb::Grid<float>(height, width, 2, 0.0f)};
    if (data != nullptr) std::memcpy(flow->vectors.data(), data, flow->vectors.size() * sizeof(float));
    *out = flow;
    return D2T_OK;
  });
}

d2t_status d2t_flow_read(const char* path, d2t_flow** out) {
  if (path == nullptr) return null_arg("path");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = new d2t_flow{d2turb::read_flow(path)};
    return D2T_OK;
  });
}

d2t_status d2t_flow_write(const d2t_flow* flow, const char* path) {
  if (flow == nullptr) return null_arg("flow");
  if (path == nullptr) return null_arg("path");
  return guarded([&] {
    d2turb::write_flow(path, flow->vectors);
    return D2T_OK;
  });
}

d2t_status d2t_flow_dims(const d2t_flow* flow, uint32_t* height, uint32_t* width) {
  if (flow == nullptr) return null_arg("flow");
  if (height != nullptr) *height = static_cast<uint32_t>(flow->vectors.height());
  if (width != nullptr) *width = static_cast<uint32_t>(flow->vectors.width());
  return D2T_OK;
}

const float* d2t_flow_data(const d2t_flow* flow) { return flow == nullptr ? nullptr : flow->vectors.data(); }

d2t_status d2t_flow_invert(const d2t_flow* forward, unsigned workers, d2t_flow** backward, size_t* hole_count) {
  if (forward == nullptr) return null_arg("forward");
  if (backward == nullptr) return null_arg("backward");
  return guarded([&] {
    d2turb::SplatDiagnostics diag;
    d2turb::BackwardFlow bwd = d2turb::forward_splat_invert(d2turb::DisplacementField{forward->vectors}, workers, &diag);
    if (hole_count != nullptr) *hole_count = diag.hole_count;
    *backward = new d2t_flow{std::move(bwd.vectors)};
    return D2T_OK;
  });
}

void d2t_flow_free(d2t_flow* flow) { delete flow; }

d2t_status d2t_generate(const d2t_config* config, const d2t_generate_options* options, d2t_generate_result* result) {
  if (config == nullptr) return null_arg("config");
  if (options == nullptr) return null_arg("options");
  if (options->clean_dir == nullptr || options->depth_dir == nullptr || options->out_dir == nullptr) {
    return null_arg("options paths");
  }
  return guarded([&] {
    const auto found = d2turb::discover_scenes(options->clean_dir, options->depth_dir, config->value.output.depth_suffix);
    d2turb::GenerateOptions go;
    go.workers = options->workers == 0 ? 1 : options->workers;
    for (const auto& stem : found.missing_depth) {
      if (options->strict) {
        throw d2turb::Error(d2turb::ErrorCode::InvalidInput, "no depth map for " + stem, "discover");
      }
      d2turb::logger().warn("skipping {}: no depth map", stem);
      go.skipped.push_back(stem + ": no depth map");
    }
    if (found.pairs.empty()) {
      throw d2turb::Error(d2turb::ErrorCode::InvalidInput, "no paired clean/depth images found", "discover");
    }
    const auto summary = d2turb::generate_dataset(config->value, d2turb::scene_inputs(found.pairs), options->out_dir, go);
    if (result != nullptr) {
      *result = d2t_generate_result{summary.written, summary.skipped.size(), summary.category_counts[0],
                                    summary.category_counts[1], summary.category_counts[2]};
    }
    if (summary.partial()) {
      std::string msg = "skipped:";
      for (const auto& s : summary.skipped) msg += "\n  " + s;
      g_last_error = msg;
      return D2T_E_PARTIAL;
    }
    return D2T_OK;
  });
}

d2t_status d2t_degrade(const d2t_config* config, const char* image_path, const char* depth_path, const char* out_dir,
                       int flat_field_baseline, double* d_over_r0) {
  if (config == nullptr) return null_arg("config");
  if (image_path == nullptr || depth_path == nullptr || out_dir == nullptr) return null_arg("path");
  return guarded([&] {
    const auto r = d2turb::degrade_files(config->value, image_path, depth_path, out_dir, flat_field_baseline != 0);
    if (d_over_r0 != nullptr) *d_over_r0 = r.metadata.d_over_r0;
    return D2T_OK;
  });
}

d2t_status d2t_inspect(const char* path, char** report) {
  if (path == nullptr) return null_arg("path");
  if (report == nullptr) return null_arg("report");
  return guarded([&] {
    *report = dup_string(d2turb::inspect_path(path));
    return D2T_OK;
  });
}

d2t_status d2t_validate(const char* dataset_dir, char** report) {
  if (dataset_dir == nullptr) return null_arg("dataset_dir");
  return guarded([&] {
    const auto r = d2turb::validate_dataset(dataset_dir);
    std::ostringstream text;
    text << "samples checked: " << r.samples_checked << "\nflows checked: " << r.flows_checked << "\n";
    for (const auto& issue : r.issues) text << "FAIL " << issue.path << ": " << issue.message << "\n";
    text << (r.ok() ? "dataset valid\n" : "dataset invalid\n");
    if (report != nullptr) *report = dup_string(text.str());
    if (!r.ok()) {
      g_last_error = r.issues.front().path + ": " + r.issues.front().message;
      return D2T_E_INTEGRITY;
    }
    return D2T_OK;
  });
}

d2t_status d2t_dataset_tree_hash(const char* dataset_dir, char** hex) {
  if (dataset_dir == nullptr) return null_arg("dataset_dir");
  if (hex == nullptr) return null_arg("hex");
  return guarded([&] {
    *hex = dup_string(d2turb::dataset_tree_hash(dataset_dir));
    return D2T_OK;
  });
}

d2t_status d2t_selftest(char** report) {
  return guarded([&] {
    const auto checks = d2turb::run_selftest();
    std::ostringstream text;
    bool ok = true;
    for (const auto& c : checks) {
      text << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
      ok = ok && c.passed;
    }
    if (report != nullptr) *report = dup_string(text.str());
    if (!ok) {
      g_last_error = "statistical self-test failed";
      return D2T_E_INTERNAL;
    }
    return D2T_OK;
  });
}

}  // extern "C"
