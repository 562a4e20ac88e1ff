// d2turb command-line front end; talks to the engine through the C API only.
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "d2turb/d2turb.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 64;

struct ConfigDeleter {
  void operator()(d2t_config* c) const { d2t_config_free(c); }
};
using ConfigPtr = std::unique_ptr<d2t_config, ConfigDeleter>;

struct FlowDeleter {
  void operator()(d2t_flow* f) const { d2t_flow_free(f); }
};
using FlowPtr = std::unique_ptr<d2t_flow, FlowDeleter>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { d2t_string_free(s); }
};

int fail(d2t_status st) {
  std::fprintf(stderr, "d2turb: error (%s): %s\n", d2t_status_name(st), d2t_last_error());
  return kExitFatal;
}

// Loads --config if given, otherwise defaults.
d2t_status load_config(const std::string& path, ConfigPtr& out) {
  d2t_config* raw = nullptr;
  const d2t_status st = path.empty() ? d2t_config_default(&raw) : d2t_config_load(path.c_str(), &raw);
  out.reset(raw);
  return st;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-aware turbulence degradation engine", "d2turb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(d2t_version()));
  app.footer("Exit codes: 0 success, 1 fatal error, 2 partial (inputs skipped), 64 usage error.\n"
             "D2TURB_LOG=trace|debug|info|warn|error|off sets the log level.");

  // generate
  std::string config_path, clean_dir, depth_dir, out_dir;
  std::uint64_t seed = 0;
  std::uint64_t count = 0;
  unsigned workers = 1;
  bool strict = false;
  bool skip_missing = false;
  auto* gen = app.add_subcommand("generate", "Generate a paired dataset from clean images and depth maps");
  gen->add_option("--config", config_path, "TOML configuration file (defaults apply when omitted)")->check(CLI::ExistingFile);
  gen->add_option("--clean-dir", clean_dir, "Directory of clean RGB PNGs")->required()->check(CLI::ExistingDirectory);
  gen->add_option("--depth-dir", depth_dir, "Directory of depth PNGs named <stem><suffix>.png")
      ->required()
      ->check(CLI::ExistingDirectory);
  gen->add_option("--out", out_dir, "Output dataset directory (must be empty or absent)")->required();
  auto* gen_seed = gen->add_option("--seed", seed, "Global seed (overrides the config)");
  auto* gen_count = gen->add_option("--count", count, "Total number of samples (overrides the config)")
                        ->check(CLI::PositiveNumber);
  gen->add_option("--workers", workers, "Scene-level worker threads")->check(CLI::Range(1u, 256u));
  auto* strict_flag = gen->add_flag("--strict", strict, "Abort when a clean image has no depth map");
  auto* skip_flag = gen->add_flag("--skip-missing", skip_missing, "Skip clean images without a depth map (default)");
  strict_flag->excludes(skip_flag);

  // degrade
  std::string image_path, depth_path, degrade_config, degrade_out;
  std::uint64_t degrade_seed = 0;
  bool flat_field = false;
  auto* deg = app.add_subcommand("degrade", "Degrade one image and write the sample tuple");
  deg->add_option("--image", image_path, "Clean RGB PNG")->required()->check(CLI::ExistingFile);
  deg->add_option("--depth", depth_path, "Depth PNG (8/16-bit gray, 1 = far)")->required()->check(CLI::ExistingFile);
  deg->add_option("--config", degrade_config, "TOML configuration file")->check(CLI::ExistingFile);
  deg->add_option("--out", degrade_out, "Output directory")->required();
  auto* deg_seed = deg->add_option("--seed", degrade_seed, "Global seed (overrides the config)");
  deg->add_flag("--flat-field", flat_field, "Also write the uniform-strength baseline to <out>/flat_field");

  // invert-flow
  std::string flow_in, flow_out;
  unsigned invert_workers = 1;
  auto* inv = app.add_subcommand("invert-flow", "Invert a forward D2FL displacement into a backward flow");
  inv->add_option("--in", flow_in, "Forward flow (.d2fl)")->required()->check(CLI::ExistingFile);
  inv->add_option("--out", flow_out, "Backward flow output (.d2fl)")->required();
  inv->add_option("--workers", invert_workers, "Splat worker threads")->check(CLI::Range(1u, 256u));

  // inspect
  std::string inspect_in;
  auto* ins = app.add_subcommand("inspect", "Print header and metadata of a dataset, sample, D2FL or PNG");
  ins->add_option("--in", inspect_in, "Path to inspect")->required()->check(CLI::ExistingPath);

  // validate
  std::string dataset_dir;
  auto* val = app.add_subcommand("validate", "Verify manifest, digests, categories and flows of a dataset");
  val->add_option("--dataset", dataset_dir, "Dataset root")->required()->check(CLI::ExistingDirectory);

  auto* self = app.add_subcommand("selftest", "Run the statistical self-test suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*gen) {
    ConfigPtr cfg;
    if (d2t_status st = load_config(config_path, cfg); st != D2T_OK) return fail(st);
    if (*gen_seed) {
      if (d2t_status st = d2t_config_set_seed(cfg.get(), seed); st != D2T_OK) return fail(st);
    }
    if (*gen_count) {
      if (d2t_status st = d2t_config_set_sample_count(cfg.get(), count); st != D2T_OK) return fail(st);
    }
    d2t_generate_options opts{clean_dir.c_str(), depth_dir.c_str(), out_dir.c_str(), workers, strict ? 1 : 0};
    d2t_generate_result res{};
    const d2t_status st = d2t_generate(cfg.get(), &opts, &res);
    if (st != D2T_OK && st != D2T_E_PARTIAL) return fail(st);
    if (st == D2T_E_PARTIAL) std::fprintf(stderr, "d2turb: %s\n", d2t_last_error());
    std::printf("generated %llu samples (weak %llu, medium %llu, strong %llu), skipped %llu\n",
                static_cast<unsigned long long>(res.written), static_cast<unsigned long long>(res.weak),
                static_cast<unsigned long long>(res.medium), static_cast<unsigned long long>(res.strong),
                static_cast<unsigned long long>(res.skipped));
    return st == D2T_E_PARTIAL ? kExitPartial : kExitOk;
  }

  if (*deg) {
    ConfigPtr cfg;
    if (d2t_status st = load_config(degrade_config, cfg); st != D2T_OK) return fail(st);
    if (*deg_seed) {
      if (d2t_status st = d2t_config_set_seed(cfg.get(), degrade_seed); st != D2T_OK) return fail(st);
    }
    double d_over_r0 = 0.0;
    const d2t_status st =
        d2t_degrade(cfg.get(), image_path.c_str(), depth_path.c_str(), degrade_out.c_str(), flat_field ? 1 : 0, &d_over_r0);
    if (st != D2T_OK) return fail(st);
    std::printf("wrote %s (D/r0 %.4f)%s\n", degrade_out.c_str(), d_over_r0, flat_field ? " with flat_field baseline" : "");
    return kExitOk;
  }

  if (*inv) {
    d2t_flow* raw = nullptr;
    if (d2t_status st = d2t_flow_read(flow_in.c_str(), &raw); st != D2T_OK) return fail(st);
    FlowPtr fwd(raw);
    d2t_flow* bwd_raw = nullptr;
    std::size_t holes = 0;
    if (d2t_status st = d2t_flow_invert(fwd.get(), invert_workers, &bwd_raw, &holes); st != D2T_OK) return fail(st);
    FlowPtr bwd(bwd_raw);
    if (d2t_status st = d2t_flow_write(bwd.get(), flow_out.c_str()); st != D2T_OK) return fail(st);
    std::printf("wrote %s (%zu hole pixels filled)\n", flow_out.c_str(), holes);
    return kExitOk;
  }

  if (*ins) {
    OwnedString report;
    if (d2t_status st = d2t_inspect(inspect_in.c_str(), &report.s); st != D2T_OK) return fail(st);
    std::fputs(report.s, stdout);
    return kExitOk;
  }

  if (*val) {
    OwnedString report;
    const d2t_status st = d2t_validate(dataset_dir.c_str(), &report.s);
    if (report.s != nullptr) std::fputs(report.s, st == D2T_OK ? stdout : stderr);
    if (st == D2T_E_INTEGRITY) return kExitFatal;
    if (st != D2T_OK) return fail(st);
    return kExitOk;
  }

  if (*self) {
    OwnedString report;
    const d2t_status st = d2t_selftest(&report.s);
    if (report.s != nullptr) std::fputs(report.s, stdout);
    if (st != D2T_OK) return fail(st);
    return kExitOk;
  }
  return kExitUsage;
}
