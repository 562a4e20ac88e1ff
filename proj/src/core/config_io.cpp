#include "core/config_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string_view>
#include <variant>
#include <vector>

#include "core/error.hpp"

namespace d2turb {

namespace {

struct TomlValue;
using TomlArray = std::vector<TomlValue>;

struct TomlInt {
  bool negative = false;
  std::uint64_t magnitude = 0;
};

struct TomlValue {
  std::variant<bool, TomlInt, double, std::string, TomlArray> v;
  int line = 0;
};

using TomlTable = std::map<std::string, TomlValue>;
using TomlDoc = std::map<std::string, TomlTable>;  // "" = root table

class TomlParser {
 public:
  TomlParser(std::string_view text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  TomlDoc parse() {
    TomlDoc doc;
    doc[""];
    std::string table;
    while (pos_ < text_.size()) {
      skip_blank();
      if (at_end_of_line()) {
        end_line();
        continue;
      }
      if (peek() == '[') {
        ++pos_;
        skip_ws();
        table = bare_key();
        skip_ws();
        expect(']');
        if (table.empty()) fail("empty table name");
        if (doc.count(table) != 0) fail("duplicate table [" + table + "]");
        doc[table];
        end_line();
        continue;
      }
      const std::string key = bare_key();
      if (key.empty()) fail("expected a key");
      skip_ws();
      expect('=');
      skip_ws();
      TomlValue value = parse_value();
      auto& t = doc[table];
      if (t.count(key) != 0) fail("duplicate key '" + key + "'");
      t.emplace(key, std::move(value));
      end_line();
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::Parse, origin_ + ":" + std::to_string(line_) + ": " + what);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (peek() == ' ' || peek() == '\t') ++pos_;
  }
  void skip_blank() { skip_ws(); }
  bool at_end_of_line() const {
    const char c = peek();
    return c == '\0' || c == '\n' || c == '\r' || c == '#';
  }
  void end_line() {
    skip_ws();
    if (peek() == '#') {
      while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    }
    if (peek() == '\r') ++pos_;
    if (pos_ >= text_.size()) return;
    if (peek() != '\n') fail(std::string("unexpected character '") + peek() + "'");
    ++pos_;
    ++line_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string bare_key() {
    const std::size_t start = pos_;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-') ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  // Skips whitespace, newlines and comments inside arrays.
  void skip_array_space() {
    for (;;) {
      skip_ws();
      if (peek() == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      }
      if (peek() == '\r') {
        ++pos_;
        continue;
      }
      if (peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      return;
    }
  }

  TomlValue parse_value() {
    TomlValue out;
    out.line = line_;
    const char c = peek();
    if (c == '"') {
      out.v = parse_string();
    } else if (c == '[') {
      ++pos_;
      TomlArray items;
      skip_array_space();
      while (peek() != ']') {
        if (pos_ >= text_.size()) fail("unterminated array");
        items.push_back(parse_value());
        if (std::holds_alternative<TomlArray>(items.back().v)) fail("nested arrays are not supported");
        skip_array_space();
        if (peek() == ',') {
          ++pos_;
          skip_array_space();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      ++pos_;
      out.v = std::move(items);
    } else if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      out.v = true;
    } else if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      out.v = false;
    } else {
      parse_number(out);
    }
    return out;
  }

  std::string parse_string() {
    expect('"');
    std::string s;
    for (;;) {
      if (pos_ >= text_.size() || peek() == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') return s;
      if (c != '\\') {
        s.push_back(c);
        continue;
      }
      const char e = text_[pos_++];
      switch (e) {
        case '"': s.push_back('"'); break;
        case '\\': s.push_back('\\'); break;
        case 'n': s.push_back('\n'); break;
        case 't': s.push_back('\t'); break;
        case 'r': s.push_back('\r'); break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  void parse_number(TomlValue& out) {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                                   peek() == '-' || peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string token(text_.substr(start, pos_ - start));
    if (token.empty()) fail("expected a value");
    std::string body = token;
    bool negative = false;
    if (body[0] == '+' || body[0] == '-') {
      negative = body[0] == '-';
      body.erase(0, 1);
    }
    if (body == "inf" || body == "nan") {
      out.v = body == "inf" ? (negative ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity())
                            : std::numeric_limits<double>::quiet_NaN();
      return;
    }
    std::string digits;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '_') {
        if (i == 0 || i + 1 == body.size() || !std::isdigit(static_cast<unsigned char>(body[i - 1])) ||
            !std::isdigit(static_cast<unsigned char>(body[i + 1]))) {
          fail("misplaced '_' in number '" + token + "'");
        }
        continue;
      }
      digits.push_back(body[i]);
    }
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    if (digits.empty() || !std::isdigit(static_cast<unsigned char>(digits[0]))) fail("invalid value '" + token + "'");
    if (!is_float) {
      if (digits.size() > 1 && digits[0] == '0') fail("leading zeros in integer '" + token + "'");
      TomlInt v{negative, 0};
      const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), v.magnitude);
      if (res.ec == std::errc::result_out_of_range) fail("integer out of range '" + token + "'");
      if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size()) fail("invalid integer '" + token + "'");
      out.v = v;
      return;
    }
    double d = 0.0;
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), d);
    if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size()) fail("invalid float '" + token + "'");
    const std::size_t dot = digits.find('.');
    if (dot != std::string::npos && (dot + 1 >= digits.size() || !std::isdigit(static_cast<unsigned char>(digits[dot + 1])))) {
      fail("a decimal point must be followed by digits in '" + token + "'");
    }
    out.v = negative ? -d : d;
  }

  std::string_view text_;
  std::string origin_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

// Typed, consuming view over a parsed table.
class Fields {
 public:
  Fields(TomlTable table, std::string prefix) : table_(std::move(table)), prefix_(std::move(prefix)) {}

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const TomlValue* take(const std::string& key) {
    auto it = table_.find(key);
    if (it == table_.end()) return nullptr;
    taken_.push_back(std::move(it->second));
    table_.erase(it);
    return &taken_.back();
  }

  void finish() const {
    if (!table_.empty()) throw Error(ErrorCode::Config, "unknown key '" + path(table_.begin()->first) + "'");
  }

  [[noreturn]] void type_error(const std::string& key, const char* expected) const {
    throw Error(ErrorCode::Config, path(key) + ": expected " + expected);
  }

  static bool is_number(const TomlValue& v) {
    return std::holds_alternative<double>(v.v) || std::holds_alternative<TomlInt>(v.v);
  }
  static double as_double(const TomlValue& v) {
    if (const auto* i = std::get_if<TomlInt>(&v.v)) {
      const auto m = static_cast<double>(i->magnitude);
      return i->negative ? -m : m;
    }
    return std::get<double>(v.v);
  }

  void number(const std::string& key, double& dst) {
    if (const TomlValue* v = take(key)) {
      if (!is_number(*v)) type_error(key, "a number");
      dst = as_double(*v);
    }
  }
  void integer(const std::string& key, int& dst) {
    if (const TomlValue* v = take(key)) {
      const auto* i = std::get_if<TomlInt>(&v->v);
      if (i == nullptr) type_error(key, "an integer");
      if (i->magnitude > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) type_error(key, "a small integer");
      dst = static_cast<int>(i->magnitude) * (i->negative ? -1 : 1);
    }
  }
  void unsigned_integer(const std::string& key, std::uint64_t& dst) {
    if (const TomlValue* v = take(key)) {
      const auto* i = std::get_if<TomlInt>(&v->v);
      if (i == nullptr || (i->negative && i->magnitude != 0)) type_error(key, "a non-negative integer");
      dst = i->magnitude;
    }
  }
  void boolean(const std::string& key, bool& dst) {
    if (const TomlValue* v = take(key)) {
      const auto* b = std::get_if<bool>(&v->v);
      if (b == nullptr) type_error(key, "a boolean");
      dst = *b;
    }
  }
  void string(const std::string& key, std::string& dst) {
    if (const TomlValue* v = take(key)) {
      const auto* s = std::get_if<std::string>(&v->v);
      if (s == nullptr) type_error(key, "a string");
      dst = *s;
    }
  }
  const TomlArray* pair(const std::string& key) {
    const TomlValue* v = take(key);
    if (v == nullptr) return nullptr;
    const auto* a = std::get_if<TomlArray>(&v->v);
    if (a == nullptr || a->size() != 2) type_error(key, "an array of two values");
    return a;
  }

 private:
  TomlTable table_;
  std::string prefix_;
  std::deque<TomlValue> taken_;
};

std::string toml_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

std::string toml_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out + "\"";
}

}  // namespace

OpticalConfig parse_config_text(const std::string& text, const std::string& origin) {
  TomlDoc doc = TomlParser(text, origin).parse();
  OpticalConfig cfg;

  for (const auto& [name, table] : doc) {
    if (name.empty()) continue;
    if (name != "geometry" && name != "strength" && name != "zernike" && name != "tilt" && name != "output") {
      throw Error(ErrorCode::Config, "unknown table '[" + name + "]'");
    }
  }

  {
    Fields root(doc[""], "");
    root.unsigned_integer("seed", cfg.global_seed);
    std::uint64_t count = cfg.sample_count;
    root.unsigned_integer("sample_count", count);
    cfg.sample_count = static_cast<std::size_t>(count);
    root.boolean("flat_field_mode", cfg.flat_field_mode);
    root.finish();
  }
  {
    Fields f(doc["geometry"], "geometry");
    f.number("L", cfg.geometry.path_length_m);
    f.number("s", cfg.geometry.baseline_offset);
    if (const TomlValue* v = f.take("z_max")) {
      if (const auto* s = std::get_if<std::string>(&v->v)) {
        if (*s == "path") {
          cfg.geometry.z_max_mode = ZmaxMode::Path;
        } else if (*s == "scene") {
          cfg.geometry.z_max_mode = ZmaxMode::Scene;
        } else {
          throw Error(ErrorCode::Config, "geometry.z_max: expected a number, \"path\" or \"scene\"");
        }
      } else if (Fields::is_number(*v)) {
        cfg.geometry.z_max_mode = ZmaxMode::Fixed;
        cfg.geometry.z_max_m = Fields::as_double(*v);
      } else {
        f.type_error("z_max", "a number, \"path\" or \"scene\"");
      }
    }
    f.finish();
  }
  {
    Fields f(doc["strength"], "strength");
    if (const TomlArray* range = f.pair("d_over_r0")) {
      if (!Fields::is_number((*range)[0]) || !Fields::is_number((*range)[1])) f.type_error("d_over_r0", "two numbers");
      cfg.strength.d_over_r0_min = Fields::as_double((*range)[0]);
      cfg.strength.d_over_r0_max = Fields::as_double((*range)[1]);
    }
    std::string sampling = strength_sampling_name(cfg.strength.sampling);
    f.string("sampling", sampling);
    if (sampling == "uniform") {
      cfg.strength.sampling = StrengthSampling::Uniform;
    } else if (sampling == "stratified") {
      cfg.strength.sampling = StrengthSampling::Stratified;
    } else {
      throw Error(ErrorCode::Config, "strength.sampling: expected \"uniform\" or \"stratified\"");
    }
    f.finish();
  }
  {
    Fields f(doc["zernike"], "zernike");
    f.integer("modes", cfg.zernike.modes);
    f.integer("pupil_resolution", cfg.zernike.pupil_resolution);
    f.integer("kernel_size", cfg.zernike.kernel_size);
    if (const TomlArray* grid = f.pair("grid")) {
      const auto* gy = std::get_if<TomlInt>(&(*grid)[0].v);
      const auto* gx = std::get_if<TomlInt>(&(*grid)[1].v);
      if (gy == nullptr || gx == nullptr || gy->negative || gx->negative || gy->magnitude > 4096 || gx->magnitude > 4096) {
        f.type_error("grid", "two non-negative integers");
      }
      cfg.zernike.grid_y = static_cast<int>(gy->magnitude);
      cfg.zernike.grid_x = static_cast<int>(gx->magnitude);
    }
    f.number("correlation_length", cfg.zernike.correlation_length);
    f.finish();
  }
  {
    Fields f(doc["tilt"], "tilt");
    if (const TomlValue* v = f.take("tilt_rms_px")) {
      const auto* s = std::get_if<std::string>(&v->v);
      if (s != nullptr && *s == "derived") {
        cfg.tilt.tilt_rms_px.reset();
      } else if (Fields::is_number(*v)) {
        cfg.tilt.tilt_rms_px = Fields::as_double(*v);
      } else {
        f.type_error("tilt_rms_px", "a number or \"derived\"");
      }
    }
    f.number("px_per_tilt_unit", cfg.tilt.px_per_tilt_unit);
    f.number("corr_length_px", cfg.tilt.corr_length_px);
    f.number("inner_scale_px", cfg.tilt.inner_scale_px);
    f.number("spectral_exponent", cfg.tilt.spectral_exponent);
    std::string mode = tilt_mode_name(cfg.tilt.mode);
    f.string("mode", mode);
    if (mode == "independent") {
      cfg.tilt.mode = TiltFieldMode::Independent;
    } else if (mode == "phase_gradient") {
      cfg.tilt.mode = TiltFieldMode::PhaseGradient;
    } else {
      throw Error(ErrorCode::Config, "tilt.mode: expected \"independent\" or \"phase_gradient\"");
    }
    f.finish();
  }
  {
    Fields f(doc["output"], "output");
    f.boolean("persist_blur", cfg.output.persist_blur);
    f.boolean("debug", cfg.output.debug);
    f.string("depth_suffix", cfg.output.depth_suffix);
    f.finish();
  }

  cfg.validate();
  return cfg;
}

OpticalConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path.string());
}

std::string serialize_config(const OpticalConfig& c) {
  std::ostringstream out;
  out << "seed = " << c.global_seed << "\n";
  out << "sample_count = " << c.sample_count << "\n";
  out << "flat_field_mode = " << (c.flat_field_mode ? "true" : "false") << "\n";
  out << "\n[geometry]\n";
  out << "L = " << toml_double(c.geometry.path_length_m) << "\n";
  out << "s = " << toml_double(c.geometry.baseline_offset) << "\n";
  if (c.geometry.z_max_mode == ZmaxMode::Fixed) {
    out << "z_max = " << toml_double(c.geometry.z_max_m) << "\n";
  } else {
    out << "z_max = " << toml_string(z_max_mode_name(c.geometry.z_max_mode)) << "\n";
  }
  out << "\n[strength]\n";
  out << "d_over_r0 = [" << toml_double(c.strength.d_over_r0_min) << ", " << toml_double(c.strength.d_over_r0_max)
      << "]\n";
  out << "sampling = " << toml_string(strength_sampling_name(c.strength.sampling)) << "\n";
  out << "\n[zernike]\n";
  out << "modes = " << c.zernike.modes << "\n";
  out << "pupil_resolution = " << c.zernike.pupil_resolution << "\n";
  out << "kernel_size = " << c.zernike.kernel_size << "\n";
  out << "grid = [" << c.zernike.grid_y << ", " << c.zernike.grid_x << "]\n";
  out << "correlation_length = " << toml_double(c.zernike.correlation_length) << "\n";
  out << "\n[tilt]\n";
  if (c.tilt.tilt_rms_px) {
    out << "tilt_rms_px = " << toml_double(*c.tilt.tilt_rms_px) << "\n";
  } else {
    out << "tilt_rms_px = \"derived\"\n";
  }
  out << "px_per_tilt_unit = " << toml_double(c.tilt.px_per_tilt_unit) << "\n";
  out << "corr_length_px = " << toml_double(c.tilt.corr_length_px) << "\n";
  out << "inner_scale_px = " << toml_double(c.tilt.inner_scale_px) << "\n";
  out << "spectral_exponent = " << toml_double(c.tilt.spectral_exponent) << "\n";
  out << "mode = " << toml_string(tilt_mode_name(c.tilt.mode)) << "\n";
  out << "\n[output]\n";
  out << "persist_blur = " << (c.output.persist_blur ? "true" : "false") << "\n";
  out << "debug = " << (c.output.debug ? "true" : "false") << "\n";
  out << "depth_suffix = " << toml_string(c.output.depth_suffix) << "\n";
  return out.str();
}

Json config_to_json(const OpticalConfig& c) {
  auto number_or_inf = [](double v) -> Json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  Json j;
  j["seed"] = c.global_seed;
  j["sample_count"] = c.sample_count;
  j["flat_field_mode"] = c.flat_field_mode;
  j["geometry"] = {{"L", c.geometry.path_length_m},
                   {"s", c.geometry.baseline_offset},
                   {"z_max_mode", z_max_mode_name(c.geometry.z_max_mode)}};
  if (c.geometry.z_max_mode == ZmaxMode::Fixed) j["geometry"]["z_max"] = c.geometry.z_max_m;
  j["strength"] = {{"d_over_r0", Json::array({c.strength.d_over_r0_min, c.strength.d_over_r0_max})},
                   {"sampling", strength_sampling_name(c.strength.sampling)}};
  j["zernike"] = {{"modes", c.zernike.modes},
                  {"pupil_resolution", c.zernike.pupil_resolution},
                  {"kernel_size", c.zernike.kernel_size},
                  {"grid", Json::array({c.zernike.grid_y, c.zernike.grid_x})},
                  {"correlation_length", number_or_inf(c.zernike.correlation_length)}};
  j["tilt"] = {{"tilt_rms_px", c.tilt.tilt_rms_px ? Json(*c.tilt.tilt_rms_px) : Json("derived")},
               {"px_per_tilt_unit", c.tilt.px_per_tilt_unit},
               {"corr_length_px", c.tilt.corr_length_px},
               {"inner_scale_px", c.tilt.inner_scale_px},
               {"spectral_exponent", c.tilt.spectral_exponent},
               {"mode", tilt_mode_name(c.tilt.mode)}};
  j["output"] = {{"persist_blur", c.output.persist_blur},
                 {"debug", c.output.debug},
                 {"depth_suffix", c.output.depth_suffix}};
  return j;
}

}  // namespace d2turb
