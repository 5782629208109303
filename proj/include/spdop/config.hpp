#pragma once

// Run configuration: a strict line-oriented "key = value" document with
// [matrix <name>] and [region <name>] sections. Unknown keys are errors, not
// warnings, and coherency matrices are validated at parse time. The same
// structures serialize back to text so configurations round-trip exactly.

#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spdop/imaging.hpp"
#include "spdop/montecarlo.hpp"

namespace spdop {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                    : message),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

enum class RunMode { Campaign, Scene, Figures };
enum class OutputFormat { Csv, Json };

struct SceneRunSpec {
  SceneSpec scene;
  int window = 31;
  std::vector<EstimatorKind> estimators;

  friend bool operator==(const SceneRunSpec&, const SceneRunSpec&) = default;
};

struct RunConfig {
  RunMode mode = RunMode::Campaign;
  std::optional<CampaignSpec> campaign;  // present for Campaign and Figures modes
  std::optional<SceneRunSpec> scene;     // present for Scene mode
  std::string output_dir = ".";
  OutputFormat format = OutputFormat::Csv;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// -------------------------------------------------------------------------
// value parsing helpers

namespace cfg_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string_view piece =
        trim(s.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (piece.empty()) throw std::invalid_argument("empty list element");
    out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename Int>
inline Int parse_int(std::string_view s, int line, const std::string& key) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + std::string(s) + "' is not a valid integer", line);
  return value;
}

inline double parse_real(std::string_view s, int line, const std::string& key) {
  double value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + std::string(s) + "' is not a valid number", line);
  return value;
}

inline EstimatorKind parse_estimator(std::string_view token, int line) {
  if (token == "four_image") return EstimatorKind::FourImage;
  if (token == "osci") return EstimatorKind::Osci;
  if (token == "correlated_pair") return EstimatorKind::CorrelatedPair;
  throw ConfigError("unknown estimator '" + std::string(token) +
                        "' (expected four_image, osci or correlated_pair)",
                    line);
}

// one parsed "key = value" entry
struct Entry {
  int line;
  std::string key;
  std::string value;
  bool used = false;
};

struct Section {
  int line;
  std::string type;  // "matrix" or "region"
  std::string name;
  std::vector<Entry> entries;

  const Entry* find(std::string_view key) const {
    for (const Entry& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }
};

struct Document {
  std::vector<Entry> top;  // entries before any section
  std::vector<Section> sections;

  Entry* find_top(std::string_view key) {
    for (Entry& e : top)
      if (e.key == key) return &e;
    return nullptr;
  }
};

inline Document tokenize(std::string_view text) {
  Document doc;
  Section* current = nullptr;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
    ++line_no;
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;

    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;

    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw ConfigError("malformed section header '" + std::string(stripped) + "'", line_no);
      const std::string_view inner = trim(stripped.substr(1, stripped.size() - 2));
      const std::size_t space = inner.find(' ');
      if (space == std::string_view::npos)
        throw ConfigError("section header needs a name: '" + std::string(stripped) + "'", line_no);
      const std::string_view type = trim(inner.substr(0, space));
      const std::string_view name = trim(inner.substr(space + 1));
      if (type != "matrix" && type != "region")
        throw ConfigError("unknown section type '" + std::string(type) + "'", line_no);
      if (name.empty() || name.find(' ') != std::string_view::npos)
        throw ConfigError("invalid section name '" + std::string(name) + "'", line_no);
      for (const Section& s : doc.sections)
        if (s.type == type && s.name == name)
          throw ConfigError("duplicate " + std::string(type) + " section '" + std::string(name) + "'",
                            line_no);
      doc.sections.push_back({line_no, std::string(type), std::string(name), {}});
      current = &doc.sections.back();
      continue;
    }

    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("expected 'key = value', got '" + std::string(stripped) + "'", line_no);
    const std::string key{trim(stripped.substr(0, eq))};
    const std::string value{trim(stripped.substr(eq + 1))};
    if (key.empty()) throw ConfigError("missing key before '='", line_no);
    if (value.empty()) throw ConfigError("key '" + key + "' has an empty value", line_no);

    std::vector<Entry>& dest = current ? current->entries : doc.top;
    for (const Entry& e : dest)
      if (e.key == key) throw ConfigError("duplicate key '" + key + "'", line_no);
    dest.push_back({line_no, key, value, false});
  }
  return doc;
}

inline CoherencyMatrix matrix_from_section(const Section& sec) {
  double a1 = 0.0, a4 = 0.0, a2_re = 0.0, a2_im = 0.0;
  bool saw_a1 = false, saw_a4 = false;
  for (const Entry& e : sec.entries) {
    if (e.key == "a1") {
      a1 = parse_real(e.value, e.line, e.key);
      saw_a1 = true;
    } else if (e.key == "a4") {
      a4 = parse_real(e.value, e.line, e.key);
      saw_a4 = true;
    } else if (e.key == "a2_re") {
      a2_re = parse_real(e.value, e.line, e.key);
    } else if (e.key == "a2_im") {
      a2_im = parse_real(e.value, e.line, e.key);
    } else {
      throw ConfigError("unknown key '" + e.key + "' in matrix '" + sec.name + "'", e.line);
    }
  }
  if (!saw_a1 || !saw_a4)
    throw ConfigError("matrix '" + sec.name + "' needs both a1 and a4", sec.line);
  try {
    return CoherencyMatrix(a1, Complex(a2_re, a2_im), a4);
  } catch (const std::exception& e) {
    throw ConfigError("matrix '" + sec.name + "': " + e.what(), sec.line);
  }
}

}  // namespace cfg_detail

inline std::uint64_t parse_seed_value(std::string_view text, const std::string& context) {
  std::uint64_t value{};
  const std::string_view s = cfg_detail::trim(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(context + ": '" + std::string(s) + "' is not a valid 64-bit seed");
  return value;
}

// -------------------------------------------------------------------------

inline RunConfig parse_config(std::string_view text) {
  using namespace cfg_detail;
  Document doc = tokenize(text);

  Entry* mode_entry = doc.find_top("mode");
  if (!mode_entry) throw ConfigError("missing required key 'mode'");
  mode_entry->used = true;
  RunConfig config;
  if (mode_entry->value == "campaign")
    config.mode = RunMode::Campaign;
  else if (mode_entry->value == "scene")
    config.mode = RunMode::Scene;
  else if (mode_entry->value == "figures")
    config.mode = RunMode::Figures;
  else
    throw ConfigError("key 'mode': expected campaign, scene or figures, got '" +
                          mode_entry->value + "'",
                      mode_entry->line);

  std::uint64_t seed = 0;
  if (Entry* e = doc.find_top("seed")) {
    e->used = true;
    seed = parse_int<std::uint64_t>(e->value, e->line, e->key);
  }
  if (Entry* e = doc.find_top("out")) {
    e->used = true;
    config.output_dir = e->value;
  }
  if (Entry* e = doc.find_top("format")) {
    e->used = true;
    if (e->value == "csv")
      config.format = OutputFormat::Csv;
    else if (e->value == "json")
      config.format = OutputFormat::Json;
    else
      throw ConfigError("key 'format': expected csv or json, got '" + e->value + "'", e->line);
  }

  // named matrices are shared by both payload kinds
  struct NamedDef {
    std::string name;
    CoherencyMatrix matrix;
    int line;
  };
  std::vector<NamedDef> defs;
  for (const Section& sec : doc.sections)
    if (sec.type == "matrix") defs.push_back({sec.name, matrix_from_section(sec), sec.line});
  auto lookup_matrix = [&](const std::string& name, int line) -> const CoherencyMatrix& {
    for (const NamedDef& d : defs)
      if (d.name == name) return d.matrix;
    throw ConfigError("unknown matrix '" + name + "'", line);
  };

  const bool campaign_like = config.mode != RunMode::Scene;
  if (campaign_like) {
    for (const Section& sec : doc.sections)
      if (sec.type == "region")
        throw ConfigError("region sections are only valid in scene mode", sec.line);

    CampaignSpec spec;
    spec.master_seed = seed;
    if (Entry* e = doc.find_top("realizations")) {
      e->used = true;
      spec.realizations = parse_int<std::size_t>(e->value, e->line, e->key);
    } else {
      throw ConfigError("missing required key 'realizations'");
    }
    if (Entry* e = doc.find_top("n_values")) {
      e->used = true;
      for (const std::string& item : split_list(e->value))
        spec.n_values.push_back(parse_int<std::size_t>(item, e->line, e->key));
    } else {
      throw ConfigError("missing required key 'n_values'");
    }
    if (Entry* e = doc.find_top("estimators")) {
      e->used = true;
      for (const std::string& item : split_list(e->value))
        spec.estimators.push_back(parse_estimator(item, e->line));
    } else {
      spec.estimators = {EstimatorKind::FourImage, EstimatorKind::Osci,
                         EstimatorKind::CorrelatedPair};
    }
    if (Entry* e = doc.find_top("matrices")) {
      e->used = true;
      for (const std::string& name : split_list(e->value))
        spec.matrices.push_back({name, lookup_matrix(name, e->line)});
    } else {
      for (const NamedDef& d : defs) spec.matrices.push_back({d.name, d.matrix});
    }

    // canonical estimator order, duplicates rejected
    std::vector<EstimatorKind> canonical;
    for (EstimatorKind k : {EstimatorKind::FourImage, EstimatorKind::Osci,
                            EstimatorKind::CorrelatedPair}) {
      std::size_t count = 0;
      for (EstimatorKind e : spec.estimators)
        if (e == k) ++count;
      if (count > 1) throw ConfigError("estimator '" + std::string(estimator_token(k)) +
                                       "' listed more than once");
      if (count == 1) canonical.push_back(k);
    }
    spec.estimators = std::move(canonical);

    try {
      validate(spec);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    config.campaign = std::move(spec);
  } else {
    SceneRunSpec run;
    int width = 0, height = 0;
    if (Entry* e = doc.find_top("width")) {
      e->used = true;
      width = parse_int<int>(e->value, e->line, e->key);
    } else {
      throw ConfigError("missing required key 'width'");
    }
    if (Entry* e = doc.find_top("height")) {
      e->used = true;
      height = parse_int<int>(e->value, e->line, e->key);
    } else {
      throw ConfigError("missing required key 'height'");
    }
    if (Entry* e = doc.find_top("window")) {
      e->used = true;
      run.window = parse_int<int>(e->value, e->line, e->key);
    }
    if (Entry* e = doc.find_top("estimators")) {
      e->used = true;
      run.estimators.clear();
      for (const std::string& item : split_list(e->value))
        run.estimators.push_back(parse_estimator(item, e->line));
    } else {
      run.estimators = {EstimatorKind::Osci, EstimatorKind::CorrelatedPair};
    }
    Entry* bg = doc.find_top("background");
    if (!bg) throw ConfigError("missing required key 'background'");
    bg->used = true;

    std::vector<std::pair<PixelRect, CoherencyMatrix>> regions;
    for (const Section& sec : doc.sections) {
      if (sec.type != "region") continue;
      PixelRect rect;
      std::string matrix_name;
      bool saw_x = false, saw_y = false, saw_w = false, saw_h = false;
      for (const Entry& e : sec.entries) {
        if (e.key == "x") {
          rect.x = parse_int<int>(e.value, e.line, e.key);
          saw_x = true;
        } else if (e.key == "y") {
          rect.y = parse_int<int>(e.value, e.line, e.key);
          saw_y = true;
        } else if (e.key == "width") {
          rect.width = parse_int<int>(e.value, e.line, e.key);
          saw_w = true;
        } else if (e.key == "height") {
          rect.height = parse_int<int>(e.value, e.line, e.key);
          saw_h = true;
        } else if (e.key == "matrix") {
          matrix_name = e.value;
        } else {
          throw ConfigError("unknown key '" + e.key + "' in region '" + sec.name + "'", e.line);
        }
      }
      if (!saw_x || !saw_y || !saw_w || !saw_h || matrix_name.empty())
        throw ConfigError("region '" + sec.name + "' needs x, y, width, height and matrix",
                          sec.line);
      regions.emplace_back(rect, lookup_matrix(matrix_name, sec.line));
    }

    run.scene = SceneSpec{width, height, lookup_matrix(bg->value, bg->line),
                          std::move(regions), seed};
    try {
      validate(run.scene);
      if (run.window < 3 || run.window % 2 == 0)
        throw std::invalid_argument("window must be odd and at least 3");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    config.scene = std::move(run);
  }

  // strict parse: every top-level key must have been consumed
  for (const Entry& e : doc.top)
    if (!e.used) throw ConfigError("unknown key '" + e.key + "'", e.line);

  return config;
}

// -------------------------------------------------------------------------

namespace cfg_detail {

inline void append_matrix_section(std::ostringstream& os, const std::string& name,
                                  const CoherencyMatrix& m) {
  os << "[matrix " << name << "]\n";
  os << "a1 = " << shortest_decimal(m.a1()) << '\n';
  os << "a2_re = " << shortest_decimal(m.a2().real()) << '\n';
  os << "a2_im = " << shortest_decimal(m.a2().imag()) << '\n';
  os << "a4 = " << shortest_decimal(m.a4()) << '\n';
}

inline std::string estimator_list(const std::vector<EstimatorKind>& kinds) {
  std::string out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (i) out += ", ";
    out += estimator_token(kinds[i]);
  }
  return out;
}

}  // namespace cfg_detail

/// Canonical text form; parse_config(serialize_config(c)) == c for every
/// valid configuration.
inline std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  switch (config.mode) {
    case RunMode::Campaign: os << "mode = campaign\n"; break;
    case RunMode::Scene: os << "mode = scene\n"; break;
    case RunMode::Figures: os << "mode = figures\n"; break;
  }
  os << "out = " << config.output_dir << '\n';
  os << "format = " << (config.format == OutputFormat::Csv ? "csv" : "json") << '\n';

  if (config.mode == RunMode::Scene) {
    const SceneRunSpec& run = *config.scene;
    os << "seed = " << run.scene.seed << '\n';
    os << "width = " << run.scene.width << '\n';
    os << "height = " << run.scene.height << '\n';
    os << "window = " << run.window << '\n';
    os << "background = background\n";
    os << "estimators = " << cfg_detail::estimator_list(run.estimators) << '\n';
    cfg_detail::append_matrix_section(os, "background", run.scene.background);
    for (std::size_t i = 0; i < run.scene.regions.size(); ++i) {
      const std::string name = "r" + std::to_string(i + 1);
      cfg_detail::append_matrix_section(os, name + "_material", run.scene.regions[i].second);
      os << "[region " << name << "]\n";
      os << "x = " << run.scene.regions[i].first.x << '\n';
      os << "y = " << run.scene.regions[i].first.y << '\n';
      os << "width = " << run.scene.regions[i].first.width << '\n';
      os << "height = " << run.scene.regions[i].first.height << '\n';
      os << "matrix = " << name << "_material\n";
    }
  } else {
    const CampaignSpec& spec = *config.campaign;
    os << "seed = " << spec.master_seed << '\n';
    os << "realizations = " << spec.realizations << '\n';
    os << "n_values = ";
    for (std::size_t i = 0; i < spec.n_values.size(); ++i)
      os << (i ? ", " : "") << spec.n_values[i];
    os << '\n';
    os << "estimators = " << cfg_detail::estimator_list(spec.estimators) << '\n';
    os << "matrices = ";
    for (std::size_t i = 0; i < spec.matrices.size(); ++i)
      os << (i ? ", " : "") << spec.matrices[i].name;
    os << '\n';
    for (const CampaignSpec::NamedMatrix& m : spec.matrices)
      cfg_detail::append_matrix_section(os, m.name, m.matrix);
  }
  return os.str();
}

// -------------------------------------------------------------------------
// built-in presets

/// The six benchmark coherency matrices used by the standard campaigns, with
/// squared polarization degrees close to {0.2, 0.4, 0.5, 0.6, 0.8, 1}.
inline std::vector<CampaignSpec::NamedMatrix> benchmark_matrices() {
  return {
      {"G1", CoherencyMatrix(15.0, Complex(0.2, 0.5), 6.0)},
      {"G2", CoherencyMatrix(16.0, Complex(0.0, 0.0), 3.6)},
      {"G3", CoherencyMatrix(82.0, Complex(0.0, 13.0), 17.0)},
      {"G4", CoherencyMatrix(18.0, Complex(7.0, 8.0), 11.0)},
      {"G5", CoherencyMatrix(30.0, Complex(16.0, -8.0), 14.0)},
      {"G6", CoherencyMatrix(1.25, Complex(0.0, 5.5), 26.0)},
  };
}

/// Built-in run presets:
///   paper-default - all six benchmark matrices, R = 1000, N = 10000
///   paper-sweep   - G1 and G5, R = 1000, N in {100, 500, 1000, 5000, 10000}
inline RunConfig preset_config(std::string_view name) {
  CampaignSpec spec;
  spec.realizations = 1000;
  spec.estimators = {EstimatorKind::FourImage, EstimatorKind::Osci,
                     EstimatorKind::CorrelatedPair};
  if (name == "paper-default") {
    spec.matrices = benchmark_matrices();
    spec.n_values = {10000};
  } else if (name == "paper-sweep") {
    auto all = benchmark_matrices();
    spec.matrices = {all[0], all[4]};
    spec.n_values = {100, 500, 1000, 5000, 10000};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) +
                      "' (expected paper-default or paper-sweep)");
  }
  RunConfig config;
  config.mode = RunMode::Figures;
  config.campaign = std::move(spec);
  return config;
}

/// Seed precedence: --seed flag, then the SPECKLE_DOP_SEED environment
/// variable, then the document's own seed.
inline void apply_seed_override(RunConfig& config, std::optional<std::uint64_t> cli_seed,
                                const char* env_value) {
  std::optional<std::uint64_t> seed = cli_seed;
  if (!seed && env_value)
    seed = parse_seed_value(env_value, "environment variable SPECKLE_DOP_SEED");
  if (!seed) return;
  if (config.campaign) config.campaign->master_seed = *seed;
  if (config.scene) config.scene->scene.seed = *seed;
}

}  // namespace spdop
