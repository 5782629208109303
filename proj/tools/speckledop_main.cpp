// speckledop: estimate the squared degree of polarization of coherent light
// from speckled intensity images, and benchmark the two-image correlated
// estimator against the four-image and orthogonal-state-contrast estimators
// through Monte Carlo campaigns.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "spdop/config.hpp"
#include "spdop/figures.hpp"
#include "spdop/imaging.hpp"

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw spdop::ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return buffer.str();
}

std::string pfmap_bytes(int width, int height,
                        std::span<const spdop::Grid<double>* const> channels) {
  std::ostringstream os(std::ios::binary);
  spdop::write_pfmap(os, width, height, channels);
  return os.str();
}

std::string csv_bytes(const spdop::Grid<double>& grid) {
  std::ostringstream os;
  spdop::write_grid_csv(os, grid);
  return os.str();
}

spdop::Grid<double> to_double_grid(const spdop::Grid<std::uint8_t>& g) {
  spdop::Grid<double> out(g.width, g.height);
  for (std::size_t i = 0; i < g.data.size(); ++i) out.data[i] = g.data[i];
  return out;
}

spdop::Grid<double> to_double_grid(const spdop::Grid<std::int32_t>& g) {
  spdop::Grid<double> out(g.width, g.height);
  for (std::size_t i = 0; i < g.data.size(); ++i) out.data[i] = g.data[i];
  return out;
}

void run_scene(const spdop::RunConfig& config, unsigned workers) {
  const spdop::SceneRunSpec& run = *config.scene;
  bool keep_cross = false;
  for (spdop::EstimatorKind k : run.estimators)
    if (k == spdop::EstimatorKind::FourImage) keep_cross = true;

  const spdop::ImagePair pair = spdop::render_scene(run.scene, keep_cross, workers);
  const spdop::OsciMap contrast = spdop::osci_map(pair);

  const fs::path out(config.output_dir);
  const int w = run.scene.width;
  const int h = run.scene.height;
  const bool small_image = static_cast<long>(w) * h <= 65536;
  const bool want_csv = config.format == spdop::OutputFormat::Csv;

  std::vector<std::pair<fs::path, std::string>> files;
  auto add_map = [&](const std::string& name, const spdop::Grid<double>& grid) {
    const spdop::Grid<double>* chan[] = {&grid};
    files.emplace_back(out / (name + ".pfmap"), pfmap_bytes(w, h, chan));
    if (want_csv && small_image) files.emplace_back(out / (name + ".csv"), csv_bytes(grid));
  };

  add_map("scene_i1", pair.i1);
  add_map("scene_i2", pair.i2);
  add_map("osci", contrast.rho);
  add_map("osci_mask", to_double_grid(contrast.degenerate));

  bool wrote_window_map = false;
  for (spdop::EstimatorKind kind : run.estimators) {
    const spdop::EstimateMap est = spdop::estimate_map(pair, run.window, kind, workers);
    add_map(std::string("p2_") + spdop::estimator_token(kind), est.p2);
    if (!wrote_window_map) {
      add_map("window_n", to_double_grid(est.window_n));
      wrote_window_map = true;
    }
  }

  if (config.format == spdop::OutputFormat::Json) {
    nlohmann::ordered_json doc;
    doc["width"] = w;
    doc["height"] = h;
    doc["window"] = run.window;
    doc["seed"] = run.scene.seed;
    files.emplace_back(out / "scene_summary.json", doc.dump(2) + "\n");
  }

  for (const auto& [path, content] : files) spdop::write_file_atomic(path, content);
  for (const auto& [path, content] : files) std::cout << path.string() << '\n';
}

void run_campaign_mode(const spdop::RunConfig& config, unsigned workers) {
  const spdop::CampaignReport report = spdop::run_campaign(*config.campaign, workers);
  const bool as_json = config.format == spdop::OutputFormat::Json;
  const fs::path out(config.output_dir);

  // assemble every table before the first write so error paths leave no files
  std::vector<spdop::fig_detail::Table> tables;
  tables.push_back(spdop::build_campaign_table(report));
  if (config.mode == spdop::RunMode::Figures)
    for (auto& t : spdop::build_figure_tables(report)) tables.push_back(std::move(t));

  for (const auto& t : tables) {
    const fs::path path = out / (t.name + (as_json ? ".json" : ".csv"));
    spdop::write_file_atomic(path, as_json ? t.to_json() : t.to_csv());
    std::cout << path.string() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"degree-of-polarization estimation from speckled intensity images"};

  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> realizations;
  unsigned workers = 0;

  CLI::Option* config_opt = app.add_option("--config", config_path, "run configuration file");
  CLI::Option* preset_opt =
      app.add_option("--preset", preset, "built-in preset: paper-default or paper-sweep");
  app.add_option("--seed", seed, "master seed (overrides config and SPECKLE_DOP_SEED)");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--format", format, "output format: csv or json (overrides config)")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--workers", workers, "worker-count hint; never changes results");
  app.add_option("--realizations", realizations, "override the campaign realization count");
  config_opt->excludes(preset_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    spdop::RunConfig config;
    if (!preset.empty())
      config = spdop::preset_config(preset);
    else if (!config_path.empty())
      config = spdop::parse_config(read_file(config_path));
    else
      throw spdop::ConfigError("one of --config or --preset is required");

    spdop::apply_seed_override(config, seed, std::getenv("SPECKLE_DOP_SEED"));
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!format.empty())
      config.format = format == "json" ? spdop::OutputFormat::Json : spdop::OutputFormat::Csv;
    if (realizations) {
      if (!config.campaign)
        throw spdop::ConfigError("--realizations only applies to campaign or figures runs");
      if (*realizations < 2)
        throw spdop::ConfigError("--realizations must be at least 2");
      config.campaign->realizations = *realizations;
    }

    std::filesystem::create_directories(config.output_dir);

    if (config.mode == spdop::RunMode::Scene)
      run_scene(config, workers);
    else
      run_campaign_mode(config, workers);
  } catch (const spdop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
