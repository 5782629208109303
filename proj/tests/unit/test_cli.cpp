// End-to-end checks of the command-line tool, driven through a subprocess.
// The binary path arrives in the SPECKLEDOP_CLI environment variable.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spdop/imaging.hpp"

using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("spdop_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string cli_path() {
  const char* path = std::getenv("SPECKLEDOP_CLI");
  return path ? path : "";
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& content) {
  std::ofstream os(p);
  os << content;
}

}  // namespace

TEST_CASE("cli produces the figure datasets from a preset") {
  if (cli_path().empty()) SKIP("SPECKLEDOP_CLI not set");
  TempDir dir;
  const fs::path out = dir.path / "run";
  REQUIRE(run("--preset paper-default --realizations 6 --seed 42 --out " + out.string()) == 0);
  REQUIRE(fs::exists(out / "campaign.csv"));
  REQUIRE(fs::exists(out / "fig1.csv"));
  REQUIRE(fs::exists(out / "fig2.csv"));

  const std::string fig1 = slurp(out / "fig1.csv");
  CHECK_THAT(fig1, ContainsSubstring("matrix_id,true_p2,mean_A,mean_I,mean_OSCI"));
  CHECK_THAT(fig1, ContainsSubstring("0.1863038549"));
  CHECK_THAT(fig1, ContainsSubstring("0.9878798081"));
}

TEST_CASE("cli runs are byte-identical across invocations and worker counts") {
  if (cli_path().empty()) SKIP("SPECKLEDOP_CLI not set");
  TempDir dir;
  const fs::path a = dir.path / "a";
  const fs::path b = dir.path / "b";
  const fs::path c = dir.path / "c";
  REQUIRE(run("--preset paper-sweep --realizations 5 --seed 7 --workers 1 --out " + a.string()) ==
          0);
  REQUIRE(run("--preset paper-sweep --realizations 5 --seed 7 --workers 8 --out " + b.string()) ==
          0);
  REQUIRE(run("--preset paper-sweep --realizations 5 --seed 7 --workers 3 --out " + c.string()) ==
          0);
  for (const char* name : {"campaign.csv", "fig3.csv", "fig4.csv", "fig5.csv", "fig6.csv"}) {
    const std::string ref = slurp(a / name);
    CHECK(ref == slurp(b / name));
    CHECK(ref == slurp(c / name));
  }

  // one sweep row per sample count
  const std::string fig4 = slurp(a / "fig4.csv");
  CHECK(std::count(fig4.begin(), fig4.end(), '\n') == 6);  // header + 5 rows
  CHECK_THAT(fig4, ContainsSubstring("n,n_var_A,n_var_I,n_var_OSCI"));
}

TEST_CASE("cli environment seed is overridden by the flag") {
  if (cli_path().empty()) SKIP("SPECKLEDOP_CLI not set");
  TempDir dir;
  const fs::path env_run = dir.path / "env";
  const fs::path flag_run = dir.path / "flag";
  const fs::path plain_run = dir.path / "plain";
  const std::string base = "--preset paper-default --realizations 4 --out ";
  REQUIRE(WEXITSTATUS(std::system((std::string("SPECKLE_DOP_SEED=5 ") + cli_path() + " " + base +
                                   env_run.string() + " >/dev/null 2>&1")
                                      .c_str())) == 0);
  REQUIRE(WEXITSTATUS(std::system((std::string("SPECKLE_DOP_SEED=99 ") + cli_path() + " " + base +
                                   flag_run.string() + " --seed 5 >/dev/null 2>&1")
                                      .c_str())) == 0);
  REQUIRE(run(base + plain_run.string() + " --seed 5") == 0);
  const std::string ref = slurp(plain_run / "fig1.csv");
  CHECK(slurp(env_run / "fig1.csv") == ref);   // env seed applied
  CHECK(slurp(flag_run / "fig1.csv") == ref);  // flag beats env
}

TEST_CASE("cli campaign mode from a config document") {
  if (cli_path().empty()) SKIP("SPECKLEDOP_CLI not set");
  TempDir dir;
  const fs::path cfg = dir.path / "run.cfg";
  write(cfg, "mode = campaign\nseed = 3\nrealizations = 4\nn_values = 64\n"
             "estimators = osci, correlated_pair\n[matrix M]\na1 = 2\na2_re = 0.5\na4 = 1\n");
  const fs::path out = dir.path / "out";
  REQUIRE(run("--config " + cfg.string() + " --out " + out.string()) == 0);
  REQUIRE(fs::exists(out / "campaign.csv"));
  const std::string table = slurp(out / "campaign.csv");
  CHECK_THAT(table, ContainsSubstring("matrix,n,estimator"));
  CHECK_THAT(table, ContainsSubstring("M,64,OSCI"));
  CHECK_THAT(table, ContainsSubstring("M,64,I"));
  CHECK(table.find("M,64,A") == std::string::npos);
}

TEST_CASE("cli scene mode emits parsable maps") {
  if (cli_path().empty()) SKIP("SPECKLEDOP_CLI not set");
  TempDir dir;
  const fs::path cfg = dir.path / "scene.cfg";
  write(cfg,
        "mode = scene\nseed = 11\nwidth = 24\nheight = 18\nwindow = 5\n"
        "background = bg\nestimators = osci, correlated_pair\n"
        "[matrix bg]\na1 = 16\na4 = 3.6\n"
        "[matrix blob]\na1 = 30\na2_re = 16\na2_im = -8\na4 = 14\n"
        "[region spot]\nx = 6\ny = 4\nwidth = 12\nheight = 10\nmatrix = blob\n");
  const fs::path out = dir.path / "maps";
  REQUIRE(run("--config " + cfg.string() + " --out " + out.string()) == 0);

  for (const char* name : {"scene_i1", "scene_i2", "osci", "osci_mask", "p2_osci",
                           "p2_correlated_pair", "window_n"}) {
    const fs::path pf = out / (std::string(name) + ".pfmap");
    REQUIRE(fs::exists(pf));
    std::ifstream is(pf, std::ios::binary);
    const auto map = spdop::read_pfmap(is);
    CHECK(map.width == 24);
    CHECK(map.height == 18);
    CHECK(map.channels == 1);
    REQUIRE(fs::exists(out / (std::string(name) + ".csv")));  // small image: csv twin
  }

  const fs::path jout = dir.path / "maps_json";
  REQUIRE(run("--config " + cfg.string() + " --format json --out " + jout.string()) == 0);
  CHECK(fs::exists(jout / "scene_summary.json"));
  CHECK(fs::exists(jout / "osci.pfmap"));
  CHECK_FALSE(fs::exists(jout / "osci.csv"));
}

TEST_CASE("cli exit codes distinguish config and runtime errors") {
  if (cli_path().empty()) SKIP("SPECKLEDOP_CLI not set");
  TempDir dir;

  CHECK(run("--config " + (dir.path / "absent.cfg").string()) == 2);
  CHECK(run("--preset nope") == 2);
  CHECK(run("") == 2);  // neither --config nor --preset

  const fs::path bad = dir.path / "bad.cfg";
  write(bad, "mode = campaign\nrealizations = 4\nn_values = 16\nbogus = 1\n"
             "[matrix M]\na1 = 1\na4 = 1\n");
  CHECK(run("--config " + bad.string()) == 2);

  // figures mode without all three estimators cannot build fig1: runtime error,
  // and the failure must leave no output files at all
  const fs::path partial = dir.path / "partial.cfg";
  write(partial, "mode = figures\nrealizations = 4\nn_values = 16\nestimators = osci\n"
                 "[matrix M]\na1 = 1\na4 = 1\n");
  const fs::path out = dir.path / "untouched";
  CHECK(run("--config " + partial.string() + " --out " + out.string()) == 3);
  CHECK(fs::is_empty(out));
}
