#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pme/config.hpp"
#include "pme/errors.hpp"

using namespace pme;
namespace fs = std::filesystem;

namespace {

const char* kBaseConfig = R"(
[model]
preset = fmo4

[initial]
site = 1

[numerics]
dt_fs = 2.0
t_max_fs = 40.0

[run]
propagator = hom-only
)";

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pme_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PME_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("config parsing") {
    SUBCASE("round trip of the base configuration") {
        const RunConfig config = parse_run_config(kBaseConfig);
        CHECK(config.net.n_sites() == 4);
        CHECK(config.rho0(0, 0).real() == 1.0);
        CHECK(config.prop.tag == Propagator::HomOnly);
        CHECK(config.prop.dt_fs == 2.0);
    }
    SUBCASE("unknown keys are rejected with a line number") {
        const std::string text = std::string(kBaseConfig) + "\n[bath]\nbanana = 1\n";
        try {
            parse_run_config(text, "cfg");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("banana") != std::string::npos);
            CHECK(std::string(e.what()).find("cfg:") != std::string::npos);
        }
    }
    SUBCASE("unknown section rejected") {
        CHECK_THROWS_AS(parse_run_config(std::string(kBaseConfig) + "[plumbing]\nx = 1\n"),
                        ConfigError);
    }
    SUBCASE("site index out of range") {
        std::string text = kBaseConfig;
        text.replace(text.find("site = 1"), 8, "site = 9");
        CHECK_THROWS_AS(parse_run_config(text), ConfigError);
    }
    SUBCASE("exactly one initial-state form") {
        std::string text = kBaseConfig;
        text.replace(text.find("site = 1"), 8, "site = 1\namplitudes = 1 0 0 0");
        CHECK_THROWS_AS(parse_run_config(text), ConfigError);
    }
    SUBCASE("amplitudes normalized within tolerance only") {
        std::string ok = kBaseConfig;
        ok.replace(ok.find("site = 1"), 8, "amplitudes = 0.70710678 0.70710678 0 0");
        const RunConfig config = parse_run_config(ok);
        CHECK(config.rho0(0, 1).real() == doctest::Approx(0.5).epsilon(1e-7));

        std::string bad = kBaseConfig;
        bad.replace(bad.find("site = 1"), 8, "amplitudes = 0.7 0.7 0 0");
        CHECK_THROWS_AS(parse_run_config(bad), ConfigError);
    }
    SUBCASE("bath overrides on top of a preset") {
        const std::string text = std::string(kBaseConfig) + "\n[bath]\nmode_s = 0\nkT_cm = 150\n";
        const RunConfig config = parse_run_config(text);
        CHECK_FALSE(config.bath.sd.mode.has_value());
        CHECK(config.bath.kT_cm == 150.0);
    }
    SUBCASE("resolved text re-parses to the same model") {
        const RunConfig config = parse_run_config(kBaseConfig);
        const RunConfig again = parse_run_config(resolved_config_text(config));
        CHECK((again.net.coupling_cm - config.net.coupling_cm).cwiseAbs().maxCoeff() == 0.0);
        CHECK(again.bath.kT_cm == config.bath.kT_cm);
        CHECK((again.rho0 - config.rho0).cwiseAbs().maxCoeff() == 0.0);
        CHECK(again.prop.dt_fs == config.prop.dt_fs);
    }
}

TEST_CASE("command line runs") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "run.cfg";
    std::ofstream(cfg) << kBaseConfig;

    SUBCASE("simulate is deterministic byte for byte") {
        const fs::path out1 = tmp.path / "out1";
        const fs::path out2 = tmp.path / "out2";
        REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out1.string()) == 0);
        REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out2.string()) == 0);
        CHECK(slurp(out1 / "populations.csv") == slurp(out2 / "populations.csv"));
        CHECK(slurp(out1 / "trajectory.csv") == slurp(out2 / "trajectory.csv"));
    }
    SUBCASE("metadata re-ingests to a byte-identical run") {
        const fs::path out1 = tmp.path / "meta1";
        const fs::path out2 = tmp.path / "meta2";
        REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out1.string()) == 0);
        REQUIRE(run_cli("simulate --config " + (out1 / "run.meta").string() + " --out " +
                        out2.string()) == 0);
        CHECK(slurp(out1 / "populations.csv") == slurp(out2 / "populations.csv"));
        CHECK(slurp(out1 / "trajectory.csv") == slurp(out2 / "trajectory.csv"));
    }
    SUBCASE("schema violation exits with code 2") {
        const fs::path bad = tmp.path / "bad.cfg";
        std::ofstream(bad) << kBaseConfig << "\n[bath]\nbanana = 1\n";
        CHECK(run_cli("simulate --config " + bad.string() + " --out " +
                      (tmp.path / "nope").string()) == 2);
    }
    SUBCASE("compare needs at least two tags") {
        CHECK(run_cli("compare --config " + cfg.string() + " --tags full --out " +
                      (tmp.path / "cmp").string()) == 2);
    }
    SUBCASE("compare writes the side-by-side series") {
        const fs::path out = tmp.path / "cmp2";
        REQUIRE(run_cli("compare --config " + cfg.string() +
                        " --tags hom-only,foerster --out " + out.string()) == 0);
        const std::string head = slurp(out / "compare_populations.csv");
        CHECK(head.find("p1_hom-only") != std::string::npos);
        CHECK(head.find("p1_foerster") != std::string::npos);
        CHECK(fs::exists(out / "compare_summary.txt"));
    }
    SUBCASE("tracedist without a second state exits with code 2") {
        CHECK(run_cli("tracedist --config " + cfg.string() + " --out " +
                      (tmp.path / "td").string()) == 2);
    }
    SUBCASE("kernel cache round trip") {
        const fs::path cache = tmp.path / "cache";
        const fs::path out1 = tmp.path / "c1";
        const fs::path out2 = tmp.path / "c2";
        REQUIRE(run_cli("simulate --config " + cfg.string() + " --cache " + cache.string() +
                        " --out " + out1.string()) == 0);
        REQUIRE(fs::exists(cache));
        bool have_bin = false;
        for (const auto& entry : fs::directory_iterator(cache))
            have_bin |= entry.path().extension() == ".bin";
        CHECK(have_bin);
        REQUIRE(run_cli("simulate --config " + cfg.string() + " --cache " + cache.string() +
                        " --out " + out2.string()) == 0);
        CHECK(slurp(out1 / "populations.csv") == slurp(out2 / "populations.csv"));
    }
    SUBCASE("quick validation passes") {
        CHECK(run_cli("validate --quick") == 0);
    }
}
