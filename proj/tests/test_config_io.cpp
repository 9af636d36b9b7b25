#include "doctest.h"

#include "boxcd/config.hpp"
#include "boxcd/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>

using namespace boxcd;

TEST_SUITE("config") {
  TEST_CASE("parse and typed lookups") {
    const Config c = Config::parse(
        "[model]\nname = mvt\nn = 12\n\n[sampler]\nR = 1e5\nS = 4\n"
        "[study]\nlevels = 0.95, 0.9\nlrt = false\n");
    CHECK(c.require_string("model.name") == "mvt");
    CHECK(c.get_int("model.n", 0) == 12);
    CHECK(c.get_int("sampler.R", 0) == 100000);
    CHECK(c.get_doubles("study.levels", {}) == std::vector<double>{0.95, 0.9});
    CHECK_FALSE(c.get_bool("study.lrt", true));
    CHECK(c.get_double("missing.key", 2.5) == 2.5);
    CHECK_FALSE(c.has("missing.key"));
  }

  TEST_CASE("bad values name their key") {
    const Config c = Config::parse("[sampler]\nR = lots\nS = 2.5\n");
    try {
      (void)c.get_int("sampler.R", 0);
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "sampler.R");
    }
    CHECK_THROWS_AS((void)c.get_int("sampler.S", 0), ConfigError);
    CHECK_THROWS_AS((void)c.require_string("model.name"), ConfigError);
  }

  TEST_CASE("overrides replace file values") {
    Config c = Config::parse("[sampler]\nR = 100\n");
    c.apply_override("sampler.R=200");
    c.apply_override("model.name = logistic");
    CHECK(c.get_int("sampler.R", 0) == 200);
    CHECK(c.require_string("model.name") == "logistic");
    CHECK_THROWS_AS(c.apply_override("no-equals-sign"), ConfigError);
    CHECK_THROWS_AS(c.apply_override("nosection=1"), ConfigError);
  }

  TEST_CASE("ini snapshot round-trips") {
    Config c = Config::parse("[study]\nseed = 7\n[model]\nname = mixture\nn = 10\n");
    c.set("sampler.R", "10000");
    const std::string text = c.to_ini();
    const Config back = Config::parse(text);
    CHECK(back.to_ini() == text);
    CHECK(back.get_seed("study.seed", 0) == 7);
  }

  TEST_CASE("model and study builders") {
    const Config c = Config::parse(
        "[model]\nname = logistic\n[sampler]\nR = 5000\nS = 2\n"
        "[study]\nreplicates = 3\nrule = alpha-m\nseed = 11\n");
    const CoverageStudySpec s = study_spec_from(c);
    CHECK(s.model.name == "logistic");
    CHECK(s.model.n == 20);
    CHECK(s.replicates == 3);
    CHECK(s.sampler.proposals == 5000);
    CHECK(s.seed == 11);
    REQUIRE(s.rule.has_value());
    CHECK(*s.rule == RuleKind::LevelSetAlphaM);
    CHECK(s.theta0.size() == 3);
    CHECK(s.theta0(0) == -0.25);
  }

  TEST_CASE("support broadcast and invalid model") {
    const Config c = Config::parse("[model]\nname = mvt\nsupport_lower = -2\nsupport_upper = 2\n");
    const ModelConfig m = model_config_from(c);
    REQUIRE(m.support.has_value());
    CHECK(m.support->dim() == 3);
    CHECK(m.support->upper(2) == 2.0);
    CHECK_THROWS_AS(study_spec_from(Config::parse("[model]\nname = weibull\n")), ConfigError);
  }
}

TEST_SUITE("csv") {
  TEST_CASE("shortest round-trip formatting") {
    for (double v : {0.1, 1.0 / 3, -2.5e-300, 1e21, 123456789.125,
                     std::numeric_limits<double>::denorm_min(),
                     std::numeric_limits<double>::max()}) {
      const std::string s = format_double(v);
      double back = 0.0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      CHECK(back == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(2.0) == "2");
  }

  TEST_CASE("table round-trips exactly") {
    Matrix<double> m(3, 2);
    m << 0.1, -1e-17, 1.0 / 7, 3.0, 2.0 / 3, std::numeric_limits<double>::denorm_min();
    const std::string text = to_csv({"a", "b"}, m);
    CHECK(text.back() == '\n');
    const CsvTable t = parse_csv(text);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.values == m);
    CHECK(t.column("b") == 1);
    CHECK_THROWS_AS((void)t.column("c"), IoError);
    CHECK(to_csv(t.header, t.values) == text);
  }

  TEST_CASE("malformed input") {
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), IoError);
    CHECK_THROWS_AS(parse_csv("a\nfoo\n"), IoError);
    CHECK_THROWS_AS(parse_csv(""), IoError);
    CHECK(parse_csv("a,b\n").values.rows() == 0);
  }

  TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(read_csv("/nonexistent/dir/x.csv"), IoError);
  }

  TEST_CASE("file round-trip") {
    const auto dir = std::filesystem::temp_directory_path() / "boxcd_test_config_io";
    std::filesystem::create_directories(dir);
    Matrix<double> m = Matrix<double>::Random(5, 3);
    write_csv(dir / "m.csv", {"x", "y", "z"}, m);
    CHECK(read_csv(dir / "m.csv").values == m);
    std::filesystem::remove_all(dir);
  }
}
