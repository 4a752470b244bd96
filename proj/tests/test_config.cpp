#include <string>

#include "doctest.h"
#include "homog/config.hpp"

using namespace homog;

TEST_CASE("an empty text yields the default configuration") {
  PipelineConfig c = parse_config("");
  CHECK(c == PipelineConfig{});
  CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("configurations survive a write/parse round trip unchanged") {
  PipelineConfig c;
  c.d = 2;
  c.omega_bounds = {0.0, 2.0, -1.0, 1.0};
  c.eps_bar = 0.13;
  c.extension = "discrete";
  c.partition_n = 4;
  c.field_kind = "random";
  c.field_min = 1.0;
  c.field_max = 9.0;
  c.field_cell = 0.02;
  c.seed = 77;
  c.cell_n = 96;
  c.quad_n = 512;
  c.seq_count = 5;
  c.source_kind = "constant";
  c.baseline = "arithmetic";
  c.with_corrector = false;
  c.output = "some/dir";

  PipelineConfig back = parse_config(write_config(c));
  CHECK(back == c);
}

TEST_CASE("unknown keys and malformed values are reported with line numbers") {
  CHECK_THROWS_WITH_AS(parse_config("nonsense = 3\n"),
                       doctest::Contains("unknown key"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("\n\neps_bar = soup\n"),
                       doctest::Contains("line 3"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("cell.n = 1.5\n"),
                       doctest::Contains("integer"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("corrector = maybe\n"),
                       doctest::Contains("0/1/true/false"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("eps_bar\n"),
                       doctest::Contains("key = value"), ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
  PipelineConfig c = parse_config(
      "# leading comment\n"
      "\n"
      "  eps_bar = 0.2   # trailing comment\n"
      "seed = 9\n");
  CHECK(c.eps_bar == 0.2);
  CHECK(c.seed == 9);
}

TEST_CASE("later assignments override earlier ones") {
  PipelineConfig c = parse_config("eps_bar = 0.1\neps_bar = 0.2\n");
  CHECK(c.eps_bar == 0.2);

  // same mechanism the command line uses for --set
  config_set(c, "field.kind", "laminate");
  CHECK(c.field_kind == "laminate");
}

TEST_CASE("validation rejects out-of-range and inconsistent settings") {
  auto invalid = [](const char* text, const char* needle) {
    PipelineConfig c = parse_config(text);
    CHECK_THROWS_WITH_AS(validate_config(c), doctest::Contains(needle), ConfigError);
  };
  invalid("d = 3\n", "d must be 1 or 2");
  invalid("eps_bar = -0.5\n", "eps_bar must be positive");
  invalid("extension = sliding\n", "extension");
  invalid("field.kind = pebbles\n", "field.kind");
  invalid("field.kind = grid-file\n", "field.path");
  invalid("d = 1\nomega = 0 1 0 1\n", "omega");
  invalid("phi = two\n", "phi");
  invalid("baseline = geometric\n", "baseline");
  invalid("seq.ratio = 1.5\n", "seq.ratio");
  invalid("cell.n = 1\n", "cell.n");
  invalid("source.kind = blast\n", "source.kind");
}

TEST_CASE("omega bounds parse into the expected box") {
  PipelineConfig c = parse_config("d = 2\nomega = 0 2 1 3\n");
  CHECK_NOTHROW(validate_config(c));
  REQUIRE(c.omega_bounds.size() == 4);
  CHECK(c.omega_bounds[1] == 2.0);
  CHECK(c.omega_bounds[2] == 1.0);
}
