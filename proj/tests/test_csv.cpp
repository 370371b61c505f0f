#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "adawls/csv.hpp"

namespace csv = adawls::csv;

TEST_CASE("fields are quoted only when needed") {
  CHECK(csv::quote("plain") == "plain");
  CHECK(csv::quote("a,b") == "\"a,b\"");
  CHECK(csv::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv::quote("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("rows round-trip through write_row and read_row") {
  std::stringstream ss;
  const std::vector<std::string> row{"x", "a,b", "q\"uote", ""};
  csv::write_row(ss, row);
  csv::write_row(ss, {"1", "2"});
  std::vector<std::string> got;
  REQUIRE(csv::read_row(ss, got));
  CHECK(got == row);
  REQUIRE(csv::read_row(ss, got));
  CHECK(got == std::vector<std::string>{"1", "2"});
  CHECK_FALSE(csv::read_row(ss, got));
}

TEST_CASE("CRLF line endings and blank lines are tolerated") {
  std::stringstream ss("a,b\r\n\r\n1,2\r\n");
  std::vector<std::string> got;
  REQUIRE(csv::read_row(ss, got));
  CHECK(got == std::vector<std::string>{"a", "b"});
  REQUIRE(csv::read_row(ss, got));
  CHECK(got == std::vector<std::string>{"1", "2"});
}

TEST_CASE("doubles are written with round-trip precision") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    CHECK(csv::parse_double(csv::format(v)) == v);
  }
  CHECK(csv::format(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(csv::format(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(csv::format(std::nan("")) == "nan");
  CHECK(std::isinf(csv::parse_double("inf")));
}

TEST_CASE("malformed numbers are rejected") {
  CHECK_THROWS(csv::parse_double("1.5x"));
  CHECK_THROWS(csv::parse_double(""));
  CHECK_THROWS(csv::parse_int("3.5"));
  CHECK(csv::parse_int("-12") == -12);
}
