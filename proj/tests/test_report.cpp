#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sevsyn/csv.hpp"
#include "sevsyn/errors.hpp"
#include "sevsyn/report.hpp"
#include "sevsyn/text.hpp"

using namespace sevsyn;
namespace fs = std::filesystem;

namespace {

// Two chains of `n` draws for cfr.w1/w2 at one age and all ages.
DrawTable two_wave_table(std::size_t n, double offset) {
  DrawTable t;
  t.names = {"cfr.w1.a1", "cfr.w2.a1", "cfr.w1.all", "cfr.w2.all"};
  for (int c = 0; c < 2; ++c) {
    std::vector<double> rows;
    for (std::size_t i = 0; i < n; ++i) {
      const double base = 0.01 * ((i * 7 + c * 3) % 11);
      rows.insert(rows.end(), {base, base + offset, base, base + offset});
    }
    t.chains.push_back(rows);
  }
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("quantity names") {
  const auto q = parse_quantity_name("cfr.w2.a3");
  CHECK(q.symbol == "cfr");
  CHECK(*q.wave == 2);
  CHECK(*q.age == 2);
  CHECK_FALSE(q.all_ages);
  const auto all = parse_quantity_name("sym.w3.all");
  CHECK(all.all_ages);
  CHECK_FALSE(all.age);
  const auto g = parse_quantity_name("tau.h_s");
  CHECK(g.symbol == "tau.h_s");
  CHECK_FALSE(g.wave);
  CHECK(parse_quantity_name("d_h.w1").symbol == "d_h");
  CHECK(quantity_name("iar", 1, std::size_t{0}) == "iar.w1.a1");
  CHECK(quantity_name_all("iar", 3) == "iar.w3.all");
  CHECK(text::wildcard_match("cfr.w*.a*", "cfr.w2.all"));
  CHECK_FALSE(text::wildcard_match("cfr.w*.a*", "scfr.w2.a1"));
}

TEST_CASE("type-7 quantiles") {
  std::vector<double> x(100);
  std::iota(x.begin(), x.end(), 1.0);
  CHECK(quantile_type7(x, 0.5) == doctest::Approx(50.5));
  CHECK(quantile_type7(x, 0.025) == doctest::Approx(3.475));
  CHECK(quantile_type7(x, 0.975) == doctest::Approx(97.525));
  CHECK(quantile_type7(x, 0.0) == 1.0);
  CHECK(quantile_type7(x, 1.0) == 100.0);

  DrawTable t;
  t.names = {"c"};
  t.chains = {std::vector<double>(40, 0.25), std::vector<double>(40, 0.25)};
  const auto s = summarize(t);
  REQUIRE(s.rows.size() == 1);
  CHECK(s.rows[0].median == 0.25);
  CHECK(s.rows[0].lo == 0.25);
  CHECK(s.rows[0].hi == 0.25);
  CHECK(s.rows[0].sd == 0.0);
  CHECK(s.rows[0].rhat_degenerate);
}

TEST_CASE("cross-wave comparison") {
  const std::vector<std::string> ages{"young"};
  const std::vector<ComparePair> pairs{parse_compare_pair("cfr:1:2")};
  SUBCASE("always greater") {
    const auto rows = compare_waves(two_wave_table(50, 0.001), pairs, ages);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].age == "young");
    CHECK(rows[1].age == "All ages");
    CHECK(rows[0].probability == 1.0);
    CHECK(rows[1].probability == 1.0);
  }
  SUBCASE("ties are not greater") {
    const auto rows = compare_waves(two_wave_table(50, 0.0), pairs, ages);
    CHECK(rows[0].probability == 0.0);
  }
  SUBCASE("both directions sum to at most one") {
    auto t = two_wave_table(60, 0.0);
    for (std::size_t i = 0; i < 60; ++i) t.chains[0][i * 4 + 1] += (i % 3 == 0 ? 0.02 : i % 3 == 1 ? -0.02 : 0.0);
    const std::vector<ComparePair> both{parse_compare_pair("cfr:1:2"), parse_compare_pair("cfr:2:1")};
    const auto rows = compare_waves(t, both, ages);
    CHECK(rows[0].probability + rows[2].probability <= 1.0);
    CHECK(rows[0].probability == doctest::Approx(20.0 / 120));
  }
  CHECK_THROWS_AS(compare_waves(two_wave_table(5, 0), std::vector<ComparePair>{parse_compare_pair("iar:1:2")}, ages),
                  ConfigError);
  CHECK_THROWS(parse_compare_pair("cfr:1"));
}

TEST_CASE("output files") {
  const auto dir = fs::temp_directory_path() / "sevsyn_report_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto table = two_wave_table(30, 0.01);
  const auto summary = summarize(table);
  write_summary(dir / "summary.csv", summary);
  const auto back = load_summary(dir / "summary.csv");
  REQUIRE(back.rows.size() == summary.rows.size());
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    CHECK(back.rows[i].quantity == summary.rows[i].quantity);
    CHECK(back.rows[i].mean == summary.rows[i].mean);
    CHECK(back.rows[i].lo == summary.rows[i].lo);
  }
  write_summary(dir / "again.csv", back);
  CHECK(slurp(dir / "again.csv") == slurp(dir / "summary.csv"));

  write_plotdata(dir / "plot", summary, std::vector<std::string>{"young"});
  const auto plot = read_csv(dir / "plot" / "cfr.csv");
  CHECK(plot.rows().size() == 4);
  CHECK(plot.header() == std::vector<std::string>{"quantity", "age", "wave", "median", "lo", "hi"});

  const std::vector<ComparePair> pairs{parse_compare_pair("cfr:1:2")};
  write_compare(dir / "compare.csv", compare_waves(table, pairs, std::vector<std::string>{"young"}));
  CHECK(read_csv(dir / "compare.csv").rows().size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("csv parsing") {
  const auto t = parse_csv("# note\na,b\n1,2\n\n3,4\n", "mem");
  CHECK(t.rows().size() == 2);
  CHECK(t.rows()[1].line == 5);
  CHECK(t.require_column("b") == 1);
  CHECK_THROWS_AS(t.require_column("c"), DataError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n", "mem"), DataError);
  CHECK(text::format_double(0.1) == "0.1");
  CHECK(*text::to_double(text::format_double(1.0 / 3)) == 1.0 / 3);
}
