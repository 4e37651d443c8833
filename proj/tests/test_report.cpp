#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradkit/dataset.hpp"
#include "gradkit/errors.hpp"
#include "gradkit/intervention.hpp"
#include "gradkit/report.hpp"

using namespace gradkit;
namespace fs = std::filesystem;

namespace {

model_config tiny_config() {
  model_config c;
  c.embed_dim = 8;
  c.encoder_layers = 2;
  c.encoder_hidden = 4;
  c.decoder_hidden = 4;
  c.attention_dim = 4;
  c.max_decode_len = 12;
  return c;
}

std::vector<inflection_example> figure_examples() {
  std::vector<inflection_example> xs{
      {utf8_decode("pappi"), utf8_decode("papin"), {}},     // quantitative, direct
      {utf8_decode("liike"), utf8_decode("liikkeen"), {}},  // quantitative, inverse
      {utf8_decode("aika"), utf8_decode("ajan"), {}},       // qualitative
      {utf8_decode("silta"), utf8_decode("sillan"), {}},    // qualitative
      {utf8_decode("kana"), utf8_decode("kanan"), {}},      // plain, consonant penult
      {utf8_decode("radio"), utf8_decode("radion"), {}},    // plain, excluded site
  };
  annotate(xs);
  return xs;
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "gradkit_report_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

size_t count_lines(const std::string& s) {
  size_t n = 0;
  for (char c : s) n += (c == '\n');
  return n;
}

}  // namespace

TEST_CASE("emit_scatter writes a csv twin of the svg") {
  auto xs = figure_examples();
  auto m = init_model<float>(tiny_config(), vocabulary::build(xs), 13);

  auto prefix = scratch("scatter");
  emit_scatter(m, xs, 3, 7, prefix);
  std::string csv = slurp(prefix.string() + ".csv");
  std::string svg = slurp(prefix.string() + ".svg");

  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "word,glyph,x,y");

  // radio has no probe site, every other example contributes one row
  size_t rows = 0;
  bool saw_inverse_upper = false, saw_plain_dot = false, saw_direct_p = false;
  while (std::getline(lines, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
    if (line.rfind("liike,K,", 0) == 0) saw_inverse_upper = true;
    if (line.rfind("kana,.,", 0) == 0) saw_plain_dot = true;
    if (line.rfind("pappi,p,", 0) == 0) saw_direct_p = true;
    CHECK(line.rfind("radio,", 0) != 0);
    ++rows;
  }
  CHECK(rows == 5);
  CHECK(saw_inverse_upper);
  CHECK(saw_plain_dot);
  CHECK(saw_direct_p);

  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("dimension 3") != std::string::npos);
  CHECK(svg.find("dimension 7") != std::string::npos);
  CHECK(svg.find("id=\"legend\"") != std::string::npos);

  SUBCASE("re-emission is byte-identical") {
    auto prefix2 = scratch("scatter_again");
    emit_scatter(m, xs, 3, 7, prefix2);
    CHECK(slurp(prefix2.string() + ".csv") == csv);
    CHECK(slurp(prefix2.string() + ".svg") == svg);
  }

  SUBCASE("dimensions must be inside the trace") {
    CHECK_THROWS_AS(emit_scatter(m, xs, 0, 7, prefix), std::invalid_argument);
    CHECK_THROWS_AS(emit_scatter(m, xs, 1, 9, prefix), std::invalid_argument);
  }

  SUBCASE("annotation is required") {
    std::vector<inflection_example> bare{{utf8_decode("pappi"), utf8_decode("papin"), {}}};
    CHECK_THROWS_AS(emit_scatter(m, bare, 1, 2, prefix), std::invalid_argument);
  }

  SUBCASE("a corpus of excluded sites is empty") {
    std::vector<inflection_example> excluded{{utf8_decode("radio"), utf8_decode("radion"), {}}};
    annotate(excluded);
    CHECK_THROWS_AS(emit_scatter(m, excluded, 1, 2, prefix), empty_input);
  }
}

TEST_CASE("emit_heatmap lays out one cell per character") {
  auto xs = figure_examples();
  auto m = init_model<float>(tiny_config(), vocabulary::build(xs), 13);

  auto prefix = scratch("heatmap");
  emit_heatmap(m, xs, 5, prefix);
  std::string csv = slurp(prefix.string() + ".csv");
  std::string svg = slurp(prefix.string() + ".svg");

  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "group,word,correct,position,char,activation");

  size_t want_cells = 0;
  for (const auto& ex : xs) want_cells += ex.nominative.size();
  CHECK(count_lines(csv) == want_cells + 1);

  for (const char* group : {"quantitative,", "qualitative,", "no gradation,"}) {
    CHECK(csv.find(group) != std::string::npos);
  }
  // radio sits in the heatmap even though the scatter excludes it
  CHECK(csv.find("no gradation,radio,") != std::string::npos);
  CHECK(svg.find("dimension 5") != std::string::npos);

  SUBCASE("re-emission is byte-identical") {
    auto prefix2 = scratch("heatmap_again");
    emit_heatmap(m, xs, 5, prefix2);
    CHECK(slurp(prefix2.string() + ".csv") == csv);
    CHECK(slurp(prefix2.string() + ".svg") == svg);
  }

  SUBCASE("dimension must be inside the trace") {
    CHECK_THROWS_AS(emit_heatmap(m, xs, 0, prefix), std::invalid_argument);
    CHECK_THROWS_AS(emit_heatmap(m, xs, 9, prefix), std::invalid_argument);
  }

  SUBCASE("empty example lists are rejected") {
    CHECK_THROWS_AS(emit_heatmap(m, {}, 1, prefix), empty_input);
  }
}

TEST_CASE("emit_curves plots named series with a csv twin") {
  std::vector<curve_series> series{
      {"gold", {{1, 96.0}, {0, 80.0}, {-1, 60.0}, {-2, 35.0}}},
      {"alternate", {{1, 0.0}, {0, 10.0}, {-1, 30.0}, {-2, 55.0}}},
      {"nonce", {{1, 4.0}, {0, 10.0}, {-1, 10.0}, {-2, 10.0}}},
  };
  auto prefix = scratch("curves");
  emit_curves("output shares against the scaling factor", "factor", "percent", series, prefix);

  std::string csv = slurp(prefix.string() + ".csv");
  std::string svg = slurp(prefix.string() + ".svg");
  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "series,x,y");
  CHECK(count_lines(csv) == 1 + 3 * 4);
  CHECK(csv.find("alternate,-2,55.000000") != std::string::npos);
  CHECK(csv.find("gold,1,96.000000") != std::string::npos);

  CHECK(svg.find("output shares against the scaling factor") != std::string::npos);
  size_t polylines = 0;
  for (size_t at = svg.find("<polyline"); at != std::string::npos;
       at = svg.find("<polyline", at + 1)) {
    ++polylines;
  }
  CHECK(polylines == 3);
  for (const char* name : {"gold", "alternate", "nonce"}) {
    CHECK(svg.find(std::string(">") + name + "</text>") != std::string::npos);
  }

  SUBCASE("single point series still emit") {
    std::vector<curve_series> one{{"dev_accuracy", {{3000, 0.95}}}};
    auto p2 = scratch("curves_single");
    emit_curves("accuracy", "step", "accuracy", one, p2);
    CHECK(slurp(p2.string() + ".csv") == "series,x,y\ndev_accuracy,3000,0.950000\n");
  }

  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(emit_curves("t", "x", "y", {}, prefix), empty_input);
    std::vector<curve_series> hollow{{"gold", {}}};
    CHECK_THROWS_AS(emit_curves("t", "x", "y", hollow, prefix), empty_input);
  }
}

TEST_CASE("series converters mirror their sources") {
  sweep_curve c;
  c.label = "T2";
  c.dims = {4, 5};
  c.points.push_back({1.0, 5, 1, 0, 5.0 / 6 * 100, 1.0 / 6 * 100, 0.0});
  c.points.push_back({-3.0, 1, 4, 1, 1.0 / 6 * 100, 4.0 / 6 * 100, 1.0 / 6 * 100});

  auto ss = sweep_series(c);
  REQUIRE(ss.size() == 3);
  CHECK(ss[0].name == "gold");
  CHECK(ss[1].name == "alternate");
  CHECK(ss[2].name == "nonce");
  for (const auto& s : ss) REQUIRE(s.points.size() == 2);
  CHECK(ss[1].points[1].first == -3.0);
  CHECK(ss[1].points[1].second == doctest::Approx(4.0 / 6 * 100));

  std::vector<train_curve_point> curve{{500, 0.5}, {1000, 0.8}};
  auto as = accuracy_series(curve);
  REQUIRE(as.size() == 1);
  CHECK(as[0].name == "dev_accuracy");
  REQUIRE(as[0].points.size() == 2);
  CHECK(as[0].points[0].first == 500.0);
  CHECK(as[0].points[1].second == 0.8);
}
