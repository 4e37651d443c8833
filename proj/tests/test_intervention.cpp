#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradkit/dataset.hpp"
#include "gradkit/errors.hpp"
#include "gradkit/intervention.hpp"

using namespace gradkit;

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

std::vector<inflection_example> gradating_examples() {
  std::vector<inflection_example> xs{
      {utf8_decode("pappi"), utf8_decode("papin"), {}},
      {utf8_decode("kenttä"), utf8_decode("kentän"), {}},
      {utf8_decode("aika"), utf8_decode("ajan"), {}},
      {utf8_decode("sopu"), utf8_decode("sovun"), {}},
      {utf8_decode("silta"), utf8_decode("sillan"), {}},
      {utf8_decode("salko"), utf8_decode("salon"), {}},
  };
  annotate(xs);
  return xs;
}

model_state<float> tiny_model(const std::vector<inflection_example>& xs) {
  return init_model<float>(tiny_config(), vocabulary::build(xs), 21);
}

}  // namespace

TEST_CASE("default_factors runs 1, 0, -1 .. -25") {
  const auto& f = default_factors();
  REQUIRE(f.size() == 27);
  CHECK(f[0] == 1.0);
  CHECK(f[1] == 0.0);
  CHECK(f[2] == -1.0);
  CHECK(f[26] == -25.0);
  for (size_t i = 2; i < f.size(); ++i) CHECK(f[i] == f[i - 1] - 1.0);
}

TEST_CASE("run_sweep partitions decodes at every factor") {
  auto xs = gradating_examples();
  auto m = tiny_model(xs);
  auto curve = run_sweep(m, xs, {2, 5}, "T2");

  CHECK(curve.label == "T2");
  CHECK(curve.dims == std::vector<int>{2, 5});
  REQUIRE(curve.points.size() == default_factors().size());

  const int n = (int)xs.size();
  for (size_t i = 0; i < curve.points.size(); ++i) {
    const auto& pt = curve.points[i];
    CHECK(pt.factor == default_factors()[i]);
    CHECK(pt.gold + pt.alternate + pt.nonce == n);
    CHECK(pt.gold_pct == doctest::Approx(100.0 * pt.gold / n));
    CHECK(pt.gold_pct + pt.alternate_pct + pt.nonce_pct == doctest::Approx(100.0));
  }

  SUBCASE("factor 1 reproduces the unhooked decoder") {
    std::vector<word> inputs;
    for (const auto& ex : xs) inputs.push_back(ex.nominative);
    auto preds = decode_greedy(m, encode(m, inputs));
    int gold = 0, alternate = 0, nonce = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      word alt = rule_table::default_table().ungrade_genitive(xs[i].nominative, xs[i].genitive);
      switch (categorize_output(preds[i], xs[i].genitive, alt)) {
        case output_category::gold: ++gold; break;
        case output_category::alternate: ++alternate; break;
        case output_category::nonce: ++nonce; break;
      }
    }
    CHECK(curve.points[0].gold == gold);
    CHECK(curve.points[0].alternate == alternate);
    CHECK(curve.points[0].nonce == nonce);
  }

  SUBCASE("reruns are identical") {
    auto again = run_sweep(m, xs, {2, 5}, "T2");
    for (size_t i = 0; i < curve.points.size(); ++i) {
      CHECK(again.points[i].gold == curve.points[i].gold);
      CHECK(again.points[i].alternate == curve.points[i].alternate);
      CHECK(again.points[i].nonce == curve.points[i].nonce);
    }
  }

  SUBCASE("custom factor lists are honored") {
    auto c = run_sweep(m, xs, {1}, "T1", {1.0, -3.0});
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[0].factor == 1.0);
    CHECK(c.points[1].factor == -3.0);
  }

  SUBCASE("argument validation") {
    CHECK_THROWS_AS(run_sweep(m, {}, {1}, "T1"), empty_input);
    CHECK_THROWS_AS(run_sweep(m, xs, {}, "T0"), std::invalid_argument);
    CHECK_THROWS_AS(run_sweep(m, xs, {0}, "T1"), std::invalid_argument);
    CHECK_THROWS_AS(run_sweep(m, xs, {9}, "T1"), std::invalid_argument);
    CHECK_THROWS_AS(run_sweep(m, xs, {1}, "T1", {}), std::invalid_argument);

    std::vector<inflection_example> plain{{utf8_decode("kana"), utf8_decode("kanan"), {}}};
    annotate(plain);
    CHECK_THROWS_AS(run_sweep(m, plain, {1}, "T1"), not_gradating);

    std::vector<inflection_example> bare{{utf8_decode("pappi"), utf8_decode("papin"), {}}};
    CHECK_THROWS_AS(run_sweep(m, bare, {1}, "T1"), std::invalid_argument);
  }
}

TEST_CASE("peak_alternate_pct is the curve maximum") {
  sweep_curve c;
  CHECK(peak_alternate_pct(c) == 0.0);
  c.points.push_back({1.0, 0, 0, 6, 0.0, 0.0, 100.0});
  c.points.push_back({-2.0, 1, 2, 3, 100.0 / 6, 200.0 / 6, 300.0 / 6});
  c.points.push_back({-3.0, 2, 1, 3, 200.0 / 6, 100.0 / 6, 300.0 / 6});
  CHECK(peak_alternate_pct(c) == doctest::Approx(200.0 / 6));
}

TEST_CASE("tune_top_n sweeps every ranked prefix") {
  auto xs = gradating_examples();
  auto m = tiny_model(xs);
  std::vector<int> ranked{3, 1, 5, 7};

  auto tuned = tune_top_n(m, xs, ranked, 3);
  REQUIRE(tuned.curves.size() == 3);
  CHECK(tuned.curves[0].label == "T1");
  CHECK(tuned.curves[1].label == "T2");
  CHECK(tuned.curves[2].label == "T3");
  CHECK(tuned.curves[0].dims == std::vector<int>{3});
  CHECK(tuned.curves[1].dims == std::vector<int>{3, 1});
  CHECK(tuned.curves[2].dims == std::vector<int>{3, 1, 5});

  double best = 0;
  int best_n = 0;
  for (int i = 0; i < 3; ++i) {
    double peak = peak_alternate_pct(tuned.curves[i]);
    if (best_n == 0 || peak > best) {
      best = peak;
      best_n = i + 1;
    }
  }
  CHECK(tuned.best_n == best_n);  // ties keep the shortest prefix
  CHECK(tuned.best_peak == best);

  CHECK_THROWS_AS(tune_top_n(m, xs, ranked, 0), std::invalid_argument);
  CHECK_THROWS_AS(tune_top_n(m, xs, ranked, 5), std::invalid_argument);
}

TEST_CASE("random_baseline draws fresh dimensions away from the found ones") {
  auto xs = gradating_examples();
  auto m = tiny_model(xs);
  std::vector<int> excluded{1, 2};

  auto tr = random_baseline(m, xs, 3, 99, excluded);
  CHECK(tr.label == "TR");
  REQUIRE(tr.dims.size() == 3);
  CHECK(std::is_sorted(tr.dims.begin(), tr.dims.end()));
  std::set<int> drawn(tr.dims.begin(), tr.dims.end());
  CHECK(drawn.size() == 3);
  for (int d : tr.dims) {
    CHECK(d >= 3);  // 1 and 2 are off limits
    CHECK(d <= 8);
  }

  SUBCASE("seeded draw is stable and seeds differ") {
    auto again = random_baseline(m, xs, 3, 99, excluded);
    CHECK(again.dims == tr.dims);
    bool moved = false;
    for (std::uint64_t s = 100; s < 110; ++s) {
      if (random_baseline(m, xs, 3, s, excluded).dims != tr.dims) moved = true;
    }
    CHECK(moved);
  }

  SUBCASE("full exclusion leaves nothing to draw") {
    std::vector<int> all{1, 2, 3, 4, 5, 6, 7, 8};
    CHECK_THROWS_AS(random_baseline(m, xs, 1, 5, all), std::invalid_argument);
    CHECK_THROWS_AS(random_baseline(m, xs, 7, 5, excluded), std::invalid_argument);
    CHECK_THROWS_AS(random_baseline(m, xs, 0, 5, excluded), std::invalid_argument);
  }
}

TEST_CASE("appendix_sweep bundles the prefixes with the control") {
  auto xs = gradating_examples();
  auto m = tiny_model(xs);
  std::vector<int> ranked{4, 8, 2};

  auto curves = appendix_sweep(m, xs, ranked, 3, 1234);
  REQUIRE(curves.size() == 4);
  CHECK(curves[0].label == "T1");
  CHECK(curves[1].label == "T2");
  CHECK(curves[2].label == "T3");
  CHECK(curves[3].label == "TR");
  for (int d : curves[3].dims) {
    CHECK(std::find(ranked.begin(), ranked.end(), d) == ranked.end());
  }

  std::string csv = sweep_csv(curves, "seed21");
  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "model,dims,label,factor,gold_pct,alternate_pct,nonce_pct");
  size_t rows = 0;
  bool saw_joined_dims = false;
  while (std::getline(lines, line)) {
    CHECK(line.rfind("seed21,", 0) == 0);
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
    if (line.find(",4+8,T2,") != std::string::npos) saw_joined_dims = true;
    ++rows;
  }
  CHECK(rows == 4 * default_factors().size());
  CHECK(saw_joined_dims);
}
