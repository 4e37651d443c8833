#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradkit/dataset.hpp"
#include "gradkit/errors.hpp"
#include "gradkit/gradation.hpp"

using namespace gradkit;

namespace {

struct table1_row {
  const char* nom;
  const char* gen;
  grade_kind kind;
  char32_t consonant;
  gradation_direction direction;
};

// the full inventory of alternation types, one noun each
const std::vector<table1_row>& table1() {
  using gk = grade_kind;
  using gd = gradation_direction;
  static const std::vector<table1_row> rows = {
      {"pappi", "papin", gk::quantitative, U'p', gd::direct},
      {"kenttä", "kentän", gk::quantitative, U't', gd::direct},
      {"kiukku", "kiukun", gk::quantitative, U'k', gd::direct},
      {"ripe", "rippeen", gk::quantitative, U'p', gd::inverse},
      {"laite", "laitteen", gk::quantitative, U't', gd::inverse},
      {"liike", "liikkeen", gk::quantitative, U'k', gd::inverse},
      {"sopu", "sovun", gk::qualitative, U'p', gd::direct},
      {"johto", "johdon", gk::qualitative, U't', gd::direct},
      {"aika", "ajan", gk::qualitative, U'k', gd::direct},
      {"kyky", "kyvyn", gk::qualitative, U'k', gd::direct},
      {"olento", "olennon", gk::qualitative, U't', gd::direct},
      {"kenkä", "kengän", gk::qualitative, U'k', gd::direct},
      {"silta", "sillan", gk::qualitative, U't', gd::direct},
      {"rumpu", "rummun", gk::qualitative, U'p', gd::direct},
      {"ranne", "ranteen", gk::qualitative, U't', gd::inverse},
      {"salko", "salon", gk::qualitative, U'k', gd::direct},
      {"olut", "oluen", gk::qualitative, U't', gd::direct},
  };
  return rows;
}

}  // namespace

TEST_CASE("default table has 17 distinct patterns with distinct grades") {
  const auto& table = rule_table::default_table();
  CHECK(table.patterns().size() == 17);
  std::set<std::string> ids;
  int quantitative = 0;
  for (const auto& p : table.patterns()) {
    CHECK(ids.insert(p.id).second);
    CHECK(p.strong != p.weak);
    if (p.kind == grade_kind::quantitative) {
      ++quantitative;
      CHECK(p.strong.size() == 2);
      CHECK(p.weak.size() == 1);
      CHECK(p.strong == word(2, p.weak[0]));
    }
  }
  CHECK(quantitative == 6);
}

TEST_CASE("classify_pair reproduces every alternation type") {
  const auto& table = rule_table::default_table();
  for (const auto& row : table1()) {
    CAPTURE(row.nom);
    annotation ann = table.classify_pair(utf8_decode(row.nom), utf8_decode(row.gen));
    REQUIRE(ann.gradating);
    REQUIRE(ann.event.has_value());
    const grade_pattern& pat = table.pattern(ann.event->pattern_id);
    CHECK(pat.kind == row.kind);
    CHECK(pat.consonant == row.consonant);
    CHECK(ann.event->direction == row.direction);
  }
}

TEST_CASE("classify_pair spans point at the alternation") {
  const auto& table = rule_table::default_table();

  annotation ann = table.classify_pair(U"pappi", U"papin");
  CHECK(ann.event->pattern_id == "pp>p");
  CHECK(ann.event->nom_span.begin == 2);
  CHECK(ann.event->nom_span.end == 4);
  CHECK(ann.event->gen_span.begin == 2);
  CHECK(ann.event->gen_span.end == 3);

  ann = table.classify_pair(U"olut", U"oluen");
  CHECK(ann.event->pattern_id == "t>0");
  CHECK(ann.event->nom_span.begin == 3);
  CHECK(ann.event->nom_span.end == 4);
  CHECK(ann.event->gen_span.begin == 3);
  CHECK(ann.event->gen_span.end == 3);  // deletion leaves a zero-width span

  ann = table.classify_pair(U"aika", U"ajan");
  CHECK(ann.event->pattern_id == "ik>j");
  CHECK(ann.event->nom_span.begin == 1);
  CHECK(ann.event->nom_span.end == 3);
}

TEST_CASE("classify_pair recognizes plain pairs across paradigms") {
  const auto& table = rule_table::default_table();
  for (auto [nom, gen] : std::vector<std::pair<const char*, const char*>>{
           {"kana", "kanan"},
           {"auto", "auton"},
           {"varis", "variksen"},  // paradigmatic k-insertion, not gradation
           {"tase", "taseen"},
           {"radio", "radion"},
       }) {
    CAPTURE(nom);
    annotation ann = table.classify_pair(utf8_decode(nom), utf8_decode(gen));
    CHECK_FALSE(ann.gradating);
    CHECK_FALSE(ann.event.has_value());
  }
}

TEST_CASE("classify_pair rejects unrelated or malformed input") {
  const auto& table = rule_table::default_table();
  CHECK_THROWS_AS(table.classify_pair(U"kana", U"taloissa"), not_a_pair);
  CHECK_THROWS_AS(table.classify_pair(U"pappi", U"kenkän"), not_a_pair);
  CHECK_THROWS_AS(table.classify_pair(U"", U"kanan"), std::invalid_argument);
  CHECK_THROWS_AS(table.classify_pair(U"kana", U"kana n"), std::invalid_argument);
  CHECK_THROWS_AS(table.classify_pair(U"ka1na", U"kanan"), std::invalid_argument);
}

TEST_CASE("classify_pair reports ambiguity instead of guessing") {
  // two artificial patterns that both explain anta -> annan
  rule_table table = rule_table::parse(
      "nt>nn\tnt\tnn\tqualitative\tt\n"
      "t>n\tt\tn\tqualitative\tt\n");
  CHECK_THROWS_AS(table.classify_pair(U"anta", U"annan"), ambiguous_alignment);
  try {
    table.classify_pair(U"anta", U"annan");
  } catch (const ambiguous_alignment& e) {
    std::string msg = e.what();
    CHECK(msg.find("nt>nn") != std::string::npos);
    CHECK(msg.find("t>n") != std::string::npos);
  }
}

TEST_CASE("same pattern at several offsets resolves to the rightmost site") {
  const auto& table = rule_table::default_table();
  // apppa: pp matches at offsets 1 and 2, both yielding appa
  annotation ann = table.classify_pair(U"apppa", U"appan");
  REQUIRE(ann.gradating);
  CHECK(ann.event->pattern_id == "pp>p");
  CHECK(ann.event->nom_span.begin == 2);
  CHECK(ann.event->nom_span.end == 4);
}

TEST_CASE("alternation_site finds the last stop and its cluster partner") {
  const auto& table = rule_table::default_table();

  auto span = table.alternation_site(U"tupa");
  REQUIRE(span.has_value());
  CHECK(span->begin == 2);
  CHECK(span->end == 3);

  span = table.alternation_site(U"ratas");
  REQUIRE(span.has_value());
  CHECK(span->begin == 2);
  CHECK(span->end == 3);

  CHECK_FALSE(table.alternation_site(U"aamu").has_value());

  span = table.alternation_site(U"pappi");  // geminate joins
  CHECK(span->begin == 2);
  CHECK(span->end == 4);

  span = table.alternation_site(U"kenkä");  // nk is a table cluster
  CHECK(span->begin == 2);
  CHECK(span->end == 4);

  span = table.alternation_site(U"johto");  // ht is not a gradation cluster
  CHECK(span->begin == 3);
  CHECK(span->end == 4);

  span = table.alternation_site(U"katko");  // earlier stop ignored
  CHECK(span->begin == 3);
  CHECK(span->end == 4);
}

TEST_CASE("apply_grade rewrites, keeps identity and flags mismatches") {
  const auto& table = rule_table::default_table();

  annotation katto = table.classify_pair(U"katto", U"katon");
  CHECK(table.apply_grade(U"katto", *katto.event, grade_side::weak) == U"kato");
  CHECK(table.apply_grade(U"kato", *katto.event, grade_side::weak) == U"kato");
  CHECK(table.apply_grade(U"kato", *katto.event, grade_side::strong) == U"katto");

  annotation rike = table.classify_pair(U"rike", U"rikkeen");
  CHECK(table.apply_grade(U"rike", *rike.event, grade_side::strong) == U"rikke");

  gradation_event bad = *katto.event;
  bad.nom_span = {99, 101};
  CHECK_THROWS_AS(table.apply_grade(U"katto", bad, grade_side::weak), site_mismatch);
  gradation_event wrong = *katto.event;
  wrong.nom_span = {0, 2};  // "ka" carries neither grade of tt>t
  CHECK_THROWS_AS(table.apply_grade(U"katto", wrong, grade_side::weak), site_mismatch);
}

TEST_CASE("ungrade_genitive restores the nominative grade inside the genitive") {
  const auto& table = rule_table::default_table();
  CHECK(table.ungrade_genitive(U"luukku", U"luukun") == U"luukkun");
  CHECK(table.ungrade_genitive(U"kenkä", U"kengän") == U"kenkän");
  CHECK(table.ungrade_genitive(U"ranne", U"ranteen") == U"ranneen");
  CHECK(table.ungrade_genitive(U"salko", U"salon") == U"salkon");
  CHECK(table.ungrade_genitive(U"olut", U"oluen") == U"oluten");
  CHECK_THROWS_AS(table.ungrade_genitive(U"auto", U"auton"), not_gradating);
}

TEST_CASE("ungrade_genitive changes exactly the event span") {
  const auto& table = rule_table::default_table();
  for (const auto& row : table1()) {
    CAPTURE(row.nom);
    word nom = utf8_decode(row.nom);
    word gen = utf8_decode(row.gen);
    annotation ann = table.classify_pair(nom, gen);
    const gradation_event& ev = *ann.event;
    word alternate = table.ungrade_genitive(nom, gen);
    CHECK(alternate != gen);

    const grade_pattern& pat = table.pattern(ev.pattern_id);
    const word& nom_grade = pat.side(ev.direction == gradation_direction::direct
                                         ? grade_side::strong
                                         : grade_side::weak);
    // prefix, replaced middle, and suffix line up around the span
    CHECK(alternate.substr(0, ev.gen_span.begin) == gen.substr(0, ev.gen_span.begin));
    CHECK(alternate.substr(ev.gen_span.begin, nom_grade.size()) == nom_grade);
    CHECK(alternate.substr(ev.gen_span.begin + nom_grade.size()) == gen.substr(ev.gen_span.end));
  }
}

TEST_CASE("categorize_output partitions predictions") {
  CHECK(categorize_output(U"luukun", U"luukun", U"luukkun") == output_category::gold);
  CHECK(categorize_output(U"luukkun", U"luukun", U"luukkun") == output_category::alternate);
  CHECK(categorize_output(U"luukuukuukkun", U"luukun", U"luukkun") == output_category::nonce);
  CHECK(categorize_output(U"", U"luukun", U"luukkun") == output_category::nonce);
  CHECK_THROWS_AS(categorize_output(U"x", U"same", U"same"), std::invalid_argument);
}

TEST_CASE("rule table serializes to text and parses back") {
  const auto& table = rule_table::default_table();
  std::string text = table.serialize();
  CHECK(text.find("pp>p\tpp\tp\tquantitative\tp") != std::string::npos);
  CHECK(text.find("k>0\tk\t0\tqualitative\tk") != std::string::npos);

  rule_table parsed = rule_table::parse(text);
  REQUIRE(parsed.patterns().size() == table.patterns().size());
  CHECK(parsed.serialize() == text);
  for (const auto& p : table.patterns()) {
    const grade_pattern& q = parsed.pattern(p.id);
    CHECK(q.strong == p.strong);
    CHECK(q.weak == p.weak);
    CHECK(q.kind == p.kind);
    CHECK(q.consonant == p.consonant);
    CHECK(q.direction == p.direction);
  }
}

TEST_CASE("rule table parse rejects malformed lines") {
  CHECK_THROWS_AS(rule_table::parse("pp>p\tpp\tp\tquantitative"), std::invalid_argument);
  CHECK_THROWS_AS(rule_table::parse("pp>p\tpp\tp\tsideways\tp"), std::invalid_argument);
  CHECK_THROWS_AS(rule_table::parse("pp>p\tpp\tp\tquantitative\tpp"), std::invalid_argument);
  CHECK_THROWS_AS(rule_table::parse("nop\tpp\tp\tquantitative\tp"), std::invalid_argument);
  CHECK_THROWS_AS(rule_table::parse("x>y\tpp\tp\tquantitative\tp"), std::invalid_argument);
  CHECK_THROWS_AS(rule_table::parse("pp>p\tpp\tp\tquantitative\tp\npp>p\tpp\tp\tquantitative\tp"),
                  std::invalid_argument);
  // comments and blank lines are fine
  rule_table t = rule_table::parse("# header\n\npp>p\tpp\tp\tquantitative\tp\n");
  CHECK(t.patterns().size() == 1);
}

TEST_CASE("generated corpus round-trips through the classifier") {
  corpus_spec spec = corpus_spec::defaults(7);
  spec.total_pairs = 600;
  spec.pattern_quotas.clear();
  for (const auto& p : rule_table::default_table().patterns()) {
    spec.pattern_quotas[p.id] = 20;  // 340 gradating + 260 plain
  }
  auto corpus = generate_corpus(spec);
  const auto& table = rule_table::default_table();
  int gradating = 0;
  for (const auto& ex : corpus) {
    std::string nom8 = utf8_encode(ex.nominative);
    CAPTURE(nom8);
    REQUIRE(ex.note.has_value());
    annotation ann = table.classify_pair(ex.nominative, ex.genitive);
    CHECK(ann.gradating == ex.note->gradating);
    if (!ann.gradating) continue;
    ++gradating;
    CHECK(ann.event->pattern_id == ex.note->event->pattern_id);

    // strong/weak rewriting at the recovered site reproduces both forms
    const grade_pattern& pat = table.pattern(ann.event->pattern_id);
    grade_side nom_side = ann.event->direction == gradation_direction::direct
                              ? grade_side::strong
                              : grade_side::weak;
    grade_side gen_side =
        nom_side == grade_side::strong ? grade_side::weak : grade_side::strong;
    CHECK(table.apply_grade(ex.nominative, *ann.event, nom_side) == ex.nominative);
    word regraded = table.apply_grade(ex.nominative, *ann.event, gen_side);
    word site_part =
        regraded.substr(ann.event->nom_span.begin, pat.side(gen_side).size());
    CHECK(site_part == pat.side(gen_side));
  }
  CHECK(gradating == 17 * 20);
}
