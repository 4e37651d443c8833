#include "gradkit/gradation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gradkit/errors.hpp"

namespace gradkit {

const word& grade_pattern::nominative_grade() const {
  return direction == gradation_direction::direct ? strong : weak;
}

const word& grade_pattern::genitive_grade() const {
  return direction == gradation_direction::direct ? weak : strong;
}

const char* to_string(grade_kind k) {
  return k == grade_kind::quantitative ? "quantitative" : "qualitative";
}

const char* to_string(gradation_direction d) {
  return d == gradation_direction::direct ? "direct" : "inverse";
}

const char* to_string(output_category c) {
  switch (c) {
    case output_category::gold: return "gold";
    case output_category::alternate: return "alternate";
    default: return "nonce";
  }
}

namespace {

word grade_from_token(const std::string& tok) {
  if (tok == "0") return word();
  return utf8_decode(tok);
}

std::string grade_to_token(const word& g) {
  if (g.empty()) return "0";
  return utf8_encode(g);
}

grade_pattern make_pattern(const char* id, const char* strong, const char* weak,
                           grade_kind kind, char32_t consonant) {
  grade_pattern p;
  p.id = id;
  p.strong = utf8_decode(strong);
  p.weak = utf8_decode(weak);
  p.kind = kind;
  p.consonant = consonant;
  std::string nom_side = id;
  nom_side = nom_side.substr(0, nom_side.find('>'));
  p.direction = (grade_from_token(nom_side) == p.strong) ? gradation_direction::direct
                                                         : gradation_direction::inverse;
  return p;
}

void validate_word(const word& w, const char* role) {
  if (w.empty()) throw std::invalid_argument(std::string(role) + " is empty");
  for (char32_t c : w) {
    if (!is_finnish_letter(c)) {
      throw std::invalid_argument(std::string(role) + " contains a non-letter: " + utf8_encode(w));
    }
  }
}

bool ends_with(const word& w, const word& suffix) {
  return w.size() >= suffix.size() &&
         std::equal(suffix.begin(), suffix.end(), w.end() - suffix.size());
}

}  // namespace

rule_table::rule_table(std::vector<grade_pattern> patterns) : patterns_(std::move(patterns)) {
  std::set<std::string> seen;
  for (const auto& p : patterns_) {
    if (p.id.empty() || !seen.insert(p.id).second) {
      throw std::invalid_argument("rule_table: duplicate or empty pattern id");
    }
    if (p.strong.empty() && p.weak.empty()) {
      throw std::invalid_argument("rule_table: pattern " + p.id + " has two empty grades");
    }
    if (p.nominative_grade().empty()) {
      throw std::invalid_argument("rule_table: pattern " + p.id +
                                  " has an empty nominative grade");
    }
  }
}

const rule_table& rule_table::default_table() {
  using gk = grade_kind;
  static const rule_table table({
      // geminate stops, nominative strong
      make_pattern("pp>p", "pp", "p", gk::quantitative, U'p'),
      make_pattern("tt>t", "tt", "t", gk::quantitative, U't'),
      make_pattern("kk>k", "kk", "k", gk::quantitative, U'k'),
      // geminate stops, e-stem nouns, nominative weak
      make_pattern("p>pp", "pp", "p", gk::quantitative, U'p'),
      make_pattern("t>tt", "tt", "t", gk::quantitative, U't'),
      make_pattern("k>kk", "kk", "k", gk::quantitative, U'k'),
      // lenition of a single stop
      make_pattern("p>v", "p", "v", gk::qualitative, U'p'),
      make_pattern("t>d", "t", "d", gk::qualitative, U't'),
      make_pattern("ik>j", "ik", "j", gk::qualitative, U'k'),
      make_pattern("k>v", "k", "v", gk::qualitative, U'k'),
      // cluster assimilation
      make_pattern("nt>nn", "nt", "nn", gk::qualitative, U't'),
      make_pattern("nk>ng", "nk", "ng", gk::qualitative, U'k'),
      make_pattern("lt>ll", "lt", "ll", gk::qualitative, U't'),
      make_pattern("mp>mm", "mp", "mm", gk::qualitative, U'p'),
      make_pattern("nn>nt", "nt", "nn", gk::qualitative, U't'),
      // full elision
      make_pattern("k>0", "k", "", gk::qualitative, U'k'),
      make_pattern("t>0", "t", "", gk::qualitative, U't'),
  });
  return table;
}

const grade_pattern& rule_table::pattern(const std::string& id) const {
  for (const auto& p : patterns_) {
    if (p.id == id) return p;
  }
  throw std::out_of_range("rule_table: unknown pattern id " + id);
}

bool rule_table::has_pattern(const std::string& id) const {
  return std::any_of(patterns_.begin(), patterns_.end(),
                     [&](const grade_pattern& p) { return p.id == id; });
}

std::string rule_table::serialize() const {
  std::ostringstream out;
  out << "# gradation patterns v1\n";
  for (const auto& p : patterns_) {
    out << p.id << '\t' << grade_to_token(p.strong) << '\t' << grade_to_token(p.weak) << '\t'
        << to_string(p.kind) << '\t' << utf8_encode(word(1, p.consonant)) << '\n';
  }
  return out.str();
}

rule_table rule_table::parse(const std::string& text) {
  std::vector<grade_pattern> patterns;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 5) {
      throw std::invalid_argument("rule_table: expected 5 fields, got line: " + line);
    }
    grade_pattern p;
    p.id = fields[0];
    p.strong = grade_from_token(fields[1]);
    p.weak = grade_from_token(fields[2]);
    if (fields[3] == "quantitative") {
      p.kind = grade_kind::quantitative;
    } else if (fields[3] == "qualitative") {
      p.kind = grade_kind::qualitative;
    } else {
      throw std::invalid_argument("rule_table: bad kind " + fields[3]);
    }
    word cons = utf8_decode(fields[4]);
    if (cons.size() != 1) throw std::invalid_argument("rule_table: bad consonant " + fields[4]);
    p.consonant = cons[0];
    std::size_t gt = p.id.find('>');
    if (gt == std::string::npos) throw std::invalid_argument("rule_table: bad id " + p.id);
    word nom_side = grade_from_token(p.id.substr(0, gt));
    if (nom_side == p.strong) {
      p.direction = gradation_direction::direct;
    } else if (nom_side == p.weak) {
      p.direction = gradation_direction::inverse;
    } else {
      throw std::invalid_argument("rule_table: id " + p.id + " matches neither grade");
    }
    patterns.push_back(std::move(p));
  }
  return rule_table(std::move(patterns));
}

struct rule_table::stem_match {
  const grade_pattern* pattern;
  char_span nom_span;
  char_span gen_span;
};

// All single-substitution explanations of nom_stem -> gen_stem, where the
// substituted region is a pattern's nominative-side grade and the result its
// genitive-side grade.  Sites that sit inside a longer run of the same letter
// are skipped: the k of a kk geminate is not a k>0 site, and the nt inside
// ntt is not an nt>nn site.  Geminate grades themselves are exempt so that a
// ppp run still matches pp at either offset.
void rule_table::match_stems(const word& nom_stem, const word& gen_stem,
                             std::vector<stem_match>& out, bool& identity) const {
  if (nom_stem == gen_stem) identity = true;
  for (const auto& p : patterns_) {
    const word& src = p.nominative_grade();
    const word& dst = p.genitive_grade();
    if (src.size() > nom_stem.size()) continue;
    if (nom_stem.size() - src.size() + dst.size() != gen_stem.size()) continue;
    for (std::size_t i = 0; i + src.size() <= nom_stem.size(); ++i) {
      if (nom_stem.compare(i, src.size(), src) != 0) continue;
      if (src.size() == 1) {
        if (i > 0 && nom_stem[i - 1] == src[0]) continue;
        if (i + 1 < nom_stem.size() && nom_stem[i + 1] == src[0]) continue;
      } else if (src.size() == 2 && src[0] != src[1]) {
        if (i + 2 < nom_stem.size() && nom_stem[i + 2] == src[1]) continue;
      }
      word candidate = nom_stem.substr(0, i);
      candidate += dst;
      candidate += nom_stem.substr(i + src.size());
      if (candidate != gen_stem) continue;
      out.push_back({&p,
                     {static_cast<int>(i), static_cast<int>(i + src.size())},
                     {static_cast<int>(i), static_cast<int>(i + dst.size())}});
    }
  }
}

annotation rule_table::classify_pair(const word& nominative, const word& genitive) const {
  validate_word(nominative, "nominative");
  validate_word(genitive, "genitive");

  std::vector<stem_match> matches;
  bool identity = false;

  if (genitive.size() >= 2 && genitive.back() == U'n') {
    match_stems(nominative, genitive.substr(0, genitive.size() - 1), matches, identity);
  }
  if (genitive.size() >= 3 && ends_with(genitive, U"en")) {
    match_stems(nominative, genitive.substr(0, genitive.size() - 2), matches, identity);
  }
  if (nominative.back() == U's' && genitive.size() >= 5 && ends_with(genitive, U"ksen")) {
    match_stems(nominative.substr(0, nominative.size() - 1),
                genitive.substr(0, genitive.size() - 4), matches, identity);
  }

  if (identity) return annotation{false, std::nullopt};
  if (matches.empty()) {
    throw not_a_pair("no suffixation scheme relates " + utf8_encode(nominative) + " and " +
                     utf8_encode(genitive));
  }

  std::set<std::string> ids;
  for (const auto& m : matches) ids.insert(m.pattern->id);
  if (ids.size() > 1) {
    std::string list;
    for (const auto& id : ids) list += (list.empty() ? "" : ", ") + id;
    throw ambiguous_alignment("pair " + utf8_encode(nominative) + "/" + utf8_encode(genitive) +
                              " matches patterns " + list);
  }

  // same pattern at several offsets: keep the rightmost site
  const stem_match* best = &matches.front();
  for (const auto& m : matches) {
    if (m.nom_span.begin > best->nom_span.begin) best = &m;
  }

  gradation_event ev;
  ev.pattern_id = best->pattern->id;
  ev.direction = best->pattern->direction;
  ev.nom_span = best->nom_span;
  ev.gen_span = best->gen_span;
  return annotation{true, ev};
}

std::optional<char_span> rule_table::alternation_site(const word& nominative) const {
  validate_word(nominative, "nominative");
  int stop = -1;
  for (int i = static_cast<int>(nominative.size()) - 1; i >= 0; --i) {
    if (is_stop(nominative[i])) {
      stop = i;
      break;
    }
  }
  if (stop < 0) return std::nullopt;

  int begin = stop;
  if (stop > 0) {
    char32_t prev = nominative[stop - 1];
    if (prev == nominative[stop]) {
      begin = stop - 1;
    } else if (prev == U'n' || prev == U'l' || prev == U'm' || prev == U'r' || prev == U'h') {
      word cluster{prev, nominative[stop]};
      for (const auto& p : patterns_) {
        if (p.strong == cluster || p.weak == cluster) {
          begin = stop - 1;
          break;
        }
      }
    }
  }
  return char_span{begin, stop + 1};
}

word rule_table::apply_grade(const word& form, const gradation_event& event,
                             grade_side target) const {
  const grade_pattern& pat = pattern(event.pattern_id);
  int anchor = event.nom_span.begin;
  if (anchor < 0 || anchor > static_cast<int>(form.size())) {
    throw site_mismatch("site " + std::to_string(anchor) + " outside " + utf8_encode(form));
  }

  // strong before weak: for geminate patterns the strong grade is a prefix
  // extension of the weak one, so the longer match must win
  grade_side current;
  if (!pat.strong.empty() &&
      form.compare(anchor, pat.strong.size(), pat.strong) == 0) {
    current = grade_side::strong;
  } else if (!pat.weak.empty() && form.compare(anchor, pat.weak.size(), pat.weak) == 0) {
    current = grade_side::weak;
  } else if (pat.weak.empty()) {
    current = grade_side::weak;
  } else {
    throw site_mismatch("form " + utf8_encode(form) + " carries neither grade of " + pat.id +
                        " at " + std::to_string(anchor));
  }

  if (current == target) return form;
  word out = form.substr(0, anchor);
  out += pat.side(target);
  out += form.substr(anchor + pat.side(current).size());
  return out;
}

word rule_table::ungrade_genitive(const word& nominative, const word& gold_genitive) const {
  annotation ann = classify_pair(nominative, gold_genitive);
  if (!ann.gradating) {
    throw not_gradating(utf8_encode(nominative) + "/" + utf8_encode(gold_genitive) +
                        " shows no gradation");
  }
  const gradation_event& ev = *ann.event;
  grade_side nominative_side =
      ev.direction == gradation_direction::direct ? grade_side::strong : grade_side::weak;
  return apply_grade(gold_genitive, ev, nominative_side);
}

output_category categorize_output(const word& predicted, const word& gold,
                                  const word& alternate) {
  if (gold == alternate) {
    throw std::invalid_argument("categorize_output: gold and alternate coincide");
  }
  if (predicted == gold) return output_category::gold;
  if (predicted == alternate) return output_category::alternate;
  return output_category::nonce;
}

}  // namespace gradkit
