#include "gradkit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "gradkit/errors.hpp"
#include "gradkit/rng.hpp"

namespace gradkit {

namespace {

const word kBackVowels = U"aou";
const word kFrontVowels = U"äöy";  // ä ö y
const word kOnsets = U"ptksvjlmnrh";
const word kMedials = U"svjlmnrh";

char32_t pick_char(rng& r, const word& pool) { return pool[r.next_below(pool.size())]; }

char32_t pick_vowel(rng& r, bool back, bool allow_e, bool allow_i) {
  word pool = back ? kBackVowels : kFrontVowels;
  if (allow_e) pool += U'e';
  if (allow_i) pool += U'i';
  return pick_char(r, pool);
}

// [C?] V [C V]? with the last vowel optionally restricted away from i
word make_prefix(rng& r, bool back, bool allow_final_i) {
  bool two_syllables = r.next_bool(0.45);
  word out;
  if (r.next_bool(0.75)) out += pick_char(r, kOnsets);
  out += pick_vowel(r, back, true, two_syllables ? true : allow_final_i);
  if (two_syllables) {
    out += pick_char(r, kMedials);
    out += pick_vowel(r, back, true, allow_final_i);
  }
  return out;
}

void maybe_extend_diphthong(rng& r, bool back, word& prefix) {
  if (!r.next_bool(0.3)) return;
  prefix += pick_vowel(r, back, false, false);
}

const std::vector<word>& vowel_clusters(bool back) {
  static const std::vector<word> b = {U"aa", U"oo", U"uu", U"au", U"ou", U"uo", U"ua"};
  static const std::vector<word> f = {U"ää", U"öö", U"yy",
                                      U"äy",      U"öy",      U"yö"};
  return back ? b : f;
}

const std::vector<word>& final_vowel_pairs(bool back) {
  static const std::vector<word> b = {U"io", U"ia", U"ua", U"oa", U"eo", U"ea"};
  static const std::vector<word> f = {U"iö", U"iä", U"yä", U"eä"};
  return back ? b : f;
}

struct raw_pair {
  word nom;
  word gen;
};

raw_pair make_gradating(rng& r, const grade_pattern& pat) {
  bool back = r.next_bool(0.5);
  raw_pair out;
  const word& strong = pat.strong;
  const word& weak = pat.weak;

  if (pat.kind == grade_kind::quantitative) {
    char32_t c = strong[0];
    if (pat.direction == gradation_direction::direct) {
      // katto -> katon
      word p = make_prefix(r, back, true);
      maybe_extend_diphthong(r, back, p);
      char32_t vf = pick_vowel(r, back, false, true);
      out.nom = p + strong + vf;
      out.gen = p + weak + vf + U'n';
    } else {
      // ripe -> rippeen
      word p = make_prefix(r, back, true);
      out.nom = p + word(1, c) + U'e';
      out.gen = p + word(2, c) + U"een";
    }
    return out;
  }

  if (pat.id == "ik>j") {
    // aika -> ajan
    word p = make_prefix(r, back, false);
    char32_t vf = pick_vowel(r, back, false, false);
    out.nom = p + U"ik" + vf;
    out.gen = p + U'j' + vf + U'n';
  } else if (pat.id == "k>0") {
    // salko -> salon: the elided k follows a liquid
    word p = make_prefix(r, back, true);
    p += (r.next_bool(0.5) ? U'l' : U'r');
    char32_t vf = pick_vowel(r, back, false, true);
    out.nom = p + U'k' + vf;
    out.gen = p + word(1, vf) + U'n';
  } else if (pat.id == "t>0") {
    // olut -> oluen
    word p;
    if (r.next_bool(0.75)) p += pick_char(r, kOnsets);
    p += pick_vowel(r, back, true, true);
    p += pick_char(r, kMedials);
    p += (back ? U'u' : U'y');
    out.nom = p + U't';
    out.gen = p + U"en";
  } else if (pat.id == "nn>nt") {
    // ranne -> ranteen
    word p = make_prefix(r, back, true);
    out.nom = p + U"nne";
    out.gen = p + U"nteen";
  } else if (strong.size() == 2) {
    // cluster assimilation: kenkä -> kengän
    word p = make_prefix(r, back, true);
    char32_t vf = pick_vowel(r, back, false, true);
    out.nom = p + strong + vf;
    out.gen = p + weak + vf + U'n';
  } else {
    // single-stop lenition: sopu -> sovun, johto -> johdon
    bool is_k = (pat.consonant == U'k');
    word p = make_prefix(r, back, !is_k);
    if (pat.consonant == U't' && r.next_bool(0.25)) p += U'h';
    char32_t vf = pick_vowel(r, back, false, true);
    out.nom = p + strong + vf;
    out.gen = p + weak + vf + U'n';
  }
  return out;
}

raw_pair make_plain(rng& r, const std::string& family) {
  bool back = r.next_bool(0.5);
  raw_pair out;

  if (family == "penult-consonant") {
    // kana -> kanan
    word base;
    if (r.next_bool(0.85)) base += pick_char(r, kOnsets);
    base += pick_vowel(r, back, true, true);
    if (r.next_bool(0.35)) {
      base += pick_char(r, kMedials);
      base += pick_vowel(r, back, true, true);
    }
    base += pick_char(r, kMedials);
    base += pick_vowel(r, back, false, true);
    out.nom = base;
    out.gen = base + U'n';
  } else if (family == "vowel-cluster-stop") {
    // auto -> auton: two vowels shield the stop
    word base;
    if (r.next_bool(0.6)) base += pick_char(r, kOnsets);
    base += r.pick(vowel_clusters(back));
    base += pick_char(r, word(U"ptk"));
    base += pick_vowel(r, back, false, true);
    out.nom = base;
    out.gen = base + U'n';
  } else if (family == "s-stem") {
    // varis -> variksen
    word base;
    if (r.next_bool(0.8)) base += pick_char(r, kOnsets);
    base += pick_vowel(r, back, true, true);
    base += pick_char(r, kMedials);
    base += pick_vowel(r, back, true, true);
    out.nom = base + U's';
    out.gen = base + U"ksen";
  } else if (family == "e-stem") {
    // tase -> taseen
    word base;
    if (r.next_bool(0.8)) base += pick_char(r, kOnsets);
    base += pick_vowel(r, back, true, true);
    if (r.next_bool(0.3)) {
      base += pick_char(r, kMedials);
      base += pick_vowel(r, back, true, true);
    }
    base += pick_char(r, kMedials);
    out.nom = base + U'e';
    out.gen = base + U"een";
  } else if (family == "vowel-final") {
    // radio -> radion; allows loanword onsets d b g
    word base;
    if (r.next_bool(0.8)) base += pick_char(r, kOnsets);
    base += pick_vowel(r, back, true, true);
    base += r.next_bool(0.15) ? pick_char(r, word(U"dbg")) : pick_char(r, kMedials);
    base += r.pick(final_vowel_pairs(back));
    out.nom = base;
    out.gen = base + U'n';
  } else {
    throw std::invalid_argument("unknown plain family " + family);
  }
  return out;
}

std::string kind_token(grade_kind k) { return k == grade_kind::quantitative ? "quant" : "qual"; }

std::string annotation_column(const annotation& a, const rule_table& table) {
  if (!a.gradating) return "grad=n";
  const grade_pattern& p = table.pattern(a.event->pattern_id);
  std::string out = "grad=y;kind=" + kind_token(p.kind);
  out += ";cons=" + utf8_encode(word(1, p.consonant));
  out += ";dir=" + std::string(to_string(p.direction));
  return out;
}

}  // namespace

const std::vector<std::string>& plain_families() {
  static const std::vector<std::string> names = {
      "penult-consonant", "vowel-cluster-stop", "s-stem", "e-stem", "vowel-final"};
  return names;
}

corpus_spec corpus_spec::defaults(std::uint64_t seed) {
  corpus_spec s;
  s.total_pairs = 4797;
  s.seed = seed;
  s.pattern_quotas = {
      {"pp>p", 190}, {"tt>t", 150}, {"kk>k", 240}, {"p>pp", 110}, {"t>tt", 110},
      {"k>kk", 190}, {"p>v", 80},   {"t>d", 70},   {"ik>j", 60},  {"k>v", 60},
      {"nt>nn", 70}, {"nk>ng", 60}, {"lt>ll", 60}, {"mp>mm", 80}, {"nn>nt", 60},
      {"k>0", 60},   {"t>0", 60},
  };
  s.plain_family_mix = {
      {"penult-consonant", 0.34}, {"vowel-cluster-stop", 0.22}, {"s-stem", 0.14},
      {"e-stem", 0.14},           {"vowel-final", 0.16},
  };
  return s;
}

int corpus_spec::plain_total() const {
  int quota_sum = 0;
  for (const auto& [id, n] : pattern_quotas) quota_sum += n;
  return total_pairs - quota_sum;
}

std::vector<inflection_example> generate_corpus(const corpus_spec& spec,
                                                const rule_table& table) {
  for (const auto& [id, n] : spec.pattern_quotas) {
    if (!table.has_pattern(id)) throw std::invalid_argument("quota for unknown pattern " + id);
    if (n < 0) throw std::invalid_argument("negative quota for " + id);
  }
  if (spec.plain_total() < 0) {
    throw quota_infeasible("pattern quotas sum past total_pairs");
  }

  rng r(spec.seed);
  std::set<word> used;
  std::vector<inflection_example> out;
  out.reserve(spec.total_pairs);

  constexpr int kMaxAttempts = 5000;

  auto emit = [&](const std::string& label, int count, auto&& build, bool gradating,
                  const std::string& pattern_id) {
    for (int j = 0; j < count; ++j) {
      for (int attempt = 0;; ++attempt) {
        if (attempt == kMaxAttempts) {
          throw quota_infeasible("could not fill quota for " + label + " (ran " +
                                 std::to_string(kMaxAttempts) + " attempts)");
        }
        raw_pair p = build();
        if (!used.insert(p.nom).second) continue;
        annotation ann = table.classify_pair(p.nom, p.gen);
        if (ann.gradating != gradating ||
            (gradating && ann.event->pattern_id != pattern_id)) {
          used.erase(p.nom);
          throw std::logic_error("generated pair " + utf8_encode(p.nom) + "/" +
                                 utf8_encode(p.gen) + " does not classify as " + label);
        }
        out.push_back({std::move(p.nom), std::move(p.gen), ann});
        break;
      }
    }
  };

  for (const auto& pat : table.patterns()) {
    auto it = spec.pattern_quotas.find(pat.id);
    if (it == spec.pattern_quotas.end()) continue;
    emit(pat.id, it->second, [&] { return make_gradating(r, pat); }, true, pat.id);
  }

  // plain counts by largest remainder over the family mix
  int plain_total = spec.plain_total();
  double weight_sum = 0;
  for (const auto& name : plain_families()) {
    auto it = spec.plain_family_mix.find(name);
    double w = it == spec.plain_family_mix.end() ? 0.0 : it->second;
    if (w < 0) throw std::invalid_argument("negative family weight for " + name);
    weight_sum += w;
  }
  if (plain_total > 0 && weight_sum <= 0) {
    throw std::invalid_argument("plain examples requested but family mix is empty");
  }
  std::vector<int> counts;
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < plain_families().size(); ++i) {
    auto it = spec.plain_family_mix.find(plain_families()[i]);
    double w = it == spec.plain_family_mix.end() ? 0.0 : it->second;
    double exact = plain_total * w / weight_sum;
    counts.push_back(static_cast<int>(exact));
    assigned += counts.back();
    remainders.push_back({exact - counts.back(), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < plain_total - assigned; ++k) counts[remainders[k].second] += 1;

  for (std::size_t i = 0; i < plain_families().size(); ++i) {
    const std::string& fam = plain_families()[i];
    emit(fam, counts[i], [&] { return make_plain(r, fam); }, false, "");
  }

  return out;
}

std::pair<std::vector<inflection_example>, std::vector<inflection_example>> split(
    const std::vector<inflection_example>& examples, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("split fraction outside [0, 1]");
  }
  std::vector<inflection_example> shuffled = examples;
  rng r(seed);
  r.shuffle(shuffled);
  std::size_t cut = static_cast<std::size_t>(shuffled.size() * fraction);
  std::vector<inflection_example> head(shuffled.begin(), shuffled.begin() + cut);
  std::vector<inflection_example> tail(shuffled.begin() + cut, shuffled.end());
  return {std::move(head), std::move(tail)};
}

namespace {

char32_t annotated_consonant(const inflection_example& ex, const rule_table& table) {
  return table.pattern(ex.note->event->pattern_id).consonant;
}

}  // namespace

std::vector<inflection_example> balance_probe_set(const std::vector<inflection_example>& dev,
                                                  const std::vector<inflection_example>& extra_pool,
                                                  int per_consonant_target, std::uint64_t seed,
                                                  const rule_table& table) {
  if (per_consonant_target <= 0) throw std::invalid_argument("nonpositive consonant target");
  for (const auto* set : {&dev, &extra_pool}) {
    for (const auto& ex : *set) {
      if (!ex.note) throw std::invalid_argument("balance_probe_set needs annotated examples");
    }
  }
  std::set<word> dev_noms;
  for (const auto& ex : dev) dev_noms.insert(ex.nominative);

  std::vector<inflection_example> out;
  for (const auto& ex : dev) {
    if (!ex.note->gradating) out.push_back(ex);
  }

  rng r(seed);
  for (char32_t cons : {U'p', U't', U'k'}) {
    std::vector<inflection_example> have;
    for (const auto& ex : dev) {
      if (ex.note->gradating && annotated_consonant(ex, table) == cons) have.push_back(ex);
    }
    if (static_cast<int>(have.size()) > per_consonant_target) {
      r.shuffle(have);
      have.resize(per_consonant_target);
    } else if (static_cast<int>(have.size()) < per_consonant_target) {
      std::vector<inflection_example> candidates;
      for (const auto& ex : extra_pool) {
        if (ex.note->gradating && annotated_consonant(ex, table) == cons &&
            !dev_noms.count(ex.nominative)) {
          candidates.push_back(ex);
        }
      }
      int need = per_consonant_target - static_cast<int>(have.size());
      if (static_cast<int>(candidates.size()) < need) {
        throw insufficient_pool("consonant " + utf8_encode(word(1, cons)) + ": need " +
                                std::to_string(need) + " more, pool offers " +
                                std::to_string(candidates.size()));
      }
      r.shuffle(candidates);
      have.insert(have.end(), candidates.begin(), candidates.begin() + need);
    }
    out.insert(out.end(), have.begin(), have.end());
  }
  return out;
}

// ---- TSV ----

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

annotation parse_annotation_column(const std::string& text, const inflection_example& ex,
                                   const rule_table& table, long line_no) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw malformed_row("bad annotation field '" + item + "'", line_no);
    }
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto grad = kv.find("grad");
  if (grad == kv.end()) throw malformed_row("annotation lacks grad=", line_no);

  annotation derived;
  try {
    derived = table.classify_pair(ex.nominative, ex.genitive);
  } catch (const error& e) {
    throw malformed_row(std::string("annotated row does not align: ") + e.what(), line_no);
  }

  if (grad->second == "n") {
    if (kv.size() != 1) throw malformed_row("grad=n takes no other fields", line_no);
    if (derived.gradating) {
      throw malformed_row("row says grad=n but the pair shows " + derived.event->pattern_id,
                          line_no);
    }
    return derived;
  }
  if (grad->second != "y") throw malformed_row("grad must be y or n", line_no);
  if (!derived.gradating) {
    throw malformed_row("row says grad=y but the pair aligns without gradation", line_no);
  }
  const grade_pattern& pat = table.pattern(derived.event->pattern_id);
  auto expect = [&](const char* key, const std::string& actual) {
    auto it = kv.find(key);
    if (it == kv.end()) throw malformed_row(std::string("annotation lacks ") + key, line_no);
    if (it->second != actual) {
      throw malformed_row(std::string(key) + "=" + it->second + " disagrees with the pair (" +
                          actual + ")", line_no);
    }
  };
  expect("kind", kind_token(pat.kind));
  expect("cons", utf8_encode(word(1, pat.consonant)));
  expect("dir", to_string(pat.direction));
  for (const auto& [key, value] : kv) {
    if (key != "grad" && key != "kind" && key != "cons" && key != "dir") {
      throw malformed_row("unknown annotation key '" + key + "'", line_no);
    }
  }
  return derived;
}

}  // namespace

std::vector<inflection_example> load_tsv(const std::filesystem::path& path,
                                         const rule_table& table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open " + path.string());
  std::vector<inflection_example> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2 && fields.size() != 3) {
      throw malformed_row("expected 2 or 3 columns, got " + std::to_string(fields.size()),
                          line_no);
    }
    inflection_example ex;
    try {
      ex.nominative = utf8_decode(fields[0]);
      ex.genitive = utf8_decode(fields[1]);
    } catch (const std::invalid_argument& e) {
      throw malformed_row(e.what(), line_no);
    }
    if (ex.nominative.empty() || ex.genitive.empty()) {
      throw malformed_row("empty form", line_no);
    }
    for (const word* w : {&ex.nominative, &ex.genitive}) {
      for (char32_t c : *w) {
        if (!is_finnish_letter(c)) throw malformed_row("non-letter character", line_no);
      }
    }
    if (fields.size() == 3) ex.note = parse_annotation_column(fields[2], ex, table, line_no);
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw empty_file(path.string() + " holds no data rows");
  return out;
}

void save_tsv(const std::filesystem::path& path, const std::vector<inflection_example>& examples,
              const std::vector<std::string>& header_comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open " + path.string() + " for writing");
  for (const auto& c : header_comments) out << "# " << c << '\n';
  const rule_table& table = rule_table::default_table();
  for (const auto& ex : examples) {
    out << utf8_encode(ex.nominative) << '\t' << utf8_encode(ex.genitive);
    if (ex.note) out << '\t' << annotation_column(*ex.note, table);
    out << '\n';
  }
}

void annotate(std::vector<inflection_example>& examples, const rule_table& table) {
  for (auto& ex : examples) {
    if (!ex.note) ex.note = table.classify_pair(ex.nominative, ex.genitive);
  }
}

// ---- vocabulary ----

vocabulary vocabulary::build(const std::vector<inflection_example>& examples) {
  std::set<char32_t> chars;
  for (const auto& ex : examples) {
    chars.insert(ex.nominative.begin(), ex.nominative.end());
    chars.insert(ex.genitive.begin(), ex.genitive.end());
  }
  vocabulary v;
  v.symbols_.assign(chars.begin(), chars.end());
  return v;
}

vocabulary vocabulary::from_symbols(const std::vector<char32_t>& sorted_symbols) {
  for (std::size_t i = 1; i < sorted_symbols.size(); ++i) {
    if (sorted_symbols[i - 1] >= sorted_symbols[i]) {
      throw std::invalid_argument("vocabulary symbols must be strictly ascending");
    }
  }
  vocabulary v;
  v.symbols_ = sorted_symbols;
  return v;
}

int vocabulary::encode(char32_t c) const {
  auto it = std::lower_bound(symbols_.begin(), symbols_.end(), c);
  if (it == symbols_.end() || *it != c) return unk_id;
  return 4 + static_cast<int>(it - symbols_.begin());
}

std::vector<int> vocabulary::encode(const word& w) const {
  std::vector<int> ids;
  ids.reserve(w.size());
  for (char32_t c : w) ids.push_back(encode(c));
  return ids;
}

char32_t vocabulary::symbol(int id) const {
  if (id < 4 || id >= size()) throw std::out_of_range("vocabulary: no symbol for id");
  return symbols_[id - 4];
}

}  // namespace gradkit
