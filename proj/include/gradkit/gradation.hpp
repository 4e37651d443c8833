#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gradkit/text.hpp"

namespace gradkit {

// Finnish consonant gradation: the stops p/t/k (alone or inside a cluster)
// alternate between a strong and a weak grade depending on the inflected
// form.  For most nouns the nominative carries the strong grade and the
// genitive the weak one (katto -> katon); e-stem nouns run the other way
// (liike -> liikkeen).

enum class grade_kind { quantitative, qualitative };
enum class grade_side { strong, weak };
enum class gradation_direction { direct, inverse };  // direct: nominative is strong

// Half-open code point range [begin, end) inside a word.  A zero-width span
// marks the spot where an elided grade would sit (salko -> salon).
struct char_span {
  int begin = 0;
  int end = 0;
  bool operator==(const char_span&) const = default;
};

struct grade_pattern {
  std::string id;     // nominative grade '>' genitive grade, "0" for elision
  word strong;
  word weak;
  grade_kind kind;
  char32_t consonant;                // p, t or k
  gradation_direction direction;     // which side the nominative is on

  const word& side(grade_side s) const { return s == grade_side::strong ? strong : weak; }
  const word& nominative_grade() const;
  const word& genitive_grade() const;
};

struct gradation_event {
  std::string pattern_id;
  gradation_direction direction;
  char_span nom_span;   // grade occurrence in the nominative
  char_span gen_span;   // grade occurrence in the genitive
  bool operator==(const gradation_event&) const = default;
};

struct annotation {
  bool gradating = false;
  std::optional<gradation_event> event;
};

enum class output_category { gold, alternate, nonce };

// The pattern inventory plus the alignment logic built on it.  The default
// table covers the seventeen nominative->genitive alternations (three
// geminate pairs in both directions, the lenitions p>v t>d k>v ik>j k>0 t>0,
// and the nasal/lateral assimilations nt>nn nk>ng lt>ll mp>mm plus the
// inverse nn>nt).
class rule_table {
 public:
  static const rule_table& default_table();

  explicit rule_table(std::vector<grade_pattern> patterns);

  const std::vector<grade_pattern>& patterns() const { return patterns_; }
  const grade_pattern& pattern(const std::string& id) const;  // throws std::out_of_range
  bool has_pattern(const std::string& id) const;

  // One pattern per line: id, strong, weak, kind, consonant (tab separated),
  // "0" standing in for an empty grade.  parse() accepts exactly what
  // serialize() emits plus blank and '#' comment lines.
  std::string serialize() const;
  static rule_table parse(const std::string& text);

  // Aligns nominative and genitive under the genitive suffixation schemes
  // (-n, -en on vowel stems, -ksen on s-stems) and explains the stem
  // difference with at most one pattern substitution.  Zero substitutions
  // mean no gradation.  Throws not_a_pair when no scheme fits and
  // ambiguous_alignment when distinct patterns both explain the pair.
  annotation classify_pair(const word& nominative, const word& genitive) const;

  // Rightmost stop of the form together with an immediately preceding
  // cluster partner (geminate stop, or one of n l m r h when the two letters
  // form a cluster grade of this table).  Position of the would-be
  // alternation; no claim that the word actually gradates.
  std::optional<char_span> alternation_site(const word& nominative) const;

  // Rewrites the event's site in `form` to the requested grade.  `form` must
  // carry one of the two grades of the event's pattern at the site; returns
  // the input unchanged when it is already in the target grade.
  word apply_grade(const word& form, const gradation_event& event, grade_side target) const;

  // The counterfactual genitive that keeps the nominative's grade:
  // luukku/luukun -> luukkun, kenkä/kengän -> kenkän.  Throws not_gradating
  // for pairs that classify as plain.
  word ungrade_genitive(const word& nominative, const word& gold_genitive) const;

 private:
  std::vector<grade_pattern> patterns_;

  struct stem_match;
  void match_stems(const word& nom_stem, const word& gen_stem,
                   std::vector<stem_match>& out, bool& identity) const;
};

// Exact-match bucket for a decoded form: the gold genitive, the ungraded
// alternate, or anything else.  gold and alternate must differ.
output_category categorize_output(const word& predicted, const word& gold, const word& alternate);

const char* to_string(grade_kind k);
const char* to_string(gradation_direction d);
const char* to_string(output_category c);

}  // namespace gradkit
