#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gradkit/gradation.hpp"
#include "gradkit/text.hpp"

namespace gradkit {

struct inflection_example {
  word nominative;
  word genitive;
  std::optional<annotation> note;  // absent on unannotated rows
};

// Rows are "nominative<TAB>genitive" with an optional third column
// "grad=y;kind=quant;cons=p;dir=direct" (or "grad=n").  '#' lines are
// comments; load keeps no comments, save can write header comments.
std::vector<inflection_example> load_tsv(const std::filesystem::path& path,
                                         const rule_table& table = rule_table::default_table());
void save_tsv(const std::filesystem::path& path, const std::vector<inflection_example>& examples,
              const std::vector<std::string>& header_comments = {});

// Fills in annotations via classify_pair for rows that lack them.
void annotate(std::vector<inflection_example>& examples,
              const rule_table& table = rule_table::default_table());

// Synthetic lexicon layout.  Stems are built from CV templates with
// harmony-consistent vowels; each gradation pattern and each plain paradigm
// gets a disjoint surface shape, so the genitive is predictable from the
// nominative's written form alone.
struct corpus_spec {
  int total_pairs = 4797;
  std::map<std::string, int> pattern_quotas;       // pattern id -> count
  std::map<std::string, double> plain_family_mix;  // family name -> weight
  std::uint64_t seed = 1;

  static corpus_spec defaults(std::uint64_t seed);
  int plain_total() const;  // total_pairs minus the quota sum
};

// Names of the non-gradating stem families: "penult-consonant" (kana),
// "vowel-cluster-stop" (auto), "s-stem" (varis), "e-stem" (tase),
// "vowel-final" (radio).
const std::vector<std::string>& plain_families();

std::vector<inflection_example> generate_corpus(const corpus_spec& spec,
                                                const rule_table& table = rule_table::default_table());

// Deterministic shuffle-and-cut: first floor(n * fraction) examples form the
// first part.
std::pair<std::vector<inflection_example>, std::vector<inflection_example>> split(
    const std::vector<inflection_example>& examples, double fraction, std::uint64_t seed);

// Probe set with the same number of gradating examples per consonant: keeps
// all of dev, tops up each consonant from extra_pool (pool nominatives must
// not collide with dev), trims overfull consonants by seeded subsampling.
std::vector<inflection_example> balance_probe_set(const std::vector<inflection_example>& dev,
                                                  const std::vector<inflection_example>& extra_pool,
                                                  int per_consonant_target, std::uint64_t seed,
                                                  const rule_table& table = rule_table::default_table());

class vocabulary {
 public:
  static constexpr int bos_id = 0;
  static constexpr int eos_id = 1;
  static constexpr int pad_id = 2;
  static constexpr int unk_id = 3;

  static vocabulary build(const std::vector<inflection_example>& examples);
  static vocabulary from_symbols(const std::vector<char32_t>& sorted_symbols);

  int size() const { return static_cast<int>(symbols_.size()) + 4; }
  int encode(char32_t c) const;
  std::vector<int> encode(const word& w) const;
  char32_t symbol(int id) const;  // valid for id >= 4
  const std::vector<char32_t>& symbols() const { return symbols_; }

  bool operator==(const vocabulary&) const = default;

 private:
  std::vector<char32_t> symbols_;  // sorted, ids 4..
};

}  // namespace gradkit
