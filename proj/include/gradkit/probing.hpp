#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gradkit/seq2seq.hpp"

namespace gradkit {

// 0-based position whose trace column is probed: for gradating words the
// last character of the alternation cluster, for plain words the penultimate
// character.  Plain words whose penultimate character is a vowel carry no
// comparable site and throw excluded_site.
int select_site(const inflection_example& ex);

// Activation samples at probed sites, one column per word.
struct activation_group {
  std::string label;
  mat_t<double> samples;  // trace_dim x n
};

struct dim_score {
  int dim;  // 1-based trace dimension
  double mean_a;
  double mean_b;
  double gap;  // mean_b - mean_a
};

// Dimensions ordered by |mean gap| between the two groups, largest first.
std::vector<dim_score> rank_dimensions(const activation_group& a, const activation_group& b,
                                       int top_n);

const std::vector<std::string>& probe_categories();  // P T K Qual Quant

struct significance_cell {
  int dim;
  std::string category;
  double mean_gap;  // category mean minus plain mean, on the held-out half
  double p_value;
  bool significant;
};

struct probe_report {
  std::uint64_t split_seed = 0;
  int top_n = 0;
  double alpha = 0;
  int discovery_size = 0;
  int testing_size = 0;
  std::vector<dim_score> ranked;           // discovery half, gradating vs plain
  std::vector<significance_cell> cells;    // top_n x categories, testing half
  std::vector<int> dims_significant_all;   // significant in every category
};

// Splits the probe set in half under split_seed, ranks dimensions by the
// gradating/plain gap on one half, then Welch-tests the top dimensions per
// category against the plain group on the other half.
probe_report significance_probe(const model_state<float>& m,
                                const std::vector<inflection_example>& probe_set,
                                int top_n = 5, double alpha = 0.005,
                                std::uint64_t split_seed = 1,
                                const rule_table& table = rule_table::default_table());

// category of a gradating example for the report: P, T, K, Qual or Quant
bool in_category(const annotation& note, const std::string& category, const rule_table& table);

std::string significance_csv(const probe_report& r, const std::string& model_label);
std::string significance_table(const probe_report& r);

}  // namespace gradkit
