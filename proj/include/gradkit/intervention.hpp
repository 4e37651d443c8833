#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gradkit/seq2seq.hpp"

namespace gradkit {

struct sweep_point {
  double factor = 1;
  int gold = 0;
  int alternate = 0;
  int nonce = 0;
  double gold_pct = 0;
  double alternate_pct = 0;
  double nonce_pct = 0;
};

struct sweep_curve {
  std::string label;
  std::vector<int> dims;  // 1-based trace dimensions
  std::vector<sweep_point> points;
};

// 1, 0, -1, -2, ... -25
const std::vector<double>& default_factors();

// Scales the chosen dimensions at every character of each word's alternation
// cluster by each factor, decodes, and buckets the outputs against the gold
// genitive and its ungraded counterfactual.  Examples must be annotated and
// gradating.
sweep_curve run_sweep(const model_state<float>& m,
                      const std::vector<inflection_example>& examples,
                      const std::vector<int>& dims, const std::string& label,
                      const std::vector<double>& factors = default_factors(),
                      const rule_table& table = rule_table::default_table());

struct tuning_result {
  int best_n = 0;               // prefix length with the highest alternate peak
  double best_peak = 0;         // that peak, in percent
  std::vector<sweep_curve> curves;  // labels T1..Tmax
};

// Sweeps every prefix of the ranked dimension list.
tuning_result tune_top_n(const model_state<float>& m,
                         const std::vector<inflection_example>& examples,
                         const std::vector<int>& ranked_dims, int max_n = 5,
                         const std::vector<double>& factors = default_factors(),
                         const rule_table& table = rule_table::default_table());

// Control sweep over k dimensions drawn away from excluded_dims (label TR).
sweep_curve random_baseline(const model_state<float>& m,
                            const std::vector<inflection_example>& examples, int k,
                            std::uint64_t seed, const std::vector<int>& excluded_dims,
                            const std::vector<double>& factors = default_factors(),
                            const rule_table& table = rule_table::default_table());

// T1..Tmax plus TR, the full per-model scaling picture.
std::vector<sweep_curve> appendix_sweep(const model_state<float>& m,
                                        const std::vector<inflection_example>& examples,
                                        const std::vector<int>& ranked_dims, int max_n,
                                        std::uint64_t baseline_seed,
                                        const rule_table& table = rule_table::default_table());

double peak_alternate_pct(const sweep_curve& curve);

std::string sweep_csv(const std::vector<sweep_curve>& curves, const std::string& model_label);

}  // namespace gradkit
