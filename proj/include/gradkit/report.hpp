#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gradkit/intervention.hpp"
#include "gradkit/seq2seq.hpp"

namespace gradkit {

struct curve_series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Every emit_* call writes out_prefix.svg and out_prefix.csv with the same
// numbers.  Output depends only on the inputs, so re-emission is
// byte-identical.

// Site activations of two trace dimensions.  Gradating words plot as their
// consonant letter (uppercase for inverse gradation), plain words as dots;
// plain words without a probe site are left out.
void emit_scatter(const model_state<float>& m, const std::vector<inflection_example>& examples,
                  int dim_x, int dim_y, const std::filesystem::path& out_prefix,
                  const rule_table& table = rule_table::default_table());

// One dimension's activation along each word, rows grouped into
// quantitative, qualitative and plain blocks.  A struck-through word label
// marks an incorrect greedy decode.
void emit_heatmap(const model_state<float>& m, const std::vector<inflection_example>& examples,
                  int dim, const std::filesystem::path& out_prefix,
                  const rule_table& table = rule_table::default_table());

void emit_curves(const std::string& title, const std::string& x_label,
                 const std::string& y_label, const std::vector<curve_series>& series,
                 const std::filesystem::path& out_prefix);

std::vector<curve_series> sweep_series(const sweep_curve& curve);
std::vector<curve_series> accuracy_series(const std::vector<train_curve_point>& curve);

}  // namespace gradkit
