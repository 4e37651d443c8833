#include "gradkit/intervention.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "gradkit/errors.hpp"
#include "gradkit/rng.hpp"

namespace gradkit {

const std::vector<double>& default_factors() {
  static const std::vector<double> factors = [] {
    std::vector<double> f;
    f.push_back(1);
    for (int x = 0; x >= -25; --x) f.push_back(x);
    return f;
  }();
  return factors;
}

sweep_curve run_sweep(const model_state<float>& m,
                      const std::vector<inflection_example>& examples,
                      const std::vector<int>& dims, const std::string& label,
                      const std::vector<double>& factors, const rule_table& table) {
  if (examples.empty()) throw empty_input("run_sweep: no examples");
  if (dims.empty()) throw std::invalid_argument("run_sweep: no dimensions");
  if (factors.empty()) throw std::invalid_argument("run_sweep: no factors");
  for (int d : dims) {
    if (d < 1 || d > m.config.trace_dim()) {
      throw std::invalid_argument("run_sweep: dimension " + std::to_string(d) + " out of range");
    }
  }

  struct item {
    const inflection_example* ex;
    word alternate;
    std::vector<int> sites;
  };
  std::vector<item> items;
  std::vector<word> inputs;
  for (const auto& ex : examples) {
    if (!ex.note) throw std::invalid_argument("run_sweep needs annotated examples");
    if (!ex.note->gradating) {
      throw not_gradating(utf8_encode(ex.nominative) + " does not gradate");
    }
    item it;
    it.ex = &ex;
    it.alternate = table.ungrade_genitive(ex.nominative, ex.genitive);
    for (int p = ex.note->event->nom_span.begin; p < ex.note->event->nom_span.end; ++p) {
      it.sites.push_back(p);
    }
    items.push_back(std::move(it));
    inputs.push_back(ex.nominative);
  }

  // the encoder runs once; every factor only rescales the stored traces
  std::vector<encoder_trace> base = encode(m, inputs);

  sweep_curve curve;
  curve.label = label;
  curve.dims = dims;
  for (double factor : factors) {
    std::vector<encoder_trace> scaled = base;
    const float fx = static_cast<float>(factor);
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (int d : dims) {
        for (int pos : items[i].sites) scaled[i].states(d - 1, pos) *= fx;
      }
    }
    std::vector<word> preds = decode_greedy(m, scaled);

    sweep_point pt;
    pt.factor = factor;
    for (std::size_t i = 0; i < items.size(); ++i) {
      switch (categorize_output(preds[i], items[i].ex->genitive, items[i].alternate)) {
        case output_category::gold: pt.gold += 1; break;
        case output_category::alternate: pt.alternate += 1; break;
        case output_category::nonce: pt.nonce += 1; break;
      }
    }
    const double n = static_cast<double>(items.size());
    pt.gold_pct = 100.0 * pt.gold / n;
    pt.alternate_pct = 100.0 * pt.alternate / n;
    pt.nonce_pct = 100.0 * pt.nonce / n;
    curve.points.push_back(pt);
  }
  return curve;
}

double peak_alternate_pct(const sweep_curve& curve) {
  double best = 0;
  for (const auto& pt : curve.points) best = std::max(best, pt.alternate_pct);
  return best;
}

tuning_result tune_top_n(const model_state<float>& m,
                         const std::vector<inflection_example>& examples,
                         const std::vector<int>& ranked_dims, int max_n,
                         const std::vector<double>& factors, const rule_table& table) {
  if (max_n < 1) throw std::invalid_argument("tune_top_n: max_n must be positive");
  if (static_cast<int>(ranked_dims.size()) < max_n) {
    throw std::invalid_argument("tune_top_n: fewer ranked dimensions than max_n");
  }
  tuning_result res;
  for (int n = 1; n <= max_n; ++n) {
    std::vector<int> dims(ranked_dims.begin(), ranked_dims.begin() + n);
    sweep_curve c = run_sweep(m, examples, dims, "T" + std::to_string(n), factors, table);
    double peak = peak_alternate_pct(c);
    if (res.best_n == 0 || peak > res.best_peak) {
      res.best_n = n;
      res.best_peak = peak;
    }
    res.curves.push_back(std::move(c));
  }
  return res;
}

sweep_curve random_baseline(const model_state<float>& m,
                            const std::vector<inflection_example>& examples, int k,
                            std::uint64_t seed, const std::vector<int>& excluded_dims,
                            const std::vector<double>& factors, const rule_table& table) {
  if (k < 1) throw std::invalid_argument("random_baseline: k must be positive");
  std::set<int> excluded(excluded_dims.begin(), excluded_dims.end());
  std::vector<int> candidates;
  for (int d = 1; d <= m.config.trace_dim(); ++d) {
    if (!excluded.count(d)) candidates.push_back(d);
  }
  if (static_cast<int>(candidates.size()) < k) {
    throw std::invalid_argument("random_baseline: not enough dimensions left to draw from");
  }
  rng r(seed);
  r.shuffle(candidates);
  candidates.resize(k);
  std::sort(candidates.begin(), candidates.end());
  return run_sweep(m, examples, candidates, "TR", factors, table);
}

std::vector<sweep_curve> appendix_sweep(const model_state<float>& m,
                                        const std::vector<inflection_example>& examples,
                                        const std::vector<int>& ranked_dims, int max_n,
                                        std::uint64_t baseline_seed, const rule_table& table) {
  tuning_result tuned = tune_top_n(m, examples, ranked_dims, max_n, default_factors(), table);
  std::vector<int> top(ranked_dims.begin(), ranked_dims.begin() + max_n);
  sweep_curve tr =
      random_baseline(m, examples, max_n, baseline_seed, top, default_factors(), table);
  std::vector<sweep_curve> out = std::move(tuned.curves);
  out.push_back(std::move(tr));
  return out;
}

std::string sweep_csv(const std::vector<sweep_curve>& curves, const std::string& model_label) {
  std::ostringstream out;
  out << "model,dims,label,factor,gold_pct,alternate_pct,nonce_pct\n";
  char buf[64];
  for (const auto& c : curves) {
    std::string dims;
    for (std::size_t i = 0; i < c.dims.size(); ++i) {
      if (i) dims += '+';
      dims += std::to_string(c.dims[i]);
    }
    for (const auto& pt : c.points) {
      out << model_label << ',' << dims << ',' << c.label << ',';
      std::snprintf(buf, sizeof(buf), "%g,%.4f,%.4f,%.4f", pt.factor, pt.gold_pct,
                    pt.alternate_pct, pt.nonce_pct);
      out << buf << '\n';
    }
  }
  return out.str();
}

}  // namespace gradkit
