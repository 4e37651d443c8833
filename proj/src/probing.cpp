#include "gradkit/probing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "gradkit/errors.hpp"
#include "gradkit/rng.hpp"
#include "gradkit/stats.hpp"

namespace gradkit {

int select_site(const inflection_example& ex) {
  if (!ex.note) throw std::invalid_argument("select_site needs an annotated example");
  if (ex.note->gradating) {
    return ex.note->event->nom_span.end - 1;
  }
  int t = static_cast<int>(ex.nominative.size());
  if (t < 2 || !is_consonant(ex.nominative[t - 2])) {
    throw excluded_site(utf8_encode(ex.nominative) + " has no consonant at the penult");
  }
  return t - 2;
}

std::vector<dim_score> rank_dimensions(const activation_group& a, const activation_group& b,
                                       int top_n) {
  if (a.samples.cols() == 0 || b.samples.cols() == 0) {
    throw empty_group("rank_dimensions: empty activation group");
  }
  if (a.samples.rows() != b.samples.rows()) {
    throw std::invalid_argument("rank_dimensions: trace widths differ");
  }
  if (top_n < 1) throw std::invalid_argument("rank_dimensions: top_n must be positive");

  const int dims = static_cast<int>(a.samples.rows());
  std::vector<dim_score> scores;
  scores.reserve(dims);
  for (int d = 0; d < dims; ++d) {
    double ma = a.samples.row(d).mean();
    double mb = b.samples.row(d).mean();
    scores.push_back({d + 1, ma, mb, mb - ma});
  }
  std::stable_sort(scores.begin(), scores.end(), [](const dim_score& x, const dim_score& y) {
    double gx = std::fabs(x.gap);
    double gy = std::fabs(y.gap);
    if (gx != gy) return gx > gy;
    return x.dim < y.dim;
  });
  scores.resize(std::min<std::size_t>(scores.size(), top_n));
  return scores;
}

const std::vector<std::string>& probe_categories() {
  static const std::vector<std::string> cats = {"P", "T", "K", "Qual", "Quant"};
  return cats;
}

bool in_category(const annotation& note, const std::string& category, const rule_table& table) {
  if (!note.gradating) return false;
  const grade_pattern& pat = table.pattern(note.event->pattern_id);
  if (category == "P") return pat.consonant == U'p';
  if (category == "T") return pat.consonant == U't';
  if (category == "K") return pat.consonant == U'k';
  if (category == "Qual") return pat.kind == grade_kind::qualitative;
  if (category == "Quant") return pat.kind == grade_kind::quantitative;
  throw std::invalid_argument("unknown probe category " + category);
}

probe_report significance_probe(const model_state<float>& m,
                                const std::vector<inflection_example>& probe_set,
                                int top_n, double alpha, std::uint64_t split_seed,
                                const rule_table& table) {
  if (probe_set.empty()) throw empty_input("significance_probe: empty probe set");
  if (top_n < 1) throw std::invalid_argument("significance_probe: top_n must be positive");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("significance_probe: bad alpha");
  for (const auto& ex : probe_set) {
    if (!ex.note) throw std::invalid_argument("significance_probe needs annotated examples");
  }

  // site activations for every usable example
  struct probed {
    const inflection_example* ex;
    Eigen::VectorXd site_state;
  };
  std::vector<probed> usable;
  {
    std::vector<word> inputs;
    std::vector<const inflection_example*> kept;
    std::vector<int> sites;
    for (const auto& ex : probe_set) {
      int site;
      try {
        site = select_site(ex);
      } catch (const excluded_site&) {
        continue;
      }
      kept.push_back(&ex);
      sites.push_back(site);
      inputs.push_back(ex.nominative);
    }
    if (kept.empty()) throw empty_group("significance_probe: every example was excluded");
    std::vector<encoder_trace> traces = encode(m, inputs);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      usable.push_back({kept[i], traces[i].states.col(sites[i]).cast<double>()});
    }
  }

  // disjoint halves under the split seed
  std::vector<int> idx(usable.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  rng r(split_seed);
  r.shuffle(idx);
  std::size_t half = idx.size() / 2;

  const int width = static_cast<int>(m.config.trace_dim());
  auto collect = [&](auto&& pred, std::size_t from, std::size_t to, const std::string& label) {
    std::vector<int> cols;
    for (std::size_t i = from; i < to; ++i) {
      if (pred(*usable[idx[i]].ex)) cols.push_back(idx[i]);
    }
    activation_group g;
    g.label = label;
    g.samples.resize(width, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) g.samples.col(j) = usable[cols[j]].site_state;
    return g;
  };

  activation_group disc_grad =
      collect([](const inflection_example& e) { return e.note->gradating; }, 0, half, "gradating");
  activation_group disc_plain =
      collect([](const inflection_example& e) { return !e.note->gradating; }, 0, half, "plain");
  if (disc_grad.samples.cols() == 0 || disc_plain.samples.cols() == 0) {
    throw empty_group("significance_probe: a discovery group is empty");
  }

  probe_report rep;
  rep.split_seed = split_seed;
  rep.top_n = top_n;
  rep.alpha = alpha;
  rep.discovery_size = static_cast<int>(half);
  rep.testing_size = static_cast<int>(idx.size() - half);
  rep.ranked = rank_dimensions(disc_grad, disc_plain, top_n);

  activation_group test_plain =
      collect([](const inflection_example& e) { return !e.note->gradating; }, half, idx.size(),
              "plain");
  if (test_plain.samples.cols() < 2) {
    throw empty_group("significance_probe: testing plain group too small");
  }

  for (const dim_score& ds : rep.ranked) {
    bool all_significant = true;
    for (const std::string& cat : probe_categories()) {
      activation_group test_cat = collect(
          [&](const inflection_example& e) { return in_category(*e.note, cat, table); }, half,
          idx.size(), cat);
      if (test_cat.samples.cols() < 2) {
        throw empty_group("significance_probe: category " + cat + " too small on the test half");
      }
      std::vector<double> xs(test_cat.samples.cols());
      std::vector<double> ys(test_plain.samples.cols());
      for (long j = 0; j < test_cat.samples.cols(); ++j) xs[j] = test_cat.samples(ds.dim - 1, j);
      for (long j = 0; j < test_plain.samples.cols(); ++j) ys[j] = test_plain.samples(ds.dim - 1, j);
      significance_cell cell;
      cell.dim = ds.dim;
      cell.category = cat;
      cell.mean_gap = mean_activation(xs) - mean_activation(ys);
      try {
        cell.p_value = welch_t_test(xs, ys).p;
      } catch (const degenerate_variance&) {
        // two exactly flat groups: equal means carry no evidence, unequal
        // means differ by a step
        cell.p_value = cell.mean_gap == 0.0 ? 1.0 : 0.0;
      }
      cell.significant = cell.p_value < alpha;
      all_significant = all_significant && cell.significant;
      rep.cells.push_back(cell);
    }
    if (all_significant) rep.dims_significant_all.push_back(ds.dim);
  }
  return rep;
}

namespace {

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string significance_csv(const probe_report& r, const std::string& model_label) {
  std::ostringstream out;
  out << "model,dimension,category,mean_gap,p_value,significant\n";
  for (const auto& c : r.cells) {
    out << model_label << ',' << c.dim << ',' << c.category << ',' << fmt(c.mean_gap, "%.6f")
        << ',' << fmt(c.p_value, "%.6e") << ',' << (c.significant ? "true" : "false") << '\n';
  }
  return out.str();
}

std::string significance_table(const probe_report& r) {
  std::ostringstream out;
  out << "dimension ranking (discovery half, n=" << r.discovery_size << "):\n";
  for (const auto& d : r.ranked) {
    out << "  dim " << d.dim << "  gap " << fmt(d.gap, "%+.4f") << "\n";
  }
  out << "per-category Welch tests (testing half, n=" << r.testing_size
      << ", alpha=" << fmt(r.alpha, "%g") << "):\n";
  out << "  dim   ";
  for (const auto& cat : probe_categories()) out << "  " << cat << (cat.size() < 5 ? "      " : "  ");
  out << "\n";
  for (const auto& d : r.ranked) {
    out << "  " << d.dim;
    for (const auto& cat : probe_categories()) {
      for (const auto& c : r.cells) {
        if (c.dim == d.dim && c.category == cat) {
          out << "  " << fmt(c.p_value, "%.1e") << (c.significant ? "*" : " ");
        }
      }
    }
    out << "\n";
  }
  out << "dimensions significant in every category:";
  if (r.dims_significant_all.empty()) {
    out << " none";
  } else {
    for (int d : r.dims_significant_all) out << ' ' << d;
  }
  out << "\n";
  return out.str();
}

}  // namespace gradkit
