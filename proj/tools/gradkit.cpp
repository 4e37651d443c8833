// command line front end: corpus generation, training, evaluation, probing,
// scaling sweeps and figure emission

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradkit/dataset.hpp"
#include "gradkit/errors.hpp"
#include "gradkit/intervention.hpp"
#include "gradkit/model.hpp"
#include "gradkit/probing.hpp"
#include "gradkit/report.hpp"
#include "gradkit/rng.hpp"
#include "gradkit/seq2seq.hpp"

namespace fs = std::filesystem;
using namespace gradkit;

namespace {

struct global_opts {
  std::uint64_t seed = 1;
  fs::path out = ".";
};

void append_manifest(const global_opts& g, const std::vector<std::string>& lines) {
  fs::create_directories(g.out);
  std::ofstream m(g.out / "manifest.txt", std::ios::app);
  for (const auto& line : lines) m << line << '\n';
  m << '\n';
}

std::string joined_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

std::string hex_digest(std::uint64_t d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, d);
  return buf;
}

std::vector<inflection_example> load_or_generate(const fs::path& data, std::uint64_t data_seed) {
  if (!data.empty()) {
    auto examples = load_tsv(data);
    annotate(examples);
    return examples;
  }
  return generate_corpus(corpus_spec::defaults(data_seed));
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot write " + path.string());
  out << text;
}

// dev half of the standard 90/10 split
std::pair<std::vector<inflection_example>, std::vector<inflection_example>> standard_split(
    const std::vector<inflection_example>& corpus, std::uint64_t split_seed) {
  return split(corpus, 0.9, split_seed);
}

std::vector<inflection_example> probe_pool(const std::vector<inflection_example>& corpus,
                                           std::uint64_t data_seed) {
  // extra gradating words for balancing, from an independent stream of the
  // same generator, minus any nominative already in the corpus
  corpus_spec spec = corpus_spec::defaults(mix_seed(data_seed, 0xB0057));
  auto extra = generate_corpus(spec);
  std::set<word> used;
  for (const auto& ex : corpus) used.insert(ex.nominative);
  std::vector<inflection_example> pool;
  for (auto& ex : extra) {
    if (ex.note && ex.note->gradating && !used.count(ex.nominative)) pool.push_back(ex);
  }
  return pool;
}

probe_report run_probe(const model_state<float>& m,
                       const std::vector<inflection_example>& corpus, std::uint64_t split_seed,
                       std::uint64_t data_seed, int top_n, double alpha, int target) {
  auto dev_set = standard_split(corpus, split_seed).second;
  auto pool = probe_pool(corpus, data_seed);
  auto probe_set = balance_probe_set(dev_set, pool, target, mix_seed(split_seed, 0xBA1A));
  return significance_probe(m, probe_set, top_n, alpha, mix_seed(split_seed, 0x5C0));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inflection model toolkit for Finnish consonant gradation analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value options file; subcommand options go in [sections]");

  global_opts g;
  app.add_option("--seed", g.seed, "base random seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic corpus as TSV");
  int gen_total = 4797;
  fs::path gen_output;
  gen->add_option("--total", gen_total, "corpus size")->capture_default_str();
  gen->add_option("--output", gen_output, "output TSV (default <out>/corpus.tsv)");

  // train
  auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
  fs::path tr_data;
  std::uint64_t tr_data_seed = 1, tr_split_seed = 1;
  train_config tc;
  model_config mc;
  tr->add_option("--data", tr_data, "corpus TSV (default: generated)");
  tr->add_option("--data-seed", tr_data_seed, "corpus generator seed")->capture_default_str();
  tr->add_option("--split-seed", tr_split_seed, "train/dev split seed")->capture_default_str();
  tr->add_option("--steps", tc.steps)->capture_default_str();
  tr->add_option("--batch-size", tc.batch_size)->capture_default_str();
  tr->add_option("--learning-rate", tc.learning_rate)->capture_default_str();
  tr->add_option("--clip-norm", tc.clip_norm)->capture_default_str();
  tr->add_option("--eval-every", tc.eval_every)->capture_default_str();
  tr->add_option("--embed-dim", mc.embed_dim)->capture_default_str();
  tr->add_option("--encoder-hidden", mc.encoder_hidden)->capture_default_str();
  tr->add_option("--decoder-hidden", mc.decoder_hidden)->capture_default_str();
  tr->add_option("--attention-dim", mc.attention_dim)->capture_default_str();

  // eval
  auto* ev = app.add_subcommand("eval", "accuracy of a checkpoint on a data set");
  fs::path ev_model, ev_data;
  std::uint64_t ev_data_seed = 1, ev_split_seed = 1;
  bool ev_dev_only = true;
  ev->add_option("--model", ev_model, "checkpoint file")->required();
  ev->add_option("--data", ev_data, "corpus TSV (default: generated)");
  ev->add_option("--data-seed", ev_data_seed)->capture_default_str();
  ev->add_option("--split-seed", ev_split_seed)->capture_default_str();
  ev->add_flag("--dev-only,!--full", ev_dev_only, "evaluate the dev half only")
      ->capture_default_str();

  // probe
  auto* pr = app.add_subcommand("probe", "rank dimensions and test significance");
  fs::path pr_model, pr_data;
  std::uint64_t pr_data_seed = 1, pr_split_seed = 1;
  int pr_top_n = 5, pr_target = 54;
  double pr_alpha = 0.005;
  pr->add_option("--model", pr_model, "checkpoint file")->required();
  pr->add_option("--data", pr_data, "corpus TSV (default: generated)");
  pr->add_option("--data-seed", pr_data_seed)->capture_default_str();
  pr->add_option("--split-seed", pr_split_seed)->capture_default_str();
  pr->add_option("--top-n", pr_top_n)->capture_default_str();
  pr->add_option("--alpha", pr_alpha)->capture_default_str();
  pr->add_option("--per-consonant", pr_target, "balanced gradating words per consonant")
      ->capture_default_str();

  // sweep
  auto* sw = app.add_subcommand("sweep", "scale discovered dimensions and bucket the outputs");
  fs::path sw_model, sw_data;
  std::uint64_t sw_data_seed = 1, sw_split_seed = 1;
  int sw_max_n = 5;
  std::vector<int> sw_dims;
  sw->add_option("--model", sw_model, "checkpoint file")->required();
  sw->add_option("--data", sw_data, "corpus TSV (default: generated)");
  sw->add_option("--data-seed", sw_data_seed)->capture_default_str();
  sw->add_option("--split-seed", sw_split_seed)->capture_default_str();
  sw->add_option("--max-n", sw_max_n, "largest top-n prefix")->capture_default_str();
  sw->add_option("--dims", sw_dims, "explicit ranked dimensions (default: from probe)");

  // report
  auto* rp = app.add_subcommand("report", "emit SVG figures with CSV twins");
  fs::path rp_model, rp_data;
  std::uint64_t rp_data_seed = 1, rp_split_seed = 1;
  std::vector<int> rp_scatter;
  int rp_heat_dim = 0, rp_heat_rows = 12;
  fs::path rp_curve_csv;
  rp->add_option("--model", rp_model, "checkpoint file")->required();
  rp->add_option("--data", rp_data, "corpus TSV (default: generated)");
  rp->add_option("--data-seed", rp_data_seed)->capture_default_str();
  rp->add_option("--split-seed", rp_split_seed)->capture_default_str();
  rp->add_option("--scatter-dims", rp_scatter, "two dimensions (default: top-2 from probe)")
      ->expected(2);
  rp->add_option("--heat-dim", rp_heat_dim, "heatmap dimension (default: top-1 from probe)");
  rp->add_option("--heat-rows", rp_heat_rows, "words per heatmap block")->capture_default_str();
  rp->add_option("--curve-csv", rp_curve_csv, "step,dev_accuracy CSV to render as a figure");

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(g.out);

    if (*gen) {
      corpus_spec spec = corpus_spec::defaults(g.seed);
      if (gen_total != spec.total_pairs) {
        double scale = static_cast<double>(gen_total) / spec.total_pairs;
        for (auto& [id, n] : spec.pattern_quotas) {
          n = std::max(1, static_cast<int>(n * scale));
        }
        spec.total_pairs = gen_total;
      }
      auto corpus = generate_corpus(spec);
      fs::path out_path = gen_output.empty() ? g.out / "corpus.tsv" : gen_output;
      save_tsv(out_path, corpus,
               {"synthetic nominative/genitive pairs, seed " + std::to_string(g.seed)});
      std::cout << "wrote " << corpus.size() << " pairs to " << out_path << '\n';
      append_manifest(g, {"run: " + joined_argv(argc, argv),
                          "seed: " + std::to_string(g.seed),
                          "corpus: " + out_path.string() + " (" +
                              std::to_string(corpus.size()) + " pairs)"});
    }

    if (*tr) {
      auto corpus = load_or_generate(tr_data, tr_data_seed);
      auto [train_set, dev_set] = standard_split(corpus, tr_split_seed);
      auto vocab = vocabulary::build(train_set);
      auto m = init_model<float>(mc, vocab, g.seed);
      std::cout << "training seed " << g.seed << ": " << train_set.size() << " train / "
                << dev_set.size() << " dev, " << parameter_count(m.params) << " parameters\n";
      auto curve =
          train(m, train_set, dev_set, tc, [](int step, double loss, const auto& acc) {
            if (step % 100 == 0 || acc) {
              std::cout << "step " << step << " loss " << loss;
              if (acc) std::cout << " dev_acc " << *acc;
              std::cout << std::endl;
            }
          });
      fs::path ckpt = g.out / ("model-seed" + std::to_string(g.seed) + ".ckpt");
      save_checkpoint(ckpt, m);
      std::ostringstream csv;
      csv << "step,dev_accuracy\n";
      for (const auto& pt : curve) {
        char row[64];
        std::snprintf(row, sizeof(row), "%d,%.6f\n", pt.step, pt.dev_accuracy);
        csv << row;
      }
      fs::path curve_path = g.out / ("curve-seed" + std::to_string(g.seed) + ".csv");
      write_file(curve_path, csv.str());
      auto res = evaluate(m, dev_set);
      std::cout << "final dev accuracy " << res.overall << " (gradating " << res.gradating
                << ", plain " << res.non_gradating << ")\n";
      append_manifest(g, {"run: " + joined_argv(argc, argv),
                          "seed: " + std::to_string(g.seed),
                          "checkpoint: " + ckpt.string() + " digest " +
                              hex_digest(model_digest(m)),
                          "curve: " + curve_path.string()});
    }

    if (*ev) {
      auto m = load_checkpoint(ev_model);
      auto corpus = load_or_generate(ev_data, ev_data_seed);
      std::vector<inflection_example> eval_set;
      if (ev_dev_only) {
        eval_set = standard_split(corpus, ev_split_seed).second;
      } else {
        eval_set = corpus;
      }
      auto res = evaluate(m, eval_set);
      std::cout << "examples " << res.total << " (gradating " << res.gradating_total << ")\n";
      std::cout << "overall " << res.overall << "\ngradating " << res.gradating
                << "\nplain " << res.non_gradating << '\n';
      append_manifest(g, {"run: " + joined_argv(argc, argv),
                          "checkpoint: " + ev_model.string() + " digest " +
                              hex_digest(model_digest(m))});
    }

    if (*pr) {
      auto m = load_checkpoint(pr_model);
      auto corpus = load_or_generate(pr_data, pr_data_seed);
      auto report = run_probe(m, corpus, pr_split_seed, pr_data_seed, pr_top_n, pr_alpha,
                              pr_target);
      std::string label = "seed" + std::to_string(m.seed);
      std::cout << significance_table(report);
      fs::path csv_path = g.out / ("probe-" + label + ".csv");
      write_file(csv_path, significance_csv(report, label));
      append_manifest(g, {"run: " + joined_argv(argc, argv),
                          "checkpoint: " + pr_model.string() + " digest " +
                              hex_digest(model_digest(m)),
                          "probe: " + csv_path.string()});
    }

    if (*sw) {
      auto m = load_checkpoint(sw_model);
      auto corpus = load_or_generate(sw_data, sw_data_seed);
      std::vector<int> ranked = sw_dims;
      if (ranked.empty()) {
        auto report = run_probe(m, corpus, sw_split_seed, sw_data_seed, sw_max_n, 0.005, 54);
        for (const auto& s : report.ranked) ranked.push_back(s.dim);
      }
      auto dev_set = standard_split(corpus, sw_split_seed).second;
      std::vector<inflection_example> gradating;
      for (const auto& ex : dev_set) {
        if (ex.note && ex.note->gradating) gradating.push_back(ex);
      }
      auto curves = appendix_sweep(m, gradating, ranked,
                                   std::min<int>(sw_max_n, static_cast<int>(ranked.size())),
                                   mix_seed(g.seed, 0x7A11));
      std::string label = "seed" + std::to_string(m.seed);
      fs::path csv_path = g.out / ("sweep-" + label + ".csv");
      write_file(csv_path, sweep_csv(curves, label));
      for (const auto& c : curves) {
        std::cout << c.label << " peak alternate " << peak_alternate_pct(c) << "%\n";
      }
      append_manifest(g, {"run: " + joined_argv(argc, argv),
                          "checkpoint: " + sw_model.string() + " digest " +
                              hex_digest(model_digest(m)),
                          "sweep: " + csv_path.string()});
    }

    if (*rp) {
      auto m = load_checkpoint(rp_model);
      std::string label = "seed" + std::to_string(m.seed);
      std::vector<std::string> manifest = {"run: " + joined_argv(argc, argv),
                                           "checkpoint: " + rp_model.string() + " digest " +
                                               hex_digest(model_digest(m))};
      if (!rp_curve_csv.empty()) {
        std::ifstream in(rp_curve_csv);
        if (!in) throw error("cannot read " + rp_curve_csv.string());
        std::vector<train_curve_point> curve;
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          train_curve_point pt{};
          if (std::sscanf(line.c_str(), "%d,%lf", &pt.step, &pt.dev_accuracy) == 2) {
            curve.push_back(pt);
          }
        }
        fs::path prefix = g.out / ("accuracy-" + label);
        emit_curves("dev accuracy, " + label, "step", "accuracy", accuracy_series(curve),
                    prefix);
        manifest.push_back("figure: " + prefix.string() + ".svg");
      }
      {
        auto corpus = load_or_generate(rp_data, rp_data_seed);
        auto dev_set = standard_split(corpus, rp_split_seed).second;
        std::vector<int> dims = rp_scatter;
        int heat_dim = rp_heat_dim;
        if (dims.empty() || heat_dim == 0) {
          auto report = run_probe(m, corpus, rp_split_seed, rp_data_seed, 5, 0.005, 54);
          if (dims.empty() && report.ranked.size() >= 2) {
            dims = {report.ranked[0].dim, report.ranked[1].dim};
          }
          if (heat_dim == 0 && !report.ranked.empty()) heat_dim = report.ranked[0].dim;
        }
        if (dims.size() == 2) {
          fs::path prefix = g.out / ("scatter-" + label);
          emit_scatter(m, dev_set, dims[0], dims[1], prefix);
          manifest.push_back("figure: " + prefix.string() + ".svg");
        }
        if (heat_dim > 0) {
          // small mixed sample: first rows of each group in dev order
          std::vector<inflection_example> quant, qual, plain;
          const auto& table = rule_table::default_table();
          for (const auto& ex : dev_set) {
            if (!ex.note) continue;
            if (!ex.note->gradating) {
              if (static_cast<int>(plain.size()) < rp_heat_rows) plain.push_back(ex);
            } else if (table.pattern(ex.note->event->pattern_id).kind ==
                       grade_kind::quantitative) {
              if (static_cast<int>(quant.size()) < rp_heat_rows) quant.push_back(ex);
            } else if (static_cast<int>(qual.size()) < rp_heat_rows) {
              qual.push_back(ex);
            }
          }
          std::vector<inflection_example> sample;
          sample.insert(sample.end(), quant.begin(), quant.end());
          sample.insert(sample.end(), qual.begin(), qual.end());
          sample.insert(sample.end(), plain.begin(), plain.end());
          fs::path prefix = g.out / ("heatmap-" + label + "-d" + std::to_string(heat_dim));
          emit_heatmap(m, sample, heat_dim, prefix);
          manifest.push_back("figure: " + prefix.string() + ".svg");
        }
      }
      append_manifest(g, manifest);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
