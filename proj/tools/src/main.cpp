// Batch experiment driver: synthesize data, train, decode, evaluate, and
// sweep hyperparameters, emitting CSV artifacts and reproducible manifests.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dhmm/data_io.hpp"
#include "dhmm/errors.hpp"
#include "dhmm/evaluation.hpp"
#include "dhmm/hmm.hpp"
#include "dhmm/kernel.hpp"
#include "dhmm/learning.hpp"
#include "dhmm/version.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dhmm::cli {
namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

int resolve_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("DHMM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return static_cast<int>(hw);
}

void require_output_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw InvalidInputError("output directory does not exist: " + dir);
  }
}

bool looks_like_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  char c = 0;
  while (in.get(c)) {
    if (!std::isspace(static_cast<unsigned char>(c))) return c == '{';
  }
  return false;
}

// Accepts a dhmm-config document or a dhmm-manifest (whose embedded
// config is used), so any run can be replayed from its manifest.
json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  const std::string format = doc.value("format", "");
  if (format == "dhmm-manifest") return doc.value("config", json::object());
  if (format == "dhmm-config" || format == "dhmm-sweep") return doc;
  throw SchemaError(path + ": expected a dhmm-config, dhmm-sweep, or dhmm-manifest document");
}

template <typename T>
void merge_option(const json& cfg, const char* key, T& value, bool flag_was_set) {
  if (!flag_was_set && cfg.contains(key)) {
    value = cfg.at(key).get<T>();
  }
}

struct CsvWriter {
  std::ofstream out;

  CsvWriter(const std::string& path, const std::string& header) : out(path) {
    if (!out) throw ParseError("cannot open CSV for writing: " + path);
    out << header << '\n';
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  }
};

void write_labels_file(const std::string& path, const LabelSequences& labels) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open labels file for writing: " + path);
  for (const auto& seq : labels) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (t) out << ' ';
      out << seq[t];
    }
    out << '\n';
  }
}

LabelSequences read_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open labels file: " + path);
  LabelSequences labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<int> seq;
    int value = 0;
    while (fields >> value) seq.push_back(value);
    if (!fields.eof()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-integer label");
    }
    if (!seq.empty()) labels.push_back(std::move(seq));
  }
  return labels;
}

LabelSequences gold_labels_of(const Corpus& corpus) {
  LabelSequences gold;
  gold.reserve(corpus.size());
  for (const auto& seq : corpus.sequences) {
    if (!seq.labels) throw InvalidInputError("corpus sequence is missing gold labels");
    gold.push_back(*seq.labels);
  }
  return gold;
}

// Reads a corpus from any supported container: the JSON corpus format,
// word/TAG text (categorical), or letter-image records (bernoulli).
Corpus load_input_corpus(const std::string& path, const std::string& family,
                         const std::string& tag_map_path) {
  if (looks_like_json(path)) return load_corpus(path);
  if (family == "categorical") {
    const TagMergeMap merge =
        tag_map_path.empty() ? default_tag_merge_map() : load_tag_merge_map(tag_map_path);
    return read_pos_corpus(path, merge);
  }
  if (family == "bernoulli") return read_ocr_dataset(path);
  throw InvalidInputError(
      "text corpora need --family categorical (word/TAG lines) or bernoulli "
      "(letter-image records); real-valued corpora use the JSON corpus format");
}

ToyConfig toy_config_from_json(const json& cfg) {
  ToyConfig toy = ToyConfig::defaults();
  if (cfg.contains("seed")) toy.seed = cfg.at("seed").get<std::uint64_t>();
  if (cfg.contains("n_sequences")) toy.n_sequences = cfg.at("n_sequences").get<int>();
  if (cfg.contains("seq_len")) toy.seq_len = cfg.at("seq_len").get<int>();
  if (cfg.contains("sigma")) {
    toy.sigma_true = Vector::Constant(toy.k, cfg.at("sigma").get<double>());
  }
  if (cfg.contains("pi")) {
    const auto v = cfg.at("pi").get<std::vector<double>>();
    toy.pi_true = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (cfg.contains("mu")) {
    const auto v = cfg.at("mu").get<std::vector<double>>();
    toy.mu_true = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (cfg.contains("a")) {
    const auto rows = cfg.at("a").get<std::vector<std::vector<double>>>();
    toy.a_true.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        toy.a_true(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
  }
  if (cfg.contains("k")) toy.k = cfg.at("k").get<int>();
  return toy;
}

json toy_config_to_json(const ToyConfig& toy) {
  json cfg;
  cfg["k"] = toy.k;
  cfg["seed"] = toy.seed;
  cfg["n_sequences"] = toy.n_sequences;
  cfg["seq_len"] = toy.seq_len;
  cfg["pi"] = std::vector<double>(toy.pi_true.data(), toy.pi_true.data() + toy.pi_true.size());
  cfg["mu"] = std::vector<double>(toy.mu_true.data(), toy.mu_true.data() + toy.mu_true.size());
  cfg["sigma"] = toy.sigma_true[0];
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < toy.a_true.rows(); ++i) {
    rows.emplace_back(toy.a_true.row(i).data(), toy.a_true.row(i).data() + toy.a_true.cols());
  }
  cfg["a"] = rows;
  return cfg;
}

json train_config_to_json(const TrainConfig& train) {
  json cfg;
  cfg["alpha"] = train.alpha;
  cfg["alpha_a"] = train.alpha_anchor;
  cfg["max_em_iters"] = train.max_em_iters;
  cfg["em_tol"] = train.em_tol;
  cfg["inner_max_iters"] = train.inner_max_iters;
  cfg["inner_tol"] = train.inner_tol;
  cfg["init_step"] = train.init_step;
  cfg["backtrack_factor"] = train.backtrack_factor;
  cfg["dirichlet_eta"] = train.dirichlet_eta;
  cfg["seed"] = train.seed;
  cfg["emission_init"] =
      train.emission_init == EmissionInitStyle::kPooled ? "pooled" : "standard";
  cfg["count_smoothing"] = train.count_smoothing;
  return cfg;
}

void train_config_from_json(const json& cfg, TrainConfig& train) {
  if (cfg.contains("alpha")) train.alpha = cfg.at("alpha").get<double>();
  if (cfg.contains("alpha_a")) train.alpha_anchor = cfg.at("alpha_a").get<double>();
  if (cfg.contains("max_em_iters")) train.max_em_iters = cfg.at("max_em_iters").get<int>();
  if (cfg.contains("em_tol")) train.em_tol = cfg.at("em_tol").get<double>();
  if (cfg.contains("inner_max_iters")) {
    train.inner_max_iters = cfg.at("inner_max_iters").get<int>();
  }
  if (cfg.contains("inner_tol")) train.inner_tol = cfg.at("inner_tol").get<double>();
  if (cfg.contains("init_step")) train.init_step = cfg.at("init_step").get<double>();
  if (cfg.contains("backtrack_factor")) {
    train.backtrack_factor = cfg.at("backtrack_factor").get<double>();
  }
  if (cfg.contains("dirichlet_eta")) train.dirichlet_eta = cfg.at("dirichlet_eta").get<double>();
  if (cfg.contains("seed")) train.seed = cfg.at("seed").get<std::uint64_t>();
  if (cfg.contains("count_smoothing")) {
    train.count_smoothing = cfg.at("count_smoothing").get<double>();
  }
  if (cfg.contains("emission_init")) {
    const std::string style = cfg.at("emission_init").get<std::string>();
    if (style == "pooled") {
      train.emission_init = EmissionInitStyle::kPooled;
    } else if (style == "standard") {
      train.emission_init = EmissionInitStyle::kStandard;
    } else {
      throw SchemaError("emission_init must be 'standard' or 'pooled', got '" + style + "'");
    }
  }
}

void write_trace_csv(const std::string& path, const ObjectiveTrace& trace, bool supervised) {
  CsvWriter csv(path, supervised ? "iter,loglik_bound,logdet_term,objective,anchor_term"
                                 : "iter,loglik_bound,logdet_term,objective");
  for (const auto& rec : trace.em) {
    std::vector<std::string> cells = {std::to_string(rec.iteration),
                                      fmt_double(rec.log_likelihood),
                                      fmt_double(rec.log_det_term), fmt_double(rec.objective)};
    if (supervised) cells.push_back(fmt_double(rec.anchor_term));
    csv.row(cells);
  }
}

// ---------------------------------------------------------------------
// synth

int run_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_flag) {
  json cfg = config_path.empty() ? json::object() : load_config_file(config_path);
  if (cfg.contains("toy")) cfg = cfg.at("toy");  // manifest replay
  ToyConfig toy = toy_config_from_json(cfg);
  if (seed_flag) toy.seed = *seed_flag;
  require_output_dir(out_dir);

  RunManifest manifest("synth", toy.seed);
  const ToyDataset dataset = generate_toy_dataset(toy);

  const std::string corpus_path = (fs::path(out_dir) / "corpus.json").string();
  const std::string model_path = (fs::path(out_dir) / "ground_truth.json").string();
  const std::string gold_path = (fs::path(out_dir) / "gold_labels.txt").string();
  save_corpus(dataset.corpus, corpus_path);
  save_model(dataset.ground_truth, model_path);
  write_labels_file(gold_path, gold_labels_of(dataset.corpus));

  json config;
  config["toy"] = toy_config_to_json(toy);
  config["out"] = out_dir;
  manifest.set_config(config);
  manifest.add_input("dataset", corpus_path);  // digest of the produced dataset
  manifest.add_output(corpus_path);
  manifest.add_output(model_path);
  manifest.add_output(gold_path);
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  std::cout << "wrote " << corpus_path << ", " << model_path << ", " << gold_path << '\n';
  return 0;
}

// ---------------------------------------------------------------------
// train

struct TrainArgs {
  std::string mode = "unsup";
  std::string corpus_path;
  std::string family;
  std::string tag_map;
  int k = 0;
  TrainConfig train;
  std::string out_dir;
};

int run_train(const TrainArgs& args) {
  if (args.mode != "unsup" && args.mode != "sup") {
    throw InvalidInputError("mode must be 'unsup' or 'sup', got '" + args.mode + "'");
  }
  require_output_dir(args.out_dir);
  Corpus corpus = load_input_corpus(args.corpus_path, args.family, args.tag_map);
  if (!args.family.empty() && family_from_name(args.family) != corpus.family) {
    throw InvalidInputError(std::string("corpus family is ") + family_name(corpus.family) +
                            ", but --family says " + args.family);
  }
  int k = args.k;
  if (k == 0) k = corpus.num_label_classes;
  if (k < 2) throw InvalidInputError("state count must be >= 2 (set --k)");

  TrainConfig train = args.train;
  train.n_threads = resolve_threads();
  const EmissionSpec spec = EmissionSpec::for_corpus(corpus);

  RunManifest manifest("train", train.seed);
  manifest.add_input("corpus", args.corpus_path);
  if (!args.tag_map.empty()) manifest.add_input("tag_map", args.tag_map);

  TrainedModel model;
  if (args.mode == "sup") {
    if (!corpus.has_labels()) {
      throw InvalidInputError("supervised training requires a fully labeled corpus");
    }
    model = fit_supervised(corpus, k, spec, train);
  } else {
    model = em_fit_unsupervised(corpus, k, spec, train);
  }
  for (const auto& warning : model.trace.warnings) {
    std::cerr << "warning: " << warning << '\n';
  }

  const std::string model_path = (fs::path(args.out_dir) / "model.json").string();
  const std::string trace_path = (fs::path(args.out_dir) / "trace.csv").string();
  save_model(model.params, model_path);
  write_trace_csv(trace_path, model.trace, args.mode == "sup");

  json config = train_config_to_json(train);
  config["mode"] = args.mode;
  config["corpus"] = args.corpus_path;
  config["family"] = args.family;
  config["tag_map"] = args.tag_map;
  config["k"] = k;
  config["out"] = args.out_dir;
  manifest.set_config(config);
  manifest.add_output(model_path);
  manifest.add_output(trace_path);
  manifest.write((fs::path(args.out_dir) / "manifest.json").string());
  std::cout << "trained " << args.mode << " model (k=" << k
            << ", converged=" << (model.converged ? "yes" : "no") << "), wrote " << model_path
            << '\n';
  return 0;
}

// ---------------------------------------------------------------------
// label

int run_label(const std::string& model_path, const std::string& corpus_path,
              const std::string& family, const std::string& tag_map,
              const std::string& out_path) {
  const HmmParams params = load_model(model_path);
  const Corpus corpus = load_input_corpus(corpus_path, family, tag_map);
  if (params.b.family() != corpus.family) {
    throw InvalidInputError(std::string("model emissions are ") + family_name(params.b.family()) +
                            " but corpus is " + family_name(corpus.family));
  }
  if (corpus.family == EmissionFamily::kCategorical && params.b.dim() != corpus.vocab_size) {
    throw InvalidInputError("model vocabulary size " + std::to_string(params.b.dim()) +
                            " does not match corpus vocabulary " +
                            std::to_string(corpus.vocab_size));
  }
  if (corpus.family == EmissionFamily::kBernoulli && params.b.dim() != corpus.feature_dim) {
    throw InvalidInputError("model feature dimension " + std::to_string(params.b.dim()) +
                            " does not match corpus dimension " +
                            std::to_string(corpus.feature_dim));
  }

  RunManifest manifest("label", 0);
  manifest.add_input("model", model_path);
  manifest.add_input("corpus", corpus_path);

  LabelSequences predictions;
  predictions.reserve(corpus.size());
  for (const auto& seq : corpus.sequences) {
    predictions.push_back(viterbi(params, seq).states);
  }
  write_labels_file(out_path, predictions);

  json config;
  config["model"] = model_path;
  config["corpus"] = corpus_path;
  config["family"] = family;
  config["tag_map"] = tag_map;
  config["out"] = out_path;
  manifest.set_config(config);
  manifest.add_output(out_path);
  manifest.write(out_path + ".manifest.json");
  std::cout << "labeled " << corpus.size() << " sequences -> " << out_path << '\n';
  return 0;
}

// ---------------------------------------------------------------------
// eval

int run_eval(const std::string& pred_path, const std::string& gold_path, int k,
             long long sigma_f, const std::string& model_path, const std::string& out_dir) {
  require_output_dir(out_dir);
  if (k < 1) throw InvalidInputError("--k is required for eval");
  const LabelSequences pred = read_labels_file(pred_path);
  const LabelSequences gold =
      looks_like_json(gold_path) ? gold_labels_of(load_corpus(gold_path))
                                 : read_labels_file(gold_path);

  RunManifest manifest("eval", 0);
  manifest.add_input("pred", pred_path);
  manifest.add_input("gold", gold_path);

  const double accuracy = one_to_one_accuracy(pred, gold, k);
  const StateHistogram pred_hist = state_histogram(pred, k);
  const StateHistogram gold_hist = state_histogram(gold, k);
  const int effective = effective_state_count(pred_hist, sigma_f);

  std::string diversity_cell, diversity_flag_cell;
  if (!model_path.empty()) {
    const HmmParams params = load_model(model_path);
    const PairwiseDiversity diversity = mean_pairwise_diversity(params.a);
    diversity_cell = fmt_double(diversity.mean);
    diversity_flag_cell = diversity.has_infinite_pair ? "1" : "0";
    manifest.add_input("model", model_path);
  }

  const std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  const std::string hist_path = (fs::path(out_dir) / "histogram.csv").string();
  {
    CsvWriter csv(metrics_path,
                  "accuracy,total_positions,effective_states,sigma_f,"
                  "mean_pairwise_diversity,diversity_has_infinite_pair");
    csv.row({fmt_double(accuracy), std::to_string(pred_hist.total), std::to_string(effective),
             std::to_string(sigma_f), diversity_cell, diversity_flag_cell});
  }
  {
    CsvWriter csv(hist_path, "state,predicted_count,gold_count");
    for (int i = 0; i < k; ++i) {
      csv.row({std::to_string(i), std::to_string(pred_hist.counts[static_cast<std::size_t>(i)]),
               std::to_string(gold_hist.counts[static_cast<std::size_t>(i)])});
    }
  }

  json config;
  config["pred"] = pred_path;
  config["gold"] = gold_path;
  config["k"] = k;
  config["sigma_f"] = sigma_f;
  config["model"] = model_path;
  config["out"] = out_dir;
  manifest.set_config(config);
  manifest.add_output(metrics_path);
  manifest.add_output(hist_path);
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  std::cout << "accuracy " << fmt_double(accuracy) << ", effective states " << effective << '\n';
  return 0;
}

// ---------------------------------------------------------------------
// sweep

struct SweepRow {
  std::string sweep_var;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string metric;
  std::string score;
  std::string status = "ok";
};

struct SweepJob {
  double value = 0.0;
  std::uint64_t train_seed = 0;
  int rep = 0;
  int point = 0;
  int fold = -1;
};

LabelSequences decode_all(const HmmParams& params, const Corpus& corpus) {
  LabelSequences out;
  out.reserve(corpus.size());
  for (const auto& seq : corpus.sequences) out.push_back(viterbi(params, seq).states);
  return out;
}

int run_sweep(const std::string& spec_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_flag, std::optional<int> folds_flag) {
  require_output_dir(out_dir);
  json spec = load_config_file(spec_path);
  if (spec.contains("sweep")) spec = spec.at("sweep");  // manifest replay
  if (seed_flag) spec["seed"] = *seed_flag;
  if (folds_flag) spec["folds"] = *folds_flag;
  const std::string type = spec.value("type", "");
  if (type != "alpha" && type != "variance") {
    throw SchemaError("sweep spec: type must be 'alpha' or 'variance'");
  }
  const std::uint64_t base_seed = spec.value("seed", std::uint64_t{42});
  const int n_seeds = spec.value("n_seeds", 1);
  const long long sigma_f = spec.value("sigma_f", 50);
  if (n_seeds < 1) throw SchemaError("sweep spec: n_seeds must be >= 1");

  TrainConfig base_train;
  if (spec.contains("train")) train_config_from_json(spec.at("train"), base_train);

  RunManifest manifest("sweep", base_seed);
  manifest.add_input("spec", spec_path);

  std::vector<SweepJob> jobs;
  std::vector<std::vector<SweepRow>> results;
  const int thread_cap = resolve_threads();

  auto run_jobs = [&](const std::string& var_name, auto&& worker) {
    results.resize(jobs.size());
    const int workers =
        std::max(1, std::min<int>(thread_cap, static_cast<int>(jobs.size())));
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
      for (std::size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1)) {
        try {
          results[j] = worker(jobs[j]);
        } catch (const std::exception& e) {
          SweepRow row;
          row.sweep_var = var_name;
          row.value = jobs[j].value;
          row.seed = jobs[j].train_seed;
          row.metric = "run";
          row.status = std::string("error: ") + e.what();
          results[j] = {row};
        }
      }
    };
    if (workers == 1) {
      loop();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
      for (auto& t : pool) t.join();
    }
  };

  if (type == "alpha") {
    const auto alphas = spec.at("alphas").get<std::vector<double>>();
    const std::string mode = spec.value("mode", "unsup");
    const std::string corpus_path = spec.value("corpus", "");
    const std::string family = spec.value("family", "");
    const std::string tag_map = spec.value("tag_map", "");
    const int folds = spec.value("folds", 0);

    Corpus corpus;
    if (corpus_path.empty()) {
      ToyConfig toy = toy_config_from_json(spec.value("toy", json::object()));
      corpus = generate_toy_dataset(toy).corpus;
    } else {
      corpus = load_input_corpus(corpus_path, family, tag_map);
      manifest.add_input("corpus", corpus_path);
    }
    int k = spec.value("k", 0);
    if (k == 0) k = corpus.num_label_classes;
    if (k < 2) throw InvalidInputError("sweep spec: state count must be >= 2");
    const EmissionSpec espec = EmissionSpec::for_corpus(corpus);

    if (mode == "sup") {
      if (folds < 2) throw SchemaError("supervised alpha sweep needs 'folds' >= 2");
      const auto splits = k_fold_split(corpus, folds, base_seed);
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        for (int f = 0; f < folds; ++f) {
          SweepJob job;
          job.value = alphas[a];
          job.train_seed = base_seed;
          job.point = static_cast<int>(a);
          job.fold = f;
          jobs.push_back(job);
        }
      }
      run_jobs("alpha", [&](const SweepJob& job) {
        const auto& split = splits[static_cast<std::size_t>(job.fold)];
        const Corpus train_part = corpus.subset(split.train);
        const Corpus test_part = corpus.subset(split.test);
        TrainConfig train = base_train;
        train.alpha = job.value;
        train.seed = job.train_seed;
        const TrainedModel model = fit_supervised(train_part, k, espec, train);
        const double accuracy =
            one_to_one_accuracy(decode_all(model.params, test_part), gold_labels_of(test_part), k);
        const PairwiseDiversity diversity = mean_pairwise_diversity(model.params.a);
        const std::string fold_tag = "/fold=" + std::to_string(job.fold);
        return std::vector<SweepRow>{
            {"alpha", job.value, job.train_seed, "test_accuracy" + fold_tag,
             fmt_double(accuracy), "ok"},
            {"alpha", job.value, job.train_seed, "diversity" + fold_tag,
             fmt_double(diversity.mean), "ok"},
        };
      });
    } else {
      const bool has_gold = corpus.has_labels();
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        for (int rep = 0; rep < n_seeds; ++rep) {
          SweepJob job;
          job.value = alphas[a];
          job.train_seed = base_seed + static_cast<std::uint64_t>(rep);
          job.point = static_cast<int>(a);
          job.rep = rep;
          jobs.push_back(job);
        }
      }
      run_jobs("alpha", [&](const SweepJob& job) {
        TrainConfig train = base_train;
        train.alpha = job.value;
        train.seed = job.train_seed;
        train.n_threads = 1;  // parallelism lives at the job level
        const TrainedModel model = em_fit_unsupervised(corpus, k, espec, train);
        const LabelSequences pred = decode_all(model.params, corpus);
        const PairwiseDiversity diversity = mean_pairwise_diversity(model.params.a);
        const int effective = effective_state_count(state_histogram(pred, k), sigma_f);
        std::vector<SweepRow> rows = {
            {"alpha", job.value, job.train_seed, "diversity", fmt_double(diversity.mean), "ok"},
            {"alpha", job.value, job.train_seed, "effective_states", std::to_string(effective),
             "ok"},
        };
        if (has_gold) {
          const double accuracy = one_to_one_accuracy(pred, gold_labels_of(corpus), k);
          rows.insert(rows.begin(), {"alpha", job.value, job.train_seed, "accuracy",
                                     fmt_double(accuracy), "ok"});
        }
        return rows;
      });
    }
  } else {  // variance
    const double dhmm_alpha = spec.value("alpha", 1.0);
    ToyConfig base_toy = toy_config_from_json(spec.value("toy", json::object()));
    const auto grid = variance_sweep_configs(base_toy);
    for (std::size_t point = 0; point < grid.size(); ++point) {
      for (int rep = 0; rep < n_seeds; ++rep) {
        SweepJob job;
        job.value = grid[point].sigma_true[0];
        job.train_seed = base_seed + static_cast<std::uint64_t>(rep);
        job.point = static_cast<int>(point);
        job.rep = rep;
        jobs.push_back(job);
      }
    }
    run_jobs("sigma", [&](const SweepJob& job) {
      // One dataset per grid point; runs differ by initialization seed.
      ToyConfig toy = grid[static_cast<std::size_t>(job.point)];
      toy.seed = base_seed + 50000 + static_cast<std::uint64_t>(job.point);
      const ToyDataset dataset = generate_toy_dataset(toy);
      const LabelSequences gold = gold_labels_of(dataset.corpus);
      const EmissionSpec espec = EmissionSpec::for_corpus(dataset.corpus);
      const double sigma = job.value;

      std::vector<SweepRow> rows;
      const PairwiseDiversity gt_div = mean_pairwise_diversity(dataset.ground_truth.a);
      rows.push_back({"sigma", sigma, job.train_seed, "gt_diversity", fmt_double(gt_div.mean),
                      gt_div.has_infinite_pair ? "infinite" : "ok"});
      for (const double alpha : {0.0, dhmm_alpha}) {
        TrainConfig train = base_train;
        train.alpha = alpha;
        train.seed = job.train_seed;
        train.n_threads = 1;
        const TrainedModel model = em_fit_unsupervised(dataset.corpus, toy.k, espec, train);
        const LabelSequences pred = decode_all(model.params, dataset.corpus);
        const std::string prefix = alpha == 0.0 ? "hmm_" : "dhmm_";
        const PairwiseDiversity diversity = mean_pairwise_diversity(model.params.a);
        rows.push_back({"sigma", sigma, job.train_seed, prefix + "accuracy",
                        fmt_double(one_to_one_accuracy(pred, gold, toy.k)), "ok"});
        rows.push_back({"sigma", sigma, job.train_seed, prefix + "diversity",
                        fmt_double(diversity.mean),
                        diversity.has_infinite_pair ? "infinite" : "ok"});
        rows.push_back({"sigma", sigma, job.train_seed, prefix + "effective_states",
                        std::to_string(effective_state_count(state_histogram(pred, toy.k),
                                                             sigma_f)),
                        "ok"});
      }
      return rows;
    });
  }

  // Aggregate in declared grid order regardless of which worker ran what.
  const std::string csv_path = (fs::path(out_dir) / "sweep.csv").string();
  bool any_error = false;
  {
    CsvWriter csv(csv_path, "sweep_var,value,seed,metric,score,status");
    for (const auto& rows : results) {
      for (const auto& row : rows) {
        if (row.status.rfind("error", 0) == 0) any_error = true;
        csv.row({row.sweep_var, fmt_double(row.value), std::to_string(row.seed), row.metric,
                 row.score, row.status});
      }
    }
  }

  json config;
  config["sweep"] = spec;
  config["out"] = out_dir;
  manifest.set_config(config);
  manifest.add_output(csv_path);
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  std::cout << "swept " << jobs.size() << " runs -> " << csv_path
            << (any_error ? " (with per-row errors)" : "") << '\n';
  return any_error ? 1 : 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"diversified hidden Markov models: experiment driver"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kLibraryVersion);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus and ground truth");
  std::string synth_config, synth_out = ".";
  std::uint64_t synth_seed = 0;
  synth->add_option("--config", synth_config, "toy config or manifest to replay");
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "sampling seed");
  synth->add_option("--out", synth_out, "output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "fit a model (unsup EM or sup counting+refine)");
  TrainArgs train_args;
  std::string train_config;
  train_cmd->add_option("--mode", train_args.mode, "unsup|sup");
  train_cmd->add_option("corpus", train_args.corpus_path, "corpus file");
  train_cmd->add_option("--config", train_config, "config or manifest to replay");
  auto* opt_family = train_cmd->add_option("--family", train_args.family,
                                           "gaussian|categorical|bernoulli for text corpora");
  auto* opt_tagmap = train_cmd->add_option("--tag-map", train_args.tag_map,
                                           "RAW_TAG<TAB>index file (default: built-in)");
  auto* opt_k = train_cmd->add_option("--k", train_args.k, "number of hidden states");
  auto* opt_alpha = train_cmd->add_option("--alpha", train_args.train.alpha, "diversity weight");
  auto* opt_alpha_a =
      train_cmd->add_option("--alpha-a", train_args.train.alpha_anchor, "supervised anchor weight");
  auto* opt_seed = train_cmd->add_option("--seed", train_args.train.seed, "initialization seed");
  auto* opt_em_iters =
      train_cmd->add_option("--max-em-iters", train_args.train.max_em_iters, "EM iteration cap");
  auto* opt_em_tol = train_cmd->add_option("--em-tol", train_args.train.em_tol, "EM stop tolerance");
  auto* opt_inner_iters = train_cmd->add_option("--inner-max-iters",
                                                train_args.train.inner_max_iters,
                                                "transition subproblem iteration cap");
  auto* opt_inner_tol =
      train_cmd->add_option("--inner-tol", train_args.train.inner_tol, "subproblem stop tolerance");
  auto* opt_step = train_cmd->add_option("--init-step", train_args.train.init_step,
                                         "initial line-search step");
  auto* opt_smooth = train_cmd->add_option("--smooth", train_args.train.count_smoothing,
                                           "supervised counting pseudocount (default 0)");
  auto* opt_emis_init = train_cmd->add_option_function<std::string>(
      "--emission-init",
      [&](const std::string& style) {
        train_args.train.emission_init =
            style == "pooled" ? EmissionInitStyle::kPooled : EmissionInitStyle::kStandard;
      },
      "standard|pooled");
  auto* opt_out = train_cmd->add_option("--out", train_args.out_dir, "output directory");

  // label
  auto* label_cmd = app.add_subcommand("label", "Viterbi-decode a corpus with a trained model");
  std::string label_model, label_corpus, label_family, label_tagmap, label_out;
  label_cmd->add_option("--model", label_model, "model file")->required();
  label_cmd->add_option("--corpus", label_corpus, "corpus file")->required();
  label_cmd->add_option("--family", label_family, "family hint for text corpora");
  label_cmd->add_option("--tag-map", label_tagmap, "tag map for word/TAG corpora");
  label_cmd->add_option("--out", label_out, "output labels file")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold labels");
  std::string eval_pred, eval_gold, eval_model, eval_out = ".";
  int eval_k = 0;
  long long eval_sigma_f = 50;
  eval_cmd->add_option("--pred", eval_pred, "predicted labels file")->required();
  eval_cmd->add_option("--gold", eval_gold, "gold labels file or labeled corpus")->required();
  eval_cmd->add_option("--k", eval_k, "number of states")->required();
  eval_cmd->add_option("--sigma-f", eval_sigma_f, "state-frequency threshold");
  eval_cmd->add_option("--model", eval_model, "model whose transition diversity to report");
  eval_cmd->add_option("--out", eval_out, "output directory")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run a hyperparameter or variance grid");
  std::string sweep_spec, sweep_out;
  std::uint64_t sweep_seed = 0;
  int sweep_folds = 0;
  sweep_cmd->add_option("--spec", sweep_spec, "sweep spec file (or manifest to replay)");
  sweep_cmd->add_option("--config", sweep_spec, "alias for --spec");
  auto* sweep_seed_opt = sweep_cmd->add_option("--seed", sweep_seed, "base seed override");
  auto* sweep_folds_opt =
      sweep_cmd->add_option("--folds", sweep_folds, "cross-validation folds (supervised)");
  sweep_cmd->add_option("--out", sweep_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    return run_synth(synth_config, synth_out,
                     synth_seed_opt->count() > 0 ? std::optional<std::uint64_t>(synth_seed)
                                                 : std::nullopt);
  }
  if (train_cmd->parsed()) {
    if (!train_config.empty()) {
      const json cfg = load_config_file(train_config);
      TrainConfig from_file = train_args.train;
      train_config_from_json(cfg, from_file);
      // Flags override file values field by field.
      if (opt_alpha->count() == 0) train_args.train.alpha = from_file.alpha;
      if (opt_alpha_a->count() == 0) train_args.train.alpha_anchor = from_file.alpha_anchor;
      if (opt_seed->count() == 0) train_args.train.seed = from_file.seed;
      if (opt_em_iters->count() == 0) train_args.train.max_em_iters = from_file.max_em_iters;
      if (opt_em_tol->count() == 0) train_args.train.em_tol = from_file.em_tol;
      if (opt_inner_iters->count() == 0) {
        train_args.train.inner_max_iters = from_file.inner_max_iters;
      }
      if (opt_inner_tol->count() == 0) train_args.train.inner_tol = from_file.inner_tol;
      if (opt_step->count() == 0) train_args.train.init_step = from_file.init_step;
      if (opt_smooth->count() == 0) train_args.train.count_smoothing = from_file.count_smoothing;
      if (opt_emis_init->count() == 0) train_args.train.emission_init = from_file.emission_init;
      merge_option(cfg, "mode", train_args.mode, false);
      merge_option(cfg, "corpus", train_args.corpus_path, !train_args.corpus_path.empty());
      merge_option(cfg, "family", train_args.family, opt_family->count() > 0);
      merge_option(cfg, "tag_map", train_args.tag_map, opt_tagmap->count() > 0);
      merge_option(cfg, "k", train_args.k, opt_k->count() > 0);
      merge_option(cfg, "out", train_args.out_dir, opt_out->count() > 0);
    }
    if (train_args.corpus_path.empty()) throw InvalidInputError("train: no corpus given");
    if (train_args.out_dir.empty()) throw InvalidInputError("train: no --out directory given");
    return run_train(train_args);
  }
  if (label_cmd->parsed()) {
    return run_label(label_model, label_corpus, label_family, label_tagmap, label_out);
  }
  if (eval_cmd->parsed()) {
    return run_eval(eval_pred, eval_gold, eval_k, eval_sigma_f, eval_model, eval_out);
  }
  if (sweep_cmd->parsed()) {
    if (sweep_spec.empty()) throw InvalidInputError("sweep: no --spec given");
    return run_sweep(sweep_spec, sweep_out,
                     sweep_seed_opt->count() > 0 ? std::optional<std::uint64_t>(sweep_seed)
                                                 : std::nullopt,
                     sweep_folds_opt->count() > 0 ? std::optional<int>(sweep_folds)
                                                  : std::nullopt);
  }
  return 1;
}

}  // namespace
}  // namespace dhmm::cli

int main(int argc, char** argv) {
  try {
    return dhmm::cli::dispatch(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
