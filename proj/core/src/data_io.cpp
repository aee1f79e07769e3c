#include "dhmm/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dhmm/errors.hpp"
#include "dhmm/hmm.hpp"

namespace dhmm {

using nlohmann::json;

bool Corpus::has_labels() const {
  if (sequences.empty()) return false;
  return std::all_of(sequences.begin(), sequences.end(),
                     [](const ObservationSequence& s) { return s.labels.has_value(); });
}

void Corpus::validate() const {
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& seq = sequences[s];
    seq.validate();
    if (seq.family() != family) {
      throw SchemaError("sequence " + std::to_string(s) + " has family " +
                        family_name(seq.family()) + ", corpus declares " + family_name(family));
    }
    if (family == EmissionFamily::kCategorical) {
      for (int v : std::get<SymbolObs>(seq.data)) {
        if (v < 0 || v >= vocab_size) {
          throw SchemaError("sequence " + std::to_string(s) + ": symbol " + std::to_string(v) +
                            " outside vocabulary of size " + std::to_string(vocab_size));
        }
      }
    } else if (family == EmissionFamily::kBernoulli) {
      for (const auto& row : std::get<BinaryObs>(seq.data)) {
        if (static_cast<int>(row.size()) != feature_dim) {
          throw SchemaError("sequence " + std::to_string(s) + ": feature vector of length " +
                            std::to_string(row.size()) + ", expected " +
                            std::to_string(feature_dim));
        }
        for (std::uint8_t bit : row) {
          if (bit > 1) {
            throw SchemaError("sequence " + std::to_string(s) + ": non-binary feature value");
          }
        }
      }
    }
    if (seq.labels && num_label_classes > 0) {
      for (int label : *seq.labels) {
        if (label < 0 || label >= num_label_classes) {
          throw SchemaError("sequence " + std::to_string(s) + ": label " + std::to_string(label) +
                            " outside [0, " + std::to_string(num_label_classes) + ")");
        }
      }
    }
  }
  if (!fold_ids.empty() && fold_ids.size() != sequences.size()) {
    throw SchemaError("fold ids cover " + std::to_string(fold_ids.size()) + " of " +
                      std::to_string(sequences.size()) + " sequences");
  }
}

Corpus Corpus::subset(const std::vector<std::size_t>& indices) const {
  Corpus out;
  out.family = family;
  out.vocab_size = vocab_size;
  out.feature_dim = feature_dim;
  out.num_label_classes = num_label_classes;
  out.vocabulary = vocabulary;
  out.label_names = label_names;
  out.sequences.reserve(indices.size());
  const bool with_folds = !fold_ids.empty();
  for (std::size_t idx : indices) {
    if (idx >= sequences.size()) {
      throw InvalidInputError("subset index " + std::to_string(idx) + " out of range");
    }
    out.sequences.push_back(sequences[idx]);
    if (with_folds) out.fold_ids.push_back(fold_ids[idx]);
  }
  return out;
}

ToyConfig ToyConfig::defaults() {
  ToyConfig cfg;
  cfg.pi_true.resize(5);
  cfg.pi_true << 0.0101, 0.0912, 0.2421, 0.0652, 0.5914;
  // Fixed diverse transition matrix: one draw of five Dirichlet(0.5) rows
  // (mt19937_64 seeded with 42), frozen so every run shares the same
  // ground truth. All entries strictly positive; rows sum to 1 at double
  // precision.
  cfg.a_true.resize(5, 5);
  cfg.a_true << 0.011934619886309663, 0.0086321223207388702, 0.0037811475298054216,
      0.23770824576599342, 0.73794386449715266,  //
      0.26341451673709193, 0.0022878119194663362, 0.0057826289902319214, 0.72644462621752715,
      0.0020704161356826711,  //
      0.26414197046290261, 0.061658694490789256, 0.15673933507151103, 0.043640797942998494,
      0.47381920203179867,  //
      0.00040609181581703163, 0.057381758281643526, 0.80224346129019652, 0.12128575253284624,
      0.018682936079496622,  //
      0.0069738397484674355, 0.39323777086708622, 0.21620102030331373, 0.018897624638691834,
      0.36468974444244068;
  cfg.mu_true.resize(5);
  cfg.mu_true << 1.0, 2.0, 3.0, 4.0, 5.0;
  cfg.sigma_true = Vector::Constant(5, 0.025);
  return cfg;
}

void ToyConfig::validate() const {
  if (k < 2) throw InvalidInputError("toy config: k must be >= 2");
  if (n_sequences < 1 || seq_len < 1) {
    throw InvalidInputError("toy config: need n_sequences >= 1 and seq_len >= 1");
  }
  if (pi_true.size() != k || a_true.rows() != k || a_true.cols() != k || mu_true.size() != k ||
      sigma_true.size() != k) {
    throw InvalidInputError("toy config: parameter dimensions do not match k");
  }
}

ToyDataset generate_toy_dataset(const ToyConfig& cfg) {
  cfg.validate();
  ToyDataset out;
  out.ground_truth.pi.probs = cfg.pi_true;
  out.ground_truth.a.rows = cfg.a_true;
  GaussianEmissions g;
  g.mean = cfg.mu_true;
  g.stddev = cfg.sigma_true;
  out.ground_truth.b.dist = std::move(g);
  out.ground_truth.validate();

  out.corpus.family = EmissionFamily::kGaussian;
  out.corpus.num_label_classes = cfg.k;
  out.corpus.sequences.reserve(static_cast<std::size_t>(cfg.n_sequences));
  std::mt19937_64 rng(cfg.seed);
  for (int n = 0; n < cfg.n_sequences; ++n) {
    out.corpus.sequences.push_back(sample_sequence(out.ground_truth, cfg.seq_len, rng));
  }
  return out;
}

std::vector<ToyConfig> variance_sweep_configs(const ToyConfig& base) {
  std::vector<ToyConfig> configs;
  configs.reserve(50);
  for (int t = 0; t < 50; ++t) {
    ToyConfig cfg = base;
    cfg.sigma_true = Vector::Constant(base.k, 0.025 + 0.1 * t);
    configs.push_back(std::move(cfg));
  }
  return configs;
}

TagMergeMap default_tag_merge_map() {
  // 46 raw tags collapsed to 15 classes of similar grammatical role.
  static const std::vector<std::pair<const char*, int>> kEntries = {
      {"NNP", 0},  {"NNPS", 0}, {"NNS", 0},  {"NN", 0},     {"SYM", 0},
      {",", 1},    {"--", 1},   {"''", 1},   {":", 1},      {".", 1},
      {"$", 1},    {"(", 1},    {")", 1},    {"LS", 1},     {"#", 1},
      {"CD", 2},
      {"JJS", 3},  {"JJ", 3},   {"JJR", 3},
      {"MD", 4},
      {"VBZ", 5},  {"VB", 5},   {"VBG", 5},  {"VBD", 5},    {"VBN", 5},
      {"VBP", 5},  {"VBG|NN", 5},
      {"DT", 6},   {"PDT", 6},  {"WDT", 6},
      {"IN", 7},   {"CC", 7},   {"TO", 7},
      {"FW", 8},
      {"WRB", 9},  {"RB", 9},   {"RBS", 9},  {"RBR", 9},
      {"UH", 10},
      {"WP", 11},  {"WP$", 11}, {"PRP", 11}, {"PRP$", 11},
      {"POS", 12},
      {"EX", 13},
      {"RP", 14},
  };
  TagMergeMap map;
  map.num_classes = 15;
  map.class_names = {"noun", "punct", "number", "adjective", "modal",
                     "verb", "determiner", "preposition", "foreign", "adverb",
                     "interjection", "pronoun", "possessive", "existential", "particle"};
  for (const auto& [tag, idx] : kEntries) {
    map.raw_to_merged.emplace(tag, idx);
  }
  return map;
}

TagMergeMap load_tag_merge_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open tag map file: " + path);
  TagMergeMap map;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected RAW_TAG<TAB>index");
    }
    const std::string tag = line.substr(0, tab);
    int idx = 0;
    try {
      idx = std::stoi(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed class index");
    }
    if (idx < 0) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": negative class index");
    }
    map.raw_to_merged[tag] = idx;
    map.num_classes = std::max(map.num_classes, idx + 1);
  }
  if (map.raw_to_merged.empty()) throw ParseError(path + ": empty tag map");
  return map;
}

Corpus read_pos_corpus(const std::string& path, const TagMergeMap& merge) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file: " + path);

  struct Sentence {
    std::vector<std::string> words;
    std::vector<int> tags;
  };
  std::vector<Sentence> sentences;
  std::unordered_map<std::string, long long> word_freq;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    Sentence sent;
    std::string token;
    while (tokens >> token) {
      const auto slash = token.rfind('/');
      if (slash == std::string::npos || slash == 0 || slash + 1 == token.size()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": token '" + token +
                         "' is not word/TAG");
      }
      const std::string word = token.substr(0, slash);
      const std::string tag = token.substr(slash + 1);
      const auto it = merge.raw_to_merged.find(tag);
      if (it == merge.raw_to_merged.end()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": unknown tag '" + tag + "'");
      }
      sent.words.push_back(word);
      sent.tags.push_back(it->second);
      ++word_freq[word];
    }
    if (sent.words.empty()) {
      std::cerr << "warning: " << path << ":" << line_no << ": empty sentence skipped\n";
      continue;
    }
    sentences.push_back(std::move(sent));
  }

  // Frequency-ordered vocabulary; ties alphabetical. Index 0 is reserved
  // for words unseen at training time.
  std::vector<std::pair<std::string, long long>> by_freq(word_freq.begin(), word_freq.end());
  std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Corpus corpus;
  corpus.family = EmissionFamily::kCategorical;
  corpus.vocabulary.push_back("<unk>");
  std::unordered_map<std::string, int> word_index;
  for (const auto& [word, freq] : by_freq) {
    word_index.emplace(word, static_cast<int>(corpus.vocabulary.size()));
    corpus.vocabulary.push_back(word);
  }
  corpus.vocab_size = static_cast<int>(corpus.vocabulary.size());
  corpus.num_label_classes = merge.num_classes;
  corpus.label_names = merge.class_names;

  for (auto& sent : sentences) {
    ObservationSequence seq;
    SymbolObs obs;
    obs.reserve(sent.words.size());
    for (const auto& word : sent.words) obs.push_back(word_index.at(word));
    seq.data = std::move(obs);
    seq.labels = std::move(sent.tags);
    corpus.sequences.push_back(std::move(seq));
  }
  corpus.validate();
  return corpus;
}

Corpus read_ocr_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  constexpr int kPixels = 128;

  Corpus corpus;
  corpus.family = EmissionFamily::kBernoulli;
  corpus.feature_dim = kPixels;
  corpus.num_label_classes = 26;
  for (char c = 'a'; c <= 'z'; ++c) corpus.label_names.push_back(std::string(1, c));

  ObservationSequence current;
  BinaryObs current_obs;
  std::vector<int> current_labels;
  long long expected_next = -1;
  int current_fold = -1;

  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    long long id = 0, next_id = 0, word_id = 0, position = 0;
    int fold = 0;
    std::string letter;
    if (!(fields >> id >> letter >> next_id >> word_id >> position >> fold)) {
      throw ParseError(path + ": record at line " + std::to_string(line_no) +
                       ": malformed header fields");
    }
    if (letter.size() != 1 || letter[0] < 'a' || letter[0] > 'z') {
      throw ParseError(path + ": record " + std::to_string(id) + ": letter '" + letter +
                       "' outside a-z");
    }
    if (expected_next != -1 && id != expected_next) {
      throw ParseError(path + ": record " + std::to_string(id) + ": broken chain, expected id " +
                       std::to_string(expected_next));
    }
    std::vector<std::uint8_t> pixels(kPixels);
    for (int d = 0; d < kPixels; ++d) {
      int bit = 0;
      if (!(fields >> bit)) {
        throw ParseError(path + ": record " + std::to_string(id) + ": expected " +
                         std::to_string(kPixels) + " pixel values");
      }
      if (bit != 0 && bit != 1) {
        throw ParseError(path + ": record " + std::to_string(id) + ": non-binary pixel value " +
                         std::to_string(bit));
      }
      pixels[static_cast<std::size_t>(d)] = static_cast<std::uint8_t>(bit);
    }
    if (current_obs.empty()) current_fold = fold;
    current_obs.push_back(std::move(pixels));
    current_labels.push_back(letter[0] - 'a');
    expected_next = next_id;
    if (next_id == -1) {
      current.data = std::move(current_obs);
      current.labels = std::move(current_labels);
      corpus.sequences.push_back(std::move(current));
      corpus.fold_ids.push_back(current_fold);
      current = ObservationSequence{};
      current_obs = BinaryObs{};
      current_labels.clear();
      expected_next = -1;
    }
  }
  if (!current_obs.empty()) {
    throw ParseError(path + ": file ends inside a word (last record should chain to -1)");
  }
  corpus.validate();
  return corpus;
}

std::vector<FoldSplit> k_fold_split(const Corpus& corpus, int n_folds, std::uint64_t seed) {
  const std::size_t n = corpus.size();
  if (n_folds < 2) throw InvalidInputError("k_fold_split: n_folds must be >= 2");
  if (static_cast<std::size_t>(n_folds) > n) {
    throw InvalidInputError("k_fold_split: n_folds exceeds number of sequences");
  }

  std::vector<int> assignment(n);
  if (!corpus.fold_ids.empty()) {
    for (std::size_t s = 0; s < n; ++s) {
      const int f = corpus.fold_ids[s];
      if (f < 0 || f >= n_folds) {
        throw InvalidInputError("sequence " + std::to_string(s) + " has fold id " +
                                std::to_string(f) + " outside [0, " + std::to_string(n_folds) +
                                ")");
      }
      assignment[s] = f;
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t pos = 0; pos < n; ++pos) {
      assignment[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(n_folds));
    }
  }

  std::vector<FoldSplit> splits(static_cast<std::size_t>(n_folds));
  for (std::size_t s = 0; s < n; ++s) {
    for (int f = 0; f < n_folds; ++f) {
      if (assignment[s] == f) {
        splits[static_cast<std::size_t>(f)].test.push_back(s);
      } else {
        splits[static_cast<std::size_t>(f)].train.push_back(s);
      }
    }
  }
  return splits;
}

namespace {

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw SchemaError(what + ": expected an array");
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw SchemaError(what + ": non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array() || arr.empty()) throw SchemaError(what + ": expected a non-empty array");
  const std::size_t cols = arr[0].is_array() ? arr[0].size() : 0;
  Matrix m(arr.size(), cols);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_array() || arr[i].size() != cols) {
      throw SchemaError(what + ": ragged rows");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!arr[i][j].is_number()) throw SchemaError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = arr[i][j].get<double>();
    }
  }
  return m;
}

json load_json_file(const std::string& path, const char* expected_format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != expected_format) {
    throw SchemaError(path + ": not a " + std::string(expected_format) + " document");
  }
  return doc;
}

void write_json_file(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw ParseError("write failed: " + path);
}

}  // namespace

void save_model(const HmmParams& params, const std::string& path) {
  params.validate();
  json doc;
  doc["format"] = "dhmm-model";
  doc["version"] = 1;
  doc["k"] = params.num_states();
  doc["family"] = family_name(params.b.family());
  doc["pi"] = vector_to_json(params.pi.probs);
  doc["a"] = matrix_to_json(params.a.rows);
  json emissions;
  if (const auto* g = std::get_if<GaussianEmissions>(&params.b.dist)) {
    emissions["mean"] = vector_to_json(g->mean);
    emissions["stddev"] = vector_to_json(g->stddev);
  } else if (const auto* c = std::get_if<CategoricalEmissions>(&params.b.dist)) {
    emissions["probs"] = matrix_to_json(c->probs);
  } else {
    emissions["probs"] = matrix_to_json(std::get<BernoulliEmissions>(params.b.dist).probs);
  }
  doc["emissions"] = std::move(emissions);
  write_json_file(doc, path);
}

HmmParams load_model(const std::string& path) {
  const json doc = load_json_file(path, "dhmm-model");
  HmmParams params;
  try {
    const int k = doc.at("k").get<int>();
    const EmissionFamily family = family_from_name(doc.at("family").get<std::string>());
    params.pi.probs = vector_from_json(doc.at("pi"), "pi");
    params.a.rows = matrix_from_json(doc.at("a"), "a");
    const json& emissions = doc.at("emissions");
    switch (family) {
      case EmissionFamily::kGaussian: {
        GaussianEmissions g;
        g.mean = vector_from_json(emissions.at("mean"), "emissions.mean");
        g.stddev = vector_from_json(emissions.at("stddev"), "emissions.stddev");
        params.b.dist = std::move(g);
        break;
      }
      case EmissionFamily::kCategorical: {
        CategoricalEmissions c;
        c.probs = matrix_from_json(emissions.at("probs"), "emissions.probs");
        params.b.dist = std::move(c);
        break;
      }
      case EmissionFamily::kBernoulli: {
        BernoulliEmissions bern;
        bern.probs = matrix_from_json(emissions.at("probs"), "emissions.probs");
        params.b.dist = std::move(bern);
        break;
      }
    }
    if (params.num_states() != k) {
      throw SchemaError("declared k = " + std::to_string(k) + " but pi has " +
                        std::to_string(params.num_states()) + " entries");
    }
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  params.validate();
  return params;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  corpus.validate();
  json doc;
  doc["format"] = "dhmm-corpus";
  doc["version"] = 1;
  doc["family"] = family_name(corpus.family);
  doc["vocab_size"] = corpus.vocab_size;
  doc["feature_dim"] = corpus.feature_dim;
  doc["num_label_classes"] = corpus.num_label_classes;
  doc["vocabulary"] = corpus.vocabulary;
  doc["label_names"] = corpus.label_names;
  doc["fold_ids"] = corpus.fold_ids;
  json sequences = json::array();
  for (const auto& seq : corpus.sequences) {
    json entry;
    std::visit([&](const auto& v) { entry["obs"] = v; }, seq.data);
    if (seq.labels) entry["labels"] = *seq.labels;
    sequences.push_back(std::move(entry));
  }
  doc["sequences"] = std::move(sequences);
  write_json_file(doc, path);
}

Corpus load_corpus(const std::string& path) {
  const json doc = load_json_file(path, "dhmm-corpus");
  Corpus corpus;
  try {
    corpus.family = family_from_name(doc.at("family").get<std::string>());
    corpus.vocab_size = doc.value("vocab_size", 0);
    corpus.feature_dim = doc.value("feature_dim", 0);
    corpus.num_label_classes = doc.value("num_label_classes", 0);
    corpus.vocabulary = doc.value("vocabulary", std::vector<std::string>{});
    corpus.label_names = doc.value("label_names", std::vector<std::string>{});
    corpus.fold_ids = doc.value("fold_ids", std::vector<int>{});
    for (const json& entry : doc.at("sequences")) {
      ObservationSequence seq;
      switch (corpus.family) {
        case EmissionFamily::kGaussian:
          seq.data = entry.at("obs").get<RealObs>();
          break;
        case EmissionFamily::kCategorical:
          seq.data = entry.at("obs").get<SymbolObs>();
          break;
        case EmissionFamily::kBernoulli:
          seq.data = entry.at("obs").get<BinaryObs>();
          break;
      }
      if (entry.contains("labels")) {
        seq.labels = entry.at("labels").get<std::vector<int>>();
      }
      corpus.sequences.push_back(std::move(seq));
    }
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  corpus.validate();
  return corpus;
}

}  // namespace dhmm
