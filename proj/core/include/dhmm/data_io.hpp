#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dhmm/types.hpp"

namespace dhmm {

// A collection of observation sequences sharing one emission family,
// with optional gold labels and fold assignments. Immutable once built.
struct Corpus {
  EmissionFamily family = EmissionFamily::kGaussian;
  std::vector<ObservationSequence> sequences;
  int vocab_size = 0;    // categorical: number of word indices, incl. UNK
  int feature_dim = 0;   // bernoulli: number of binary features
  int num_label_classes = 0;
  std::vector<std::string> vocabulary;   // categorical: index -> surface form
  std::vector<std::string> label_names;  // e.g. merged tag titles or letters
  std::vector<int> fold_ids;             // per-sequence fold, empty if none

  std::size_t size() const { return sequences.size(); }
  bool has_labels() const;
  void validate() const;
  Corpus subset(const std::vector<std::size_t>& indices) const;
};

// Ground-truth parameters and sampling plan for the synthetic experiment.
struct ToyConfig {
  int k = 5;
  Vector pi_true;
  Matrix a_true;
  Vector mu_true;
  Vector sigma_true;
  int n_sequences = 300;
  int seq_len = 6;
  std::uint64_t seed = 42;

  // The documented default setup: 5 Gaussian states at unit-spaced means
  // with stddev 0.025, and a fixed diverse transition matrix.
  static ToyConfig defaults();
  void validate() const;
};

struct ToyDataset {
  Corpus corpus;          // Gaussian observations with gold labels
  HmmParams ground_truth;
};

ToyDataset generate_toy_dataset(const ToyConfig& cfg);

// 50 copies of the base config with stddev 0.025, 0.125, ..., 4.925.
std::vector<ToyConfig> variance_sweep_configs(const ToyConfig& base);

// Raw tag string -> merged class index in [0, num_classes).
struct TagMergeMap {
  std::unordered_map<std::string, int> raw_to_merged;
  int num_classes = 0;
  std::vector<std::string> class_names;  // optional titles per merged index
};

// The built-in 46 -> 15 merge used by the bundled tag map file.
TagMergeMap default_tag_merge_map();
// Two-column text file: RAW_TAG<TAB>merged_index.
TagMergeMap load_tag_merge_map(const std::string& path);

// One sentence per line, whitespace-separated "word/TAG" tokens, the last
// '/' separating word from tag. Vocabulary is built frequency-ordered on
// first pass; index 0 is reserved for unseen words.
Corpus read_pos_corpus(const std::string& path, const TagMergeMap& merge);

// Tab-separated handwritten-letter records: id, letter, next_id, word_id,
// position, fold, then 128 binary pixels. Letters chain into words via
// next_id; labels are 0..25 for a..z.
Corpus read_ocr_dataset(const std::string& path);

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Partition by embedded fold ids when present, otherwise a seeded shuffle.
std::vector<FoldSplit> k_fold_split(const Corpus& corpus, int n_folds, std::uint64_t seed);

// JSON model file; numbers round-trip exactly. Loading validates every
// parameter invariant and reports the first violated constraint.
void save_model(const HmmParams& params, const std::string& path);
HmmParams load_model(const std::string& path);

// JSON corpus files produced by the synth command and consumed by train.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

}  // namespace dhmm
