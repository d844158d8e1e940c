#pragma once

#include <string>
#include <vector>

#include "btg/scorers.hpp"
#include "btg/vocab.hpp"

namespace btg {

// Sentence pairs over one shared vocabulary.
struct ParallelCorpus {
  VocabPtr vocab;
  std::vector<std::pair<Sentence, Sentence>> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

// TSV exchange format: one pair per line, source<TAB>target, whitespace
// tokenization. The loader reports malformed lines by number.
ParallelCorpus load_parallel(const std::string& path);
void save_parallel(const ParallelCorpus& corpus, const std::string& path);

void load_phrase_table(TabularPhraseScorer& scorer, const std::string& path);
void save_phrase_table(const TabularPhraseScorer& scorer,
                       const std::string& path);

enum class Metric { ExactMatch, Bleu4 };

// Exact match and BLEU-4 both on a 0..100 scale. BLEU uses clipped n-gram
// precisions up to 4 with the standard brevity penalty, no smoothing.
double evaluate(const std::vector<std::string>& hypotheses,
                const std::vector<std::string>& references, Metric metric);

enum class ToySplit { NovelPosition, FewShot };

// Synthetic subject-verb-object reordering task. Sentences pair
// "S V O" sources with "S O V" targets, with phrases drawn from disjoint
// noun and verb inventories of random lengths.
struct ToyGrammarConfig {
  int np_pairs = 50;
  int vp_pairs = 20;
  int min_len = 1;
  int max_len = 8;
  ToySplit split = ToySplit::NovelPosition;
  int train_size = 2000;
  int dev_size = 200;
  int test_size = 200;
  double heldout_fraction = 0.2;  // novel-position only
  std::uint64_t seed = 1;
};

struct ToyDataset {
  ParallelCorpus train, dev, test;
  std::string manifest_json;
};

// Generates the three splits; throws if the inventory cannot satisfy the
// requested sizes. Leakage checks run as part of generation.
ToyDataset gen_svo_sov(const ToyGrammarConfig& config);

}  // namespace btg
