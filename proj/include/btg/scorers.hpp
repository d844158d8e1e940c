#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "btg/logspace.hpp"
#include "btg/rng.hpp"
#include "btg/tree.hpp"
#include "btg/vocab.hpp"

namespace btg {

using DenseGradient = std::vector<double>;
using SparseGradient = std::unordered_map<std::uint64_t, double>;

// Scores binary split rules. The log-weight depends only on the parent
// kind and the split geometry (i, j, k); it is shared across all segment
// counts (n, l, r). `y` is the optional target-side context used by the
// variational parser and ignored by source-only scorers.
class TreeRuleScorer {
 public:
  virtual ~TreeRuleScorer() = default;

  virtual double rule_score(const Sentence& x, const Sentence* y, int i, int j,
                            int k, NodeKind parent) const = 0;

  virtual std::size_t param_count() const { return 0; }
  // Adds weight * d(log score)/d(theta) into `grad`.
  virtual void add_score_gradient(const Sentence& /*x*/, const Sentence* /*y*/,
                                  int /*i*/, int /*j*/, int /*k*/,
                                  NodeKind /*parent*/, double /*weight*/,
                                  DenseGradient& /*grad*/) const {}
  virtual void apply_gradient(const DenseGradient& /*grad*/, double /*scale*/) {}
  virtual std::span<double> parameters() { return {}; }
};

// Scores target-side split points (a, b, c) for the segmentation model.
class SegScorer {
 public:
  virtual ~SegScorer() = default;

  virtual double split_score(const Sentence& y, int a, int b, int c) const = 0;

  virtual std::size_t param_count() const { return 0; }
  virtual void add_score_gradient(const Sentence& /*y*/, int /*a*/, int /*b*/,
                                  int /*c*/, double /*weight*/,
                                  DenseGradient& /*grad*/) const {}
  virtual void apply_gradient(const DenseGradient& /*grad*/, double /*scale*/) {}
  virtual std::span<double> parameters() { return {}; }
};

class UniformTreeScorer : public TreeRuleScorer {
 public:
  double rule_score(const Sentence&, const Sentence*, int, int, int,
                    NodeKind) const override {
    return kLogOne;
  }
};

class UniformSegScorer : public SegScorer {
 public:
  double split_score(const Sentence&, int, int, int) const override {
    return kLogOne;
  }
};

// Log-linear scorer over hashed span features: span-width buckets,
// boundary token identities, and the split bigram. With target features
// enabled it additionally conditions on target-length statistics.
class LogLinearTreeScorer : public TreeRuleScorer {
 public:
  explicit LogLinearTreeScorer(std::size_t dim = 1024,
                               bool target_features = false)
      : params_(dim, 0.0), target_features_(target_features) {}

  double rule_score(const Sentence& x, const Sentence* y, int i, int j, int k,
                    NodeKind parent) const override;
  std::size_t param_count() const override { return params_.size(); }
  void add_score_gradient(const Sentence& x, const Sentence* y, int i, int j,
                          int k, NodeKind parent, double weight,
                          DenseGradient& grad) const override;
  void apply_gradient(const DenseGradient& grad, double scale) override;
  std::span<double> parameters() override { return params_; }

  bool target_features() const { return target_features_; }
  void randomize(Rng& rng, double scale);
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  int collect(const Sentence& x, const Sentence* y, int i, int j, int k,
              NodeKind parent, std::uint64_t* out) const;

  std::vector<double> params_;
  bool target_features_;
};

class LogLinearSegScorer : public SegScorer {
 public:
  explicit LogLinearSegScorer(std::size_t dim = 1024) : params_(dim, 0.0) {}

  double split_score(const Sentence& y, int a, int b, int c) const override;
  std::size_t param_count() const override { return params_.size(); }
  void add_score_gradient(const Sentence& y, int a, int b, int c, double weight,
                          DenseGradient& grad) const override;
  void apply_gradient(const DenseGradient& grad, double scale) override;
  std::span<double> parameters() override { return params_; }

  void randomize(Rng& rng, double scale);
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  int collect(const Sentence& y, int a, int b, int c, std::uint64_t* out) const;

  std::vector<double> params_;
};

// Sentence-level translations carry their own begin/end marking, segment
// level phrases theirs; the two inventories never mix.
enum class PhraseLevel : int { Sentence = 0, Segment = 1 };

inline PhraseLevel phrase_level(const Sentence& x, Span span) {
  return span.width() == x.size() ? PhraseLevel::Sentence
                                  : PhraseLevel::Segment;
}

struct ScoredPhrase {
  std::string phrase;
  double log_prob;
};

// Conditional distribution over target phrases given a source span.
// Scores are log-probabilities; per source span they sum to at most one.
class PhraseScorer {
 public:
  virtual ~PhraseScorer() = default;

  // Log-probability of `phrase` given the span. Empty phrases are an
  // error; phrases beyond the scorer's length cap score log 0.
  virtual double phrase_score(const Sentence& x, Span span,
                              const std::string& phrase) const = 0;

  // Top-K support phrases, sorted by descending probability, ties broken
  // lexicographically. Never contains duplicates.
  virtual std::vector<ScoredPhrase> phrase_topk(const Sentence& x, Span span,
                                                int k) const = 0;

  virtual int length_cap() const = 0;

  virtual void add_logprob_gradient(const Sentence& /*x*/, Span /*span*/,
                                    const std::string& /*phrase*/,
                                    double /*weight*/,
                                    SparseGradient& /*grad*/) const {}
  virtual void apply_gradient(const SparseGradient& /*grad*/,
                              double /*scale*/) {}
  virtual void ensure_entry(const Sentence& /*x*/, Span /*span*/,
                            const std::string& /*phrase*/) {}
};

// Table-backed phrase distribution keyed by (source phrase string, level).
// Stored entries are exact log-probabilities; the remainder of each key's
// mass backs off to a length-geometric smoothing model:
//
//   p(unseen v | key) = rest_mass(key) * glen(|v|) * V^-|v|
//
// where glen is a truncated geometric over lengths 1..cap with parameter
// len_lambda and V is the smoothing vocabulary size. Keys never seen at
// all have rest_mass 1.
class TabularPhraseScorer : public PhraseScorer {
 public:
  explicit TabularPhraseScorer(int length_cap = 8, int smooth_vocab = 2,
                               double len_lambda = 0.5);

  double phrase_score(const Sentence& x, Span span,
                      const std::string& phrase) const override;
  std::vector<ScoredPhrase> phrase_topk(const Sentence& x, Span span,
                                        int k) const override;
  int length_cap() const override { return cap_; }

  void add_logprob_gradient(const Sentence& x, Span span,
                            const std::string& phrase, double weight,
                            SparseGradient& grad) const override;
  void apply_gradient(const SparseGradient& grad, double scale) override;
  void ensure_entry(const Sentence& x, Span span,
                    const std::string& phrase) override;

  // Direct table access for loading and inspection.
  void add_entry(const std::string& source, PhraseLevel level,
                 const std::string& phrase, double log_prob);
  double score_for_key(const std::string& source, PhraseLevel level,
                       const std::string& phrase) const;
  double rest_mass(const std::string& source, PhraseLevel level) const;
  std::size_t key_count() const { return keys_.size(); }
  std::size_t entry_count() const;

  // Checks sum(stored) + rest == 1 within tol for every key.
  void validate_normalization(double tol = 1e-9) const;

  double log_smooth(int token_len) const;

  // Headerless phrase-table exchange format: one entry per line,
  // source<TAB>target<TAB>log-prob<TAB>{SENT|SEG}, canonically sorted.
  void write_entries(std::ostream& out) const;
  void read_entries(std::istream& in);  // replaces current contents

  // Checkpoint section: header plus entries plus terminator.
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  struct Entry {
    std::string phrase;
    double logp;
  };
  struct KeyData {
    int id = 0;
    std::vector<Entry> entries;
    double rest_logp = 0.0;  // log of the smoothing mass
    std::unordered_map<std::string, int> index;
  };
  struct KeyRef {
    std::string source;
    PhraseLevel level;
  };

  static std::string key_string(const std::string& source, PhraseLevel level);
  const KeyData* find_key(const std::string& source, PhraseLevel level) const;
  KeyData& ensure_key(const std::string& source, PhraseLevel level);
  void renormalize(KeyData& key);
  static std::uint64_t param_id(int key_id, int entry_idx);

  int cap_;
  int smooth_vocab_;
  double len_lambda_;
  std::unordered_map<std::string, KeyData> table_;
  std::vector<KeyRef> keys_;  // by key id
};

int phrase_token_count(const std::string& phrase);

}  // namespace btg
