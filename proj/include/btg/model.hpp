#pragma once

#include <iosfwd>
#include <string>

#include "btg/scorers.hpp"

namespace btg {

// The trainable scorer bundle: prior and variational tree parsers, the
// target segmentation parser, and the phrase translation table, plus the
// segment-count prior hyperparameters. Checkpoints round-trip exactly.
struct Model {
  LogLinearTreeScorer tree_p;
  LogLinearTreeScorer tree_q{1024, true};
  LogLinearSegScorer seg_q;
  TabularPhraseScorer phrase;
  double lambda = 0.7;
  int max_segments = 4;

  Model() = default;
  Model(std::size_t tree_dim, std::size_t seg_dim, int phrase_cap,
        int smooth_vocab, double lambda_, int max_segments_)
      : tree_p(tree_dim, false),
        tree_q(tree_dim, true),
        seg_q(seg_dim),
        phrase(phrase_cap, smooth_vocab),
        lambda(lambda_),
        max_segments(max_segments_) {}

  void save(std::ostream& out) const;
  void load(std::istream& in);
  void save_file(const std::string& path) const;
  static Model load_file(const std::string& path);
};

}  // namespace btg
