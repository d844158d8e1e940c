#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "btg/chart.hpp"
#include "btg/corpus.hpp"
#include "btg/model.hpp"
#include "btg/rng.hpp"

namespace btg {

struct TrainConfig {
  double lambda = 0.7;
  int max_segments = 4;
  double learning_rate = 0.1;
  int batch_size = 16;
  int epochs = 10;
  std::uint64_t seed = 1;
  enum class Baseline { SelfCritical, None };
  Baseline baseline = Baseline::SelfCritical;
  bool sum_and_sample = false;
  int jobs = 1;
};

// Objective gradients (ascent direction), one group per scorer.
struct Gradients {
  DenseGradient tree_p, tree_q, seg_q;
  SparseGradient phrase;

  explicit Gradients(const Model& model)
      : tree_p(model.tree_p.param_count(), 0.0),
        tree_q(model.tree_q.param_count(), 0.0),
        seg_q(model.seg_q.param_count(), 0.0) {}
  void add(const Gradients& other);
};

// One sampled (n, d_tree, d_leaf) path with its estimator weight. The
// entropy and KL fields are exact chart values, not samples.
struct ElboComponent {
  int n = 1;
  double weight = 1.0;
  TreeDerivation tree;
  LeafDerivation leaves;
  double leaf_ll = 0.0;
  double entropy = 0.0;
  double kl_tree = 0.0;
};

struct ElboEstimate {
  std::vector<ElboComponent> components;
  double kl_n = 0.0;  // constant segment-count KL, reported only
  bool skipped = false;

  double elbo() const;          // weighted leaf_ll + entropy - kl_tree
  double bound() const { return elbo() - kl_n; }
  double entropy() const;
  double kl_tree() const;
};

// log p(d_leaf | x, d_tree): sum of phrase log-probabilities over the
// aligned pairs.
double leaf_loglikelihood(const Sentence& x, const TreeDerivation& tree,
                          const LeafDerivation& leaves,
                          const PhraseScorer& scorer);

// One (source span, target phrase) pair per leaf, in source order.
PhraseTable extract_alignments(const TreeDerivation& tree,
                               const LeafDerivation& leaves);

// Keeps n = 1 with its exact posterior weight and samples one n > 1 from
// the renormalized tail; the weighted pair is an unbiased estimator over
// the posterior.
std::vector<std::pair<int, double>> sum_and_sample_n(
    const std::vector<double>& q_n, Rng& rng);

// Reward of the variational tree objective evaluated at the argmax tree
// and argmax segmentation, used as the self-critical control variate.
double self_critical_baseline(const Sentence& x, const Sentence& y, int n,
                              const Model& model);

// One stochastic step of the five-part scheme: sample n, tree, and
// segmentation from the variational distributions, accumulate gradients
// for all four scorers, and report the ELBO pieces. `grads` and
// `observed` may be null; `observed` collects sampled phrase pairs so the
// caller can grow the phrase inventory at a batch boundary. Degenerate
// samples mark the estimate skipped and leave the outputs untouched.
ElboEstimate elbo_step(const Sentence& x, const Sentence& y,
                       const Model& model, const TrainConfig& config, Rng& rng,
                       Gradients* grads, PhraseTable* observed);

struct EpochMetrics {
  int epoch = 0;
  double mean_elbo = 0.0;
  double mean_kl_tree = 0.0;
  double mean_entropy_leaf = 0.0;
  int skipped = 0;
};

// Minibatch SGD over shuffled examples; gradients are averaged per batch
// and new phrase pairs enter the table at batch boundaries. Writes one
// CSV line per epoch to `log` when given. Deterministic for a fixed
// (corpus, config, seed).
std::vector<EpochMetrics> train(const ParallelCorpus& corpus, Model& model,
                                const TrainConfig& config,
                                std::ostream* log = nullptr);

}  // namespace btg
