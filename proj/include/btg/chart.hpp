#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "btg/logspace.hpp"
#include "btg/rng.hpp"
#include "btg/scorers.hpp"
#include "btg/tree.hpp"

namespace btg {

// Inside log-weights over items (span [i,k), kind, m segments). Items with
// m = 1 carry the unit exit weight (log 0); items with m > width are log 0
// -- impossible.
struct TreeChart {
  int len = 0;
  int max_segments = 0;
  std::vector<double> beta;
  std::vector<double> root_log_z;  // [n] = log Z_tree(x, n), 1-based

  std::size_t item_index(int i, int k, NodeKind kind, int m) const {
    return (static_cast<std::size_t>(i * (len + 1) + k) * 2 +
            static_cast<int>(kind)) *
               (max_segments + 1) +
           m;
  }
  double log_beta(int i, int k, NodeKind kind, int m) const {
    return beta[item_index(i, k, kind, m)];
  }
  void dump(std::ostream& out) const;
};

// Locally normalized expansion probabilities per parent item, plus the
// top-rule probabilities per segment count. Expansions of a parent
// (i, k, kind, m) are encoded as (split j, left-span child segments a,
// variable child kind v):
//   S parent: left child (I, a) over [i,j), right child (v, m-a) over [j,k)
//   I parent: left child (v, a) over [i,j), right child (S, m-a) over [j,k)
struct RuleTable {
  int len = 0;
  int max_segments = 0;
  std::vector<std::size_t> block_offset;  // per parent item
  std::vector<double> logp;               // expansion log-probabilities
  std::vector<double> root_logp;          // [n][kind], 1-based in n

  std::size_t parent_index(int i, int k, NodeKind kind, int m) const {
    return (static_cast<std::size_t>(i * (len + 1) + k) * 2 +
            static_cast<int>(kind)) *
               (max_segments + 1) +
           m;
  }
  std::size_t expansion_index(int i, int k, NodeKind kind, int m, int j, int a,
                              NodeKind v) const {
    std::size_t base = block_offset[parent_index(i, k, kind, m)];
    return base + (static_cast<std::size_t>(j - i - 1) * (m - 1) + (a - 1)) * 2 +
           static_cast<int>(v);
  }
  double expansion_logp(int i, int k, NodeKind kind, int m, int j, int a,
                        NodeKind v) const {
    return logp[expansion_index(i, k, kind, m, j, a, v)];
  }
  double root_rule_logp(int n, NodeKind kind) const {
    return root_logp[n * 2 + static_cast<int>(kind)];
  }
  // Child labels of an expansion, in source-span order.
  static std::pair<std::pair<NodeKind, int>, std::pair<NodeKind, int>>
  children_of(NodeKind parent, int m, int a, NodeKind v) {
    if (parent == NodeKind::S)
      return {{NodeKind::I, a}, {v, m - a}};
    return {{v, a}, {NodeKind::S, m - a}};
  }
};

struct TreeInside {
  double log_z = kLogZero;
  TreeChart chart;
  RuleTable pscore;
};

// Inside algorithm over the source grammar: returns log Z_tree(x, n), the
// chart, and the normalized rule table (covering every m <= n and the top
// rules for every n' <= n). Throws if n is outside [1, |x|].
TreeInside inside_tree(const Sentence& x, const Sentence* y, int n,
                       const TreeRuleScorer& scorer);

// Top-down ancestral sampling from the normalized table.
TreeDerivation sample_tree(const RuleTable& pscore, int n, Rng& rng);

// Maximum-weight derivation and its log-weight. Ties break on the
// smallest split j, then the S child kind, then the smallest left count.
std::pair<TreeDerivation, double> viterbi_tree(const Sentence& x,
                                               const Sentence* y, int n,
                                               const TreeRuleScorer& scorer);

// Log-probability of a derivation under a normalized table; log 0 if any
// of its rules falls outside the table's support.
double tree_logprob(const TreeDerivation& tree, const RuleTable& pscore);

// Visit probabilities under the table's distribution for a fixed n:
// per-item reach probabilities and per-(i,j,k,parent-kind) split
// marginals, which are the sufficient statistics for rule-score
// gradients.
struct TreeMarginals {
  int len = 0;
  std::vector<double> split;  // [(i*(len+1)+j)*(len+1)+k]*2 + kind

  double split_marginal(int i, int j, int k, NodeKind kind) const {
    return split[(static_cast<std::size_t>(i * (len + 1) + j) * (len + 1) + k) *
                     2 +
                 static_cast<int>(kind)];
  }
};
TreeMarginals tree_marginals(const RuleTable& pscore, int n);

// Inside charts for the target segmentation conditioned on a derivation
// tree: one chart per tree node, nodes listed in target order, split
// scores cached so sampling and entropy need no further scorer calls.
struct SegCharts {
  int y_len = 0;
  int node_count = 0;
  std::vector<int> first, second;  // target-order children, -1 for leaves
  std::vector<int> segments;       // segment count per node
  std::vector<int> leaf_source;    // per node: source-order leaf index or -1
  std::vector<double> beta;        // [node][a][c]
  std::vector<double> score;       // [a][b][c] split scores over the target
  double log_z = kLogZero;

  bool feasible() const { return !is_log_zero(log_z); }
  std::size_t span_index(int a, int c) const {
    return static_cast<std::size_t>(a) * (y_len + 1) + c;
  }
  double log_beta(int node, int a, int c) const {
    return beta[static_cast<std::size_t>(node) * (y_len + 1) * (y_len + 1) +
                span_index(a, c)];
  }
  double split_score(int a, int b, int c) const {
    return score[(static_cast<std::size_t>(a) * (y_len + 1) + b) * (y_len + 1) +
                 c];
  }
  // log pi(b | node over [a,c)): the normalized split choice.
  double split_logp(int node, int a, int b, int c) const {
    return split_score(a, b, c) + log_beta(first[node], a, b) +
           log_beta(second[node], b, c) - log_beta(node, a, c);
  }
};

// Builds the segmentation charts; log_z is log 0 when the target is too
// short for the tree's segment count.
SegCharts inside_leaf(const Sentence& y, const TreeDerivation& d_tree,
                      const SegScorer& scorer);

// Samples a segmentation consistent with the tree topology; phrases are
// returned in source-leaf order. Throws on infeasible charts.
LeafDerivation sample_leaf(const SegCharts& charts, const Sentence& y,
                           Rng& rng);

// Maximum-probability segmentation; ties break on the smallest split.
LeafDerivation viterbi_leaf(const SegCharts& charts, const Sentence& y);

// Exact Shannon entropy (nats) of the segmentation distribution.
double leaf_entropy(const SegCharts& charts);

// Log-probability of a concrete segmentation under the charts.
double leaf_logprob(const SegCharts& charts, const LeafDerivation& leaves);

// Split marginals mu(a, b, c) of the segmentation distribution, the
// sufficient statistics for segmentation-score gradients.
std::vector<double> seg_split_marginals(const SegCharts& charts);

// The (a, b, c) split triples a concrete segmentation uses, in target
// preorder.
std::vector<std::array<int, 3>> leaf_splits(const SegCharts& charts,
                                            const LeafDerivation& leaves);

// Exact KL[q || p] between two tree distributions over the same (len, n).
// Returns +infinity when q places mass on an expansion that p excludes.
double tree_kl(const RuleTable& q, const RuleTable& p, int n, int x_len);

// Truncated geometric over {1..N}: p(n) = lambda (1-lambda)^(n-1) for
// n < N, with the full tail (1-lambda)^(N-1) on N. Sums to one exactly.
std::vector<double> truncated_geometric(double lambda, int N);
// Prior over segment counts: N = |x|, optionally capped.
std::vector<double> segment_prior(double lambda, int x_len, int cap = 0);
// Posterior support: N = min(|x|, |y|), optionally capped.
std::vector<double> segment_posterior(double lambda, int x_len, int y_len,
                                      int cap = 0);
// KL between two distributions over {1..N_q}, q's support within p's.
double kl_discrete(const std::vector<double>& q, const std::vector<double>& p);

}  // namespace btg
