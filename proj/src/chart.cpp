#include "btg/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <tuple>

#include "btg/errors.hpp"

namespace btg {

namespace {

constexpr NodeKind kKinds[2] = {NodeKind::S, NodeKind::I};

// Rule scores depend on (i, j, k, parent kind) only; precompute them once.
struct ScoreGrid {
  int len;
  std::vector<double> s;

  ScoreGrid(const Sentence& x, const Sentence* y, const TreeRuleScorer& scorer)
      : len(x.size()), s(static_cast<std::size_t>((len + 1)) * (len + 1) *
                             (len + 1) * 2,
                         kLogZero) {
    for (int i = 0; i + 2 <= len; ++i)
      for (int k = i + 2; k <= len; ++k)
        for (int j = i + 1; j < k; ++j)
          for (NodeKind kind : kKinds)
            at(i, j, k, kind) = scorer.rule_score(x, y, i, j, k, kind);
  }
  double& at(int i, int j, int k, NodeKind kind) {
    return s[(static_cast<std::size_t>(i * (len + 1) + j) * (len + 1) + k) * 2 +
             static_cast<int>(kind)];
  }
  double get(int i, int j, int k, NodeKind kind) const {
    return s[(static_cast<std::size_t>(i * (len + 1) + j) * (len + 1) + k) * 2 +
             static_cast<int>(kind)];
  }
};

void check_segments(int n, int len) {
  if (n < 1 || n > len)
    throw StructureError("segment count must lie in [1, |x|]");
}

}  // namespace

void TreeChart::dump(std::ostream& out) const {
  char buf[96];
  for (int m = 1; m <= max_segments; ++m)
    for (int w = 1; w <= len; ++w)
      for (int i = 0; i + w <= len; ++i) {
        int k = i + w;
        for (NodeKind kind : kKinds) {
          double v = log_beta(i, k, kind, m);
          if (is_log_zero(v)) continue;
          std::snprintf(buf, sizeof(buf), "[%d,%d)\t%c:%d\t%.6f\n", i, k,
                        kind_char(kind), m, v);
          out << buf;
        }
      }
  for (int n = 1; n < static_cast<int>(root_log_z.size()); ++n) {
    std::snprintf(buf, sizeof(buf), "root\tT:%d\t%.6f\n", n, root_log_z[n]);
    out << buf;
  }
}

TreeInside inside_tree(const Sentence& x, const Sentence* y, int n,
                       const TreeRuleScorer& scorer) {
  int len = x.size();
  check_segments(n, len);
  ScoreGrid grid(x, y, scorer);

  TreeInside result;
  TreeChart& chart = result.chart;
  chart.len = len;
  chart.max_segments = n;
  chart.beta.assign(static_cast<std::size_t>((len + 1)) * (len + 1) * 2 *
                        (n + 1),
                    kLogZero);
  // Exit items: every span carries the unit-weight single-segment item.
  for (int i = 0; i < len; ++i)
    for (int k = i + 1; k <= len; ++k)
      for (NodeKind kind : kKinds)
        chart.beta[chart.item_index(i, k, kind, 1)] = kLogOne;

  for (int m = 2; m <= n; ++m)
    for (int w = m; w <= len; ++w)
      for (int i = 0; i + w <= len; ++i) {
        int k = i + w;
        double acc_s = kLogZero, acc_i = kLogZero;
        for (int j = i + 1; j < k; ++j) {
          double score_s = grid.get(i, j, k, NodeKind::S);
          double score_i = grid.get(i, j, k, NodeKind::I);
          for (int a = 1; a < m; ++a) {
            int b = m - a;
            double left_i = chart.log_beta(i, j, NodeKind::I, a);
            if (!is_log_zero(left_i)) {
              acc_s = log_add(acc_s, score_s + left_i +
                                         chart.log_beta(j, k, NodeKind::S, b));
              acc_s = log_add(acc_s, score_s + left_i +
                                         chart.log_beta(j, k, NodeKind::I, b));
            }
            double right_s = chart.log_beta(j, k, NodeKind::S, b);
            if (!is_log_zero(right_s)) {
              acc_i = log_add(acc_i, score_i + right_s +
                                         chart.log_beta(i, j, NodeKind::S, a));
              acc_i = log_add(acc_i, score_i + right_s +
                                         chart.log_beta(i, j, NodeKind::I, a));
            }
          }
        }
        chart.beta[chart.item_index(i, k, NodeKind::S, m)] = acc_s;
        chart.beta[chart.item_index(i, k, NodeKind::I, m)] = acc_i;
      }

  chart.root_log_z.assign(n + 1, kLogZero);
  for (int np = 1; np <= n; ++np)
    chart.root_log_z[np] = log_add(chart.log_beta(0, len, NodeKind::S, np),
                                   chart.log_beta(0, len, NodeKind::I, np));
  result.log_z = chart.root_log_z[n];

  // Locally normalized expansion probabilities.
  RuleTable& table = result.pscore;
  table.len = len;
  table.max_segments = n;
  table.block_offset.assign(chart.beta.size(), 0);
  std::size_t total = 0;
  for (int m = 2; m <= n; ++m)
    for (int w = 2; w <= len; ++w)
      for (int i = 0; i + w <= len; ++i)
        for (NodeKind kind : kKinds) {
          table.block_offset[table.parent_index(i, i + w, kind, m)] = total;
          total += static_cast<std::size_t>(w - 1) * (m - 1) * 2;
        }
  table.logp.assign(total, kLogZero);
  for (int m = 2; m <= n; ++m)
    for (int w = m; w <= len; ++w)
      for (int i = 0; i + w <= len; ++i) {
        int k = i + w;
        for (NodeKind kind : kKinds) {
          double parent = chart.log_beta(i, k, kind, m);
          if (is_log_zero(parent)) continue;
          for (int j = i + 1; j < k; ++j) {
            double score = grid.get(i, j, k, kind);
            for (int a = 1; a < m; ++a) {
              for (NodeKind v : kKinds) {
                auto [lc, rc] = RuleTable::children_of(kind, m, a, v);
                double w_rule = score +
                                chart.log_beta(i, j, lc.first, lc.second) +
                                chart.log_beta(j, k, rc.first, rc.second);
                if (is_log_zero(w_rule)) continue;
                table.logp[table.expansion_index(i, k, kind, m, j, a, v)] =
                    w_rule - parent;
              }
            }
          }
        }
      }
  table.root_logp.assign(2 * (n + 1), kLogZero);
  for (int np = 1; np <= n; ++np) {
    double z = chart.root_log_z[np];
    if (is_log_zero(z)) continue;
    for (NodeKind kind : kKinds)
      table.root_logp[np * 2 + static_cast<int>(kind)] =
          chart.log_beta(0, len, kind, np) - z;
  }
  return result;
}

namespace {

void sample_item(const RuleTable& table, int i, int k, NodeKind kind, int m,
                 Rng& rng, TreeDerivation& out) {
  int index = static_cast<int>(out.nodes.size());
  out.nodes.push_back({kind, Span{i, k}, m, -1, -1});
  if (m == 1) return;
  // Walk expansions in layout order, accumulating probability mass.
  double u = rng.uniform01();
  double cum = 0.0;
  int best_j = -1, best_a = -1;
  NodeKind best_v = NodeKind::S;
  bool found = false;
  for (int j = i + 1; j < k && !found; ++j)
    for (int a = 1; a < m && !found; ++a)
      for (NodeKind v : kKinds) {
        double p = std::exp(table.expansion_logp(i, k, kind, m, j, a, v));
        if (p <= 0.0) continue;
        best_j = j;
        best_a = a;
        best_v = v;
        cum += p;
        if (u < cum) {
          found = true;
          break;
        }
      }
  if (best_j < 0) throw StructureError("no feasible expansion to sample");
  auto [lc, rc] = RuleTable::children_of(kind, m, best_a, best_v);
  int left = static_cast<int>(out.nodes.size());
  sample_item(table, i, best_j, lc.first, lc.second, rng, out);
  int right = static_cast<int>(out.nodes.size());
  sample_item(table, best_j, k, rc.first, rc.second, rng, out);
  out.nodes[index].left = left;
  out.nodes[index].right = right;
}

}  // namespace

TreeDerivation sample_tree(const RuleTable& pscore, int n, Rng& rng) {
  check_segments(n, pscore.len);
  double logps[2] = {pscore.root_rule_logp(n, NodeKind::S),
                     pscore.root_rule_logp(n, NodeKind::I)};
  int kind = rng.categorical_from_logps(logps);
  if (kind < 0) throw StructureError("empty root distribution");
  TreeDerivation tree;
  sample_item(pscore, 0, pscore.len, kKinds[kind], n, rng, tree);
  return tree;
}

namespace {

struct ViterbiBack {
  int j = -1, a = -1;
  NodeKind v = NodeKind::S;
};

void build_viterbi(const TreeChart& gamma, const std::vector<ViterbiBack>& back,
                   int i, int k, NodeKind kind, int m, TreeDerivation& out) {
  int index = static_cast<int>(out.nodes.size());
  out.nodes.push_back({kind, Span{i, k}, m, -1, -1});
  if (m == 1) return;
  const ViterbiBack& b = back[gamma.item_index(i, k, kind, m)];
  if (b.j < 0) throw StructureError("viterbi backpointer missing");
  auto [lc, rc] = RuleTable::children_of(kind, m, b.a, b.v);
  int left = static_cast<int>(out.nodes.size());
  build_viterbi(gamma, back, i, b.j, lc.first, lc.second, out);
  int right = static_cast<int>(out.nodes.size());
  build_viterbi(gamma, back, b.j, k, rc.first, rc.second, out);
  out.nodes[index].left = left;
  out.nodes[index].right = right;
}

}  // namespace

std::pair<TreeDerivation, double> viterbi_tree(const Sentence& x,
                                               const Sentence* y, int n,
                                               const TreeRuleScorer& scorer) {
  int len = x.size();
  check_segments(n, len);
  ScoreGrid grid(x, y, scorer);

  TreeChart gamma;
  gamma.len = len;
  gamma.max_segments = n;
  gamma.beta.assign(static_cast<std::size_t>((len + 1)) * (len + 1) * 2 *
                        (n + 1),
                    kLogZero);
  std::vector<ViterbiBack> back(gamma.beta.size());
  for (int i = 0; i < len; ++i)
    for (int k = i + 1; k <= len; ++k)
      for (NodeKind kind : kKinds)
        gamma.beta[gamma.item_index(i, k, kind, 1)] = kLogOne;

  for (int m = 2; m <= n; ++m)
    for (int w = m; w <= len; ++w)
      for (int i = 0; i + w <= len; ++i) {
        int k = i + w;
        for (NodeKind kind : kKinds) {
          double best = kLogZero;
          ViterbiBack bb;
          for (int j = i + 1; j < k; ++j) {
            double score = grid.get(i, j, k, kind);
            for (int a = 1; a < m; ++a)
              for (NodeKind v : kKinds) {
                auto [lc, rc] = RuleTable::children_of(kind, m, a, v);
                double cand = score +
                              gamma.log_beta(i, j, lc.first, lc.second) +
                              gamma.log_beta(j, k, rc.first, rc.second);
                if (is_log_zero(cand)) continue;
                bool better;
                if (bb.j < 0 || cand != best) {
                  better = cand > best;
                } else {
                  // ties: smallest j, then the S child kind, then the
                  // smallest count on the first-written child
                  int l_cand = kind == NodeKind::S ? a : m - a;
                  int l_cur = kind == NodeKind::S ? bb.a : m - bb.a;
                  better = std::tuple(j, static_cast<int>(v), l_cand) <
                           std::tuple(bb.j, static_cast<int>(bb.v), l_cur);
                }
                if (better) {
                  best = cand;
                  bb = {j, a, v};
                }
              }
          }
          gamma.beta[gamma.item_index(i, k, kind, m)] = best;
          back[gamma.item_index(i, k, kind, m)] = bb;
        }
      }

  NodeKind root_kind = NodeKind::S;
  double best = gamma.log_beta(0, len, NodeKind::S, n);
  if (gamma.log_beta(0, len, NodeKind::I, n) > best) {
    best = gamma.log_beta(0, len, NodeKind::I, n);
    root_kind = NodeKind::I;
  }
  if (is_log_zero(best)) throw StructureError("no derivation exists");
  TreeDerivation tree;
  build_viterbi(gamma, back, 0, len, root_kind, n, tree);
  return {std::move(tree), best};
}

double tree_logprob(const TreeDerivation& tree, const RuleTable& pscore) {
  int n = tree.segment_count();
  if (n < 1 || n > pscore.max_segments || tree.root().span.end != pscore.len)
    return kLogZero;
  double total = pscore.root_rule_logp(n, tree.root().kind);
  std::function<void(int)> walk = [&](int u) {
    const auto& node = tree.nodes[u];
    if (node.is_leaf()) return;
    const auto& l = tree.nodes[node.left];
    const auto& r = tree.nodes[node.right];
    NodeKind v = node.kind == NodeKind::S ? r.kind : l.kind;
    total += pscore.expansion_logp(node.span.begin, node.span.end, node.kind,
                                   node.segments, l.span.end, l.segments, v);
    walk(node.left);
    walk(node.right);
  };
  walk(0);
  return total;
}

TreeMarginals tree_marginals(const RuleTable& pscore, int n) {
  int len = pscore.len;
  check_segments(n, len);
  TreeMarginals out;
  out.len = len;
  out.split.assign(static_cast<std::size_t>((len + 1)) * (len + 1) * (len + 1) *
                       2,
                   0.0);
  std::vector<double> item(
      static_cast<std::size_t>((len + 1)) * (len + 1) * 2 * (n + 1), 0.0);
  auto item_at = [&](int i, int k, NodeKind kind, int m) -> double& {
    return item[(static_cast<std::size_t>(i * (len + 1) + k) * 2 +
                 static_cast<int>(kind)) *
                    (n + 1) +
                m];
  };
  for (NodeKind kind : kKinds)
    item_at(0, len, kind, n) = std::exp(pscore.root_rule_logp(n, kind));
  for (int m = n; m >= 2; --m)
    for (int w = m; w <= len; ++w)
      for (int i = 0; i + w <= len; ++i) {
        int k = i + w;
        for (NodeKind kind : kKinds) {
          double mass = item_at(i, k, kind, m);
          if (mass <= 0.0) continue;
          for (int j = i + 1; j < k; ++j)
            for (int a = 1; a < m; ++a)
              for (NodeKind v : kKinds) {
                double p =
                    std::exp(pscore.expansion_logp(i, k, kind, m, j, a, v));
                if (p <= 0.0) continue;
                double mu = mass * p;
                auto [lc, rc] = RuleTable::children_of(kind, m, a, v);
                item_at(i, j, lc.first, lc.second) += mu;
                item_at(j, k, rc.first, rc.second) += mu;
                out.split[(static_cast<std::size_t>(i * (len + 1) + j) *
                               (len + 1) +
                           k) *
                              2 +
                          static_cast<int>(kind)] += mu;
              }
        }
      }
  return out;
}

SegCharts inside_leaf(const Sentence& y, const TreeDerivation& d_tree,
                      const SegScorer& scorer) {
  int n = d_tree.segment_count();
  int x_len = d_tree.nodes.empty() ? 0 : d_tree.root().span.end;
  if (!validate_tree(d_tree, x_len, n))
    throw StructureError("invalid derivation tree");

  SegCharts ch;
  ch.y_len = y.size();
  int node_total = static_cast<int>(d_tree.nodes.size());
  ch.node_count = node_total;
  ch.first.assign(node_total, -1);
  ch.second.assign(node_total, -1);
  ch.segments.assign(node_total, 0);
  ch.leaf_source.assign(node_total, -1);

  auto src_leaves = d_tree.leaves_in_source_order();
  std::vector<int> source_index(node_total, -1);
  for (std::size_t s = 0; s < src_leaves.size(); ++s)
    source_index[src_leaves[s]] = static_cast<int>(s);

  // Re-number nodes in target order: first child = the child emitted
  // first on the target side.
  int next = 0;
  std::function<int(int)> build = [&](int u) -> int {
    const auto& node = d_tree.nodes[u];
    int id = next++;
    ch.segments[id] = node.segments;
    if (node.is_leaf()) {
      ch.leaf_source[id] = source_index[u];
      return id;
    }
    int first_arena = node.kind == NodeKind::S ? node.left : node.right;
    int second_arena = node.kind == NodeKind::S ? node.right : node.left;
    int fid = build(first_arena);
    int sid = build(second_arena);
    ch.first[id] = fid;
    ch.second[id] = sid;
    return id;
  };
  build(0);

  int ylen = ch.y_len;
  ch.score.assign(static_cast<std::size_t>((ylen + 1)) * (ylen + 1) *
                      (ylen + 1),
                  kLogZero);
  if (n >= 2)
    for (int a = 0; a + 2 <= ylen; ++a)
      for (int c = a + 2; c <= ylen; ++c)
        for (int b = a + 1; b < c; ++b)
          ch.score[(static_cast<std::size_t>(a) * (ylen + 1) + b) * (ylen + 1) +
                   c] = scorer.split_score(y, a, b, c);

  ch.beta.assign(static_cast<std::size_t>(node_total) * (ylen + 1) *
                     (ylen + 1),
                 kLogZero);
  auto beta_at = [&](int u, int a, int c) -> double& {
    return ch.beta[static_cast<std::size_t>(u) * (ylen + 1) * (ylen + 1) +
                   ch.span_index(a, c)];
  };
  // Target-order preorder ids put children after their parent, so a
  // descending sweep is bottom-up.
  for (int u = node_total - 1; u >= 0; --u) {
    if (ch.first[u] < 0) {
      for (int a = 0; a < ylen; ++a)
        for (int c = a + 1; c <= ylen; ++c) beta_at(u, a, c) = kLogOne;
      continue;
    }
    for (int a = 0; a < ylen; ++a)
      for (int c = a + 1; c <= ylen; ++c) {
        double acc = kLogZero;
        for (int b = a + 1; b < c; ++b) {
          double w = ch.split_score(a, b, c) +
                     ch.log_beta(ch.first[u], a, b) +
                     ch.log_beta(ch.second[u], b, c);
          acc = log_add(acc, w);
        }
        beta_at(u, a, c) = acc;
      }
  }
  ch.log_z = ch.log_beta(0, 0, ylen);
  return ch;
}

namespace {

void require_feasible(const SegCharts& charts) {
  if (!charts.feasible())
    throw StructureError("segmentation charts carry no mass");
}

}  // namespace

LeafDerivation sample_leaf(const SegCharts& charts, const Sentence& y,
                           Rng& rng) {
  require_feasible(charts);
  LeafDerivation leaves;
  leaves.phrases.assign((charts.node_count + 1) / 2, {});
  std::function<void(int, int, int)> walk = [&](int u, int a, int c) {
    if (charts.first[u] < 0) {
      leaves.phrases[charts.leaf_source[u]] = y.span_text({a, c});
      return;
    }
    std::vector<double> logps;
    logps.reserve(c - a - 1);
    for (int b = a + 1; b < c; ++b)
      logps.push_back(charts.split_logp(u, a, b, c));
    int pick = rng.categorical_from_logps(logps);
    if (pick < 0) throw StructureError("no feasible split to sample");
    int b = a + 1 + pick;
    walk(charts.first[u], a, b);
    walk(charts.second[u], b, c);
  };
  walk(0, 0, charts.y_len);
  return leaves;
}

LeafDerivation viterbi_leaf(const SegCharts& charts, const Sentence& y) {
  require_feasible(charts);
  int ylen = charts.y_len;
  int nodes = charts.node_count;
  std::vector<double> gamma(
      static_cast<std::size_t>(nodes) * (ylen + 1) * (ylen + 1), kLogZero);
  auto gamma_at = [&](int u, int a, int c) -> double& {
    return gamma[static_cast<std::size_t>(u) * (ylen + 1) * (ylen + 1) +
                 charts.span_index(a, c)];
  };
  for (int u = nodes - 1; u >= 0; --u) {
    if (charts.first[u] < 0) {
      for (int a = 0; a < ylen; ++a)
        for (int c = a + 1; c <= ylen; ++c) gamma_at(u, a, c) = kLogOne;
      continue;
    }
    for (int a = 0; a < ylen; ++a)
      for (int c = a + 1; c <= ylen; ++c) {
        double best = kLogZero;
        for (int b = a + 1; b < c; ++b) {
          double w = charts.split_score(a, b, c) +
                     gamma_at(charts.first[u], a, b) +
                     gamma_at(charts.second[u], b, c);
          if (w > best) best = w;
        }
        gamma_at(u, a, c) = best;
      }
  }
  LeafDerivation leaves;
  leaves.phrases.assign((nodes + 1) / 2, {});
  std::function<void(int, int, int)> walk = [&](int u, int a, int c) {
    if (charts.first[u] < 0) {
      leaves.phrases[charts.leaf_source[u]] = y.span_text({a, c});
      return;
    }
    int best_b = -1;
    double best = kLogZero;
    for (int b = a + 1; b < c; ++b) {
      double w = charts.split_score(a, b, c) +
                 gamma_at(charts.first[u], a, b) +
                 gamma_at(charts.second[u], b, c);
      if (best_b < 0 ? !is_log_zero(w) : w > best) {
        best = w;
        best_b = b;
      }
    }
    if (best_b < 0) throw StructureError("no feasible split");
    walk(charts.first[u], a, best_b);
    walk(charts.second[u], best_b, c);
  };
  walk(0, 0, ylen);
  return leaves;
}

double leaf_entropy(const SegCharts& charts) {
  require_feasible(charts);
  int ylen = charts.y_len;
  int nodes = charts.node_count;
  std::vector<double> ent(
      static_cast<std::size_t>(nodes) * (ylen + 1) * (ylen + 1), 0.0);
  auto ent_at = [&](int u, int a, int c) -> double& {
    return ent[static_cast<std::size_t>(u) * (ylen + 1) * (ylen + 1) +
               charts.span_index(a, c)];
  };
  for (int u = nodes - 1; u >= 0; --u) {
    if (charts.first[u] < 0) continue;  // leaves are deterministic
    for (int a = 0; a < ylen; ++a)
      for (int c = a + 1; c <= ylen; ++c) {
        if (is_log_zero(charts.log_beta(u, a, c))) continue;
        double h = 0.0;
        for (int b = a + 1; b < c; ++b) {
          double lp = charts.split_logp(u, a, b, c);
          double p = std::exp(lp);
          if (p <= 0.0) continue;
          h += p * (ent_at(charts.first[u], a, b) +
                    ent_at(charts.second[u], b, c) - lp);
        }
        ent_at(u, a, c) = h;
      }
  }
  return ent_at(0, 0, ylen);
}

double leaf_logprob(const SegCharts& charts, const LeafDerivation& leaves) {
  int leaf_count = (charts.node_count + 1) / 2;
  if (static_cast<int>(leaves.phrases.size()) != leaf_count)
    throw StructureError("leaf phrase count does not match tree leaves");
  std::vector<int> sub_len(charts.node_count, 0);
  for (int u = charts.node_count - 1; u >= 0; --u) {
    if (charts.first[u] < 0) {
      int len = phrase_token_count(leaves.phrases[charts.leaf_source[u]]);
      if (len == 0) throw StructureError("empty leaf phrase");
      sub_len[u] = len;
    } else {
      sub_len[u] = sub_len[charts.first[u]] + sub_len[charts.second[u]];
    }
  }
  if (sub_len[0] != charts.y_len) return kLogZero;
  double total = 0.0;
  std::function<void(int, int)> walk = [&](int u, int a) {
    if (charts.first[u] < 0) return;
    int c = a + sub_len[u];
    int b = a + sub_len[charts.first[u]];
    total += charts.split_logp(u, a, b, c);
    walk(charts.first[u], a);
    walk(charts.second[u], b);
  };
  walk(0, 0);
  return total;
}

std::vector<std::array<int, 3>> leaf_splits(const SegCharts& charts,
                                            const LeafDerivation& leaves) {
  int leaf_count = (charts.node_count + 1) / 2;
  if (static_cast<int>(leaves.phrases.size()) != leaf_count)
    throw StructureError("leaf phrase count does not match tree leaves");
  std::vector<int> sub_len(charts.node_count, 0);
  for (int u = charts.node_count - 1; u >= 0; --u) {
    if (charts.first[u] < 0) {
      int len = phrase_token_count(leaves.phrases[charts.leaf_source[u]]);
      if (len == 0) throw StructureError("empty leaf phrase");
      sub_len[u] = len;
    } else {
      sub_len[u] = sub_len[charts.first[u]] + sub_len[charts.second[u]];
    }
  }
  std::vector<std::array<int, 3>> out;
  std::function<void(int, int)> walk = [&](int u, int a) {
    if (charts.first[u] < 0) return;
    int c = a + sub_len[u];
    int b = a + sub_len[charts.first[u]];
    out.push_back({a, b, c});
    walk(charts.first[u], a);
    walk(charts.second[u], b);
  };
  walk(0, 0);
  return out;
}

std::vector<double> seg_split_marginals(const SegCharts& charts) {
  require_feasible(charts);
  int ylen = charts.y_len;
  std::vector<double> grid(
      static_cast<std::size_t>((ylen + 1)) * (ylen + 1) * (ylen + 1), 0.0);
  std::vector<double> reach(
      static_cast<std::size_t>(charts.node_count) * (ylen + 1) * (ylen + 1),
      0.0);
  auto reach_at = [&](int u, int a, int c) -> double& {
    return reach[static_cast<std::size_t>(u) * (ylen + 1) * (ylen + 1) +
                 charts.span_index(a, c)];
  };
  reach_at(0, 0, ylen) = 1.0;
  for (int u = 0; u < charts.node_count; ++u) {
    if (charts.first[u] < 0) continue;
    for (int a = 0; a < ylen; ++a)
      for (int c = a + 1; c <= ylen; ++c) {
        double mass = reach_at(u, a, c);
        if (mass <= 0.0) continue;
        for (int b = a + 1; b < c; ++b) {
          double p = std::exp(charts.split_logp(u, a, b, c));
          if (p <= 0.0) continue;
          double mu = mass * p;
          grid[(static_cast<std::size_t>(a) * (ylen + 1) + b) * (ylen + 1) +
               c] += mu;
          reach_at(charts.first[u], a, b) += mu;
          reach_at(charts.second[u], b, c) += mu;
        }
      }
  }
  return grid;
}

double tree_kl(const RuleTable& q, const RuleTable& p, int n, int x_len) {
  if (q.len != x_len || p.len != x_len)
    throw StructureError("rule tables built for a different length");
  if (n > q.max_segments || n > p.max_segments)
    throw StructureError("rule tables do not cover the segment count");
  check_segments(n, x_len);
  int len = x_len;
  std::vector<double> kl(
      static_cast<std::size_t>((len + 1)) * (len + 1) * 2 * (n + 1), 0.0);
  auto kl_at = [&](int i, int k, NodeKind kind, int m) -> double& {
    return kl[(static_cast<std::size_t>(i * (len + 1) + k) * 2 +
               static_cast<int>(kind)) *
                  (n + 1) +
              m];
  };
  for (int m = 2; m <= n; ++m)
    for (int w = m; w <= len; ++w)
      for (int i = 0; i + w <= len; ++i) {
        int k = i + w;
        for (NodeKind kind : kKinds) {
          double acc = 0.0;
          for (int j = i + 1; j < k; ++j)
            for (int a = 1; a < m; ++a)
              for (NodeKind v : kKinds) {
                double lq = q.expansion_logp(i, k, kind, m, j, a, v);
                double pq = std::exp(lq);
                if (pq <= 0.0) continue;
                double lp = p.expansion_logp(i, k, kind, m, j, a, v);
                if (is_log_zero(lp))
                  return std::numeric_limits<double>::infinity();
                auto [lc, rc] = RuleTable::children_of(kind, m, a, v);
                acc += pq * (kl_at(i, j, lc.first, lc.second) +
                             kl_at(j, k, rc.first, rc.second) + lq - lp);
              }
          kl_at(i, k, kind, m) = acc;
        }
      }
  double total = 0.0;
  for (NodeKind kind : kKinds) {
    double lq = q.root_rule_logp(n, kind);
    double pq = std::exp(lq);
    if (pq <= 0.0) continue;
    double lp = p.root_rule_logp(n, kind);
    if (is_log_zero(lp)) return std::numeric_limits<double>::infinity();
    total += pq * (kl_at(0, len, kind, n) + lq - lp);
  }
  return total;
}

std::vector<double> truncated_geometric(double lambda, int N) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw StructureError("lambda must lie in (0,1)");
  if (N < 1) throw StructureError("N must be positive");
  std::vector<double> probs(N);
  for (int n = 1; n < N; ++n)
    probs[n - 1] = lambda * std::pow(1.0 - lambda, n - 1);
  probs[N - 1] = std::pow(1.0 - lambda, N - 1);
  return probs;
}

std::vector<double> segment_prior(double lambda, int x_len, int cap) {
  int N = cap > 0 ? std::min(x_len, cap) : x_len;
  return truncated_geometric(lambda, N);
}

std::vector<double> segment_posterior(double lambda, int x_len, int y_len,
                                      int cap) {
  int N = std::min(x_len, y_len);
  if (cap > 0) N = std::min(N, cap);
  return truncated_geometric(lambda, N);
}

double kl_discrete(const std::vector<double>& q, const std::vector<double>& p) {
  if (q.size() > p.size())
    throw StructureError("q support exceeds p support");
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    if (p[i] <= 0.0) return std::numeric_limits<double>::infinity();
    total += q[i] * (std::log(q[i]) - std::log(p[i]));
  }
  return total;
}

}  // namespace btg
