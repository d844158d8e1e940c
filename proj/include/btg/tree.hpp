#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "btg/vocab.hpp"

namespace btg {

// Straight nodes emit their children in source order on the target side,
// Inverted nodes emit the right-span child first.
enum class NodeKind : int { S = 0, I = 1 };

inline char kind_char(NodeKind k) { return k == NodeKind::S ? 'S' : 'I'; }

// Binary derivation tree over the source sentence, terminal rules excluded.
// Nodes live in a flat arena; children are stored in source-span order.
// A leaf (segments == 1) stands for the unit-weight exit into the phrase
// emitter. The implicit top rules Root -> T^n -> root-kind^n are not stored.
struct TreeDerivation {
  struct Node {
    NodeKind kind = NodeKind::S;
    Span span;
    int segments = 1;
    int left = -1;   // child over the left part of the span, -1 for leaves
    int right = -1;  // child over the right part of the span
    bool is_leaf() const { return left < 0; }
  };

  std::vector<Node> nodes;  // nodes[0] is the root

  const Node& root() const { return nodes.at(0); }
  int segment_count() const { return nodes.empty() ? 0 : root().segments; }

  // Leaf node indices ordered by source span.
  std::vector<int> leaves_in_source_order() const;

  friend bool operator==(const TreeDerivation&, const TreeDerivation&) = default;
};

// True iff every node satisfies the rule-form constraints, the leaves
// number `n`, and the leaf spans partition [0, x_len). Pure predicate.
bool validate_tree(const TreeDerivation& tree, int x_len, int n);

// Permutation mapping target position -> source-order leaf index.
// Throws StructureError on invalid trees.
std::vector<int> target_order(const TreeDerivation& tree);

// Target phrases, one per leaf, indexed in source-leaf order.
struct LeafDerivation {
  std::vector<std::string> phrases;

  friend bool operator==(const LeafDerivation&, const LeafDerivation&) = default;
};

struct PhrasePair {
  Span source;
  std::string target;
  friend bool operator==(const PhrasePair&, const PhrasePair&) = default;
};

// (source span, target phrase) pairs whose spans partition the source.
using PhraseTable = std::vector<PhrasePair>;

// Concatenates the leaf phrases in target order. Verifies that the leaf
// count matches and the source spans partition [0, x_len).
std::string yield_target(const TreeDerivation& tree, const LeafDerivation& leaves,
                         int x_len);

// Bracketed text form, e.g. "(S:2 [0,2) (I:1 [0,1)) (S:1 [1,2)))".
std::string format_tree(const TreeDerivation& tree);
TreeDerivation parse_tree(const std::string& text);

// Tree plus aligned phrases, one leaf per line, for CLI display.
std::string format_alignment(const TreeDerivation& tree,
                             const LeafDerivation& leaves, const Sentence& x);

}  // namespace btg
