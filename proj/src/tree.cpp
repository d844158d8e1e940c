#include "btg/tree.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>

#include "btg/errors.hpp"

namespace btg {

std::vector<int> TreeDerivation::leaves_in_source_order() const {
  std::vector<int> out;
  std::function<void(int)> walk = [&](int u) {
    const Node& node = nodes[u];
    if (node.is_leaf()) {
      out.push_back(u);
      return;
    }
    walk(node.left);
    walk(node.right);
  };
  if (!nodes.empty()) walk(0);
  return out;
}

namespace {

bool check_node(const TreeDerivation& tree, int u, int* leaf_count) {
  const auto& node = tree.nodes[u];
  if (node.span.begin >= node.span.end) return false;
  if (node.segments < 1 || node.segments > node.span.width()) return false;
  if (node.is_leaf()) {
    if (node.segments != 1 || node.right >= 0) return false;
    ++*leaf_count;
    return true;
  }
  if (node.segments < 2 || node.right < 0) return false;
  if (node.left < 0 || node.left >= static_cast<int>(tree.nodes.size()) ||
      node.right >= static_cast<int>(tree.nodes.size()))
    return false;
  const auto& l = tree.nodes[node.left];
  const auto& r = tree.nodes[node.right];
  // children partition the parent span
  if (l.span.begin != node.span.begin || r.span.end != node.span.end ||
      l.span.end != r.span.begin)
    return false;
  if (l.segments + r.segments != node.segments) return false;
  // S -> S I and I -> I S are disallowed: a Straight parent forces an
  // Inverted left-span child, an Inverted parent forces a Straight
  // right-span child.
  if (node.kind == NodeKind::S && l.kind != NodeKind::I) return false;
  if (node.kind == NodeKind::I && r.kind != NodeKind::S) return false;
  return check_node(tree, node.left, leaf_count) &&
         check_node(tree, node.right, leaf_count);
}

}  // namespace

bool validate_tree(const TreeDerivation& tree, int x_len, int n) {
  if (tree.nodes.empty()) return false;
  const auto& root = tree.root();
  if (root.span.begin != 0 || root.span.end != x_len) return false;
  if (root.segments != n) return false;
  int leaf_count = 0;
  if (!check_node(tree, 0, &leaf_count)) return false;
  return leaf_count == n;
}

std::vector<int> target_order(const TreeDerivation& tree) {
  if (tree.nodes.empty()) throw StructureError("empty derivation");
  if (!validate_tree(tree, tree.root().span.end, tree.root().segments))
    throw StructureError("invalid derivation tree");
  // Source-order leaf indices keyed by span start.
  std::vector<int> order;
  int next_leaf = 0;
  std::vector<int> leaf_index(tree.nodes.size(), -1);
  std::function<void(int)> number = [&](int u) {
    const auto& node = tree.nodes[u];
    if (node.is_leaf()) {
      leaf_index[u] = next_leaf++;
      return;
    }
    number(node.left);
    number(node.right);
  };
  number(0);
  std::function<void(int)> emit = [&](int u) {
    const auto& node = tree.nodes[u];
    if (node.is_leaf()) {
      order.push_back(leaf_index[u]);
      return;
    }
    if (node.kind == NodeKind::S) {
      emit(node.left);
      emit(node.right);
    } else {
      emit(node.right);
      emit(node.left);
    }
  };
  emit(0);
  return order;
}

std::string yield_target(const TreeDerivation& tree, const LeafDerivation& leaves,
                         int x_len) {
  if (!validate_tree(tree, x_len, tree.segment_count()))
    throw StructureError("invalid derivation tree");
  auto order = target_order(tree);
  if (leaves.phrases.size() != order.size())
    throw StructureError("leaf phrase count does not match tree leaves");
  std::string out;
  for (std::size_t t = 0; t < order.size(); ++t) {
    const std::string& phrase = leaves.phrases[order[t]];
    if (phrase.empty()) throw StructureError("empty leaf phrase");
    if (t > 0) out += ' ';
    out += phrase;
  }
  return out;
}

namespace {

void format_node(const TreeDerivation& tree, int u, std::string& out) {
  const auto& node = tree.nodes[u];
  char buf[64];
  std::snprintf(buf, sizeof(buf), "(%c:%d [%d,%d)", kind_char(node.kind),
                node.segments, node.span.begin, node.span.end);
  out += buf;
  if (!node.is_leaf()) {
    out += ' ';
    format_node(tree, node.left, out);
    out += ' ';
    format_node(tree, node.right, out);
  }
  out += ')';
}

struct TreeParser {
  const std::string& text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && text[pos] == ' ') ++pos;
  }
  void expect(char c) {
    if (pos >= text.size() || text[pos] != c)
      throw DataError("tree parse error at offset " + std::to_string(pos));
    ++pos;
  }
  int parse_int() {
    std::size_t start = pos;
    while (pos < text.size() && (std::isdigit(text[pos]) || text[pos] == '-'))
      ++pos;
    if (start == pos) throw DataError("tree parse error: expected integer");
    return std::stoi(text.substr(start, pos - start));
  }
  int parse_node(TreeDerivation& tree) {
    skip_ws();
    expect('(');
    if (pos >= text.size() || (text[pos] != 'S' && text[pos] != 'I'))
      throw DataError("tree parse error: expected node kind");
    NodeKind kind = text[pos] == 'S' ? NodeKind::S : NodeKind::I;
    ++pos;
    expect(':');
    int segments = parse_int();
    skip_ws();
    expect('[');
    int begin = parse_int();
    expect(',');
    int end = parse_int();
    expect(')');
    int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({kind, Span{begin, end}, segments, -1, -1});
    skip_ws();
    if (pos < text.size() && text[pos] == '(') {
      int left = parse_node(tree);
      int right = parse_node(tree);
      tree.nodes[index].left = left;
      tree.nodes[index].right = right;
      skip_ws();
    }
    expect(')');
    return index;
  }
};

}  // namespace

std::string format_tree(const TreeDerivation& tree) {
  if (tree.nodes.empty()) throw StructureError("empty derivation");
  std::string out;
  format_node(tree, 0, out);
  return out;
}

TreeDerivation parse_tree(const std::string& text) {
  TreeDerivation tree;
  TreeParser parser{text};
  parser.parse_node(tree);
  parser.skip_ws();
  if (parser.pos != text.size())
    throw DataError("tree parse error: trailing characters");
  return tree;
}

std::string format_alignment(const TreeDerivation& tree,
                             const LeafDerivation& leaves, const Sentence& x) {
  auto leaf_nodes = tree.leaves_in_source_order();
  auto order = target_order(tree);
  std::vector<int> target_pos(order.size());
  for (std::size_t t = 0; t < order.size(); ++t) target_pos[order[t]] = static_cast<int>(t);
  std::ostringstream out;
  out << format_tree(tree) << '\n';
  for (std::size_t s = 0; s < leaf_nodes.size(); ++s) {
    const auto& node = tree.nodes[leaf_nodes[s]];
    out << "  [" << node.span.begin << ',' << node.span.end << ") "
        << x.span_text(node.span) << " -> " << leaves.phrases[s]
        << "  (target position " << target_pos[s] << ")\n";
  }
  return out.str();
}

}  // namespace btg
