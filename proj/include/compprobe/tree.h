#ifndef COMPPROBE_TREE_H_
#define COMPPROBE_TREE_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace compprobe {

// An n-ary constituency tree as read from Penn-Treebank bracketing. A node
// is either a preterminal carrying a leaf token, or an internal node with
// one or more children. Labels are kept verbatim, functional tags and
// coindexation suffixes included ("NP-SBJ-1").
struct ConstituencyTree {
  std::string label;
  std::optional<std::string> leaf;
  std::vector<ConstituencyTree> children;

  bool is_preterminal() const { return leaf.has_value(); }

  friend bool operator==(const ConstituencyTree&,
                         const ConstituencyTree&) = default;
};

// Binarized tree. Internal nodes have one child (unary chains are kept) or
// two. Labels of the form "PARENT|<C1-C2>" mark nodes introduced by right
// factoring.
struct BinaryTree {
  std::string label;
  std::optional<std::string> leaf;
  std::vector<BinaryTree> children;

  bool is_preterminal() const { return leaf.has_value(); }
  bool is_binary() const { return children.size() == 2; }
  const BinaryTree& left() const { return children.front(); }
  const BinaryTree& right() const { return children.back(); }

  friend bool operator==(const BinaryTree&, const BinaryTree&) = default;
};

// Parses exactly one bracketed tree, e.g. "(NP (DT the) (NN way))".
// Throws ParseError (with byte offset) on malformed or empty input.
ConstituencyTree ParseBracketed(std::string_view text);

// Parses every tree in a .mrg-style buffer. A root bracket with an empty
// label wrapping a single tree, as in "( (S ...) )", is unwrapped.
std::vector<ConstituencyTree> ParseBracketedAll(std::string_view text);

std::string ToBracketed(const ConstituencyTree& tree);
std::string ToBracketed(const BinaryTree& tree);

std::vector<std::string> Yield(const ConstituencyTree& tree);
std::vector<std::string> Yield(const BinaryTree& tree);

struct CnfOptions {
  // How many of the remaining sibling labels go into a synthetic label.
  // 2 gives "X|<B-C>"; 0 lists every remaining sibling ("X|<B-C-D>").
  std::size_t horizontal_markov = 2;
};

// Right-factored binarization: a node with children C1..Ck, k > 2, becomes
// C1 plus a synthetic node "PARENT|<C2-C3>" over C2..Ck, recursively.
BinaryTree ToCnfRightFactored(const ConstituencyTree& tree,
                              const CnfOptions& options = {});

// Inverse of ToCnfRightFactored: splices synthetic nodes back into their
// parents. Throws FormatError on a malformed synthetic label.
ConstituencyTree CollapseCnf(const BinaryTree& tree);

// True for labels produced by right factoring. Throws FormatError if the
// label opens a synthetic marker but is not well formed.
bool IsSyntheticLabel(std::string_view label);

}  // namespace compprobe

#endif  // COMPPROBE_TREE_H_
