#include "compprobe/tree.h"

#include <algorithm>
#include <cctype>

#include "compprobe/errors.h"

namespace compprobe {
namespace {

class BracketReader {
 public:
  explicit BracketReader(std::string_view text) : text_(text) {}

  bool AtEnd() {
    SkipSpace();
    return pos_ >= text_.size();
  }

  std::size_t pos() const { return pos_; }

  ConstituencyTree ReadTree() {
    SkipSpace();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    if (text_[pos_] != '(') throw ParseError("expected '('", pos_);
    const std::size_t open = pos_;
    ++pos_;
    ConstituencyTree node;
    SkipSpace();
    if (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')') {
      node.label = ReadToken();
    }
    std::vector<std::string> tokens;
    for (;;) {
      SkipSpace();
      if (pos_ >= text_.size()) {
        throw ParseError("unbalanced parentheses", pos_);
      }
      const char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        node.children.push_back(ReadTree());
      } else {
        tokens.push_back(ReadToken());
      }
    }
    if (!tokens.empty()) {
      if (tokens.size() > 1 || !node.children.empty()) {
        throw ParseError("node mixes terminals and subtrees", open);
      }
      node.leaf = std::move(tokens.front());
    } else if (node.children.empty()) {
      throw ParseError("empty constituent", open);
    }
    return node;
  }

 private:
  void SkipSpace() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string ReadToken() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

template <typename Tree>
void CollectYield(const Tree& tree, std::vector<std::string>& out) {
  if (tree.leaf) {
    out.push_back(*tree.leaf);
    return;
  }
  for (const auto& child : tree.children) CollectYield(child, out);
}

template <typename Tree>
void WriteBracketed(const Tree& tree, std::string& out) {
  out += '(';
  out += tree.label;
  if (tree.leaf) {
    out += ' ';
    out += *tree.leaf;
  }
  for (const auto& child : tree.children) {
    out += ' ';
    WriteBracketed(child, out);
  }
  out += ')';
}

std::string SyntheticLabel(const std::string& parent,
                           const std::vector<ConstituencyTree>& children,
                           std::size_t first, std::size_t window) {
  const std::size_t last =
      window == 0 ? children.size() : std::min(children.size(), first + window);
  std::string label = parent + "|<";
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) label += '-';
    label += children[i].label;
  }
  label += '>';
  return label;
}

BinaryTree Binarize(const ConstituencyTree& tree, const CnfOptions& options);

// Right spine over children[first..]; at least two children remain.
BinaryTree FactorRight(const std::string& parent,
                       const std::vector<ConstituencyTree>& children,
                       std::size_t first, const CnfOptions& options) {
  BinaryTree node;
  node.label =
      SyntheticLabel(parent, children, first, options.horizontal_markov);
  node.children.push_back(Binarize(children[first], options));
  if (children.size() - first == 2) {
    node.children.push_back(Binarize(children[first + 1], options));
  } else {
    node.children.push_back(FactorRight(parent, children, first + 1, options));
  }
  return node;
}

BinaryTree Binarize(const ConstituencyTree& tree, const CnfOptions& options) {
  BinaryTree node;
  node.label = tree.label;
  node.leaf = tree.leaf;
  if (tree.children.size() <= 2) {
    for (const auto& child : tree.children) {
      node.children.push_back(Binarize(child, options));
    }
    return node;
  }
  node.children.push_back(Binarize(tree.children.front(), options));
  node.children.push_back(FactorRight(tree.label, tree.children, 1, options));
  return node;
}

void Splice(const BinaryTree& tree, std::vector<ConstituencyTree>& out);

ConstituencyTree Collapse(const BinaryTree& tree) {
  ConstituencyTree node;
  node.label = tree.label;
  node.leaf = tree.leaf;
  for (const auto& child : tree.children) Splice(child, node.children);
  return node;
}

void Splice(const BinaryTree& tree, std::vector<ConstituencyTree>& out) {
  if (IsSyntheticLabel(tree.label)) {
    for (const auto& child : tree.children) Splice(child, out);
  } else {
    out.push_back(Collapse(tree));
  }
}

}  // namespace

ConstituencyTree ParseBracketed(std::string_view text) {
  BracketReader reader(text);
  if (reader.AtEnd()) throw ParseError("empty input", reader.pos());
  ConstituencyTree tree = reader.ReadTree();
  if (!reader.AtEnd()) {
    throw ParseError("trailing input after tree", reader.pos());
  }
  return tree;
}

std::vector<ConstituencyTree> ParseBracketedAll(std::string_view text) {
  BracketReader reader(text);
  std::vector<ConstituencyTree> trees;
  while (!reader.AtEnd()) {
    ConstituencyTree tree = reader.ReadTree();
    if (tree.label.empty() && !tree.leaf && tree.children.size() == 1) {
      ConstituencyTree inner = std::move(tree.children.front());
      tree = std::move(inner);
    }
    trees.push_back(std::move(tree));
  }
  return trees;
}

std::string ToBracketed(const ConstituencyTree& tree) {
  std::string out;
  WriteBracketed(tree, out);
  return out;
}

std::string ToBracketed(const BinaryTree& tree) {
  std::string out;
  WriteBracketed(tree, out);
  return out;
}

std::vector<std::string> Yield(const ConstituencyTree& tree) {
  std::vector<std::string> out;
  CollectYield(tree, out);
  return out;
}

std::vector<std::string> Yield(const BinaryTree& tree) {
  std::vector<std::string> out;
  CollectYield(tree, out);
  return out;
}

BinaryTree ToCnfRightFactored(const ConstituencyTree& tree,
                              const CnfOptions& options) {
  return Binarize(tree, options);
}

bool IsSyntheticLabel(std::string_view label) {
  const std::size_t marker = label.find("|<");
  if (marker == std::string_view::npos) return false;
  if (marker == 0 || label.back() != '>' || label.size() < marker + 4) {
    throw FormatError("malformed synthetic label '" + std::string(label) +
                      "'");
  }
  return true;
}

ConstituencyTree CollapseCnf(const BinaryTree& tree) {
  if (IsSyntheticLabel(tree.label)) {
    throw FormatError("synthetic label at tree root: " + tree.label);
  }
  return Collapse(tree);
}

}  // namespace compprobe
