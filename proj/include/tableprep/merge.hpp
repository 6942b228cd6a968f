#pragma once

#include "tableprep/operators.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace tableprep {

struct TrieNode {
  std::string key;    // canonical_key of `spec`
  OperatorSpec spec;  // first-inserted spec carrying this key
  std::size_t weight = 0;
  std::vector<std::unique_ptr<TrieNode>> children;  // insertion order, distinct keys
};

/// Prefix tree over operator sequences. A node's weight is the number of
/// inserted sequences passing through it; the root carries no weight.
class OperationTrie {
 public:
  void insert(const Pipeline& ops);

  const TrieNode& root() const { return root_; }

  /// Sum of all node weights (equals the total inserted length).
  std::size_t total_weight() const;

 private:
  TrieNode root_;
};

/// Candidate minus its select and add_column operators.
Pipeline strip_select_and_add_column(const Pipeline& candidate);

OperationTrie build_trie(const std::vector<Pipeline>& stripped);

/// Root-to-leaf path with the largest weight sum; ties go to the longer
/// path, then to the lexicographically smaller key sequence. Empty for a
/// root-only trie.
Pipeline best_path(const OperationTrie& trie);

/// Consensus merge: select(union of all selected columns, first-seen
/// order; omitted when no candidate selects) ++ every distinct add_column
/// in candidate order ++ best_path of the trie over the remaining
/// operators. Throws EmptyCandidates.
Pipeline merge_pipelines(const std::vector<Pipeline>& candidates);

}  // namespace tableprep
