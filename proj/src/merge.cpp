#include "tableprep/merge.hpp"

#include "tableprep/error.hpp"

#include <algorithm>

namespace tableprep {

void OperationTrie::insert(const Pipeline& ops) {
  TrieNode* node = &root_;
  for (const auto& op : ops) {
    const auto key = canonical_key(op);
    auto it = std::find_if(node->children.begin(), node->children.end(),
                           [&](const auto& child) { return child->key == key; });
    if (it == node->children.end()) {
      auto child = std::make_unique<TrieNode>();
      child->key = key;
      child->spec = op;
      node->children.push_back(std::move(child));
      it = std::prev(node->children.end());
    }
    node = it->get();
    ++node->weight;
  }
}

namespace {

std::size_t subtree_weight(const TrieNode& node) {
  std::size_t sum = node.weight;
  for (const auto& c : node.children) sum += subtree_weight(*c);
  return sum;
}

struct PathChoice {
  std::size_t weight = 0;
  std::vector<const TrieNode*> nodes;
};

bool key_sequence_less(const PathChoice& a, const PathChoice& b) {
  return std::lexicographical_compare(
      a.nodes.begin(), a.nodes.end(), b.nodes.begin(), b.nodes.end(),
      [](const TrieNode* x, const TrieNode* y) { return x->key < y->key; });
}

bool better(const PathChoice& a, const PathChoice& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  if (a.nodes.size() != b.nodes.size()) return a.nodes.size() > b.nodes.size();
  return key_sequence_less(a, b);
}

// Every path through `node` shares its prefix, so the best full path is the
// prefix plus the best child suffix under the same ordering.
PathChoice best_below(const TrieNode& node) {
  PathChoice best;
  bool have = false;
  for (const auto& child : node.children) {
    PathChoice suffix = best_below(*child);
    suffix.weight += child->weight;
    suffix.nodes.insert(suffix.nodes.begin(), child.get());
    if (!have || better(suffix, best)) {
      best = std::move(suffix);
      have = true;
    }
  }
  return best;
}

}  // namespace

std::size_t OperationTrie::total_weight() const { return subtree_weight(root_); }

Pipeline strip_select_and_add_column(const Pipeline& candidate) {
  Pipeline out;
  for (const auto& op : candidate) {
    if (op.kind() != OpKind::Select && op.kind() != OpKind::AddColumn) out.push_back(op);
  }
  return out;
}

OperationTrie build_trie(const std::vector<Pipeline>& stripped) {
  OperationTrie trie;
  for (const auto& seq : stripped) trie.insert(seq);
  return trie;
}

Pipeline best_path(const OperationTrie& trie) {
  Pipeline out;
  for (const auto* node : best_below(trie.root()).nodes) out.push_back(node->spec);
  return out;
}

Pipeline merge_pipelines(const std::vector<Pipeline>& candidates) {
  if (candidates.empty()) {
    throw Error(ErrorCode::EmptyCandidates, "merge needs at least one candidate pipeline");
  }
  Pipeline merged;

  bool any_select = false;
  SelectParams selected;
  for (const auto& candidate : candidates) {
    for (const auto& op : candidate) {
      if (const auto* s = std::get_if<SelectParams>(&op.params)) {
        any_select = true;
        for (const auto& col : s->columns) {
          if (std::find(selected.columns.begin(), selected.columns.end(), col) ==
              selected.columns.end()) {
            selected.columns.push_back(col);
          }
        }
      }
    }
  }
  if (any_select) merged.push_back(OperatorSpec{std::move(selected), std::nullopt});

  std::vector<const AddColumnParams*> seen_adds;
  for (const auto& candidate : candidates) {
    for (const auto& op : candidate) {
      const auto* add = std::get_if<AddColumnParams>(&op.params);
      if (add == nullptr) continue;
      const bool duplicate = std::any_of(seen_adds.begin(), seen_adds.end(),
                                         [&](const AddColumnParams* p) { return *p == *add; });
      if (!duplicate) {
        seen_adds.push_back(add);
        merged.push_back(op);
      }
    }
  }

  std::vector<Pipeline> stripped;
  stripped.reserve(candidates.size());
  for (const auto& candidate : candidates) {
    stripped.push_back(strip_select_and_add_column(candidate));
  }
  auto path = best_path(build_trie(stripped));
  merged.insert(merged.end(), path.begin(), path.end());
  return merged;
}

}  // namespace tableprep
