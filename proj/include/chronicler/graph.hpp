#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chronicler/corpus.hpp"
#include "chronicler/extraction.hpp"

namespace chronicler {

using NodeId = std::uint32_t;

struct EntityNode {
  NodeId id = 0;
  std::string canonical_name;            // trimmed surface form
  std::vector<std::string> aliases;      // sorted, canonical never included
  std::vector<std::string> chunk_ids;    // ordered, first contribution first

  bool operator==(const EntityNode& other) const = default;
};

struct GraphEdge {
  NodeId head = 0;
  std::string relation;
  NodeId tail = 0;  // alias relations loop back to the head node
  std::string chunk_id;

  bool operator==(const GraphEdge& other) const = default;
};

enum class MatchKind { Canonical, Alias, None };

struct RetrievalResult {
  std::string query_name;
  std::optional<NodeId> matched_node;
  std::vector<NodeId> neighbor_nodes;  // breadth-first, ties by node id
  std::vector<Chunk> chunks;           // matched node's chunks first, deduplicated
  MatchKind match = MatchKind::None;
};

struct BuildOptions {
  std::vector<std::string> alias_relations = {"styled_name", "nickname"};
  // Two same-named heads from different documents stay separate nodes when
  // this relation's values disagree; otherwise they merge.
  std::string discriminator_relation = "hometown";
};

struct BuildReport {
  struct Collision {
    std::string name;
    std::string action;  // "merged" | "split"
    std::vector<std::string> documents;
  };
  std::vector<Collision> collisions;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::size_t chunk_count = 0;
  std::size_t orphan_count = 0;
};

class KnowledgeGraph {
 public:
  // Builds nodes from triple heads (and non-alias tails, so edges resolve),
  // folds alias relations into the head node's alias set, links every node
  // to the chunks its triples came from, and records chunks with no triples
  // as orphans.
  static KnowledgeGraph build(const std::vector<Triple>& triples,
                              const std::vector<Chunk>& chunks,
                              const BuildOptions& options = {},
                              BuildReport* report = nullptr);

  // Normalized exact match, canonical names before aliases; a name shared
  // by several nodes raises Ambiguous with the candidate list.
  std::optional<NodeId> lookup(std::string_view name) const;

  RetrievalResult retrieve(std::string_view name, int hops) const;

  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;
  static KnowledgeGraph load(std::istream& in);
  static KnowledgeGraph load_file(const std::filesystem::path& path);

  bool structurally_equal(const KnowledgeGraph& other) const;

  const std::vector<EntityNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const std::vector<Chunk>& chunks() const { return chunks_; }
  const std::vector<std::string>& orphan_chunks() const { return orphans_; }
  const EntityNode& node(NodeId id) const { return nodes_.at(id); }
  const Chunk* find_chunk(const std::string& id) const;
  std::vector<std::string> all_names() const;  // canonical + aliases

 private:
  void reindex();  // rebuilds name index and adjacency from nodes/edges

  std::vector<EntityNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<Chunk> chunks_;
  std::vector<std::string> orphans_;

  // derived
  std::map<std::string, std::size_t> chunk_by_id_;
  std::map<std::string, std::vector<NodeId>> canonical_index_;
  std::map<std::string, std::vector<NodeId>> alias_index_;
  std::vector<std::vector<NodeId>> adjacency_;
};

inline constexpr int kIndexFormatVersion = 1;

}  // namespace chronicler
