#include "chronicler/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "chronicler/errors.hpp"
#include "chronicler/text.hpp"

namespace chronicler {

namespace {

// Mention groups collect one head's triples per source document; the
// homonym rule decides which groups fuse into one node.
struct MentionGroup {
  std::string surface;  // first trimmed surface form seen
  std::string doc_id;
  std::set<std::string> discriminator_values;
  std::vector<std::size_t> triple_indices;
};

std::string doc_of_chunk(const std::string& chunk_id) {
  auto pos = chunk_id.rfind('#');
  return pos == std::string::npos ? chunk_id : chunk_id.substr(0, pos);
}

}  // namespace

KnowledgeGraph KnowledgeGraph::build(const std::vector<Triple>& triples,
                                     const std::vector<Chunk>& chunks,
                                     const BuildOptions& options, BuildReport* report) {
  KnowledgeGraph g;
  g.chunks_ = chunks;
  for (std::size_t i = 0; i < g.chunks_.size(); ++i) {
    if (g.chunk_by_id_.count(g.chunks_[i].id)) {
      throw Error(Errc::InvalidData, "duplicate chunk id " + g.chunks_[i].id);
    }
    g.chunk_by_id_[g.chunks_[i].id] = i;
  }
  for (const auto& t : triples) {
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
      throw Error(Errc::InvalidData, "triple with empty field");
    }
    if (!g.chunk_by_id_.count(t.chunk_id)) {
      throw Error(Errc::InvalidData, "triple references unknown chunk " + t.chunk_id);
    }
  }

  const std::set<std::string> alias_relations(options.alias_relations.begin(),
                                              options.alias_relations.end());

  // Group triples by normalized head, then by source document.
  std::vector<std::string> head_order;
  std::map<std::string, std::vector<MentionGroup>> groups_by_head;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& t = triples[i];
    std::string key = normalize_name(t.head);
    std::string doc = doc_of_chunk(t.chunk_id);
    auto it = groups_by_head.find(key);
    if (it == groups_by_head.end()) {
      head_order.push_back(key);
      it = groups_by_head.emplace(key, std::vector<MentionGroup>{}).first;
    }
    auto& groups = it->second;
    MentionGroup* group = nullptr;
    for (auto& existing : groups) {
      if (existing.doc_id == doc) {
        group = &existing;
        break;
      }
    }
    if (group == nullptr) {
      groups.push_back(MentionGroup{trim(t.head), doc, {}, {}});
      group = &groups.back();
    }
    if (t.relation == options.discriminator_relation) {
      group->discriminator_values.insert(normalize_name(t.tail));
    }
    group->triple_indices.push_back(i);
  }

  // Partition each head's mention groups into nodes. Groups merge unless
  // both carry discriminator values and the values disagree.
  struct Partition {
    std::string surface;
    std::set<std::string> discriminator_values;
    std::vector<std::size_t> triple_indices;
    std::vector<std::string> docs;
  };
  std::map<std::string, std::vector<NodeId>> head_partition_nodes;
  // triple index -> node id, filled below
  std::vector<NodeId> triple_node(triples.size(), 0);

  auto new_node = [&](const std::string& surface) -> NodeId {
    EntityNode n;
    n.id = static_cast<NodeId>(g.nodes_.size());
    n.canonical_name = surface;
    g.nodes_.push_back(std::move(n));
    return g.nodes_.back().id;
  };

  for (const auto& head_key : head_order) {
    auto& groups = groups_by_head[head_key];
    std::vector<Partition> parts;
    for (auto& group : groups) {
      Partition* target = nullptr;
      for (auto& p : parts) {
        bool both_have = !p.discriminator_values.empty() && !group.discriminator_values.empty();
        bool disagree = both_have && p.discriminator_values != group.discriminator_values;
        if (!disagree) {
          target = &p;
          break;
        }
      }
      if (target == nullptr) {
        parts.push_back(Partition{group.surface, {}, {}, {}});
        target = &parts.back();
      }
      target->discriminator_values.insert(group.discriminator_values.begin(),
                                          group.discriminator_values.end());
      target->triple_indices.insert(target->triple_indices.end(),
                                    group.triple_indices.begin(),
                                    group.triple_indices.end());
      target->docs.push_back(group.doc_id);
    }
    if (report != nullptr && groups.size() > 1) {
      BuildReport::Collision c;
      c.name = groups.front().surface;
      c.action = parts.size() > 1 ? "split" : "merged";
      for (const auto& group : groups) c.documents.push_back(group.doc_id);
      report->collisions.push_back(std::move(c));
    }
    for (auto& p : parts) {
      NodeId id = new_node(p.surface);
      head_partition_nodes[head_key].push_back(id);
      for (std::size_t ti : p.triple_indices) triple_node[ti] = id;
    }
  }

  // Emit edges and fold aliases, walking triples in input order so chunk
  // link order and tail-node creation order stay deterministic.
  auto add_chunk_link = [&](NodeId node, const std::string& chunk_id) {
    auto& list = g.nodes_[node].chunk_ids;
    if (std::find(list.begin(), list.end(), chunk_id) == list.end()) {
      list.push_back(chunk_id);
    }
  };
  auto add_alias = [&](NodeId node, const std::string& alias_surface) {
    EntityNode& n = g.nodes_[node];
    std::string alias = trim(alias_surface);
    if (alias.empty()) return;
    if (normalize_name(alias) == normalize_name(n.canonical_name)) return;
    auto pos = std::lower_bound(n.aliases.begin(), n.aliases.end(), alias);
    if (pos == n.aliases.end() || *pos != alias) n.aliases.insert(pos, alias);
  };

  std::map<std::string, NodeId> tail_nodes;  // normalized tail -> node
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& t = triples[i];
    NodeId head = triple_node[i];
    add_chunk_link(head, t.chunk_id);
    if (alias_relations.count(t.relation)) {
      add_alias(head, t.tail);
      g.edges_.push_back(GraphEdge{head, t.relation, head, t.chunk_id});
      continue;
    }
    std::string tail_key = normalize_name(t.tail);
    NodeId tail;
    auto reuse = tail_nodes.find(tail_key);
    if (reuse != tail_nodes.end()) {
      tail = reuse->second;
    } else if (auto hit = head_partition_nodes.find(tail_key);
               hit != head_partition_nodes.end()) {
      // The tail names a person node. Prefer the partition from the same
      // document; otherwise the first one.
      std::string doc = doc_of_chunk(t.chunk_id);
      tail = hit->second.front();
      for (NodeId cand : hit->second) {
        const auto& cand_chunks = g.nodes_[cand].chunk_ids;
        bool same_doc = std::any_of(cand_chunks.begin(), cand_chunks.end(),
                                    [&](const std::string& cid) {
                                      return doc_of_chunk(cid) == doc;
                                    });
        if (same_doc) {
          tail = cand;
          break;
        }
      }
      tail_nodes[tail_key] = tail;
    } else {
      tail = new_node(trim(t.tail));
      tail_nodes[tail_key] = tail;
    }
    add_chunk_link(tail, t.chunk_id);
    g.edges_.push_back(GraphEdge{head, t.relation, tail, t.chunk_id});
  }

  // Orphans: chunks that produced no triples.
  std::set<std::string> chunks_with_triples;
  for (const auto& t : triples) chunks_with_triples.insert(t.chunk_id);
  for (const auto& c : g.chunks_) {
    if (!chunks_with_triples.count(c.id)) g.orphans_.push_back(c.id);
  }

  g.reindex();
  if (report != nullptr) {
    report->node_count = g.nodes_.size();
    report->edge_count = g.edges_.size();
    report->chunk_count = g.chunks_.size();
    report->orphan_count = g.orphans_.size();
  }
  return g;
}

void KnowledgeGraph::reindex() {
  canonical_index_.clear();
  alias_index_.clear();
  adjacency_.assign(nodes_.size(), {});
  chunk_by_id_.clear();
  for (std::size_t i = 0; i < chunks_.size(); ++i) chunk_by_id_[chunks_[i].id] = i;
  for (const auto& n : nodes_) {
    canonical_index_[normalize_name(n.canonical_name)].push_back(n.id);
    for (const auto& a : n.aliases) {
      alias_index_[normalize_name(a)].push_back(n.id);
    }
  }
  for (const auto& e : edges_) {
    if (e.head >= nodes_.size() || e.tail >= nodes_.size()) {
      throw Error(Errc::InvalidData, "edge endpoint out of range");
    }
    if (e.head != e.tail) {
      adjacency_[e.head].push_back(e.tail);
      adjacency_[e.tail].push_back(e.head);
    }
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
}

std::optional<NodeId> KnowledgeGraph::lookup(std::string_view name) const {
  std::string key = normalize_name(name);
  auto report_ambiguous = [&](const std::vector<NodeId>& ids) -> Error {
    std::vector<std::string> cands;
    for (NodeId id : ids) {
      cands.push_back(nodes_[id].canonical_name + " (node " + std::to_string(id) + ")");
    }
    return Error(Errc::Ambiguous, "name '" + std::string(name) + "' is ambiguous")
        .with_candidates(std::move(cands));
  };
  if (auto it = canonical_index_.find(key); it != canonical_index_.end()) {
    if (it->second.size() > 1) throw report_ambiguous(it->second);
    return it->second.front();
  }
  if (auto it = alias_index_.find(key); it != alias_index_.end()) {
    std::vector<NodeId> uniq = it->second;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() > 1) throw report_ambiguous(uniq);
    return uniq.front();
  }
  return std::nullopt;
}

RetrievalResult KnowledgeGraph::retrieve(std::string_view name, int hops) const {
  if (hops < 0) throw Error(Errc::InvalidData, "hops must be >= 0");
  RetrievalResult result;
  result.query_name = std::string(name);
  std::string key = normalize_name(name);
  std::optional<NodeId> node = lookup(name);  // may throw Ambiguous
  if (!node) {
    result.match = MatchKind::None;
    return result;
  }
  result.matched_node = node;
  result.match = canonical_index_.count(key) ? MatchKind::Canonical : MatchKind::Alias;

  std::set<std::string> seen_chunks;
  auto push_chunks = [&](NodeId id) {
    for (const auto& cid : nodes_[id].chunk_ids) {
      if (seen_chunks.insert(cid).second) {
        auto it = chunk_by_id_.find(cid);
        if (it == chunk_by_id_.end()) {
          throw Error(Errc::InvalidData, "node links unknown chunk " + cid);
        }
        result.chunks.push_back(chunks_[it->second]);
      }
    }
  };

  push_chunks(*node);
  std::vector<bool> visited(nodes_.size(), false);
  visited[*node] = true;
  std::vector<NodeId> frontier = {*node};
  for (int depth = 0; depth < hops && !frontier.empty(); ++depth) {
    std::vector<NodeId> next;
    for (NodeId u : frontier) {
      for (NodeId v : adjacency_[u]) {
        if (!visited[v]) {
          visited[v] = true;
          next.push_back(v);
        }
      }
    }
    std::sort(next.begin(), next.end());
    for (NodeId v : next) {
      result.neighbor_nodes.push_back(v);
      push_chunks(v);
    }
    frontier = std::move(next);
  }
  return result;
}

const Chunk* KnowledgeGraph::find_chunk(const std::string& id) const {
  auto it = chunk_by_id_.find(id);
  return it == chunk_by_id_.end() ? nullptr : &chunks_[it->second];
}

std::vector<std::string> KnowledgeGraph::all_names() const {
  std::vector<std::string> names;
  for (const auto& n : nodes_) {
    names.push_back(n.canonical_name);
    for (const auto& a : n.aliases) names.push_back(a);
  }
  return names;
}

// --- persistence -----------------------------------------------------------
//
// Versioned line-delimited record file; field-by-field documentation lives
// in docs/formats.md. The trailing checksum line makes truncation and
// corruption detectable.

void KnowledgeGraph::save(std::ostream& out) const {
  std::string body;
  body += "chronicler-index\t" + std::to_string(kIndexFormatVersion) + "\n";
  std::size_t records = 0;
  for (const auto& c : chunks_) {
    body += "chunk\t" + tsv_escape(c.id) + "\t" + tsv_escape(c.doc_id) + "\t" +
            std::to_string(c.start) + "\t" + std::to_string(c.end) + "\t" +
            (c.preamble ? "preamble" : "entry") + "\t" + tsv_escape(c.text) + "\n";
    ++records;
  }
  for (const auto& n : nodes_) {
    body += "node\t" + std::to_string(n.id) + "\t" + tsv_escape(n.canonical_name) + "\n";
    ++records;
    for (const auto& a : n.aliases) {
      body += "alias\t" + std::to_string(n.id) + "\t" + tsv_escape(a) + "\n";
      ++records;
    }
    for (const auto& cid : n.chunk_ids) {
      body += "link\t" + std::to_string(n.id) + "\t" + tsv_escape(cid) + "\n";
      ++records;
    }
  }
  for (const auto& e : edges_) {
    body += "edge\t" + std::to_string(e.head) + "\t" + tsv_escape(e.relation) + "\t" +
            std::to_string(e.tail) + "\t" + tsv_escape(e.chunk_id) + "\n";
    ++records;
  }
  for (const auto& o : orphans_) {
    body += "orphan\t" + tsv_escape(o) + "\n";
    ++records;
  }
  out << body;
  out << "checksum\t" << fnv1a_hex(body) << "\t" << records << "\n";
}

void KnowledgeGraph::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  save(out);
  if (!out.good()) throw Error(Errc::IoError, "short write to " + path.string());
}

KnowledgeGraph KnowledgeGraph::load(std::istream& in) {
  KnowledgeGraph g;
  std::string line;
  std::string body;
  bool have_header = false;
  bool have_checksum = false;
  std::size_t records = 0;

  auto need = [&](const std::vector<std::string>& f, std::size_t n, const char* what) {
    if (f.size() != n) {
      throw Error(Errc::CorruptIndex, std::string("bad ") + what + " record");
    }
  };
  auto to_u32 = [&](const std::string& s, const char* what) -> std::uint32_t {
    try {
      std::size_t used = 0;
      unsigned long v = std::stoul(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
      throw Error(Errc::CorruptIndex, std::string("bad number in ") + what + " record");
    }
  };

  std::map<NodeId, EntityNode> nodes;
  while (std::getline(in, line)) {
    if (!have_header) {
      auto f = split_fields(line);
      if (f.size() != 2 || f[0] != "chronicler-index") {
        throw Error(Errc::CorruptIndex, "missing index header");
      }
      int version = static_cast<int>(to_u32(f[1], "header"));
      if (version > kIndexFormatVersion) {
        throw Error(Errc::UnsupportedVersion,
                    "index format version " + f[1] + " is newer than this build");
      }
      have_header = true;
      body += line + "\n";
      continue;
    }
    auto f = split_fields(line);
    if (f.empty()) throw Error(Errc::CorruptIndex, "empty record line");
    const std::string& kind = f[0];
    if (kind == "checksum") {
      need(f, 3, "checksum");
      if (f[1] != fnv1a_hex(body)) {
        throw Error(Errc::CorruptIndex, "checksum mismatch");
      }
      if (to_u32(f[2], "checksum") != records) {
        throw Error(Errc::CorruptIndex, "record count mismatch");
      }
      have_checksum = true;
      break;
    }
    body += line + "\n";
    ++records;
    if (kind == "chunk") {
      need(f, 7, "chunk");
      Chunk c;
      c.id = tsv_unescape(f[1]);
      c.doc_id = tsv_unescape(f[2]);
      c.start = to_u32(f[3], "chunk");
      c.end = to_u32(f[4], "chunk");
      if (f[5] != "entry" && f[5] != "preamble") {
        throw Error(Errc::CorruptIndex, "bad chunk kind " + f[5]);
      }
      c.preamble = f[5] == "preamble";
      c.text = tsv_unescape(f[6]);
      if (c.start >= c.end) throw Error(Errc::CorruptIndex, "chunk span inverted");
      g.chunks_.push_back(std::move(c));
    } else if (kind == "node") {
      need(f, 3, "node");
      EntityNode n;
      n.id = to_u32(f[1], "node");
      n.canonical_name = tsv_unescape(f[2]);
      if (n.canonical_name.empty()) throw Error(Errc::CorruptIndex, "empty canonical name");
      if (!nodes.emplace(n.id, std::move(n)).second) {
        throw Error(Errc::CorruptIndex, "duplicate node id " + f[1]);
      }
    } else if (kind == "alias") {
      need(f, 3, "alias");
      auto it = nodes.find(to_u32(f[1], "alias"));
      if (it == nodes.end()) throw Error(Errc::CorruptIndex, "alias before node " + f[1]);
      it->second.aliases.push_back(tsv_unescape(f[2]));
    } else if (kind == "link") {
      need(f, 3, "link");
      auto it = nodes.find(to_u32(f[1], "link"));
      if (it == nodes.end()) throw Error(Errc::CorruptIndex, "link before node " + f[1]);
      it->second.chunk_ids.push_back(tsv_unescape(f[2]));
    } else if (kind == "edge") {
      need(f, 5, "edge");
      GraphEdge e;
      e.head = to_u32(f[1], "edge");
      e.relation = tsv_unescape(f[2]);
      e.tail = to_u32(f[3], "edge");
      e.chunk_id = tsv_unescape(f[4]);
      g.edges_.push_back(std::move(e));
    } else if (kind == "orphan") {
      need(f, 2, "orphan");
      g.orphans_.push_back(tsv_unescape(f[1]));
    } else {
      throw Error(Errc::CorruptIndex, "unknown record kind " + kind);
    }
  }
  if (!have_header) throw Error(Errc::CorruptIndex, "empty index file");
  if (!have_checksum) throw Error(Errc::CorruptIndex, "truncated index file (no checksum)");

  g.nodes_.resize(nodes.size());
  for (auto& [id, n] : nodes) {
    if (id >= g.nodes_.size()) {
      throw Error(Errc::CorruptIndex, "node ids are not dense");
    }
    g.nodes_[id] = std::move(n);
  }
  for (const auto& e : g.edges_) {
    if (e.head >= g.nodes_.size() || e.tail >= g.nodes_.size()) {
      throw Error(Errc::CorruptIndex, "edge references unknown node");
    }
  }
  std::set<std::string> chunk_ids;
  for (const auto& c : g.chunks_) chunk_ids.insert(c.id);
  for (const auto& n : g.nodes_) {
    for (const auto& cid : n.chunk_ids) {
      if (!chunk_ids.count(cid)) {
        throw Error(Errc::CorruptIndex, "link references unknown chunk " + cid);
      }
    }
  }
  for (const auto& o : g.orphans_) {
    if (!chunk_ids.count(o)) {
      throw Error(Errc::CorruptIndex, "orphan references unknown chunk " + o);
    }
  }
  g.reindex();
  return g;
}

KnowledgeGraph KnowledgeGraph::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open index " + path.string());
  return load(in);
}

bool KnowledgeGraph::structurally_equal(const KnowledgeGraph& other) const {
  return nodes_ == other.nodes_ && edges_ == other.edges_ && chunks_ == other.chunks_ &&
         orphans_ == other.orphans_ && canonical_index_ == other.canonical_index_ &&
         alias_index_ == other.alias_index_;
}

}  // namespace chronicler
