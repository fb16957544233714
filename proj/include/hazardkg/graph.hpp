#ifndef HAZARDKG_GRAPH_HPP
#define HAZARDKG_GRAPH_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hazardkg/hmm.hpp"
#include "hazardkg/record.hpp"
#include "hazardkg/unicode.hpp"

namespace hazardkg {

enum class EntityCategory {
  Equipment,
  HazardPhenomenon,
  HazardCategory,
  Location,
  Measure,
  Violation,
  Time,
  VoltageClass,
};

inline std::string category_name(EntityCategory c) {
  switch (c) {
    case EntityCategory::Equipment: return "equipment";
    case EntityCategory::HazardPhenomenon: return "hazard_phenomenon";
    case EntityCategory::HazardCategory: return "hazard_category";
    case EntityCategory::Location: return "location";
    case EntityCategory::Measure: return "measure";
    case EntityCategory::Violation: return "violation";
    case EntityCategory::Time: return "time";
    case EntityCategory::VoltageClass: return "voltage_class";
  }
  return "unknown";
}

inline EntityCategory category_from_name(const std::string& s) {
  if (s == "equipment") return EntityCategory::Equipment;
  if (s == "hazard_phenomenon") return EntityCategory::HazardPhenomenon;
  if (s == "hazard_category") return EntityCategory::HazardCategory;
  if (s == "location") return EntityCategory::Location;
  if (s == "measure") return EntityCategory::Measure;
  if (s == "violation") return EntityCategory::Violation;
  if (s == "time") return EntityCategory::Time;
  if (s == "voltage_class") return EntityCategory::VoltageClass;
  throw std::invalid_argument("unknown entity category: " + s);
}

enum class Relation {
  HasHazard,
  LocatedAt,
  BelongsToCategory,
  MitigatedBy,
  Violates,
  OccurredOn,
  HasAttribute,
};

inline std::string relation_name(Relation r) {
  switch (r) {
    case Relation::HasHazard: return "has_hazard";
    case Relation::LocatedAt: return "located_at";
    case Relation::BelongsToCategory: return "belongs_to_category";
    case Relation::MitigatedBy: return "mitigated_by";
    case Relation::Violates: return "violates";
    case Relation::OccurredOn: return "occurred_on";
    case Relation::HasAttribute: return "has_attribute";
  }
  return "unknown";
}

inline Relation relation_from_name(const std::string& s) {
  if (s == "has_hazard") return Relation::HasHazard;
  if (s == "located_at") return Relation::LocatedAt;
  if (s == "belongs_to_category") return Relation::BelongsToCategory;
  if (s == "mitigated_by") return Relation::MitigatedBy;
  if (s == "violates") return Relation::Violates;
  if (s == "occurred_on") return Relation::OccurredOn;
  if (s == "has_attribute") return Relation::HasAttribute;
  throw std::invalid_argument("unknown relation: " + s);
}

struct EntityNode {
  std::string node_id;  // "<category>:<normalized label>"
  std::string label;
  EntityCategory category = EntityCategory::Equipment;
  std::map<std::string, std::string> attributes;
  std::set<std::string> source_record_ids;

  bool operator==(const EntityNode& o) const {
    return node_id == o.node_id && label == o.label && category == o.category &&
           attributes == o.attributes && source_record_ids == o.source_record_ids;
  }
};

struct RelationEdge {
  std::string src;
  std::string dst;
  Relation relation = Relation::HasHazard;
  std::set<std::string> source_record_ids;

  bool operator==(const RelationEdge& o) const {
    return src == o.src && dst == o.dst && relation == o.relation &&
           source_record_ids == o.source_record_ids;
  }
};

// Node identity: (normalized label, category). Normalization trims and
// lowercases Latin so the same equipment merges across records.
inline std::string normalize_label(const std::string& label) {
  std::string s = ascii_lower(label);
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::string make_node_id(EntityCategory cat, const std::string& label) {
  return category_name(cat) + ":" + normalize_label(label);
}

class KnowledgeGraph {
 public:
  EntityNode& upsert_node(EntityCategory cat, const std::string& label,
                          const std::string& record_id) {
    std::string id = make_node_id(cat, label);
    auto [it, inserted] = nodes_.try_emplace(id);
    EntityNode& n = it->second;
    if (inserted) {
      n.node_id = id;
      n.label = label;
      n.category = cat;
    }
    if (!record_id.empty()) n.source_record_ids.insert(record_id);
    return n;
  }

  void insert_node(EntityNode node) {
    if (node.label.empty()) throw std::invalid_argument("node label must be non-empty");
    auto it = nodes_.find(node.node_id);
    if (it == nodes_.end()) {
      nodes_.emplace(node.node_id, std::move(node));
    } else {
      EntityNode& n = it->second;
      n.source_record_ids.insert(node.source_record_ids.begin(), node.source_record_ids.end());
      for (const auto& [k, v] : node.attributes) n.attributes[k] = v;
    }
  }

  // Referential integrity: both endpoints must exist; self-loops rejected.
  void add_edge(const std::string& src, const std::string& dst, Relation rel,
                const std::string& record_id) {
    if (src == dst) return;
    if (!nodes_.count(src) || !nodes_.count(dst))
      throw std::invalid_argument("edge endpoint missing: " + src + " -> " + dst);
    auto key = std::make_tuple(src, dst, rel);
    auto [it, inserted] = edges_.try_emplace(key);
    RelationEdge& e = it->second;
    if (inserted) {
      e.src = src;
      e.dst = dst;
      e.relation = rel;
    }
    if (!record_id.empty()) e.source_record_ids.insert(record_id);
  }

  void insert_edge(const RelationEdge& edge) {
    if (!nodes_.count(edge.src) || !nodes_.count(edge.dst))
      throw std::invalid_argument("edge endpoint missing: " + edge.src + " -> " + edge.dst);
    auto key = std::make_tuple(edge.src, edge.dst, edge.relation);
    auto [it, inserted] = edges_.try_emplace(key, edge);
    if (!inserted)
      it->second.source_record_ids.insert(edge.source_record_ids.begin(),
                                          edge.source_record_ids.end());
  }

  const std::map<std::string, EntityNode>& nodes() const { return nodes_; }

  std::vector<const RelationEdge*> edges() const {
    std::vector<const RelationEdge*> out;
    out.reserve(edges_.size());
    for (const auto& [k, e] : edges_) out.push_back(&e);
    return out;
  }

  size_t node_count() const { return nodes_.size(); }
  size_t edge_count() const { return edges_.size(); }

  bool has_node(const std::string& id) const { return nodes_.count(id) > 0; }

  std::vector<const RelationEdge*> edges_touching(const std::string& id) const {
    std::vector<const RelationEdge*> out;
    for (const auto& [k, e] : edges_)
      if (e.src == id || e.dst == id) out.push_back(&e);
    return out;
  }

  bool operator==(const KnowledgeGraph& o) const {
    return nodes_ == o.nodes_ && edges_ == o.edges_;
  }

 private:
  std::map<std::string, EntityNode> nodes_;
  std::map<std::tuple<std::string, std::string, Relation>, RelationEdge> edges_;
};

// Per-category term lists used to lift free-text tokens into entities.
struct EntityLexicons {
  std::set<std::string> phenomenon;
  std::set<std::string> measure;
  std::set<std::string> violation;
};

inline EntityLexicons default_lexicons() {
  EntityLexicons lex;
  lex.phenomenon = {"leakage",  "abnormal", "crack",  "shutdown", "deformation",
                    "flashover", "loose",    "missing", "worn",     "trip",
                    "渗漏",     "泄漏",     "异常",   "裂纹",     "停运",
                    "变形",     "闪络",     "松动",   "缺失",     "跳闸"};
  lex.measure = {"replace", "repair", "inspect", "recheck", "overhaul", "clean",
                 "更换",    "修理",   "检查",    "复查",    "检修",     "清扫"};
  lex.violation = {"violates", "violation", "违反", "违章"};
  return lex;
}

// Step 1: structured fields become typed entities directly; free-text
// fields are segmented and lexicon-matching tokens become entities,
// deduplicated by (label, category).
inline std::vector<EntityNode> extract_entities(const HazardRecord& record, const HmmModel& model,
                                                const EntityLexicons& lexicons) {
  std::map<std::string, EntityNode> out;  // keyed by node_id
  auto add = [&](EntityCategory cat, const std::string& label) -> EntityNode& {
    std::string id = make_node_id(cat, label);
    auto [it, inserted] = out.try_emplace(id);
    EntityNode& n = it->second;
    if (inserted) {
      n.node_id = id;
      n.label = label;
      n.category = cat;
    }
    n.source_record_ids.insert(record.id);
    return n;
  };

  if (!record.equipment_name.empty()) {
    EntityNode& eq = add(EntityCategory::Equipment, record.equipment_name);
    if (record.severity_level != Severity::Unrated)
      eq.attributes["severity_level"] = severity_to_string(record.severity_level);
  }
  if (!record.location.empty()) add(EntityCategory::Location, record.location);
  if (!record.detail_category.empty())
    add(EntityCategory::HazardCategory, record.detail_category);
  if (!record.voltage_class.empty()) add(EntityCategory::VoltageClass, record.voltage_class);
  if (record.inspect_time) add(EntityCategory::Time, record.inspect_time->to_string());
  if (!record.violation_info.empty() && normalize_label(record.violation_info) != "none")
    add(EntityCategory::Violation, record.violation_info);

  auto scan = [&](const std::string& text, const std::set<std::string>& lexicon,
                  EntityCategory cat) {
    if (text.empty()) return;
    for (const auto& tok : segment(model, text)) {
      std::string t = normalize_label(tok);
      if (t.empty() || !lexicon.count(t)) continue;
      EntityNode& n = add(cat, tok);
      // repeats of the same term within one record are recorded, not duplicated
      auto& cnt = n.attributes["occurrences"];
      cnt = std::to_string(cnt.empty() ? 1 : std::stoi(cnt) + 1);
    }
  };
  scan(record.hazard_content, lexicons.phenomenon, EntityCategory::HazardPhenomenon);
  scan(record.control_measures, lexicons.measure, EntityCategory::Measure);

  std::vector<EntityNode> result;
  result.reserve(out.size());
  for (auto& [id, n] : out) result.push_back(std::move(n));
  return result;
}

// Step 2: fixed rule templates over co-occurring entities of one record.
inline std::vector<RelationEdge> extract_relations(const HazardRecord& record,
                                                   const std::vector<EntityNode>& entities) {
  std::vector<const EntityNode*> by_cat[8];
  for (const auto& e : entities)
    by_cat[static_cast<int>(e.category)].push_back(&e);
  auto of = [&](EntityCategory c) -> const std::vector<const EntityNode*>& {
    return by_cat[static_cast<int>(c)];
  };

  std::vector<RelationEdge> edges;
  auto emit = [&](const EntityNode* a, const EntityNode* b, Relation rel) {
    RelationEdge e;
    e.src = a->node_id;
    e.dst = b->node_id;
    e.relation = rel;
    e.source_record_ids.insert(record.id);
    edges.push_back(std::move(e));
  };

  const auto& equipment = of(EntityCategory::Equipment);
  const auto& phenomena = of(EntityCategory::HazardPhenomenon);
  const auto& categories = of(EntityCategory::HazardCategory);
  const auto& locations = of(EntityCategory::Location);
  const auto& measures = of(EntityCategory::Measure);
  const auto& violations = of(EntityCategory::Violation);
  const auto& times = of(EntityCategory::Time);
  const auto& voltages = of(EntityCategory::VoltageClass);

  for (auto* e : equipment)
    for (auto* p : phenomena) emit(e, p, Relation::HasHazard);
  for (auto* p : phenomena)
    for (auto* c : categories) emit(p, c, Relation::BelongsToCategory);
  if (phenomena.empty())  // no phenomenon token matched: tie the equipment itself
    for (auto* e : equipment)
      for (auto* c : categories) emit(e, c, Relation::BelongsToCategory);
  for (auto* e : equipment)
    for (auto* l : locations) emit(e, l, Relation::LocatedAt);
  for (auto* p : phenomena)
    for (auto* m : measures) emit(p, m, Relation::MitigatedBy);
  for (auto* p : phenomena)
    for (auto* v : violations) emit(p, v, Relation::Violates);
  for (auto* p : phenomena)
    for (auto* t : times) emit(p, t, Relation::OccurredOn);
  for (auto* e : equipment)
    for (auto* v : voltages) emit(e, v, Relation::HasAttribute);
  return edges;
}

// Step 3: union of per-record extraction with global dedup; incremental.
inline void extend_graph(KnowledgeGraph& graph, const std::vector<HazardRecord>& records,
                         const HmmModel& model, const EntityLexicons& lexicons) {
  for (const auto& rec : records) {
    auto entities = extract_entities(rec, model, lexicons);
    for (auto& e : entities) graph.insert_node(e);
    for (const auto& edge : extract_relations(rec, entities)) graph.insert_edge(edge);
  }
}

inline KnowledgeGraph build_graph(const std::vector<HazardRecord>& records, const HmmModel& model,
                                  const EntityLexicons& lexicons) {
  KnowledgeGraph g;
  extend_graph(g, records, model, lexicons);
  return g;
}

// Keyword-driven dynamic subgraph: seeds are nodes whose label or attribute
// values contain any keyword (substring, Latin case-insensitive); the result
// is the induced subgraph within `hops` undirected hops of a seed.
inline KnowledgeGraph query_subgraph(const KnowledgeGraph& graph,
                                     const std::vector<std::string>& keywords, int hops) {
  if (hops < 0) throw std::invalid_argument("hops must be >= 0");
  std::vector<std::string> kws;
  for (const auto& k : keywords)
    if (!k.empty()) kws.push_back(ascii_lower(k));

  auto matches = [&](const EntityNode& n) {
    std::string label = ascii_lower(n.label);
    for (const auto& kw : kws) {
      if (label.find(kw) != std::string::npos) return true;
      for (const auto& [ak, av] : n.attributes)
        if (ascii_lower(av).find(kw) != std::string::npos) return true;
    }
    return false;
  };

  // undirected adjacency
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto* e : graph.edges()) {
    adj[e->src].push_back(e->dst);
    adj[e->dst].push_back(e->src);
  }

  std::map<std::string, int> dist;
  std::deque<std::string> frontier;
  for (const auto& [id, n] : graph.nodes()) {
    if (matches(n)) {
      dist[id] = 0;
      frontier.push_back(id);
    }
  }
  while (!frontier.empty()) {
    std::string id = frontier.front();
    frontier.pop_front();
    int d = dist[id];
    if (d >= hops) continue;
    for (const auto& next : adj[id]) {
      if (!dist.count(next)) {
        dist[next] = d + 1;
        frontier.push_back(next);
      }
    }
  }

  KnowledgeGraph sub;
  for (const auto& [id, d] : dist) sub.insert_node(graph.nodes().at(id));
  for (const auto* e : graph.edges())
    if (dist.count(e->src) && dist.count(e->dst)) sub.insert_edge(*e);
  return sub;
}

// ---- graph-document format ---------------------------------------------

inline nlohmann::ordered_json graph_to_json(const KnowledgeGraph& g) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& [id, n] : g.nodes()) {
    nlohmann::ordered_json jn;
    jn["id"] = n.node_id;
    jn["label"] = n.label;
    jn["category"] = category_name(n.category);
    nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
    for (const auto& [k, v] : n.attributes) attrs[k] = v;
    jn["attributes"] = attrs;
    jn["records"] = nlohmann::ordered_json::array();
    for (const auto& r : n.source_record_ids) jn["records"].push_back(r);
    nodes.push_back(jn);
  }
  j["nodes"] = nodes;
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto* e : g.edges()) {
    nlohmann::ordered_json je;
    je["src"] = e->src;
    je["dst"] = e->dst;
    je["relation"] = relation_name(e->relation);
    je["records"] = nlohmann::ordered_json::array();
    for (const auto& r : e->source_record_ids) je["records"].push_back(r);
    edges.push_back(je);
  }
  j["edges"] = edges;
  return j;
}

inline KnowledgeGraph graph_from_json(const nlohmann::ordered_json& j) {
  if (j.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported graph format_version");
  KnowledgeGraph g;
  for (const auto& jn : j.at("nodes")) {
    EntityNode n;
    n.node_id = jn.at("id").get<std::string>();
    n.label = jn.at("label").get<std::string>();
    n.category = category_from_name(jn.at("category").get<std::string>());
    for (const auto& [k, v] : jn.at("attributes").items()) n.attributes[k] = v.get<std::string>();
    for (const auto& r : jn.at("records")) n.source_record_ids.insert(r.get<std::string>());
    g.insert_node(std::move(n));
  }
  for (const auto& je : j.at("edges")) {
    RelationEdge e;
    e.src = je.at("src").get<std::string>();
    e.dst = je.at("dst").get<std::string>();
    e.relation = relation_from_name(je.at("relation").get<std::string>());
    for (const auto& r : je.at("records")) e.source_record_ids.insert(r.get<std::string>());
    g.insert_edge(e);
  }
  return g;
}

inline std::string export_graph_json(const KnowledgeGraph& g) {
  return graph_to_json(g).dump(2) + "\n";
}

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

inline std::string export_graph_dot(const KnowledgeGraph& g) {
  std::string out = "digraph hazards {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n";
  static const std::map<EntityCategory, std::string> kColors = {
      {EntityCategory::Equipment, "lightblue"},
      {EntityCategory::HazardPhenomenon, "salmon"},
      {EntityCategory::HazardCategory, "gold"},
      {EntityCategory::Location, "palegreen"},
      {EntityCategory::Measure, "plum"},
      {EntityCategory::Violation, "orange"},
      {EntityCategory::Time, "lightgray"},
      {EntityCategory::VoltageClass, "khaki"},
  };
  for (const auto& [id, n] : g.nodes()) {
    out += "  \"" + dot_escape(id) + "\" [label=\"" + dot_escape(n.label) + "\\n(" +
           category_name(n.category) + ")\", fillcolor=" + kColors.at(n.category) +
           ", style=\"rounded,filled\"];\n";
  }
  for (const auto* e : g.edges()) {
    out += "  \"" + dot_escape(e->src) + "\" -> \"" + dot_escape(e->dst) + "\" [label=\"" +
           relation_name(e->relation) + "\"];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace hazardkg

#endif  // HAZARDKG_GRAPH_HPP
