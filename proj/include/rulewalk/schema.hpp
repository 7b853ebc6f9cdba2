#pragma once
// Graph schema: node types and relation signatures.
//
// Schema file format (line oriented, '#' comments):
//   node_type Drug
//   relation interacts Protein Protein [self_loops]
// Relation and node-type ids follow first appearance in the file and stay
// frozen afterwards; everything downstream relies on that for tie-breaks.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rulewalk/core.hpp"

namespace rulewalk {

struct RelationDecl {
  std::string label;
  TypeId src_type = -1;
  TypeId dst_type = -1;
  bool is_inverse = false;
  RelId inverse_of = -1;  // involutive when set
  bool allow_self_loops = false;
};

class Schema {
 public:
  TypeId add_node_type(const std::string& label) {
    auto it = type_ids_.find(label);
    if (it != type_ids_.end()) return it->second;
    TypeId id = static_cast<TypeId>(node_types_.size());
    node_types_.push_back(label);
    type_ids_.emplace(label, id);
    return id;
  }

  RelId add_relation(RelationDecl decl) {
    if (rel_ids_.count(decl.label))
      throw ConfigError("schema: duplicate relation label '" + decl.label + "'");
    RelId id = static_cast<RelId>(relations_.size());
    rel_ids_.emplace(decl.label, id);
    relations_.push_back(std::move(decl));
    return id;
  }

  std::optional<TypeId> find_node_type(const std::string& label) const {
    auto it = type_ids_.find(label);
    if (it == type_ids_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<RelId> find_relation(const std::string& label) const {
    auto it = rel_ids_.find(label);
    if (it == rel_ids_.end()) return std::nullopt;
    return it->second;
  }

  TypeId node_type_or_throw(const std::string& label) const {
    auto t = find_node_type(label);
    if (!t) throw ConfigError("schema: unknown node type '" + label + "'");
    return *t;
  }

  RelId relation_or_throw(const std::string& label) const {
    auto r = find_relation(label);
    if (!r) throw ConfigError("schema: unknown relation '" + label + "'");
    return *r;
  }

  const RelationDecl& relation(RelId id) const { return relations_.at(id); }
  const std::string& node_type_label(TypeId id) const { return node_types_.at(id); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_node_types() const { return node_types_.size(); }
  const std::vector<RelationDecl>& relations() const { return relations_; }
  const std::vector<std::string>& node_types() const { return node_types_; }

  bool has_inverse_declarations() const {
    for (const auto& r : relations_)
      if (r.is_inverse) return true;
    return false;
  }

  // Extends the schema with an inverse declaration for `rel` (underscore
  // prefix). Reuses an existing inverse declaration when present.
  RelId ensure_inverse(RelId rel) {
    RelationDecl& fwd = relations_.at(rel);
    if (fwd.is_inverse)
      throw ConfigError("schema: cannot invert inverse relation '" + fwd.label + "'");
    if (fwd.inverse_of >= 0) return fwd.inverse_of;
    RelationDecl inv;
    inv.label = "_" + fwd.label;
    if (rel_ids_.count(inv.label))
      throw ConfigError("schema: inverse label '" + inv.label + "' already taken");
    inv.src_type = fwd.dst_type;
    inv.dst_type = fwd.src_type;
    inv.is_inverse = true;
    inv.inverse_of = rel;
    inv.allow_self_loops = fwd.allow_self_loops;
    RelId inv_id = add_relation(std::move(inv));
    relations_[rel].inverse_of = inv_id;
    return inv_id;
  }

 private:
  std::vector<std::string> node_types_;
  std::vector<RelationDecl> relations_;
  std::unordered_map<std::string, TypeId> type_ids_;
  std::unordered_map<std::string, RelId> rel_ids_;
};

inline Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("schema file not found: " + path);
  Schema schema;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string kind;
    if (!(ss >> kind) || kind[0] == '#') continue;
    if (kind == "node_type") {
      std::string label;
      if (!(ss >> label))
        throw ConfigError(path + ":" + std::to_string(line_no) + ": node_type needs a label");
      schema.add_node_type(label);
    } else if (kind == "relation") {
      std::string label, src, dst, flag;
      if (!(ss >> label >> src >> dst))
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": relation needs label, src type, dst type");
      RelationDecl decl;
      decl.label = label;
      decl.src_type = schema.node_type_or_throw(src);
      decl.dst_type = schema.node_type_or_throw(dst);
      while (ss >> flag) {
        if (flag == "self_loops") decl.allow_self_loops = true;
        else if (flag[0] == '#') break;
        else throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown flag '" + flag + "'");
      }
      schema.add_relation(std::move(decl));
    } else {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown directive '" + kind + "'");
    }
  }
  return schema;
}

inline void save_schema(const Schema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write schema file: " + path);
  for (const auto& t : schema.node_types()) out << "node_type " << t << "\n";
  for (const auto& r : schema.relations()) {
    if (r.is_inverse) continue;  // regenerated by add_inverse_edges
    out << "relation " << r.label << " " << schema.node_type_label(r.src_type)
        << " " << schema.node_type_label(r.dst_type);
    if (r.allow_self_loops) out << " self_loops";
    out << "\n";
  }
}

}  // namespace rulewalk
