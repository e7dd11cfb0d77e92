#pragma once

// Congenital knowledge base: objects arranged in a recognition tree,
// operations on them, the tasks those operations serve, and behavior
// programs. A KnowledgeBase can only be obtained from build_kb() and exposes
// no mutating member, so it is sealed from the moment it exists.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aprior/error.hpp"
#include "aprior/fnv1a.hpp"

namespace aprior {

template <class Tag>
struct StrongId {
  std::int64_t value{};

  constexpr auto operator<=>(const StrongId&) const = default;
};

using ObjectId = StrongId<struct ObjectIdTag>;
using OperationId = StrongId<struct OperationIdTag>;
using TaskId = StrongId<struct TaskIdTag>;
using ProgramId = StrongId<struct ProgramIdTag>;

/// The virtual root of the recognition tree. Its predicate is empty, so it
/// matches every vector; descent that cannot leave it means "unrecognized".
inline constexpr ObjectId kRootId{0};

using Symbol = std::uint32_t;

struct FeatureVector {
  std::vector<Symbol> symbols;

  std::size_t size() const noexcept { return symbols.size(); }
  Symbol operator[](std::size_t i) const { return symbols[i]; }
  bool operator==(const FeatureVector&) const = default;
};

inline bool well_formed(const FeatureVector& v, std::size_t dimension, Symbol alphabet) noexcept {
  return v.size() == dimension &&
         std::all_of(v.symbols.begin(), v.symbols.end(), [&](Symbol s) { return s < alphabet; });
}

struct Constraint {
  std::size_t feature{};
  Symbol symbol{};

  auto operator<=>(const Constraint&) const = default;
};

/// Conjunction of (feature, symbol) constraints, kept sorted by feature.
struct Predicate {
  std::vector<Constraint> constraints;

  bool empty() const noexcept { return constraints.empty(); }
  std::size_t size() const noexcept { return constraints.size(); }
  bool operator==(const Predicate&) const = default;
};

struct InternalObject {
  ObjectId id;
  ObjectId parent = kRootId;
  std::string name;
  Predicate predicate;
};

struct OperationDef {
  OperationId id;
  std::string action_tag;
  TaskId task;
  std::vector<ObjectId> applicable_objects;  // sorted, distinct
};

struct TaskPair {
  ObjectId object;
  OperationId operation;

  auto operator<=>(const TaskPair&) const = default;
};

struct Task {
  TaskId id;
  std::vector<TaskPair> pairs;  // sorted, distinct

  bool operator==(const Task&) const = default;
};

struct Program {
  ProgramId id;
  ObjectId trigger;
  std::vector<OperationId> operations;  // execution order
  std::uint32_t reflex_threshold = 1;
  double base_utility = 0.0;
};

class KnowledgeBase;
KnowledgeBase build_kb(const nlohmann::json& document);

class KnowledgeBase {
 public:
  std::size_t dimension() const noexcept { return dimension_; }
  Symbol alphabet() const noexcept { return alphabet_; }

  /// Declared objects sorted by id; the virtual root is not listed.
  std::span<const InternalObject> objects() const noexcept { return objects_; }
  std::span<const OperationDef> operations() const noexcept { return operations_; }
  std::span<const Task> tasks() const noexcept { return tasks_; }
  std::span<const Program> programs() const noexcept { return programs_; }

  /// nullptr for unknown ids and for the virtual root.
  const InternalObject* find_object(ObjectId id) const { return find_by_id(objects_, id); }
  const OperationDef* find_operation(OperationId id) const { return find_by_id(operations_, id); }
  const Task* find_task(TaskId id) const { return find_by_id(tasks_, id); }
  const Program* find_program(ProgramId id) const { return find_by_id(programs_, id); }

  /// True for the virtual root and every declared object.
  bool contains(ObjectId id) const { return id == kRootId || find_object(id) != nullptr; }

  /// Children of a node (kRootId for top-level objects), ascending by id.
  std::span<const ObjectId> children(ObjectId id) const {
    const auto it = std::lower_bound(children_.begin(), children_.end(), id,
                                     [](const auto& entry, ObjectId key) { return entry.first < key; });
    if (it == children_.end() || it->first != id) return {};
    return it->second;
  }

  bool is_leaf(ObjectId id) const { return id != kRootId && contains(id) && children(id).empty(); }

  const Predicate& predicate(ObjectId id) const {
    static const Predicate kEmpty{};
    const InternalObject* object = find_object(id);
    return object ? object->predicate : kEmpty;
  }

  /// Edges from the virtual root; 0 for the root itself.
  std::size_t depth(ObjectId id) const {
    std::size_t d = 0;
    for (const InternalObject* o = find_object(id); o != nullptr; o = find_object(o->parent)) ++d;
    return d;
  }

  /// Object id lookup by display name.
  std::optional<ObjectId> object_by_name(std::string_view name) const {
    for (const auto& o : objects_)
      if (o.name == name) return o.id;
    return std::nullopt;
  }

 private:
  KnowledgeBase() = default;
  friend KnowledgeBase build_kb(const nlohmann::json& document);

  template <class T, class Id>
  static const T* find_by_id(const std::vector<T>& items, Id id) {
    const auto it = std::lower_bound(items.begin(), items.end(), id,
                                     [](const T& item, Id key) { return item.id < key; });
    return (it != items.end() && it->id == id) ? &*it : nullptr;
  }

  std::size_t dimension_ = 0;
  Symbol alphabet_ = 0;
  std::vector<InternalObject> objects_;
  std::vector<OperationDef> operations_;
  std::vector<Task> tasks_;
  std::vector<Program> programs_;
  std::vector<std::pair<ObjectId, std::vector<ObjectId>>> children_;
};

// ---------------------------------------------------------------------------
// Document parsing

namespace detail {

using nlohmann::json;

[[noreturn]] inline void fail(Errc code, const std::string& where, const std::string& what) {
  throw Error(code, where.empty() ? what : where + ": " + what);
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(Errc::SchemaError, where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::SchemaError, where, std::string("missing key \"") + key + "\"");
  return *it;
}

inline std::int64_t as_int(const json& value, const std::string& where) {
  if (!value.is_number_integer()) fail(Errc::SchemaError, where, "expected an integer");
  return value.get<std::int64_t>();
}

inline double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) fail(Errc::SchemaError, where, "expected a number");
  return value.get<double>();
}

inline const json& as_array(const json& value, const std::string& where) {
  if (!value.is_array()) fail(Errc::SchemaError, where, "expected an array");
  return value;
}

inline std::string at(const std::string& base, std::size_t index) {
  return base + "[" + std::to_string(index) + "]";
}

template <class T, class Id>
void require_unique_ids(std::vector<T>& items, const char* section) {
  std::sort(items.begin(), items.end(), [](const T& a, const T& b) { return a.id < b.id; });
  const auto dup = std::adjacent_find(items.begin(), items.end(),
                                      [](const T& a, const T& b) { return a.id == b.id; });
  if (dup != items.end())
    fail(Errc::DuplicateId, section, "id " + std::to_string(dup->id.value) + " declared twice");
}

template <class Id>
std::vector<Id> parse_id_set(const json& value, const std::string& where) {
  std::vector<Id> ids;
  const json& arr = as_array(value, where);
  for (std::size_t i = 0; i < arr.size(); ++i) ids.push_back(Id{as_int(arr[i], at(where, i))});
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    fail(Errc::DuplicateId, where, "id listed twice");
  return ids;
}

// Two predicates can both match some vector iff they never require different
// symbols for the same feature.
inline bool compatible(const Predicate& a, const Predicate& b) {
  for (const auto& ca : a.constraints)
    for (const auto& cb : b.constraints)
      if (ca.feature == cb.feature && ca.symbol != cb.symbol) return false;
  return true;
}

inline bool strict_refinement(const Predicate& child, const Predicate& parent) {
  return child.size() > parent.size() &&
         std::includes(child.constraints.begin(), child.constraints.end(),
                       parent.constraints.begin(), parent.constraints.end());
}

}  // namespace detail

/// Validates a parsed KB document and returns the sealed knowledge base.
/// Throws Error with the first violated rule.
inline KnowledgeBase build_kb(const nlohmann::json& doc) {
  using namespace detail;
  KnowledgeBase kb;

  if (!doc.is_object()) fail(Errc::SchemaError, "", "KB document must be a JSON object");
  const std::int64_t d = as_int(require(doc, "d", ""), "d");
  const std::int64_t a = as_int(require(doc, "alphabet", ""), "alphabet");
  if (d < 1) fail(Errc::SchemaError, "d", "dimension must be >= 1");
  if (a < 2) fail(Errc::SchemaError, "alphabet", "alphabet size must be >= 2");
  kb.dimension_ = static_cast<std::size_t>(d);
  kb.alphabet_ = static_cast<Symbol>(a);

  // objects
  const json& objects = as_array(require(doc, "objects", ""), "objects");
  if (objects.empty()) fail(Errc::SchemaError, "objects", "at least one object is required");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string where = at("objects", i);
    const json& o = objects[i];
    InternalObject object;
    object.id = ObjectId{as_int(require(o, "id", where), where + ".id")};
    if (object.id == kRootId) fail(Errc::DuplicateId, where, "id 0 is reserved for the virtual root");
    if (const auto p = o.find("parent"); p != o.end() && !p->is_null())
      object.parent = ObjectId{as_int(*p, where + ".parent")};
    if (const auto n = o.find("name"); n != o.end()) {
      if (!n->is_string()) fail(Errc::SchemaError, where + ".name", "expected a string");
      object.name = n->get<std::string>();
    }
    const json& pred = as_array(require(o, "predicate", where), where + ".predicate");
    for (std::size_t j = 0; j < pred.size(); ++j) {
      const std::string cw = at(where + ".predicate", j);
      const json& pair = as_array(pred[j], cw);
      if (pair.size() != 2) fail(Errc::SchemaError, cw, "constraint must be [feature, symbol]");
      const std::int64_t feature = as_int(pair[0], cw);
      const std::int64_t symbol = as_int(pair[1], cw);
      if (feature < 0 || feature >= d) fail(Errc::InvalidPredicate, cw, "feature index out of range");
      if (symbol < 0 || symbol >= a) fail(Errc::InvalidPredicate, cw, "symbol out of range");
      object.predicate.constraints.push_back(
          {static_cast<std::size_t>(feature), static_cast<Symbol>(symbol)});
    }
    auto& cs = object.predicate.constraints;
    std::sort(cs.begin(), cs.end());
    if (std::adjacent_find(cs.begin(), cs.end(), [](const Constraint& x, const Constraint& y) {
          return x.feature == y.feature;
        }) != cs.end())
      fail(Errc::InvalidPredicate, where, "feature constrained twice");
    kb.objects_.push_back(std::move(object));
  }

  // operations
  const json& ops = as_array(require(doc, "operations", ""), "operations");
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const std::string where = at("operations", i);
    const json& o = ops[i];
    OperationDef op;
    op.id = OperationId{as_int(require(o, "id", where), where + ".id")};
    const json& tag = require(o, "action_tag", where);
    if (!tag.is_string() || tag.get<std::string>().empty())
      fail(Errc::SchemaError, where + ".action_tag", "expected a non-empty string");
    op.action_tag = tag.get<std::string>();
    op.task = TaskId{as_int(require(o, "task", where), where + ".task")};
    op.applicable_objects = parse_id_set<ObjectId>(require(o, "applicable_objects", where),
                                                   where + ".applicable_objects");
    if (op.applicable_objects.empty())
      fail(Errc::SchemaError, where + ".applicable_objects", "must not be empty");
    kb.operations_.push_back(std::move(op));
  }

  // tasks
  const json& tasks = as_array(require(doc, "tasks", ""), "tasks");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string where = at("tasks", i);
    Task task;
    task.id = TaskId{as_int(require(tasks[i], "id", where), where + ".id")};
    const json& pairs = as_array(require(tasks[i], "pairs", where), where + ".pairs");
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const std::string pw = at(where + ".pairs", j);
      const json& pair = as_array(pairs[j], pw);
      if (pair.size() != 2) fail(Errc::SchemaError, pw, "pair must be [object, operation]");
      task.pairs.push_back({ObjectId{as_int(pair[0], pw)}, OperationId{as_int(pair[1], pw)}});
    }
    std::sort(task.pairs.begin(), task.pairs.end());
    if (std::adjacent_find(task.pairs.begin(), task.pairs.end()) != task.pairs.end())
      fail(Errc::DuplicateId, where + ".pairs", "pair listed twice");
    kb.tasks_.push_back(std::move(task));
  }

  // programs
  const json& programs = as_array(require(doc, "programs", ""), "programs");
  for (std::size_t i = 0; i < programs.size(); ++i) {
    const std::string where = at("programs", i);
    const json& p = programs[i];
    Program program;
    program.id = ProgramId{as_int(require(p, "id", where), where + ".id")};
    program.trigger = ObjectId{as_int(require(p, "trigger", where), where + ".trigger")};
    const json& seq = as_array(require(p, "operations", where), where + ".operations");
    if (seq.empty()) fail(Errc::SchemaError, where + ".operations", "must not be empty");
    for (std::size_t j = 0; j < seq.size(); ++j)
      program.operations.push_back(OperationId{as_int(seq[j], at(where + ".operations", j))});
    const std::int64_t k = as_int(require(p, "reflex_threshold", where), where + ".reflex_threshold");
    if (k < 1 || k > std::numeric_limits<std::uint32_t>::max())
      fail(Errc::SchemaError, where + ".reflex_threshold", "must be a positive integer");
    program.reflex_threshold = static_cast<std::uint32_t>(k);
    program.base_utility = as_number(require(p, "base_utility", where), where + ".base_utility");
    if (!std::isfinite(program.base_utility))
      fail(Errc::SchemaError, where + ".base_utility", "must be finite");
    kb.programs_.push_back(std::move(program));
  }

  require_unique_ids<InternalObject, ObjectId>(kb.objects_, "objects");
  require_unique_ids<OperationDef, OperationId>(kb.operations_, "operations");
  require_unique_ids<Task, TaskId>(kb.tasks_, "tasks");
  require_unique_ids<Program, ProgramId>(kb.programs_, "programs");

  // references
  const auto object_ref = [&](ObjectId id, const std::string& where) {
    if (kb.find_object(id) == nullptr)
      fail(Errc::DanglingReference, where, "unknown object " + std::to_string(id.value));
  };
  const auto operation_ref = [&](OperationId id, const std::string& where) {
    if (kb.find_operation(id) == nullptr)
      fail(Errc::DanglingReference, where, "unknown operation " + std::to_string(id.value));
  };
  for (const auto& o : kb.objects_)
    if (o.parent != kRootId) object_ref(o.parent, "object " + std::to_string(o.id.value) + " parent");
  for (const auto& op : kb.operations_) {
    const std::string where = "operation " + std::to_string(op.id.value);
    if (kb.find_task(op.task) == nullptr)
      fail(Errc::DanglingReference, where, "unknown task " + std::to_string(op.task.value));
    for (ObjectId id : op.applicable_objects) object_ref(id, where);
  }
  for (const auto& t : kb.tasks_) {
    const std::string where = "task " + std::to_string(t.id.value);
    for (const auto& pair : t.pairs) {
      object_ref(pair.object, where);
      operation_ref(pair.operation, where);
    }
  }
  for (const auto& p : kb.programs_) {
    const std::string where = "program " + std::to_string(p.id.value);
    object_ref(p.trigger, where);
    for (OperationId id : p.operations) operation_ref(id, where);
  }

  // tree shape: every parent chain reaches the root in fewer than |objects| steps
  for (const auto& o : kb.objects_) {
    ObjectId cursor = o.parent;
    std::size_t steps = 0;
    while (cursor != kRootId) {
      if (++steps >= kb.objects_.size() || cursor == o.id)
        fail(Errc::CyclicTree, "object " + std::to_string(o.id.value), "parent chain never reaches the root");
      cursor = kb.find_object(cursor)->parent;
    }
  }

  for (const auto& o : kb.objects_) {
    const Predicate& parent = kb.predicate(o.parent);
    if (!strict_refinement(o.predicate, parent))
      fail(Errc::InvalidPredicate, "object " + std::to_string(o.id.value),
           "predicate must strictly extend its parent's constraints");
  }

  std::vector<std::pair<ObjectId, std::vector<ObjectId>>> children;
  for (const auto& o : kb.objects_) {
    auto it = std::find_if(children.begin(), children.end(), [&](const auto& e) { return e.first == o.parent; });
    if (it == children.end()) {
      children.push_back({o.parent, {}});
      it = std::prev(children.end());
    }
    it->second.push_back(o.id);  // objects_ is sorted, so siblings are too
  }
  std::sort(children.begin(), children.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [parent, siblings] : children)
    for (std::size_t i = 0; i < siblings.size(); ++i)
      for (std::size_t j = i + 1; j < siblings.size(); ++j)
        if (compatible(kb.predicate(siblings[i]), kb.predicate(siblings[j])))
          fail(Errc::SiblingOverlap, "objects " + std::to_string(siblings[i].value) + " and " +
                                         std::to_string(siblings[j].value),
               "sibling predicates can match the same vector");
  kb.children_ = std::move(children);

  for (const auto& t : kb.tasks_)
    if (t.pairs.empty()) fail(Errc::EmptyTask, "task " + std::to_string(t.id.value), "task has no pairs");

  for (const auto& p : kb.programs_)
    for (OperationId id : p.operations) {
      const auto& applicable = kb.find_operation(id)->applicable_objects;
      if (!std::binary_search(applicable.begin(), applicable.end(), p.trigger))
        fail(Errc::InapplicableOperation, "program " + std::to_string(p.id.value),
             "operation " + std::to_string(id.value) + " does not apply to trigger " +
                 std::to_string(p.trigger.value));
    }

  return kb;
}

/// Parses KB document text. JSON syntax errors surface as SchemaError with
/// the parser's line/column context.
inline KnowledgeBase parse_kb(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::SchemaError, e.what());
  }
  return build_kb(doc);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(Errc::IoError, "failed reading " + path.string());
  return buffer.str();
}

inline KnowledgeBase load_kb(const std::filesystem::path& path) { return parse_kb(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Canonical form and digest

inline nlohmann::json to_json(const Task& task) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : task.pairs) pairs.push_back({p.object.value, p.operation.value});
  return {{"id", task.id.value}, {"pairs", std::move(pairs)}};
}

/// Canonical JSON of a knowledge base: keys sorted, arrays sorted by id
/// (program operation sequences keep execution order), no whitespace.
inline std::string canonical_serialization(const KnowledgeBase& kb) {
  using nlohmann::json;
  json objects = json::array();
  for (const auto& o : kb.objects()) {
    json pred = json::array();
    for (const auto& c : o.predicate.constraints) pred.push_back({c.feature, c.symbol});
    objects.push_back({{"id", o.id.value},
                       {"name", o.name},
                       {"parent", o.parent == kRootId ? json(nullptr) : json(o.parent.value)},
                       {"predicate", std::move(pred)}});
  }
  json operations = json::array();
  for (const auto& op : kb.operations()) {
    json applicable = json::array();
    for (ObjectId id : op.applicable_objects) applicable.push_back(id.value);
    operations.push_back({{"action_tag", op.action_tag},
                          {"applicable_objects", std::move(applicable)},
                          {"id", op.id.value},
                          {"task", op.task.value}});
  }
  json tasks = json::array();
  for (const auto& t : kb.tasks()) tasks.push_back(to_json(t));
  json programs = json::array();
  for (const auto& p : kb.programs()) {
    json seq = json::array();
    for (OperationId id : p.operations) seq.push_back(id.value);
    programs.push_back({{"base_utility", p.base_utility},
                        {"id", p.id.value},
                        {"operations", std::move(seq)},
                        {"reflex_threshold", p.reflex_threshold},
                        {"trigger", p.trigger.value}});
  }
  const json doc = {{"alphabet", kb.alphabet()},
                    {"d", kb.dimension()},
                    {"objects", std::move(objects)},
                    {"operations", std::move(operations)},
                    {"programs", std::move(programs)},
                    {"tasks", std::move(tasks)}};
  return doc.dump();
}

/// FNV-1a-64 of the canonical serialization, recomputed on every call.
inline std::uint64_t kb_digest(const KnowledgeBase& kb) { return fnv1a64(canonical_serialization(kb)); }

inline std::string digest_hex(std::uint64_t digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, digest >>= 4) out[static_cast<std::size_t>(i)] = kHex[digest & 0xf];
  return out;
}

/// Tasks ascending by id.
inline std::vector<Task> enumerate_tasks(const KnowledgeBase& kb) {
  return {kb.tasks().begin(), kb.tasks().end()};
}

}  // namespace aprior
