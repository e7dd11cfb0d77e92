#include <algorithm>
#include <string>
#include <type_traits>

#include <gtest/gtest.h>

#include "aprior/kb.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace aprior {
namespace {

using nlohmann::json;
using test::three_node_doc;

json minimal_doc() {
  return json::parse(R"({
    "d": 1, "alphabet": 2,
    "objects": [{"id": 1, "parent": null, "predicate": [[0, 1]]}],
    "operations": [{"id": 1, "action_tag": "eat", "task": 1, "applicable_objects": [1]}],
    "tasks": [{"id": 1, "pairs": [[1, 1]]}],
    "programs": []
  })");
}

Errc build_error(const json& doc) {
  try {
    build_kb(doc);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "document was accepted";
  return Errc::IoError;
}

static_assert(!std::is_default_constructible_v<KnowledgeBase>, "KBs only come from build_kb");

TEST(BuildKb, MinimalDocumentSeals) {
  const KnowledgeBase kb = build_kb(minimal_doc());
  EXPECT_EQ(kb.objects().size(), 1u);
  EXPECT_TRUE(kb.is_leaf(ObjectId{1}));
  EXPECT_EQ(kb.depth(ObjectId{1}), 1u);
}

TEST(BuildKb, ThreeNodeReferenceAgreesWithIndependentChecker) {
  const json doc = three_node_doc();
  ASSERT_TRUE(oracle::raw_kb_valid(doc));
  const KnowledgeBase kb = build_kb(doc);
  EXPECT_EQ(kb.objects().size(), 4u);
  EXPECT_EQ(kb.dimension(), 2u);
  EXPECT_EQ(kb.alphabet(), 3u);
  EXPECT_TRUE(kb.is_leaf(ObjectId{11}));
  EXPECT_TRUE(kb.is_leaf(ObjectId{12}));
  EXPECT_TRUE(kb.is_leaf(ObjectId{2}));
  EXPECT_FALSE(kb.is_leaf(ObjectId{1}));
  EXPECT_FALSE(kb.is_leaf(kRootId));
  EXPECT_EQ(kb.object_by_name("Q11"), ObjectId{11});
}

TEST(BuildKb, IdenticalSiblingsOverlap) {
  json doc = minimal_doc();
  doc["objects"].push_back({{"id", 2}, {"parent", nullptr}, {"predicate", {{0, 1}}}});
  EXPECT_EQ(build_error(doc), Errc::SiblingOverlap);
  EXPECT_FALSE(oracle::raw_kb_valid(doc));
}

TEST(BuildKb, SiblingsOnDisjointFeaturesOverlap) {
  // {f0=0} and {f1=0} both match (0,0).
  json doc = three_node_doc();
  doc["objects"][3]["predicate"] = json::array({json::array({1, 0})});
  EXPECT_EQ(build_error(doc), Errc::SiblingOverlap);
  EXPECT_FALSE(oracle::raw_kb_valid(doc));
}

TEST(BuildKb, RejectsStructuralErrors) {
  {
    json doc = three_node_doc();
    doc["objects"][1]["id"] = 1;
    EXPECT_EQ(build_error(doc), Errc::DuplicateId);
  }
  {
    json doc = three_node_doc();
    doc["objects"][0]["parent"] = 11;  // Q1 <-> Q11
    EXPECT_EQ(build_error(doc), Errc::CyclicTree);
  }
  {
    json doc = three_node_doc();
    doc["objects"][0]["parent"] = 1;
    EXPECT_EQ(build_error(doc), Errc::CyclicTree);
  }
  {
    json doc = three_node_doc();
    doc["operations"][0]["task"] = 99;
    EXPECT_EQ(build_error(doc), Errc::DanglingReference);
  }
  {
    json doc = three_node_doc();
    doc["programs"][0]["trigger"] = 77;
    EXPECT_EQ(build_error(doc), Errc::DanglingReference);
  }
  {
    json doc = three_node_doc();
    doc["tasks"][1]["pairs"] = json::array();
    EXPECT_EQ(build_error(doc), Errc::EmptyTask);
  }
  {
    json doc = three_node_doc();
    doc["objects"][1]["predicate"] = json::array({json::array({1, 0})});  // drops parent's f0=0
    EXPECT_EQ(build_error(doc), Errc::InvalidPredicate);
  }
  {
    json doc = three_node_doc();
    doc["objects"][0]["predicate"] = json::array({json::array({0, 5})});
    EXPECT_EQ(build_error(doc), Errc::InvalidPredicate);
  }
  {
    json doc = three_node_doc();
    doc["programs"][0]["operations"] = json::array({3});  // orient applies to Q12 only
    EXPECT_EQ(build_error(doc), Errc::InapplicableOperation);
  }
  {
    json doc = three_node_doc();
    doc["programs"][0]["reflex_threshold"] = 0;
    EXPECT_EQ(build_error(doc), Errc::SchemaError);
  }
  {
    json doc = three_node_doc();
    doc["objects"] = json::array();
    EXPECT_EQ(build_error(doc), Errc::SchemaError);
  }
  {
    json doc = three_node_doc();
    doc.erase("tasks");
    EXPECT_EQ(build_error(doc), Errc::SchemaError);
  }
}

TEST(BuildKb, SyntaxErrorsCarryLineContext) {
  try {
    parse_kb("{\n  \"d\": 2,\n  \"alphabet\": ,\n}");
    FAIL() << "expected a SchemaError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SchemaError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(KbDigest, MatchesHandRolledFnvOverCanonicalBytes) {
  const KnowledgeBase kb = build_kb(three_node_doc());
  const std::string expected_canonical =
      R"({"alphabet":3,"d":2,"objects":[)"
      R"({"id":1,"name":"Q1","parent":null,"predicate":[[0,0]]},)"
      R"({"id":2,"name":"Q2","parent":null,"predicate":[[0,1]]},)"
      R"({"id":11,"name":"Q11","parent":1,"predicate":[[0,0],[1,0]]},)"
      R"({"id":12,"name":"Q12","parent":1,"predicate":[[0,0],[1,1]]}],)"
      R"("operations":[)"
      R"({"action_tag":"approach","applicable_objects":[1,11,12],"id":1,"task":1},)"
      R"({"action_tag":"pull","applicable_objects":[11],"id":2,"task":1},)"
      R"({"action_tag":"orient","applicable_objects":[12],"id":3,"task":2},)"
      R"({"action_tag":"flee","applicable_objects":[2],"id":4,"task":2}],)"
      R"("programs":[)"
      R"({"base_utility":1.0,"id":1,"operations":[2],"reflex_threshold":1,"trigger":11},)"
      R"({"base_utility":0.8,"id":2,"operations":[3,1],"reflex_threshold":3,"trigger":12},)"
      R"({"base_utility":0.6,"id":3,"operations":[4],"reflex_threshold":1,"trigger":2},)"
      R"({"base_utility":0.3,"id":4,"operations":[1],"reflex_threshold":2,"trigger":1}],)"
      R"("tasks":[{"id":1,"pairs":[[1,1],[11,1],[11,2],[12,1]]},{"id":2,"pairs":[[2,4],[12,3]]}]})";
  EXPECT_EQ(canonical_serialization(kb), expected_canonical);
  EXPECT_EQ(kb_digest(kb), oracle::fnv1a(expected_canonical));
  EXPECT_EQ(digest_hex(kb_digest(kb)).size(), 16u);
}

TEST(KbDigest, StableUnderReorderingAndReserialization) {
  const json doc = three_node_doc();
  json shuffled = doc;
  std::reverse(shuffled["objects"].begin(), shuffled["objects"].end());
  std::reverse(shuffled["tasks"][0]["pairs"].begin(), shuffled["tasks"][0]["pairs"].end());
  std::reverse(shuffled["operations"][0]["applicable_objects"].begin(),
               shuffled["operations"][0]["applicable_objects"].end());
  const auto a = kb_digest(build_kb(doc));
  const auto b = kb_digest(parse_kb(doc.dump(4)));
  const auto c = kb_digest(build_kb(shuffled));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(KbDigest, ChangesWithOneUtility) {
  json doc = three_node_doc();
  const KnowledgeBase before = build_kb(doc);
  doc["programs"][2]["base_utility"] = 0.61;
  const KnowledgeBase after = build_kb(doc);
  EXPECT_NE(kb_digest(before), kb_digest(after));
  EXPECT_EQ(kb_digest(after), oracle::fnv1a(canonical_serialization(after)));
}

TEST(KbDigest, ProgramOperationOrderIsSignificant) {
  json doc = three_node_doc();
  const auto a = kb_digest(build_kb(doc));
  doc["programs"][1]["operations"] = json::array({1, 3});
  EXPECT_NE(a, kb_digest(build_kb(doc)));
}

TEST(EnumerateTasks, AscendingById) {
  json doc = minimal_doc();
  doc["tasks"] = json::array({{{"id", 2}, {"pairs", {{1, 1}}}}, {{"id", 1}, {"pairs", {{1, 1}}}}});
  const auto tasks = enumerate_tasks(build_kb(doc));
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[0].id, TaskId{1});
  EXPECT_EQ(tasks[1].id, TaskId{2});
}

TEST(EnumerateTasks, ExactlyTheDeclaredTasks) {
  const json doc = three_node_doc();
  const KnowledgeBase kb = build_kb(doc);
  const auto tasks = enumerate_tasks(kb);
  ASSERT_EQ(tasks.size(), doc["tasks"].size());
  for (const auto& raw : doc["tasks"]) {
    const auto it = std::find_if(tasks.begin(), tasks.end(),
                                 [&](const Task& t) { return t.id.value == raw["id"].get<std::int64_t>(); });
    ASSERT_NE(it, tasks.end());
    std::vector<std::pair<std::int64_t, std::int64_t>> expected;
    for (const auto& p : raw["pairs"]) expected.emplace_back(p[0].get<std::int64_t>(), p[1].get<std::int64_t>());
    std::sort(expected.begin(), expected.end());
    ASSERT_EQ(it->pairs.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(it->pairs[i].object.value, expected[i].first);
      EXPECT_EQ(it->pairs[i].operation.value, expected[i].second);
    }
  }
  EXPECT_EQ(enumerate_tasks(kb), tasks);
}

TEST(KnowledgeBaseTree, ParentChainsAreShort) {
  const KnowledgeBase kb = build_kb(three_node_doc());
  for (const auto& o : kb.objects()) EXPECT_LT(kb.depth(o.id), kb.objects().size() + 1);
}

TEST(KnowledgeBaseTree, SiblingExclusivityExhaustive) {
  const KnowledgeBase kb = build_kb(three_node_doc());
  std::vector<ObjectId> nodes{kRootId};
  for (const auto& o : kb.objects()) nodes.push_back(o.id);
  for (const auto& raw : oracle::all_vectors(2, 3)) {
    FeatureVector v;
    for (int s : raw) v.symbols.push_back(static_cast<Symbol>(s));
    for (ObjectId node : nodes) {
      int matching = 0;
      for (ObjectId child : kb.children(node))
        matching += std::all_of(kb.predicate(child).constraints.begin(), kb.predicate(child).constraints.end(),
                                [&](const Constraint& c) { return raw[c.feature] == static_cast<int>(c.symbol); });
      EXPECT_LE(matching, 1);
    }
  }
}

}  // namespace
}  // namespace aprior
