#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "aprior/aprior.hpp"

namespace aprior::test {

inline std::filesystem::path data_path(const std::string& relative) {
  return std::filesystem::path(APRIOR_DATA_DIR) / relative;
}

inline nlohmann::json three_node_doc() {
  return nlohmann::json::parse(read_text_file(data_path("kb/three_node.json")));
}

inline std::shared_ptr<const KnowledgeBase> three_node_kb() {
  return std::make_shared<const KnowledgeBase>(build_kb(three_node_doc()));
}

inline FeatureVector vec(std::initializer_list<Symbol> symbols) { return FeatureVector{symbols}; }

/// Three-node tree with a single configurable program on Q11.
inline nlohmann::json single_program_doc(int threshold, double utility) {
  auto doc = three_node_doc();
  doc["programs"] = nlohmann::json::array(
      {{{"id", 1}, {"trigger", 11}, {"operations", {2}}, {"reflex_threshold", threshold}, {"base_utility", utility}}});
  return doc;
}

inline std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "aprior_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace aprior::test
