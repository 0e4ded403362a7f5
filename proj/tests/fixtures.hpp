#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "dialdiv/corpus.hpp"

namespace fixtures {

inline std::filesystem::path source_dir() { return DIALDIV_SOURCE_DIR; }
inline std::filesystem::path corpus_dir() { return source_dir() / "cases"; }

/// Valid GA case with predictable content: 5 basic items of 4 words, 30
/// memories of 6 words each, one previous dialogue.
inline dialdiv::corpus::Case small_case(std::string id = "t-01") {
  using namespace dialdiv::corpus;
  Case c;
  c.id = std::move(id);
  c.timestamp = "2023-02-13 11:10:40";
  c.agent_a.name = "Arthur Burton";
  c.agent_b.name = "Ryan Park";
  for (int i = 0; i < 5; ++i) {
    c.agent_a.basic_info_items.push_back("Arthur fact number " + std::to_string(i));
    c.agent_b.basic_info_items.push_back("Ryan fact number " + std::to_string(i));
  }
  for (int i = 0; i < 30; ++i) {
    c.agent_a.memory_items.push_back("- Arthur Burton remembers event " + std::to_string(i));
    c.agent_b.memory_items.push_back("- Ryan Park remembers event " + std::to_string(i));
  }
  c.previous_dialogues.push_back("Arthur Burton: Hi Ryan.\nRyan Park: Hello Arthur.");
  c.environment.items = {{EnvKind::kLocation, "the Pub"}, {EnvKind::kSituation, "evening chat"}};
  return c;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("dialdiv_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace fixtures
