#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "costorm/gateways.hpp"
#include "costorm/scripted.hpp"

namespace costorm::testing {

inline std::string source_path(const std::string& rel) {
  return (std::filesystem::path(COSTORM_SOURCE_DIR) / rel).string();
}

inline std::string fixtures_dir() { return source_path("fixtures/scripted"); }

inline Gateways fixture_gateways() { return load_scripted_gateways(fixtures_dir()); }

// Fixture gateways whose experts always choose Potential Answer.
inline Gateways answering_gateways() {
  auto gw = fixture_gateways();
  std::dynamic_pointer_cast<ScriptedLm>(gw.lm)->add("intent_decision", "*", "Potential Answer");
  return gw;
}

// Fresh scripted gateways with empty tables.
struct Scripted {
  std::shared_ptr<ScriptedLm> lm = std::make_shared<ScriptedLm>();
  std::shared_ptr<ScriptedSearch> search = std::make_shared<ScriptedSearch>();
  std::shared_ptr<ScriptedEmbed> embed = std::make_shared<ScriptedEmbed>();
  Gateways gw() const { return {lm, search, embed}; }
};

// A scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("costorm_test_" + std::to_string(std::rand()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace costorm::testing
