#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

// Reference values produced by tests/oracles/derive.py.
inline const nlohmann::json& derived() {
  static const nlohmann::json data = [] {
    std::ifstream in(std::string(LOADSIM_FIXTURE_DIR) + "/derived.json");
    return nlohmann::json::parse(in);
  }();
  return data;
}
