#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "hardylab/domain.hpp"
#include "hardylab/whitney.hpp"

namespace testing_util {

inline hardylab::DomainSpec spec(const std::string& text) {
  return hardylab::parse_domain_spec(nlohmann::json::parse(text));
}

inline hardylab::GridDomain domain(const std::string& text) { return hardylab::rasterize(spec(text)); }

inline std::string halfspace(int level) {
  return R"({"kind":"halfspace","level":)" + std::to_string(level) + R"(,"parameters":{"dim":2}})";
}
inline std::string interval(int level) {
  return R"({"kind":"interval","level":)" + std::to_string(level) + R"(,"parameters":{}})";
}
inline std::string lshape(int level) {
  return R"({"kind":"lshape","level":)" + std::to_string(level) + R"(,"parameters":{}})";
}
inline std::string square(int level) {
  return R"({"kind":"square","level":)" + std::to_string(level) + R"(,"parameters":{"dim":2}})";
}
inline std::string koch(int level, int iterations = 4) {
  return R"({"kind":"koch-polygon","level":)" + std::to_string(level) + R"(,"parameters":{"iterations":)" +
         std::to_string(iterations) + "}}";
}
inline std::string cantor(int level, int iterations) {
  return R"({"kind":"cantor-complement","level":)" + std::to_string(level) +
         R"(,"parameters":{"iterations":)" + std::to_string(iterations) + R"(,"ratio":0.3333333333333333}})";
}

// Test-name suffix from a domain JSON: kind plus level.
inline std::string domain_label(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  std::string k = j.at("kind").get<std::string>() + "_L" + std::to_string(j.at("level").get<int>());
  for (char& c : k)
    if (c == '-') c = '_';
  return k;
}

}  // namespace testing_util
