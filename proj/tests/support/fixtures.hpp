#pragma once

#include <doctest.h>

#include <filesystem>
#include <functional>
#include <string>

#include "engage/error.hpp"
#include "engage/synthetic.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return ENGAGE_TEST_DATA_DIR; }

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::path(ENGAGE_TEST_SCRATCH_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline const engage::SyntheticCorpus& planted() {
  static engage::SyntheticCorpus corpus =
      engage::generate_synthetic_corpus(600, engage::default_planted_weights(), 0.05, 7);
  return corpus;
}

// Kind of the engage::Error thrown by f.
inline engage::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const engage::Error& e) {
    return e.kind();
  }
  FAIL("expected an engage::Error");
  return engage::ErrorKind::InvariantViolation;
}

}  // namespace fixtures
