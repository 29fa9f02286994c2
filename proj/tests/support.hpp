#pragma once

#include <catch_amalgamated.hpp>

#include "isml/error.hpp"

// Asserts that `expr` throws isml::Error carrying `error_code`.
#define REQUIRE_ISML_ERROR(expr, error_code)                              \
  do {                                                                    \
    bool thrown_ = false;                                                 \
    try {                                                                 \
      (void)(expr);                                                       \
    } catch (const isml::Error& e_) {                                     \
      thrown_ = true;                                                     \
      CHECK(isml::to_string(e_.code()) == isml::to_string(error_code));   \
    }                                                                     \
    CHECK(thrown_);                                                       \
  } while (false)
