#pragma once

#include <doctest.h>

#include <functional>

#include "graphkern/error.hpp"

// Code of the graphkern::Error thrown by f; fails the test if nothing is thrown.
inline graphkern::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const graphkern::Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return graphkern::ErrorCode::IoError;
}
