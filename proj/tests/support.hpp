#pragma once

#include <optional>

#include <doctest.h>

#include "grwlim/errors.hpp"

namespace grwlim::test {

/// Error code thrown by `f`, or nothing.
template <typename F>
std::optional<Errc> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace grwlim::test

#define CHECK_ERRC(expr, code) CHECK(::grwlim::test::error_of([&] { (void)(expr); }) == std::optional(code))
