#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace ftnas {

// Raised on contract violations (bad shapes, invalid specs, off-grid inputs).
class CheckError : public std::runtime_error {
 public:
  explicit CheckError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when training produces non-finite values.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
[[noreturn]] void check_fail(const char* expr, const std::string& msg,
                             const char* file, int line);
}  // namespace detail

}  // namespace ftnas

#define FTNAS_CHECK(cond, msg)                                        \
  do {                                                                \
    if (!(cond)) {                                                    \
      std::ostringstream ftnas_os_;                                   \
      ftnas_os_ << msg; /* NOLINT */                                  \
      ::ftnas::detail::check_fail(#cond, ftnas_os_.str(), __FILE__,   \
                                  __LINE__);                          \
    }                                                                 \
  } while (0)
