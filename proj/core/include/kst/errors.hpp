#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace kst {

// Error with a stable machine-readable code ("range-error", "invalid-input", ...).
// The CLI prints the code on its diagnostic line; tests match on it.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, const std::string& code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace kst
