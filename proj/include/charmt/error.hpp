#pragma once

#include <stdexcept>
#include <string>

namespace charmt {

// Data or contract violation surfaced to the caller. CLI maps these to exit
// code 2; usage problems are handled by the argument parser (exit code 1).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

// The const char* overload never allocates on the success path; use it in
// hot code. Checks whose message is assembled from parts should build the
// string only after the condition has failed.
inline void require(bool cond, const char* msg) {
  if (!cond) [[unlikely]] fail(std::string(msg));
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) [[unlikely]] fail(msg);
}

}  // namespace charmt
