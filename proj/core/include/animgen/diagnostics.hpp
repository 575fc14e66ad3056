#pragma once

#include <string>
#include <vector>

namespace animgen {

enum class Severity { Error, Warning };

// One parser/loader/runtime finding, rendered as "severity: path: message".
struct Diagnostic {
  Severity severity = Severity::Error;
  std::string path;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

std::string to_string(const Diagnostic& d);

bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace animgen
