#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace animgen::xml {

struct Attribute {
  std::string name;
  std::string value;
};

struct Element {
  std::string name;
  std::vector<Attribute> attrs;
  std::vector<Element> children;
  std::string text;  // accumulated character data, whitespace included
  int line = 0;

  const std::string* attr(std::string_view name) const;
};

struct ParseOutcome {
  std::optional<Element> root;
  std::string error;  // set when root is empty
  int line = 0;
  int column = 0;
};

// Well-formedness and tree building are delegated to expat.
ParseOutcome parse(std::string_view text);

}  // namespace animgen::xml
