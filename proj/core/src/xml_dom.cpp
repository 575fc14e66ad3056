#include "xml_dom.hpp"

#include <expat.h>

#include <cstring>

namespace animgen::xml {

const std::string* Element::attr(std::string_view name) const {
  for (const auto& a : attrs) {
    if (a.name == name) return &a.value;
  }
  return nullptr;
}

namespace {

struct BuildState {
  std::vector<Element*> stack;
  std::optional<Element> root;
  XML_Parser parser = nullptr;
};

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** atts) {
  auto* st = static_cast<BuildState*>(user);
  Element el;
  el.name = name;
  el.line = static_cast<int>(XML_GetCurrentLineNumber(st->parser));
  for (int i = 0; atts[i]; i += 2) {
    el.attrs.push_back({atts[i], atts[i + 1]});
  }
  if (st->stack.empty()) {
    st->root = std::move(el);
    st->stack.push_back(&*st->root);
  } else {
    st->stack.back()->children.push_back(std::move(el));
    st->stack.push_back(&st->stack.back()->children.back());
  }
}

void XMLCALL on_end(void* user, const XML_Char*) {
  auto* st = static_cast<BuildState*>(user);
  if (!st->stack.empty()) st->stack.pop_back();
}

void XMLCALL on_chardata(void* user, const XML_Char* s, int len) {
  auto* st = static_cast<BuildState*>(user);
  if (!st->stack.empty()) st->stack.back()->text.append(s, static_cast<size_t>(len));
}

}  // namespace

ParseOutcome parse(std::string_view text) {
  ParseOutcome out;
  XML_Parser parser = XML_ParserCreate("UTF-8");
  BuildState st;
  st.parser = parser;
  XML_SetUserData(parser, &st);
  XML_SetElementHandler(parser, on_start, on_end);
  XML_SetCharacterDataHandler(parser, on_chardata);

  const XML_Status status =
      XML_Parse(parser, text.data(), static_cast<int>(text.size()), /*isFinal=*/1);
  if (status == XML_STATUS_ERROR) {
    out.error = XML_ErrorString(XML_GetErrorCode(parser));
    out.line = static_cast<int>(XML_GetCurrentLineNumber(parser));
    out.column = static_cast<int>(XML_GetCurrentColumnNumber(parser));
  } else if (!st.root) {
    out.error = "empty document";
  } else {
    out.root = std::move(st.root);
  }
  XML_ParserFree(parser);
  return out;
}

}  // namespace animgen::xml
