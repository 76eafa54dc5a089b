// Copyright 2026 The Canopy Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xml_mini.hpp"

#include <cctype>

#include "canopy/error.hpp"

namespace canopy::xml {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view doc) : doc_(doc) {}

  std::unique_ptr<Element> parse_document() {
    skip_misc();
    auto root = parse_element();
    skip_misc();
    if (pos_ != doc_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("xml: " + what + " at offset " + std::to_string(pos_));
  }

  bool eof() const { return pos_ >= doc_.size(); }
  char peek() const { return doc_[pos_]; }
  bool starts_with(std::string_view s) const {
    return doc_.substr(pos_, s.size()) == s;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  // Whitespace, <?...?> declarations and <!-- --> comments between elements.
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) {
        const auto end = doc_.find("?>", pos_);
        if (end == std::string_view::npos) fail("unterminated declaration");
        pos_ = end + 2;
      } else if (starts_with("<!--")) {
        const auto end = doc_.find("-->", pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 3;
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    const std::size_t start = pos_;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '-' || c == '.' || c == ':') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected a name");
    return std::string(doc_.substr(start, pos_ - start));
  }

  // Attributes are validated for well-formedness but not retained; the
  // annotation formats carry everything in element text.
  void skip_attributes() {
    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated start tag");
      if (peek() == '>' || starts_with("/>")) return;
      parse_name();
      skip_ws();
      if (eof() || peek() != '=') fail("expected '=' in attribute");
      ++pos_;
      skip_ws();
      if (eof() || (peek() != '"' && peek() != '\'')) {
        fail("expected quoted attribute value");
      }
      const char quote = peek();
      ++pos_;
      const auto end = doc_.find(quote, pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      pos_ = end + 1;
    }
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size();) {
      if (raw[i] != '&') {
        out.push_back(raw[i++]);
        continue;
      }
      const auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity");
      const std::string_view name = raw.substr(i + 1, semi - i - 1);
      if (name == "lt") {
        out.push_back('<');
      } else if (name == "gt") {
        out.push_back('>');
      } else if (name == "amp") {
        out.push_back('&');
      } else if (name == "quot") {
        out.push_back('"');
      } else if (name == "apos") {
        out.push_back('\'');
      } else {
        fail("unknown entity &" + std::string(name) + ";");
      }
      i = semi + 1;
    }
    return out;
  }

  std::unique_ptr<Element> parse_element() {
    if (eof() || peek() != '<') fail("expected an element");
    ++pos_;
    auto element = std::make_unique<Element>();
    element->name = parse_name();
    skip_attributes();
    if (starts_with("/>")) {
      pos_ += 2;
      return element;
    }
    ++pos_;  // consume '>'

    for (;;) {
      const std::size_t text_start = pos_;
      while (!eof() && peek() != '<') ++pos_;
      if (eof()) fail("unterminated element <" + element->name + ">");
      if (pos_ > text_start) {
        element->text +=
            decode_entities(doc_.substr(text_start, pos_ - text_start));
      }
      if (starts_with("<!--")) {
        const auto end = doc_.find("-->", pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 3;
      } else if (starts_with("</")) {
        pos_ += 2;
        const std::string closing = parse_name();
        if (closing != element->name) {
          fail("mismatched </" + closing + "> for <" + element->name + ">");
        }
        skip_ws();
        if (eof() || peek() != '>') fail("malformed end tag");
        ++pos_;
        return element;
      } else {
        element->children.push_back(parse_element());
      }
    }
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
};

}  // namespace

const Element* Element::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c->name == child_name) return c.get();
  }
  return nullptr;
}

std::vector<const Element*> Element::children_named(
    std::string_view child_name) const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (c->name == child_name) out.push_back(c.get());
  }
  return out;
}

std::unique_ptr<Element> parse(std::string_view document) {
  return Parser(document).parse_document();
}

}  // namespace canopy::xml
