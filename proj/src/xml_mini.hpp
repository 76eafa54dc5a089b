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

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace canopy::xml {

/// Element tree for the small XML subset annotation files use: nested
/// elements, text content, attributes (parsed but kept as raw text),
/// comments and an optional declaration. No namespaces, no DTD.
struct Element {
  std::string name;
  std::string text;  // concatenated character data directly inside this node
  std::vector<std::unique_ptr<Element>> children;

  const Element* child(std::string_view child_name) const;
  std::vector<const Element*> children_named(std::string_view child_name) const;
};

/// Parses a document and returns its root element.
/// Throws ParseError on malformed input.
std::unique_ptr<Element> parse(std::string_view document);

}  // namespace canopy::xml
