#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace incstab {

/// Plain-text document of `[section]` headers followed by `key = value`
/// lines. `#` and `;` start comment lines. Keys are unique within a section.
struct KeyValueEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct KeyValueSection {
  std::string name;
  int line = 0;
  std::vector<KeyValueEntry> entries;

  const KeyValueEntry *find(const std::string &key) const;
  void set(const std::string &key, const std::string &value);
  void set(const std::string &key, double value);
};

struct KeyValueDocument {
  std::string source;
  std::vector<KeyValueSection> sections;

  const KeyValueSection *find(const std::string &name) const;
  KeyValueSection &section(const std::string &name);
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string &source, int line, const std::string &what);
  int line() const { return line_; }

 private:
  int line_;
};

KeyValueDocument parse_key_value(std::istream &is, const std::string &source = "<input>");
KeyValueDocument parse_key_value_file(const std::string &path);
void write_key_value(std::ostream &os, const KeyValueDocument &doc);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace incstab
