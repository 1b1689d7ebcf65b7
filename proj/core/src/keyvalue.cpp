#include "incstab/keyvalue.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace incstab {

namespace {

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

ParseError::ParseError(const std::string &source, int line, const std::string &what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

const KeyValueEntry *KeyValueSection::find(const std::string &key) const {
  const auto it = std::find_if(entries.begin(), entries.end(),
                               [&](const KeyValueEntry &e) { return e.key == key; });
  return it == entries.end() ? nullptr : &*it;
}

void KeyValueSection::set(const std::string &key, const std::string &value) {
  for (auto &e : entries) {
    if (e.key == key) {
      e.value = value;
      return;
    }
  }
  entries.push_back({key, value, 0});
}

void KeyValueSection::set(const std::string &key, double value) { set(key, format_double(value)); }

const KeyValueSection *KeyValueDocument::find(const std::string &name) const {
  const auto it = std::find_if(sections.begin(), sections.end(),
                               [&](const KeyValueSection &s) { return s.name == name; });
  return it == sections.end() ? nullptr : &*it;
}

KeyValueSection &KeyValueDocument::section(const std::string &name) {
  for (auto &s : sections)
    if (s.name == name) return s;
  sections.push_back({name, 0, {}});
  return sections.back();
}

KeyValueDocument parse_key_value(std::istream &is, const std::string &source) {
  KeyValueDocument doc;
  doc.source = source;
  KeyValueSection *current = nullptr;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError(source, line, "unterminated section header");
      const std::string name = trim(text.substr(1, text.size() - 2));
      if (name.empty()) throw ParseError(source, line, "empty section name");
      if (doc.find(name)) throw ParseError(source, line, "duplicate section [" + name + "]");
      doc.sections.push_back({name, line, {}});
      current = &doc.sections.back();
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(source, line, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ParseError(source, line, "missing key before '='");
    if (!current) {
      doc.sections.push_back({"", line, {}});
      current = &doc.sections.back();
    }
    if (current->find(key))
      throw ParseError(source, line, "duplicate key '" + key + "' in section [" + current->name + "]");
    current->entries.push_back({key, value, line});
  }
  return doc;
}

KeyValueDocument parse_key_value_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return parse_key_value(in, path);
}

void write_key_value(std::ostream &os, const KeyValueDocument &doc) {
  bool first = true;
  for (const auto &s : doc.sections) {
    if (!first) os << '\n';
    first = false;
    if (!s.name.empty()) os << '[' << s.name << "]\n";
    for (const auto &e : s.entries) os << e.key << " = " << e.value << '\n';
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace incstab
