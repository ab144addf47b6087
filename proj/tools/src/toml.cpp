#include "rqbench/cli/toml.hpp"

#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "rqbench/error.hpp"

namespace rqbench::cli {

const char* TomlValue::type_name() const {
  switch (data.index()) {
    case 0: return "string";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "boolean";
    default: return "array";
  }
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  TomlDocument run() {
    TomlDocument doc;
    TomlTable* current = &doc.root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        if (!match("[[")) fail("only arrays of tables ([[name]]) are supported");
        skip_inline_space();
        const std::string name = bare_key();
        skip_inline_space();
        if (!match("]]")) fail("expected ']]'");
        end_of_line();
        current = &doc.arrays[name].emplace_back();
        continue;
      }
      const std::string key = peek() == '"' ? basic_string() : bare_key();
      skip_inline_space();
      if (!match("=")) fail(fmt::format("expected '=' after key '{}'", key));
      skip_inline_space();
      if (current->contains(key)) fail(fmt::format("duplicate key '{}'", key));
      TomlValue value = parse_value();
      end_of_line();
      current->emplace(key, std::move(value));
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& reason) const {
    throw ManifestError(fmt::format("line {}", line_), reason);
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  bool match(std::string_view token) {
    if (s_.substr(pos_).starts_with(token)) {
      pos_ += token.size();
      return true;
    }
    return false;
  }
  void skip_inline_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }
  void newline() {
    if (match("\r\n") || match("\n")) {
      ++line_;
      return;
    }
    fail("expected end of line");
  }
  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (!eof()) newline();
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_inline_space();
      skip_comment();
      if (eof()) return;
      if (peek() == '\n' || peek() == '\r') {
        newline();
      } else {
        return;
      }
    }
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_array_space() {
    while (!eof()) {
      skip_inline_space();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        newline();
      } else {
        return;
      }
    }
  }

  std::string bare_key() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected a key");
    if (peek() == '.') fail("dotted keys are not supported");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string basic_string() {
    ++pos_;  // opening quote
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated escape");
      const char e = s_[pos_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: fail(fmt::format("unsupported escape '\\{}'", e));
      }
    }
  }

  std::string literal_string() {
    ++pos_;
    const std::size_t start = pos_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
    if (peek() != '\'') fail("unterminated literal string");
    std::string out(s_.substr(start, pos_ - start));
    ++pos_;
    return out;
  }

  TomlValue parse_value() {
    TomlValue v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      if (s_.substr(pos_).starts_with("\"\"\"")) fail("multi-line strings are not supported");
      v.data = basic_string();
    } else if (c == '\'') {
      v.data = literal_string();
    } else if (c == '[') {
      ++pos_;
      TomlArray items;
      skip_array_space();
      while (peek() != ']') {
        if (eof()) fail("unterminated array");
        TomlValue item = parse_value();
        if (item.is_array()) fail("nested arrays are not supported");
        items.push_back(std::move(item));
        skip_array_space();
        if (match(",")) {
          skip_array_space();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      ++pos_;
      v.data = std::move(items);
    } else if (c == '{') {
      fail("inline tables are not supported");
    } else {
      const std::size_t start = pos_;
      while (!eof() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' &&
             peek() != '\r' && peek() != ' ' && peek() != '\t') {
        ++pos_;
      }
      std::string token(s_.substr(start, pos_ - start));
      if (token.empty()) fail("expected a value");
      if (token == "true") {
        v.data = true;
      } else if (token == "false") {
        v.data = false;
      } else {
        std::string digits;
        for (char ch : token) {
          if (ch != '_') digits += ch;
        }
        if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
        if (ec == std::errc() && p == digits.data() + digits.size()) {
          v.data = i;
        } else {
          double d = 0.0;
          auto [pd, ecd] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
          if (ecd != std::errc() || pd != digits.data() + digits.size()) {
            fail(fmt::format("invalid value '{}'", token));
          }
          v.data = d;
        }
      }
    }
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

TomlDocument parse_toml(std::string_view text) { return Parser(text).run(); }

std::string toml_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

}  // namespace rqbench::cli
