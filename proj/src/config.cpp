// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ccdkit/error.hpp"

namespace ccdkit::config {

namespace {

[[noreturn]] void syntax(const std::string& origin, std::size_t line, const std::string& msg) {
  throw Error(ErrorKind::kValidation, origin + ":" + std::to_string(line) + ": " + msg);
}

class LineParser {
 public:
  LineParser(std::string_view text, const std::string& origin, std::size_t line)
      : text_(text), origin_(origin), line_(line) {}

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size() || text_[pos_] == '#';
  }
  char peek() { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  std::string key() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                                   text_[pos_] == '-' || text_[pos_] == '.')) {
      ++pos_;
    }
    if (start == pos_) syntax(origin_, line_, "expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) syntax(origin_, line_, std::string("expected '") + c + "'");
    ++pos_;
  }

  Value value() {
    skip_ws();
    Value v;
    const char c = peek();
    if (c == '"') {
      v.type = Value::Type::kString;
      ++pos_;
      while (true) {
        if (pos_ >= text_.size()) syntax(origin_, line_, "unterminated string");
        char ch = text_[pos_++];
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos_ >= text_.size()) syntax(origin_, line_, "dangling escape");
          const char e = text_[pos_++];
          switch (e) {
            case 'n': ch = '\n'; break;
            case 't': ch = '\t'; break;
            case '"': ch = '"'; break;
            case '\\': ch = '\\'; break;
            default: syntax(origin_, line_, std::string("unknown escape \\") + e);
          }
        }
        v.s.push_back(ch);
      }
    } else if (c == '\'') {
      v.type = Value::Type::kString;
      const std::size_t end = text_.find('\'', ++pos_);
      if (end == std::string_view::npos) syntax(origin_, line_, "unterminated string");
      v.s = std::string(text_.substr(pos_, end - pos_));
      pos_ = end + 1;
    } else if (c == '[') {
      v.type = Value::Type::kArray;
      ++pos_;
      skip_ws();
      if (peek() == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(value());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
          if (peek() == ']') {
            ++pos_;
            break;
          }
          continue;
        }
        expect(']');
        break;
      }
    } else {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != ',' &&
             text_[pos_] != ']' && text_[pos_] != '#') {
        ++pos_;
      }
      std::string word(text_.substr(start, pos_ - start));
      if (word == "true" || word == "false") {
        v.type = Value::Type::kBool;
        v.b = word == "true";
        return v;
      }
      std::string digits;
      for (char ch : word) {
        if (ch != '_') digits.push_back(ch);
      }
      const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "nan";
      const char* first = digits.data();
      const char* last = digits.data() + digits.size();
      if (!digits.empty() && digits[0] == '+') ++first;
      if (is_float) {
        v.type = Value::Type::kFloat;
        char* end = nullptr;
        const std::string s(first, last);
        v.d = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) syntax(origin_, line_, "bad value '" + word + "'");
      } else {
        v.type = Value::Type::kInt;
        auto [p, ec] = std::from_chars(first, last, v.i);
        if (digits.empty() || ec != std::errc() || p != last) syntax(origin_, line_, "bad value '" + word + "'");
      }
    }
    return v;
  }

 private:
  std::string_view text_;
  const std::string& origin_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::string format_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

const char* type_name(Value::Type t) {
  switch (t) {
    case Value::Type::kBool: return "boolean";
    case Value::Type::kInt: return "integer";
    case Value::Type::kFloat: return "float";
    case Value::Type::kString: return "string";
    case Value::Type::kArray: return "array";
  }
  return "value";
}

[[noreturn]] void wrong_type(const std::string& key, const Value& v, const char* want) {
  throw Error(ErrorKind::kValidation,
              "config key '" + key + "' must be a " + want + ", got " + type_name(v.type));
}

}  // namespace

std::string Value::repr() const {
  switch (type) {
    case Type::kBool: return b ? "true" : "false";
    case Type::kInt: return std::to_string(i);
    case Type::kFloat: return format_double(d);
    case Type::kString: {
      std::string out = "\"";
      for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      return out + "\"";
    }
    case Type::kArray: {
      std::string out = "[";
      for (std::size_t k = 0; k < items.size(); ++k) out += (k ? "," : "") + items[k].repr();
      return out + "]";
    }
  }
  return {};
}

Document Document::parse(const std::string& text, const std::string& origin) {
  Document doc;
  std::string table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    LineParser p(line, origin, lineno);
    if (p.at_end()) continue;
    if (p.peek() == '[') {
      p.expect('[');
      table = p.key();
      p.expect(']');
      if (!p.at_end()) syntax(origin, lineno, "trailing text after table header");
      continue;
    }
    const std::string key = table.empty() ? p.key() : table + "." + p.key();
    p.expect('=');
    Value v = p.value();
    if (!p.at_end()) syntax(origin, lineno, "trailing text after value");
    if (!doc.values_.emplace(key, std::move(v)).second) syntax(origin, lineno, "duplicate key '" + key + "'");
  }
  return doc;
}

Document Document::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const Value& Document::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::kValidation, "config key '" + key + "' is required");
  return it->second;
}

std::string Document::get_string(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  const Value& v = at(key);
  if (v.type != Value::Type::kString) wrong_type(key, v, "string");
  return v.s;
}

std::int64_t Document::get_int(const std::string& key, std::int64_t fallback) const {
  if (!has(key)) return fallback;
  const Value& v = at(key);
  if (v.type != Value::Type::kInt) wrong_type(key, v, "integer");
  return v.i;
}

double Document::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const Value& v = at(key);
  if (v.type == Value::Type::kInt) return static_cast<double>(v.i);
  if (v.type != Value::Type::kFloat) wrong_type(key, v, "number");
  return v.d;
}

bool Document::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Value& v = at(key);
  if (v.type != Value::Type::kBool) wrong_type(key, v, "boolean");
  return v.b;
}

std::vector<std::string> Document::get_strings(const std::string& key) const {
  std::vector<std::string> out;
  if (!has(key)) return out;
  const Value& v = at(key);
  if (v.type != Value::Type::kArray) wrong_type(key, v, "array of strings");
  for (const auto& item : v.items) {
    if (item.type != Value::Type::kString) wrong_type(key, item, "string");
    out.push_back(item.s);
  }
  return out;
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "schema_version", "seed", "output_dir", "samples",
      "backend.kind", "backend.world", "backend.command", "backend.socket", "backend.model", "backend.transcript",
      "data.lexicon", "data.annotations", "data.prompts",
      "decoding.strategy", "decoding.temperature", "decoding.top_p", "decoding.beam_size",
      "decoding.max_new_tokens", "decoding.alpha", "decoding.beta", "decoding.truncation_reference",
      "detection.profile", "detection.theta_ig", "detection.theta_ee",
      "cct.n_slots", "cct.separator", "cct.unrelated_pool",
      "induction.window", "induction.ee_max_new_tokens", "induction.cue",
      "metrics.recall",
      "analysis.bins", "analysis.repetition_k", "analysis.repetition_distinct", "analysis.enrichment_averaging",
  };
  return keys;
}

std::size_t positive(const Document& doc, const std::string& key, std::int64_t fallback) {
  const std::int64_t v = doc.get_int(key, fallback);
  if (v <= 0) throw Error(ErrorKind::kValidation, "config key '" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

}  // namespace

RunConfig RunConfig::from_document(const Document& input, const std::filesystem::path& base_dir,
                                   std::optional<std::uint64_t> seed_override) {
  Document doc = input;
  for (const auto& [key, v] : doc.values()) {
    if (!known_keys().count(key)) throw Error(ErrorKind::kValidation, "unknown config key '" + key + "'");
  }
  if (seed_override) {
    Value v;
    v.type = Value::Type::kInt;
    v.i = static_cast<std::int64_t>(*seed_override);
    doc.set("seed", v);
  }

  RunConfig c;
  c.schema_version = static_cast<int>(doc.get_int("schema_version", 0));
  if (!doc.has("schema_version")) throw Error(ErrorKind::kValidation, "config key 'schema_version' is required");
  if (c.schema_version != 1) throw Error(ErrorKind::kValidation, "unsupported schema_version");

  auto path = [&](const std::string& key) -> std::filesystem::path {
    const std::string s = doc.get_string(key, "");
    if (s.empty()) return {};
    const std::filesystem::path p(s);
    return (p.is_absolute() ? p : base_dir / p).lexically_normal();
  };

  c.seed = static_cast<std::uint64_t>(doc.get_int("seed", 0));
  c.output_dir = path("output_dir");
  if (c.output_dir.empty()) c.output_dir = base_dir / "out";
  c.samples = doc.get_strings("samples");

  c.backend.kind = doc.get_string("backend.kind", "synthetic");
  c.backend.world = path("backend.world");
  c.backend.command = doc.get_string("backend.command", "");
  c.backend.socket = path("backend.socket");
  c.backend.model = doc.get_string("backend.model", c.backend.model);
  if (doc.has("backend.transcript")) c.backend.transcript = path("backend.transcript");
  if (c.backend.kind == "synthetic") {
    if (c.backend.world.empty()) throw Error(ErrorKind::kValidation, "synthetic backend needs backend.world");
  } else if (c.backend.kind == "wire") {
    if (c.backend.command.empty() == c.backend.socket.empty()) {
      throw Error(ErrorKind::kValidation, "wire backend needs exactly one of backend.command, backend.socket");
    }
  } else {
    throw Error(ErrorKind::kValidation, "backend.kind must be \"synthetic\" or \"wire\"");
  }

  c.lexicon = path("data.lexicon");
  c.annotations = path("data.annotations");
  if (c.lexicon.empty() || c.annotations.empty()) {
    throw Error(ErrorKind::kValidation, "data.lexicon and data.annotations are required");
  }
  if (doc.has("data.prompts")) c.prompts = path("data.prompts");

  auto& d = c.decoding;
  d.strategy = decoding::parse_strategy(doc.get_string("decoding.strategy", "greedy"));
  d.temperature = doc.get_double("decoding.temperature", d.temperature);
  d.top_p = doc.get_double("decoding.top_p", d.top_p);
  d.beam_size = positive(doc, "decoding.beam_size", static_cast<std::int64_t>(d.beam_size));
  d.max_new_tokens = positive(doc, "decoding.max_new_tokens", static_cast<std::int64_t>(d.max_new_tokens));
  d.alpha = doc.get_double("decoding.alpha", d.alpha);
  d.beta = doc.get_double("decoding.beta", d.beta);
  d.truncation_reference = decoding::parse_truncation_reference(doc.get_string("decoding.truncation_reference", "base"));
  d.seed = c.seed;
  d.validate();

  if (doc.has("detection.profile")) {
    const auto& p = detection::profile(doc.get_string("detection.profile", ""));
    c.detection.theta_ig = p.theta_ig;
    c.detection.theta_ee = p.theta_ee;
    c.cct.n_slots = p.n_slots;
    c.cct.separator = p.separator;
  }
  c.detection.theta_ig = doc.get_double("detection.theta_ig", c.detection.theta_ig);
  c.detection.theta_ee = static_cast<int>(doc.get_int("detection.theta_ee", c.detection.theta_ee));
  c.detection.validate();

  c.cct.n_slots = positive(doc, "cct.n_slots", static_cast<std::int64_t>(c.cct.n_slots));
  c.cct.separator = doc.get_string("cct.separator", c.cct.separator);
  c.cct.unrelated_pool = doc.get_strings("cct.unrelated_pool");
  c.cct.seed = c.seed;

  c.induction.window = static_cast<std::size_t>(doc.get_int("induction.window", static_cast<std::int64_t>(c.induction.window)));
  c.induction.ee_max_new_tokens = positive(doc, "induction.ee_max_new_tokens",
                                           static_cast<std::int64_t>(c.induction.ee_max_new_tokens));
  c.induction.cue = doc.get_string("induction.cue", c.induction.cue);

  const std::string recall = doc.get_string("metrics.recall", "pooled");
  if (recall == "pooled") c.recall = metrics::RecallMode::kPooled;
  else if (recall == "per_sample") c.recall = metrics::RecallMode::kPerSample;
  else throw Error(ErrorKind::kValidation, "metrics.recall must be \"pooled\" or \"per_sample\"");

  c.analysis.bins = positive(doc, "analysis.bins", static_cast<std::int64_t>(c.analysis.bins));
  c.analysis.repetition_k = positive(doc, "analysis.repetition_k", static_cast<std::int64_t>(c.analysis.repetition_k));
  c.analysis.repetition_distinct = doc.get_bool("analysis.repetition_distinct", false);
  const std::string averaging = doc.get_string("analysis.enrichment_averaging", "mentions");
  if (averaging == "mentions") c.analysis.enrichment_averaging = analysis::Averaging::kMentions;
  else if (averaging == "samples") c.analysis.enrichment_averaging = analysis::Averaging::kSamples;
  else throw Error(ErrorKind::kValidation, "analysis.enrichment_averaging must be \"mentions\" or \"samples\"");

  std::string canonical;
  for (const auto& [key, v] : doc.values()) {
    if (key == "output_dir" || key == "backend.transcript") continue;
    canonical += key + "=" + v.repr() + "\n";
  }
  c.hash = hex64(fnv1a64(canonical));
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  return from_document(Document::load(path), path.parent_path(), seed_override);
}

}  // namespace ccdkit::config
