/* Copyright 2026 The DeltaDiff Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "deltadiff/config.h"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "deltadiff/desk_models.h"
#include "deltadiff/errors.h"

namespace deltadiff {
namespace {

namespace fs = std::filesystem;

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : text_(text) {}

  TomlTable Parse() {
    while (!AtEnd()) {
      SkipBlank();
      if (AtEnd()) break;
      if (Peek() == '[') {
        ++pos_;
        SkipSpaces();
        section_ = ParseKey();
        SkipSpaces();
        Expect(']');
      } else {
        std::string key = ParseKey();
        SkipSpaces();
        Expect('=');
        SkipSpaces();
        TomlValue value = ParseValue();
        if (!section_.empty()) key = section_ + "." + key;
        if (!table_.emplace(key, std::move(value)).second) {
          Fail("duplicate key '" + key + "'");
        }
      }
      EndLine();
    }
    return std::move(table_);
  }

 private:
  bool AtEnd() const { return pos_ >= text_.size(); }
  char Peek() const { return AtEnd() ? '\0' : text_[pos_]; }

  [[noreturn]] void Fail(const std::string& what) const {
    int line = 1;
    for (size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      line += text_[i] == '\n';
    }
    throw Error(ErrorCode::kConfigError,
                "line " + std::to_string(line) + ": " + what);
  }

  void Expect(char c) {
    if (Peek() != c) Fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void SkipSpaces() {
    while (Peek() == ' ' || Peek() == '\t') ++pos_;
  }

  void SkipComment() {
    if (Peek() == '#') {
      while (!AtEnd() && Peek() != '\n') ++pos_;
    }
  }

  // Whitespace, newlines and comments.
  void SkipBlank() {
    for (;;) {
      SkipSpaces();
      SkipComment();
      if (Peek() == '\n' || Peek() == '\r') {
        ++pos_;
        continue;
      }
      return;
    }
  }

  void EndLine() {
    SkipSpaces();
    SkipComment();
    if (Peek() == '\r') ++pos_;
    if (!AtEnd() && Peek() != '\n') Fail("unexpected trailing characters");
  }

  std::string ParseKey() {
    std::string key;
    for (;;) {
      SkipSpaces();
      std::string part;
      if (Peek() == '"' || Peek() == '\'') {
        part = ParseString();
      } else {
        while (std::isalnum(static_cast<unsigned char>(Peek())) ||
               Peek() == '_' || Peek() == '-') {
          part += text_[pos_++];
        }
      }
      if (part.empty()) Fail("expected a key");
      key += key.empty() ? part : "." + part;
      SkipSpaces();
      if (Peek() != '.') return key;
      ++pos_;
    }
  }

  std::string ParseString() {
    const char quote = text_[pos_++];
    std::string out;
    while (!AtEnd() && Peek() != quote) {
      char c = text_[pos_++];
      if (c == '\n') Fail("unterminated string");
      if (c == '\\' && quote == '"') {
        if (AtEnd()) Fail("unterminated string");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '\\': c = '\\'; break;
          case '"': c = '"'; break;
          default: Fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (AtEnd()) Fail("unterminated string");
    ++pos_;
    return out;
  }

  TomlValue ParseValue() {
    TomlValue v;
    const char c = Peek();
    if (c == '"' || c == '\'') {
      v.kind = TomlValue::Kind::kString;
      v.string = ParseString();
      return v;
    }
    if (c == '[') {
      ++pos_;
      v.kind = TomlValue::Kind::kArray;
      for (;;) {
        SkipBlank();
        if (Peek() == ']') {
          ++pos_;
          return v;
        }
        v.items.push_back(ParseValue());
        SkipBlank();
        if (Peek() == ',') {
          ++pos_;
        } else if (Peek() != ']') {
          Fail("expected ',' or ']' in array");
        }
      }
    }
    std::string token;
    while (!AtEnd() && !std::isspace(static_cast<unsigned char>(Peek())) &&
           Peek() != ',' && Peek() != ']' && Peek() != '#') {
      token += text_[pos_++];
    }
    if (token == "true" || token == "false") {
      v.kind = TomlValue::Kind::kBool;
      v.boolean = token == "true";
      return v;
    }
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits += ch;
    }
    if (digits.empty()) Fail("expected a value");
    const char* first = digits.data() + (digits[0] == '+' ? 1 : 0);
    const char* last = digits.data() + digits.size();
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      auto [end, ec] = std::from_chars(first, last, v.integer);
      if (ec == std::errc() && end == last) {
        v.kind = TomlValue::Kind::kInteger;
        return v;
      }
    } else {
      auto [end, ec] = std::from_chars(first, last, v.number);
      if (ec == std::errc() && end == last) {
        v.kind = TomlValue::Kind::kFloat;
        return v;
      }
    }
    Fail("invalid value '" + token + "'");
  }

  const std::string& text_;
  size_t pos_ = 0;
  std::string section_;
  TomlTable table_;
};

[[noreturn]] void WrongKind(const std::string& key, const char* expected) {
  throw Error(ErrorCode::kConfigError, "'" + key + "' must be " + expected);
}

std::string AsString(const std::string& key, const TomlValue& v) {
  if (v.kind != TomlValue::Kind::kString) WrongKind(key, "a string");
  return v.string;
}

double AsNumber(const std::string& key, const TomlValue& v) {
  if (v.kind == TomlValue::Kind::kFloat) return v.number;
  if (v.kind == TomlValue::Kind::kInteger) return static_cast<double>(v.integer);
  WrongKind(key, "a number");
}

int64_t AsInteger(const std::string& key, const TomlValue& v) {
  if (v.kind != TomlValue::Kind::kInteger) WrongKind(key, "an integer");
  return v.integer;
}

int AsCount(const std::string& key, const TomlValue& v, int64_t min) {
  const int64_t n = AsInteger(key, v);
  if (n < min || n > 1'000'000) {
    throw Error(ErrorCode::kConfigError,
                "'" + key + "' must be >= " + std::to_string(min));
  }
  return static_cast<int>(n);
}

// A scalar or an array of scalars, as a list.
std::vector<TomlValue> AsList(const TomlValue& v) {
  if (v.kind == TomlValue::Kind::kArray) return v.items;
  return {v};
}

std::vector<std::string> AsStrings(const std::string& key,
                                   const TomlValue& v) {
  std::vector<std::string> out;
  for (const TomlValue& item : AsList(v)) out.push_back(AsString(key, item));
  return out;
}

std::vector<float> AsFloats(const std::string& key, const TomlValue& v) {
  std::vector<float> out;
  for (const TomlValue& item : AsList(v)) {
    out.push_back(static_cast<float>(AsNumber(key, item)));
  }
  return out;
}

template <typename T, typename ParseFn>
std::vector<T> AsEnums(const std::string& key, const TomlValue& v,
                       ParseFn parse) {
  std::vector<T> out;
  for (const std::string& name : AsStrings(key, v)) {
    std::optional<T> parsed = parse(name);
    if (!parsed) {
      throw Error(ErrorCode::kConfigError,
                  "'" + key + "': unknown value '" + name + "'");
    }
    out.push_back(*parsed);
  }
  return out;
}

uint64_t AsSeed(const std::string& key, const TomlValue& v) {
  const int64_t s = AsInteger(key, v);
  if (s < 0) WrongKind(key, "a non-negative integer");
  return static_cast<uint64_t>(s);
}

std::string ResolvePath(const std::string& ref, const fs::path& base) {
  if (ref.empty() || fs::path(ref).is_absolute()) return ref;
  return (base / ref).lexically_normal().string();
}

std::string ResolveModelRef(const std::string& ref, const fs::path& base) {
  return IsDeskModel(ref) ? ref : ResolvePath(ref, base);
}

constexpr std::string_view kOverridePrefix = "noise.sigma_overrides.";

}  // namespace

TomlTable ParseToml(const std::string& text) {
  return TomlParser(text).Parse();
}

ExperimentConfig ParseConfig(const std::string& text,
                             const fs::path& base_dir) {
  const TomlTable table = ParseToml(text);
  ExperimentConfig c;
  bool models_set = false;
  for (const auto& [key, v] : table) {
    if (key == "model" || key == "models") {
      for (const std::string& m : AsStrings(key, v)) {
        c.models.push_back(ResolveModelRef(m, base_dir));
      }
      models_set = true;
    } else if (key == "corpus.path" || key == "corpus") {
      const std::string ref = AsString(key, v);
      c.corpus = ref.starts_with(kBuiltinCorpusPrefix)
                     ? ref
                     : ResolvePath(ref, base_dir);
    } else if (key == "dialects" || key == "dialect") {
      c.axes.dialects = AsEnums<Dialect>(key, v, ParseDialect);
    } else if (key == "noise.sigma" || key == "noise.sigmas") {
      c.axes.noise_sigmas = AsFloats(key, v);
    } else if (key == "noise.clamp") {
      c.axes.noise_clamp = static_cast<float>(AsNumber(key, v));
    } else if (key == "noise.seed" || key == "noise.seeds") {
      c.axes.noise_seeds.clear();
      for (const TomlValue& item : AsList(v)) {
        c.axes.noise_seeds.push_back(AsSeed(key, item));
      }
    } else if (key.starts_with(kOverridePrefix)) {
      c.axes.sigma_overrides[key.substr(kOverridePrefix.size())] =
          static_cast<float>(AsNumber(key, v));
    } else if (key == "opt.level" || key == "opt.levels") {
      c.axes.levels = AsEnums<OptLevel>(key, v, ParseOptLevel);
    } else if (key == "opt.enable") {
      c.axes.enable = AsEnums<PassId>(key, v, ParsePassId);
    } else if (key == "opt.disable") {
      c.axes.disable = AsEnums<PassId>(key, v, ParsePassId);
    } else if (key == "backend" || key == "backends") {
      c.axes.backends = AsEnums<Backend>(key, v, ParseBackend);
    } else if (key == "preprocess.scale") {
      c.preprocess.scale = static_cast<float>(AsNumber(key, v));
    } else if (key == "preprocess.mean") {
      c.preprocess.mean = AsFloats(key, v);
    } else if (key == "preprocess.std") {
      c.preprocess.std = AsFloats(key, v);
    } else if (key == "preprocess.size") {
      const std::vector<TomlValue> dims = AsList(v);
      if (dims.size() != 2) WrongKind(key, "[height, width]");
      c.preprocess.size = {AsCount(key, dims[0], 1), AsCount(key, dims[1], 1)};
    } else if (key == "top_k" || key == "k") {
      c.top_k = AsCount(key, v, 1);
    } else if (key == "repeats") {
      c.repeats = AsCount(key, v, 1);
    } else if (key == "warmup") {
      c.warmup = AsCount(key, v, 0);
    } else if (key == "threads") {
      c.threads = AsCount(key, v, 0);
    } else if (key == "debug.trace_budget_mb") {
      c.trace_budget_bytes = int64_t{AsCount(key, v, 1)} << 20;
    } else if (key == "output.dir" || key == "out") {
      c.out_dir = ResolvePath(AsString(key, v), base_dir);
    } else if (key == "seed") {
      c.seed = AsSeed(key, v);
    } else if (key == "analysis.rbo_p") {
      c.rbo_p = AsNumber(key, v);
    } else if (key == "analysis.theta") {
      c.theta = AsNumber(key, v);
    } else if (key == "analysis.baseline") {
      c.baseline = AsString(key, v);
    } else if (key == "analysis.pairs") {
      for (const std::string& pair : AsStrings(key, v)) {
        const size_t colon = pair.find(':');
        if (colon == std::string::npos) WrongKind(key, "a list of \"a:b\"");
        c.pairs.emplace_back(pair.substr(0, colon), pair.substr(colon + 1));
      }
    } else {
      throw Error(ErrorCode::kConfigError, "unknown key '" + key + "'");
    }
  }
  if (!models_set || c.models.empty()) {
    throw Error(ErrorCode::kConfigError, "'model' is required");
  }
  if (!(c.rbo_p > 0.0 && c.rbo_p < 1.0)) {
    throw Error(ErrorCode::kConfigError, "'analysis.rbo_p' must be in (0, 1)");
  }
  if (!(c.theta >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "'analysis.theta' must be >= 0");
  }
  c.axes.models = c.models;
  if (c.seed) ApplySeed(c, *c.seed);
  return c;
}

ExperimentConfig LoadConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kConfigError,
                "cannot read config " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str(), path.parent_path());
}

void ApplySeed(ExperimentConfig& config, uint64_t seed) {
  config.seed = seed;
  config.axes.noise_seeds = {seed};
}

Corpus ResolveCorpus(const std::string& ref) {
  if (ref.starts_with(kBuiltinCorpusPrefix)) {
    const std::string name = ref.substr(kBuiltinCorpusPrefix.size());
    if (name != kDeskCorpusName) {
      throw Error(ErrorCode::kCorpusError, "unknown builtin corpus " + name);
    }
    return BuildDeskCorpus();
  }
  return LoadCorpus(ref);
}

}  // namespace deltadiff
