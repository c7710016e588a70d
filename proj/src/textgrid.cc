// Copyright 2026 The tune-probe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tuneprobe/textgrid.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "tuneprobe/common.h"

namespace tuneprobe {
namespace {

constexpr double kTimeSlack = 1e-9;

struct Token {
  enum class Kind { kWord, kString, kEnd };
  Kind kind = Kind::kEnd;
  std::string text;
  int line = 0;
};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::vector<Token> tokenize(std::string_view src) {
  // UTF-8 byte order mark.
  if (src.size() >= 3 && static_cast<unsigned char>(src[0]) == 0xEF &&
      static_cast<unsigned char>(src[1]) == 0xBB &&
      static_cast<unsigned char>(src[2]) == 0xBF) {
    src.remove_prefix(3);
  }
  std::vector<Token> tokens;
  int line = 1;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (is_space(c)) {
      ++i;
      continue;
    }
    Token tok;
    tok.line = line;
    if (c == '"') {
      tok.kind = Token::Kind::kString;
      ++i;
      bool closed = false;
      while (i < src.size()) {
        char s = src[i];
        if (s == '"') {
          if (i + 1 < src.size() && src[i + 1] == '"') {
            tok.text.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        if (s == '\n') ++line;
        tok.text.push_back(s);
        ++i;
      }
      if (!closed) throw ParseError("unterminated string", tok.line);
    } else {
      tok.kind = Token::Kind::kWord;
      while (i < src.size() && !is_space(src[i])) tok.text.push_back(src[i++]);
    }
    tokens.push_back(std::move(tok));
  }
  Token end;
  end.line = line;
  tokens.push_back(end);
  return tokens;
}

std::string describe(const Token& tok) {
  switch (tok.kind) {
    case Token::Kind::kEnd:
      return "end of file";
    case Token::Kind::kString:
      return "string \"" + tok.text + "\"";
    case Token::Kind::kWord:
      break;
  }
  return "'" + tok.text + "'";
}

bool parse_double(const std::string& text, double* out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last && std::isfinite(*out);
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  TextGridDoc parse() {
    parse_header();
    TextGridDoc doc;
    const Token& first = peek();
    double probe;
    if (first.kind == Token::Kind::kWord && first.text == "xmin") {
      parse_long(doc);
    } else if (first.kind == Token::Kind::kWord &&
               parse_double(first.text, &probe)) {
      parse_short(doc);
    } else {
      throw ParseError("expected 'xmin' or a number after the header, got " +
                           describe(first),
                       first.line);
    }
    if (peek().kind != Token::Kind::kEnd) {
      throw ParseError("unexpected trailing content " + describe(peek()),
                       peek().line);
    }
    return doc;
  }

  const std::vector<int>& tier_lines() const { return tier_lines_; }
  const std::vector<std::vector<int>>& interval_lines() const {
    return interval_lines_;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() {
    const Token& tok = tokens_[pos_];
    if (tok.kind != Token::Kind::kEnd) ++pos_;
    return tok;
  }

  void expect_word(std::string_view word) {
    const Token& tok = next();
    if (tok.kind != Token::Kind::kWord || tok.text != word) {
      throw ParseError("expected '" + std::string(word) + "', got " +
                           describe(tok),
                       tok.line);
    }
  }

  double number(std::string_view what) {
    const Token& tok = next();
    double value = 0.0;
    if (tok.kind != Token::Kind::kWord || !parse_double(tok.text, &value)) {
      throw ParseError("expected a number for " + std::string(what) +
                           ", got " + describe(tok),
                       tok.line);
    }
    return value;
  }

  long count(std::string_view what) {
    const Token& tok = next();
    long value = -1;
    if (tok.kind == Token::Kind::kWord) {
      auto [ptr, ec] = std::from_chars(tok.text.data(),
                                       tok.text.data() + tok.text.size(), value);
      if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
        value = -1;
      }
    }
    if (value < 0) {
      throw ParseError("expected a non-negative count for " +
                           std::string(what) + ", got " + describe(tok),
                       tok.line);
    }
    return value;
  }

  std::string string(std::string_view what) {
    const Token& tok = next();
    if (tok.kind != Token::Kind::kString) {
      throw ParseError("expected a quoted string for " + std::string(what) +
                           ", got " + describe(tok),
                       tok.line);
    }
    return tok.text;
  }

  // `key = <number>`
  double keyed_number(std::string_view key) {
    expect_word(key);
    expect_word("=");
    return number(key);
  }

  std::string keyed_string(std::string_view key) {
    expect_word(key);
    expect_word("=");
    return string(key);
  }

  // Accepts "[k]:" as one token or "[k]" ":" as two.
  void expect_index(long index) {
    const std::string want = "[" + std::to_string(index) + "]";
    const Token& tok = next();
    if (tok.kind == Token::Kind::kWord && tok.text == want + ":") return;
    if (tok.kind == Token::Kind::kWord && tok.text == want) {
      expect_word(":");
      return;
    }
    throw ParseError("expected '" + want + ":', got " + describe(tok),
                     tok.line);
  }

  void parse_header() {
    expect_word("File");
    expect_word("type");
    expect_word("=");
    int line = peek().line;
    std::string type = string("file type");
    if (type != "ooTextFile" && type != "ooTextFile short") {
      throw ParseError("unsupported file type \"" + type + "\"", line);
    }
    expect_word("Object");
    expect_word("class");
    expect_word("=");
    line = peek().line;
    std::string cls = string("object class");
    if (cls.rfind("TextGrid", 0) != 0) {
      throw ParseError("object class is \"" + cls + "\", not a TextGrid",
                       line);
    }
  }

  bool tiers_present() {
    const Token& tok = next();
    if (tok.kind == Token::Kind::kWord && tok.text == "<exists>") return true;
    if (tok.kind == Token::Kind::kWord && tok.text == "<absent>") return false;
    throw ParseError("expected '<exists>' or '<absent>', got " + describe(tok),
                     tok.line);
  }

  void parse_long(TextGridDoc& doc) {
    doc.xmin = keyed_number("xmin");
    doc.xmax = keyed_number("xmax");
    expect_word("tiers?");
    if (!tiers_present()) return;
    expect_word("size");
    expect_word("=");
    long n_tiers = count("tier count");
    expect_word("item");
    expect_word("[]:");
    for (long t = 1; t <= n_tiers; ++t) {
      const Token& head = peek();
      if (head.kind != Token::Kind::kWord || head.text != "item") {
        throw ParseError("declared " + std::to_string(n_tiers) +
                             " tiers, found " + std::to_string(t - 1),
                         head.line);
      }
      tier_lines_.push_back(head.line);
      next();
      expect_index(t);
      IntervalTier tier;
      int class_line = peek().line;
      std::string cls = keyed_string("class");
      if (cls != "IntervalTier") {
        throw ParseError("unsupported tier class \"" + cls + "\"", class_line);
      }
      tier.name = keyed_string("name");
      tier.xmin = keyed_number("xmin");
      tier.xmax = keyed_number("xmax");
      expect_word("intervals:");
      expect_word("size");
      expect_word("=");
      long n_intervals = count("interval count");
      std::vector<int> lines;
      for (long k = 1; k <= n_intervals; ++k) {
        const Token& ih = peek();
        if (ih.kind != Token::Kind::kWord || ih.text != "intervals") {
          throw ParseError("tier '" + tier.name + "' declares " +
                               std::to_string(n_intervals) +
                               " intervals, found " + std::to_string(k - 1),
                           ih.line);
        }
        lines.push_back(ih.line);
        next();
        expect_index(k);
        Interval iv;
        iv.tmin = keyed_number("xmin");
        iv.tmax = keyed_number("xmax");
        iv.label = keyed_string("text");
        tier.intervals.push_back(std::move(iv));
      }
      if (peek().kind == Token::Kind::kWord && peek().text == "intervals") {
        throw ParseError("tier '" + tier.name + "' declares " +
                             std::to_string(n_intervals) +
                             " intervals but has more",
                         peek().line);
      }
      interval_lines_.push_back(std::move(lines));
      doc.tiers.push_back(std::move(tier));
    }
    if (peek().kind == Token::Kind::kWord && peek().text == "item") {
      throw ParseError("declared " + std::to_string(n_tiers) +
                           " tiers but more are present",
                       peek().line);
    }
  }

  void parse_short(TextGridDoc& doc) {
    doc.xmin = number("xmin");
    doc.xmax = number("xmax");
    if (!tiers_present()) return;
    long n_tiers = count("tier count");
    for (long t = 1; t <= n_tiers; ++t) {
      const Token& head = peek();
      if (head.kind != Token::Kind::kString) {
        throw ParseError("declared " + std::to_string(n_tiers) +
                             " tiers, found " + std::to_string(t - 1),
                         head.line);
      }
      tier_lines_.push_back(head.line);
      std::string cls = string("tier class");
      if (cls != "IntervalTier") {
        throw ParseError("unsupported tier class \"" + cls + "\"", head.line);
      }
      IntervalTier tier;
      tier.name = string("tier name");
      tier.xmin = number("tier xmin");
      tier.xmax = number("tier xmax");
      long n_intervals = count("interval count");
      std::vector<int> lines;
      for (long k = 1; k <= n_intervals; ++k) {
        const Token& ih = peek();
        double probe;
        if (ih.kind != Token::Kind::kWord || !parse_double(ih.text, &probe)) {
          throw ParseError("tier '" + tier.name + "' declares " +
                               std::to_string(n_intervals) +
                               " intervals, found " + std::to_string(k - 1),
                           ih.line);
        }
        lines.push_back(ih.line);
        Interval iv;
        iv.tmin = number("interval xmin");
        iv.tmax = number("interval xmax");
        iv.label = string("interval text");
        tier.intervals.push_back(std::move(iv));
      }
      interval_lines_.push_back(std::move(lines));
      doc.tiers.push_back(std::move(tier));
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<int> tier_lines_;
  std::vector<std::vector<int>> interval_lines_;
};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

void validate(const TextGridDoc& doc, const std::vector<int>& tier_lines,
              const std::vector<std::vector<int>>& interval_lines) {
  if (!(doc.xmin <= doc.xmax)) {
    throw ParseError("xmin is greater than xmax", 1);
  }
  for (std::size_t t = 0; t < doc.tiers.size(); ++t) {
    const IntervalTier& tier = doc.tiers[t];
    const std::string where = "tier '" + tier.name + "'";
    if (!(tier.xmin <= tier.xmax)) {
      throw ParseError(where + ": xmin is greater than xmax", tier_lines[t]);
    }
    if (tier.xmin < doc.xmin - kTimeSlack || tier.xmax > doc.xmax + kTimeSlack) {
      throw ParseError(where + ": extends outside the document time range",
                       tier_lines[t]);
    }
    for (std::size_t k = 0; k < tier.intervals.size(); ++k) {
      const Interval& iv = tier.intervals[k];
      const int line = interval_lines[t][k];
      const std::string at = where + " interval " + std::to_string(k + 1);
      if (iv.tmin > iv.tmax) {
        throw ParseError(at + ": xmin is greater than xmax", line);
      }
      if (iv.tmin == iv.tmax && !trim(iv.label).empty()) {
        throw ParseError(at + ": labeled interval has zero duration", line);
      }
      if (iv.tmin < doc.xmin - kTimeSlack || iv.tmax > doc.xmax + kTimeSlack) {
        throw ParseError(at + ": outside the document time range", line);
      }
      if (k > 0 && iv.tmin < tier.intervals[k - 1].tmax - kTimeSlack) {
        throw ParseError(at + ": overlaps or precedes the previous interval",
                         line);
      }
    }
  }
}

std::string format_time(double t) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), t);
  (void)ec;
  return std::string(buf, ptr);
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

const IntervalTier* TextGridDoc::find_tier(std::string_view name) const {
  for (const auto& tier : tiers) {
    if (tier.name == name) return &tier;
  }
  return nullptr;
}

const std::set<std::string>& default_silence_labels() {
  static const std::set<std::string> labels = {"", "sp", "sil", "<eps>"};
  return labels;
}

TextGridDoc parse_textgrid(std::string_view source_text) {
  Parser parser(tokenize(source_text));
  TextGridDoc doc = parser.parse();
  validate(doc, parser.tier_lines(), parser.interval_lines());
  return doc;
}

TextGridDoc read_textgrid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open TextGrid " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_textgrid(buffer.str());
  } catch (const ParseError& e) {
    throw Error(path.string() + ":" + std::to_string(e.line()) + ": " +
                e.message());
  }
}

std::string serialize_textgrid(const TextGridDoc& doc) {
  std::ostringstream out;
  out << "File type = \"ooTextFile\"\n"
      << "Object class = \"TextGrid\"\n\n"
      << "xmin = " << format_time(doc.xmin) << " \n"
      << "xmax = " << format_time(doc.xmax) << " \n";
  if (doc.tiers.empty()) {
    out << "tiers? <absent> \n";
    return out.str();
  }
  out << "tiers? <exists> \n"
      << "size = " << doc.tiers.size() << " \n"
      << "item []: \n";
  for (std::size_t t = 0; t < doc.tiers.size(); ++t) {
    const IntervalTier& tier = doc.tiers[t];
    out << "    item [" << t + 1 << "]:\n"
        << "        class = \"IntervalTier\" \n"
        << "        name = " << quote(tier.name) << " \n"
        << "        xmin = " << format_time(tier.xmin) << " \n"
        << "        xmax = " << format_time(tier.xmax) << " \n"
        << "        intervals: size = " << tier.intervals.size() << " \n";
    for (std::size_t k = 0; k < tier.intervals.size(); ++k) {
      const Interval& iv = tier.intervals[k];
      out << "        intervals [" << k + 1 << "]:\n"
          << "            xmin = " << format_time(iv.tmin) << " \n"
          << "            xmax = " << format_time(iv.tmax) << " \n"
          << "            text = " << quote(iv.label) << " \n";
    }
  }
  return out.str();
}

WordInterval final_word_interval(const TextGridDoc& doc,
                                 std::string_view tier_name,
                                 const std::set<std::string>& silence) {
  const IntervalTier* tier = doc.find_tier(tier_name);
  if (tier == nullptr) {
    throw Error("missing tier '" + std::string(tier_name) + "'");
  }
  for (auto it = tier->intervals.rbegin(); it != tier->intervals.rend(); ++it) {
    std::string label = trim(it->label);
    if (silence.count(label) != 0) continue;
    return WordInterval{std::move(label), it->tmin, it->tmax};
  }
  throw Error("tier '" + std::string(tier_name) + "' has no word interval");
}

}  // namespace tuneprobe
