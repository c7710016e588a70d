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

#ifndef TUNEPROBE_TEXTGRID_H_
#define TUNEPROBE_TEXTGRID_H_

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tuneprobe {

struct Interval {
  double tmin = 0.0;
  double tmax = 0.0;
  std::string label;

  bool operator==(const Interval&) const = default;
};

struct IntervalTier {
  std::string name;
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<Interval> intervals;

  bool operator==(const IntervalTier&) const = default;
};

// In-memory model of a Praat TextGrid holding interval tiers only.
struct TextGridDoc {
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<IntervalTier> tiers;

  // nullptr when no tier has that name.
  const IntervalTier* find_tier(std::string_view name) const;

  bool operator==(const TextGridDoc&) const = default;
};

struct WordInterval {
  std::string word;
  double tmin = 0.0;
  double tmax = 0.0;
};

// Labels treated as non-words by final_word_interval. Comparison is done on
// the whitespace-trimmed label.
const std::set<std::string>& default_silence_labels();

// Parses the long ("ooTextFile") format and the short format. Declared tier
// and interval counts are enforced; structural invariants (ordering,
// containment, positive durations) are validated before returning.
// Throws ParseError carrying the offending line number.
TextGridDoc parse_textgrid(std::string_view source_text);

TextGridDoc read_textgrid(const std::filesystem::path& path);

// Long-format writer. Times use the shortest representation that parses
// back to the same double, so parse(serialize(doc)) == doc.
std::string serialize_textgrid(const TextGridDoc& doc);

// Last interval on `tier_name` whose trimmed label is not in `silence`.
WordInterval final_word_interval(
    const TextGridDoc& doc, std::string_view tier_name,
    const std::set<std::string>& silence = default_silence_labels());

}  // namespace tuneprobe

#endif  // TUNEPROBE_TEXTGRID_H_
