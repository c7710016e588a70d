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

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "tuneprobe/common.h"

namespace tuneprobe {
namespace {

const char kMinimal[] = R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 1
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 1
        intervals: size = 1
        intervals [1]:
            xmin = 0.0
            xmax = 1.0
            text = "Harmony"
)";

std::string fixture_path() { return std::string(TUNEPROBE_TEST_DATA) + "/utterance.TextGrid"; }

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return s.replace(pos, from.size(), to);
}

int error_line(const std::string& text) {
  try {
    parse_textgrid(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "expected a parse error";
  return -1;
}

TEST(ParseTextGrid, MinimalFile) {
  TextGridDoc doc = parse_textgrid(kMinimal);
  ASSERT_EQ(doc.tiers.size(), 1u);
  EXPECT_EQ(doc.tiers[0].name, "words");
  ASSERT_EQ(doc.tiers[0].intervals.size(), 1u);
  EXPECT_EQ(doc.tiers[0].intervals[0], (Interval{0.0, 1.0, "Harmony"}));
  EXPECT_EQ(doc.xmin, 0.0);
  EXPECT_EQ(doc.xmax, 1.0);
}

TEST(ParseTextGrid, DeclaredIntervalCountMismatchNamesTier) {
  std::string text = std::string(kMinimal);
  text = replace(text, "intervals: size = 1", "intervals: size = 3");
  text = replace(text, "            text = \"Harmony\"\n",
                 "            text = \"Harmony\"\n        intervals [2]:\n"
                 "            xmin = 1.0\n            xmax = 1.0\n            text = \"\"\n");
  try {
    parse_textgrid(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'words'"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
}

TEST(ParseTextGrid, ErrorsCarryLineNumbers) {
  std::string bad_time = replace(kMinimal, "xmax = 1.0", "xmax = later");
  EXPECT_EQ(error_line(bad_time), 17);

  std::string unterminated = replace(kMinimal, "text = \"Harmony\"", "text = \"Harmony");
  EXPECT_EQ(error_line(unterminated), 18);

  std::string header = replace(kMinimal, "ooTextFile", "binaryFile");
  EXPECT_EQ(error_line(header), 1);

  std::string tiers = replace(kMinimal, "size = 1\nitem", "size = 2\nitem");
  EXPECT_GT(error_line(tiers), 0);
}

TEST(ParseTextGrid, FixtureFileWithTwoTiers) {
  TextGridDoc doc = read_textgrid(fixture_path());
  ASSERT_EQ(doc.tiers.size(), 2u);
  EXPECT_EQ(doc.tiers[0].intervals.size(), 4u);
  EXPECT_EQ(doc.tiers[1].intervals[0].label, "a \"quoted\" label");
}

TEST(ParseTextGrid, RoundTripPreservesStructure) {
  TextGridDoc doc = read_textgrid(fixture_path());
  std::string once = serialize_textgrid(doc);
  TextGridDoc again = parse_textgrid(once);
  EXPECT_EQ(again, doc);
  EXPECT_EQ(serialize_textgrid(again), once);
}

TEST(ParseTextGrid, ShortFormat) {
  const char text[] =
      "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n1.2\n<exists>\n1\n"
      "\"IntervalTier\"\n\"words\"\n0\n1.2\n1\n0\n1.2\n\"Harmony\"\n";
  TextGridDoc doc = parse_textgrid(text);
  ASSERT_EQ(doc.tiers.size(), 1u);
  EXPECT_EQ(doc.tiers[0].intervals[0], (Interval{0.0, 1.2, "Harmony"}));
}

TEST(ParseTextGrid, RejectsOverlappingIntervals) {
  TextGridDoc doc = read_textgrid(fixture_path());
  doc.tiers[0].intervals[1].tmin = 0.4;
  EXPECT_THROW(parse_textgrid(serialize_textgrid(doc)), ParseError);
}

TEST(ReadTextGrid, ErrorIncludesPathAndLine) {
  auto path = std::filesystem::temp_directory_path() / "tuneprobe_bad.TextGrid";
  {
    std::ofstream out(path);
    out << replace(kMinimal, "xmax = 1.0", "xmax = x");
  }
  try {
    read_textgrid(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(path.string() + ":17:"), std::string::npos)
        << e.what();
  }
  std::filesystem::remove(path);
}

TEST(FinalWordInterval, SkipsTrailingSilence) {
  TextGridDoc doc = read_textgrid(fixture_path());
  WordInterval w = final_word_interval(doc, "words");
  EXPECT_EQ(w.word, "Melanie");
  EXPECT_DOUBLE_EQ(w.tmin, 1.0);
  EXPECT_DOUBLE_EQ(w.tmax, 1.9);
}

TEST(FinalWordInterval, SingleWord) {
  TextGridDoc doc;
  doc.xmax = 1.2;
  doc.tiers.push_back({"words", 0.0, 1.2, {{0.0, 1.2, "Harmony"}}});
  WordInterval w = final_word_interval(doc, "words");
  EXPECT_EQ(w.word, "Harmony");
  EXPECT_EQ(w.tmin, 0.0);
  EXPECT_EQ(w.tmax, 1.2);
}

TEST(FinalWordInterval, OnlySilenceIsAnError) {
  TextGridDoc doc;
  doc.xmax = 1.0;
  doc.tiers.push_back({"words", 0.0, 1.0, {{0.0, 0.5, "sil"}, {0.5, 0.8, " sp "}, {0.8, 1.0, ""}}});
  try {
    final_word_interval(doc, "words");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no word interval"), std::string::npos);
  }
  EXPECT_THROW(final_word_interval(doc, "phones"), Error);
}

TEST(FinalWordInterval, CustomSilenceSet) {
  TextGridDoc doc = read_textgrid(fixture_path());
  WordInterval w = final_word_interval(doc, "words", {"", "Melanie"});
  EXPECT_EQ(w.word, "honored");
}

// Random well-formed tiers: the final word always lies inside the document
// range, and the serialized form is a fixpoint.
TEST(TextGridProperty, RandomDocuments) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> count(1, 8);
  std::uniform_real_distribution<double> len(0.01, 0.7);
  std::bernoulli_distribution silent(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    TextGridDoc doc;
    IntervalTier tier{"words", 0.0, 0.0, {}};
    double t = 0.0;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      double next = t + len(rng);
      tier.intervals.push_back({t, next, silent(rng) ? "" : "w" + std::to_string(i)});
      t = next;
    }
    tier.intervals.back().label = "last";
    tier.xmax = t;
    doc.xmax = t;
    doc.tiers.push_back(tier);
    std::string text = serialize_textgrid(doc);
    TextGridDoc parsed = parse_textgrid(text);
    ASSERT_EQ(parsed, doc);
    ASSERT_EQ(serialize_textgrid(parsed), text);
    WordInterval w = final_word_interval(parsed, "words");
    EXPECT_GE(w.tmin, parsed.xmin);
    EXPECT_LE(w.tmax, parsed.xmax);
    EXPECT_LT(w.tmin, w.tmax);
  }
}

}  // namespace
}  // namespace tuneprobe
