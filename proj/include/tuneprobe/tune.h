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

#ifndef TUNEPROBE_TUNE_H_
#define TUNEPROBE_TUNE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tuneprobe {

// A nuclear tune: pitch accent, phrase accent and boundary tone, each High
// or Low. Stored as three bits (pitch accent is the most significant), so
// the codes enumerate as lll, llh, lhl, lhh, hll, hlh, hhl, hhh.
class Tune {
 public:
  static constexpr int kCount = 8;

  constexpr Tune() = default;
  static constexpr Tune from_bits(uint8_t bits) { return Tune(bits & 7); }
  // nullopt unless `code` is three characters from {h, l}.
  static std::optional<Tune> parse(std::string_view code);

  constexpr uint8_t bits() const { return bits_; }
  constexpr bool pitch_accent_high() const { return bits_ & 4; }
  constexpr bool phrase_accent_high() const { return bits_ & 2; }
  constexpr bool boundary_tone_high() const { return bits_ & 1; }
  std::string code() const;

  constexpr bool operator==(const Tune&) const = default;

 private:
  constexpr explicit Tune(uint8_t bits) : bits_(bits) {}
  uint8_t bits_ = 0;
};

constexpr std::array<Tune, Tune::kCount> all_tunes() {
  std::array<Tune, Tune::kCount> tunes{};
  for (int i = 0; i < Tune::kCount; ++i) {
    tunes[i] = Tune::from_bits(static_cast<uint8_t>(i));
  }
  return tunes;
}

inline std::optional<Tune> Tune::parse(std::string_view code) {
  if (code.size() != 3) return std::nullopt;
  uint8_t bits = 0;
  for (char c : code) {
    bits = static_cast<uint8_t>(bits << 1);
    if (c == 'h') {
      bits |= 1;
    } else if (c != 'l') {
      return std::nullopt;
    }
  }
  return Tune(bits);
}

inline std::string Tune::code() const {
  std::string s(3, 'l');
  if (pitch_accent_high()) s[0] = 'h';
  if (phrase_accent_high()) s[1] = 'h';
  if (boundary_tone_high()) s[2] = 'h';
  return s;
}

}  // namespace tuneprobe

#endif  // TUNEPROBE_TUNE_H_
