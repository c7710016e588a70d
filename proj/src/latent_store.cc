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

#include "tuneprobe/latent_store.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tuneprobe {
namespace {

using nlohmann::json;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[offset + i]))
         << (8 * i);
  }
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

LatentHeader decode_header(std::string_view bytes, std::string_view source) {
  if (bytes.size() < kLatentHeaderBytes) {
    throw Error(std::string(source) + ": truncated header (" +
                std::to_string(bytes.size()) + " of " +
                std::to_string(kLatentHeaderBytes) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kLatentMagic, 4) != 0) {
    throw Error(std::string(source) + ": bad magic, not an LTNT file");
  }
  LatentHeader header;
  header.version = get_u32(bytes, 4);
  if (header.version != kLatentFormatVersion) {
    throw Error(std::string(source) + ": format version " +
                std::to_string(header.version) + ", expected " +
                std::to_string(kLatentFormatVersion));
  }
  header.frame_rate = std::bit_cast<float>(get_u32(bytes, 8));
  header.dim = get_u32(bytes, 12);
  header.n_frames = get_u32(bytes, 16);
  return header;
}

std::string json_string_value(const json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

UtteranceRecord record_from_json(const json& j, int line) {
  auto fail = [&](const std::string& msg) -> Error {
    std::string id = j.contains("id") && j["id"].is_string()
                         ? j["id"].get<std::string>()
                         : "?";
    return Error("manifest line " + std::to_string(line) + " (record " + id +
                 "): " + msg);
  };
  UtteranceRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.speaker = j.value("speaker", "");
    r.sentence = j.value("sentence", "");
    std::string origin = j.value("origin", "synthetic");
    if (origin == "resynthesized") {
      r.origin = Origin::kResynthesized;
    } else if (origin == "imitated") {
      r.origin = Origin::kImitated;
    } else if (origin == "synthetic") {
      r.origin = Origin::kSynthetic;
    } else {
      throw fail("unknown origin \"" + origin + "\"");
    }
    const json& wi = j.at("word_interval");
    if (!wi.is_array() || wi.size() != 2) {
      throw fail("word_interval must be [tmin, tmax]");
    }
    r.tmin = wi[0].get<double>();
    r.tmax = wi[1].get<double>();
    for (const auto& [name, path] : j.at("streams").items()) {
      r.streams[name] = path.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  return r;
}

json record_to_json(const UtteranceRecord& r) {
  json j;
  j["id"] = r.id;
  j["tune"] = r.tune.code();
  j["speaker"] = r.speaker;
  j["sentence"] = r.sentence;
  j["origin"] = std::string(origin_name(r.origin));
  j["word_interval"] = {r.tmin, r.tmax};
  json streams = json::object();
  for (const auto& [name, path] : r.streams) streams[name] = path;
  j["streams"] = streams;
  return j;
}

}  // namespace

std::string encode_latents(const LatentSequence& seq) {
  if (seq.n_frames() < 1 || seq.dim() < 1) {
    throw Error("latent sequence must have at least one frame and one dim");
  }
  if (!seq.frames.allFinite()) {
    throw Error("latent sequence holds non-finite values");
  }
  std::string out;
  out.reserve(kLatentHeaderBytes + 4 * static_cast<std::size_t>(seq.frames.size()));
  out.append(kLatentMagic, 4);
  put_u32(out, kLatentFormatVersion);
  put_u32(out, std::bit_cast<uint32_t>(seq.frame_rate));
  put_u32(out, static_cast<uint32_t>(seq.dim()));
  put_u32(out, static_cast<uint32_t>(seq.n_frames()));
  const float* data = seq.frames.data();
  for (Eigen::Index i = 0; i < seq.frames.size(); ++i) {
    put_u32(out, std::bit_cast<uint32_t>(data[i]));
  }
  return out;
}

LatentSequence decode_latents(std::string_view bytes, std::string_view source,
                              std::size_t* consumed) {
  LatentHeader header = decode_header(bytes, source);
  if (header.n_frames == 0 || header.dim == 0) {
    throw Error(std::string(source) + ": empty matrix (" +
                std::to_string(header.n_frames) + " x " +
                std::to_string(header.dim) + ")");
  }
  const std::size_t payload =
      4ull * static_cast<std::size_t>(header.n_frames) * header.dim;
  const std::size_t available = bytes.size() - kLatentHeaderBytes;
  if (available < payload) {
    throw Error(std::string(source) + ": truncated payload, expected " +
                std::to_string(payload) + " bytes, found " +
                std::to_string(available));
  }
  LatentSequence seq;
  seq.frame_rate = header.frame_rate;
  seq.frames.resize(header.n_frames, header.dim);
  float* data = seq.frames.data();
  for (std::size_t i = 0; i < payload / 4; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kLatentHeaderBytes + 4 * i));
  }
  if (consumed != nullptr) *consumed = kLatentHeaderBytes + payload;
  return seq;
}

void write_latents(const LatentSequence& seq, const std::filesystem::path& path) {
  write_file(path, encode_latents(seq));
}

LatentSequence read_latents(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  std::size_t consumed = 0;
  LatentSequence seq = decode_latents(bytes, path.string(), &consumed);
  if (consumed != bytes.size()) {
    throw Error(path.string() + ": " + std::to_string(bytes.size() - consumed) +
                " trailing bytes after payload");
  }
  return seq;
}

LatentHeader read_latent_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string bytes(kLatentHeaderBytes, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(kLatentHeaderBytes));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  return decode_header(bytes, path.string());
}

void write_matrix_bundle(const std::filesystem::path& path,
                         const std::vector<Eigen::MatrixXd>& matrices) {
  std::string out;
  for (const auto& m : matrices) {
    LatentSequence record;
    record.frame_rate = 0.0f;
    record.frames = m.cast<float>();
    out += encode_latents(record);
  }
  write_file(path, out);
}

std::vector<Eigen::MatrixXd> read_matrix_bundle(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  std::vector<Eigen::MatrixXd> matrices;
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    std::size_t consumed = 0;
    LatentSequence record = decode_latents(
        std::string_view(bytes).substr(offset), path.string(), &consumed);
    matrices.push_back(record.frames.cast<double>());
    offset += consumed;
  }
  return matrices;
}

std::string_view origin_name(Origin origin) {
  switch (origin) {
    case Origin::kResynthesized:
      return "resynthesized";
    case Origin::kImitated:
      return "imitated";
    case Origin::kSynthetic:
      return "synthetic";
  }
  return "synthetic";
}

std::string codebook_stream_name(int level) {
  return "codebook" + std::to_string(level);
}

bool is_codebook_stream(std::string_view name, int* level) {
  constexpr std::string_view prefix = "codebook";
  if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) {
    return false;
  }
  int k = 0;
  for (char c : name.substr(prefix.size())) {
    if (c < '0' || c > '9') return false;
    k = k * 10 + (c - '0');
  }
  if (level != nullptr) *level = k;
  return true;
}

std::filesystem::path CorpusManifest::stream_path(const UtteranceRecord& record,
                                                  std::string_view stream) const {
  auto it = record.streams.find(std::string(stream));
  if (it == record.streams.end()) {
    throw Error("record " + record.id + ": missing stream " + std::string(stream));
  }
  std::filesystem::path p(it->second);
  return p.is_absolute() ? p : base_dir / p;
}

int CorpusManifest::expected_dim(std::string_view stream) const {
  const bool codebook = is_codebook_stream(stream);
  const char* key = codebook ? "codeword_dim" : "unquantized_dim";
  auto it = metadata.find(key);
  if (it == metadata.end()) return codebook ? kCodewordDim : kUnquantizedDim;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw Error(std::string("manifest metadata ") + key + " is not an integer");
  }
}

const UtteranceRecord* CorpusManifest::find(std::string_view id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

CorpusValidation validate_corpus(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open manifest " + manifest_path.string());
  CorpusValidation result;
  CorpusManifest& manifest = result.manifest;
  manifest.base_dir = manifest_path.parent_path();
  std::vector<std::string>& problems = result.problems;

  std::string line;
  int line_no = 0;
  std::vector<std::pair<UtteranceRecord, std::string>> parsed;  // record, raw tune
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("manifest line " + std::to_string(line_no) +
                  ": invalid JSON: " + e.what());
    }
    if (j.contains("metadata")) {
      for (const auto& [k, v] : j["metadata"].items()) {
        manifest.metadata[k] = json_string_value(v);
      }
      continue;
    }
    UtteranceRecord r = record_from_json(j, line_no);
    std::string tune = j.contains("tune") ? json_string_value(j["tune"]) : "";
    parsed.emplace_back(std::move(r), std::move(tune));
  }

  std::map<std::string, int> id_counts;
  for (const auto& [r, tune] : parsed) ++id_counts[r.id];
  for (const auto& [id, n] : id_counts) {
    if (n > 1) {
      problems.push_back("record " + id + ": duplicate id (" +
                         std::to_string(n) + " records)");
    }
  }

  for (auto& [r, tune_code] : parsed) {
    const std::string who = "record " + r.id + ": ";
    auto tune = Tune::parse(tune_code);
    if (!tune) {
      problems.push_back(who + "unknown tune code \"" + tune_code + "\"");
    } else {
      r.tune = *tune;
    }
    if (!(r.tmin < r.tmax)) {
      problems.push_back(who + "word_interval tmin must be below tmax");
    }
    if (r.streams.empty()) {
      problems.push_back(who + "no streams");
    }
    long frames_seen = -1;
    std::string frames_from;
    for (const auto& [name, rel] : r.streams) {
      if (name != kUnquantizedStream && !is_codebook_stream(name)) {
        problems.push_back(who + "unknown stream name \"" + name + "\"");
        continue;
      }
      std::filesystem::path path = manifest.stream_path(r, name);
      if (!std::filesystem::exists(path)) {
        problems.push_back(who + "stream " + name + " file missing: " +
                           path.string());
        continue;
      }
      LatentHeader header;
      try {
        header = read_latent_header(path);
      } catch (const Error& e) {
        problems.push_back(who + "stream " + name + ": " + e.what());
        continue;
      }
      int want = manifest.expected_dim(name);
      if (static_cast<int>(header.dim) != want) {
        problems.push_back(who + "stream " + name + " dim mismatch: file has " +
                           std::to_string(header.dim) + ", manifest expects " +
                           std::to_string(want));
      }
      if (header.n_frames == 0) {
        problems.push_back(who + "stream " + name + " has no frames");
        continue;
      }
      if (frames_seen >= 0 && frames_seen != static_cast<long>(header.n_frames)) {
        problems.push_back(who + "stream " + name + " has " +
                           std::to_string(header.n_frames) + " frames but " +
                           frames_from + " has " + std::to_string(frames_seen));
      }
      if (frames_seen < 0) {
        frames_seen = header.n_frames;
        frames_from = name;
        double duration = header.n_frames / static_cast<double>(header.frame_rate);
        if (r.tmax <= 0.0 || r.tmin >= duration) {
          problems.push_back(who + "word_interval lies outside the " +
                             std::to_string(duration) + " s sequence");
        }
      }
    }
    manifest.records.push_back(std::move(r));
  }
  std::sort(problems.begin(), problems.end());
  return result;
}

CorpusManifest load_corpus(const std::filesystem::path& manifest_path) {
  CorpusValidation v = validate_corpus(manifest_path);
  if (!v.ok()) {
    std::string msg = manifest_path.string() + ": " + v.problems.front();
    if (v.problems.size() > 1) {
      msg += " (and " + std::to_string(v.problems.size() - 1) + " more)";
    }
    throw Error(msg);
  }
  return std::move(v.manifest);
}

void write_manifest(const CorpusManifest& manifest,
                    const std::filesystem::path& path) {
  std::ostringstream out;
  if (!manifest.metadata.empty()) {
    json meta = json::object();
    for (const auto& [k, v] : manifest.metadata) meta[k] = v;
    out << json{{"metadata", meta}}.dump() << "\n";
  }
  for (const auto& r : manifest.records) out << record_to_json(r).dump() << "\n";
  write_file(path, out.str());
}

}  // namespace tuneprobe
