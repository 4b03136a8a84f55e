// Copyright 2026 The Derail Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "derail/checkpoint.h"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "derail/errors.h"
#include "derail/hashing.h"

namespace derail {
namespace {

constexpr const char* kFormat = "derail-checkpoint";
constexpr int kVersion = 1;

void AppendFloat32(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  }
}

double ReadFloat32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i]))
            << (8 * i);
  }
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

nlohmann::json ModelConfigToJson(const ModelConfig& cfg) {
  return {{"num_layers", cfg.num_layers},   {"num_heads", cfg.num_heads},
          {"hidden", cfg.hidden},           {"ffn_multiplier", cfg.ffn_multiplier},
          {"max_len", cfg.max_len},         {"vocab_size", cfg.vocab_size},
          {"dropout", cfg.dropout}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.num_layers = j.value("num_layers", cfg.num_layers);
  cfg.num_heads = j.value("num_heads", cfg.num_heads);
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.ffn_multiplier = j.value("ffn_multiplier", cfg.ffn_multiplier);
  cfg.max_len = j.value("max_len", cfg.max_len);
  cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
  cfg.dropout = j.value("dropout", cfg.dropout);
  return cfg;
}

void SaveCheckpoint(std::ostream& out, const ModelParams& params,
                    const nlohmann::json& meta) {
  std::string payload;
  payload.reserve(params.NumScalars() * 4);
  nlohmann::json tensors = nlohmann::json::array();
  params.ForEachTensor([&](const std::string& name, const Matrix& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) AppendFloat32(payload, m(i, j));
    }
  });
  nlohmann::json header = {
      {"format", kFormat},
      {"version", kVersion},
      {"model", ModelConfigToJson(params.config)},
      {"tensors", tensors},
      {"payload_bytes", payload.size()},
      {"checksum", HexDigest(Fnv1a64(payload))},
      {"meta", meta},
  };
  out << header.dump() << '\n';
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error("failed to write checkpoint");
}

LoadedCheckpoint LoadCheckpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing checkpoint header", 1);
  LoadedCheckpoint loaded;
  try {
    loaded.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), 1);
  }
  const auto& header = loaded.header;
  if (header.value("format", "") != kFormat ||
      header.value("version", 0) != kVersion) {
    throw ParseError("not a version 1 derail checkpoint", 1);
  }

  const auto bytes = header.at("payload_bytes").get<std::size_t>();
  std::string payload(bytes, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw IntegrityError("checkpoint payload truncated");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IntegrityError("trailing bytes after checkpoint payload");
  }
  if (HexDigest(Fnv1a64(payload)) != header.at("checksum").get<std::string>()) {
    throw IntegrityError("checkpoint checksum mismatch");
  }

  ModelConfig cfg = ModelConfigFromJson(header.at("model"));
  cfg.Validate();
  loaded.params = InitParams(cfg, 0);
  const auto& tensors = header.at("tensors");
  std::size_t index = 0;
  std::size_t offset = 0;
  loaded.params.ForEachTensor([&](const std::string& name, Matrix& m) {
    if (index >= tensors.size() ||
        tensors[index].at("name").get<std::string>() != name ||
        tensors[index].at("rows").get<Eigen::Index>() != m.rows() ||
        tensors[index].at("cols").get<Eigen::Index>() != m.cols()) {
      throw IntegrityError("checkpoint tensor table does not match model '" +
                           name + "'");
    }
    ++index;
    if (offset + static_cast<std::size_t>(m.size()) * 4 > payload.size()) {
      throw IntegrityError("checkpoint payload too short");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = ReadFloat32(payload.data() + offset);
        offset += 4;
      }
    }
  });
  if (index != tensors.size() || offset != payload.size()) {
    throw IntegrityError("checkpoint has extra tensors");
  }
  return loaded;
}

std::string CheckpointChecksum(const nlohmann::json& header) {
  return header.at("checksum").get<std::string>();
}

}  // namespace derail
