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

#ifndef DERAIL_CHECKPOINT_H_
#define DERAIL_CHECKPOINT_H_

#include <iosfwd>
#include <string>

#include "derail/encoder_model.h"
#include "json.hpp"

namespace derail {

// Checkpoint layout:
//
//   <JSON header>\n<payload>
//
// The header is a single-line JSON object with "format", "version", "model"
// (ModelConfig), "tensors" (name and shape, in ModelParams::ForEachTensor
// order), "payload_bytes", "checksum" (FNV-1a 64 of the payload, hex) and any
// caller metadata under "meta" (vocab hash, seed, config hash).
// The payload is every tensor in that order, row-major, little-endian
// IEEE-754 float32.
//
// Parameters are rounded to float32 on save.

nlohmann::json ModelConfigToJson(const ModelConfig& cfg);
ModelConfig ModelConfigFromJson(const nlohmann::json& j);

void SaveCheckpoint(std::ostream& out, const ModelParams& params,
                    const nlohmann::json& meta);

struct LoadedCheckpoint {
  ModelParams params;
  nlohmann::json header;
};

// Throws ParseError on a malformed header and IntegrityError on a checksum
// or size mismatch.
LoadedCheckpoint LoadCheckpoint(std::istream& in);

// Checksum recorded in a checkpoint header.
std::string CheckpointChecksum(const nlohmann::json& header);

}  // namespace derail

#endif  // DERAIL_CHECKPOINT_H_
