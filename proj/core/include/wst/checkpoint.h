// Copyright (c) 2026 The wst Authors
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

#ifndef WST_CHECKPOINT_H_
#define WST_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "wst/model.h"
#include "wst/training.h"

namespace wst {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  Model model;
  TrainingConfig training;
  int step = 0;
};

// Writes config.json, params.bin and (when `log` is non-empty) loss_log.csv.
// Parameters are stored as float32; values that are already float-rounded
// round-trip bit-exactly.
void SaveCheckpoint(const std::filesystem::path& dir, const Model& model,
                    const TrainingConfig& training, int step,
                    const std::vector<LossLogRow>& log = {});
Checkpoint LoadCheckpoint(const std::filesystem::path& dir);

// params.bin container: "WSTP", u32 version, u32 count, then per array
// u32 name length, name bytes, u32 rank, u32 dims..., float32 data.
void WriteParams(const std::filesystem::path& path, const ParameterStore& params);
void ReadParams(const std::filesystem::path& path, ParameterStore& params);

// Token stats file: {"token_k": {"mean": m, "std": s}} for every token k.
std::string TokenStatsToJson(const TokenWeightStats& stats);
TokenWeightStats TokenStatsFromJson(const std::string& text);

void WriteLossLog(const std::filesystem::path& path, const std::vector<LossLogRow>& log);

// Writes `contents` to a sibling temp file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace wst

#endif  // WST_CHECKPOINT_H_
