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

#include "wst/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wst/errors.h"

namespace wst {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'W', 'S', 'T', 'P'};

std::uint32_t Le32(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

void PutU32(std::string& out, std::uint32_t v) {
  v = Le32(v);
  out.append(reinterpret_cast<const char*>(&v), 4);
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return Le32(v);
  }
  std::string Bytes(size_t n) {
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void Need(size_t n) const {
    if (pos_ + n > data_.size()) throw ValidationError("params.bin is truncated");
  }
  std::string data_;
  size_t pos_ = 0;
};

std::string ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json ModelConfigToJson(const ModelConfig& c) {
  return {{"num_tokens", c.num_tokens},
          {"token_dim", c.token_dim},
          {"phoneme_embed_dim", c.phoneme_embed_dim},
          {"enc_dim", c.enc_dim},
          {"word_seq_dim", c.word_seq_dim},
          {"ref_dim", c.ref_dim},
          {"ref_conv_channels", c.ref_conv_channels},
          {"attention_dim", c.attention_dim},
          {"duration_hidden", c.duration_hidden},
          {"prenet_dim", c.prenet_dim},
          {"decoder_dim", c.decoder_dim},
          {"prior_dim", c.prior_dim},
          {"fixed_sigma", c.fixed_sigma},
          {"fixed_sigma_value", c.fixed_sigma_value},
          {"min_sigma", c.min_sigma},
          {"seed", c.seed}};
}

ModelConfig ModelConfigFromJson(const json& j) {
  ModelConfig c;
  c.num_tokens = j.at("num_tokens").get<int>();
  c.token_dim = j.at("token_dim").get<int>();
  c.phoneme_embed_dim = j.at("phoneme_embed_dim").get<int>();
  c.enc_dim = j.at("enc_dim").get<int>();
  c.word_seq_dim = j.at("word_seq_dim").get<int>();
  c.ref_dim = j.at("ref_dim").get<int>();
  c.ref_conv_channels = j.at("ref_conv_channels").get<int>();
  c.attention_dim = j.at("attention_dim").get<int>();
  c.duration_hidden = j.at("duration_hidden").get<int>();
  c.prenet_dim = j.at("prenet_dim").get<int>();
  c.decoder_dim = j.at("decoder_dim").get<int>();
  c.prior_dim = j.at("prior_dim").get<int>();
  c.fixed_sigma = j.at("fixed_sigma").get<bool>();
  c.fixed_sigma_value = j.at("fixed_sigma_value").get<double>();
  c.min_sigma = j.at("min_sigma").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json TrainingConfigToJson(const TrainingConfig& c) {
  return {{"adam_betas", {c.adam_beta1, c.adam_beta2}},
          {"adam_epsilon", c.adam_epsilon},
          {"batch_size", c.batch_size},
          {"warmup_steps", c.warmup_steps},
          {"decay_period", c.decay_period},
          {"l2_factor", c.l2_factor},
          {"base_lr", c.base_lr},
          {"clip_norm", c.clip_norm},
          {"lambda_duration", c.lambda_duration},
          {"lambda_prior", c.lambda_prior},
          {"prenet_dropout", c.prenet_dropout},
          {"pitch_feedback_dropout", c.pitch_feedback_dropout},
          {"seed", c.seed},
          {"max_steps", c.max_steps},
          {"snapshot_every", c.snapshot_every}};
}

TrainingConfig TrainingConfigFromJson(const json& j) {
  TrainingConfig c;
  auto betas = j.at("adam_betas").get<std::vector<double>>();
  if (betas.size() != 2) throw ValidationError("adam_betas must have two entries");
  c.adam_beta1 = betas[0];
  c.adam_beta2 = betas[1];
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.warmup_steps = j.at("warmup_steps").get<int>();
  c.decay_period = j.at("decay_period").get<int>();
  c.l2_factor = j.at("l2_factor").get<double>();
  c.base_lr = j.at("base_lr").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.lambda_duration = j.at("lambda_duration").get<double>();
  c.lambda_prior = j.at("lambda_prior").get<double>();
  c.prenet_dropout = j.at("prenet_dropout").get<double>();
  c.pitch_feedback_dropout = j.at("pitch_feedback_dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_steps = j.at("max_steps").get<int>();
  c.snapshot_every = j.at("snapshot_every").get<int>();
  return c;
}

json TokenStatsJson(const TokenWeightStats& stats) {
  json j = json::object();
  for (int k = 0; k < stats.num_tokens(); ++k) {
    j["token_" + std::to_string(k)] = {{"mean", stats.mean[k]}, {"std", stats.std[k]}};
  }
  return j;
}

TokenWeightStats TokenStatsFromJsonValue(const json& j) {
  TokenWeightStats s;
  for (int k = 0;; ++k) {
    auto it = j.find("token_" + std::to_string(k));
    if (it == j.end()) break;
    s.mean.push_back(it->at("mean").get<double>());
    s.std.push_back(it->at("std").get<double>());
  }
  if (s.mean.empty() || s.mean.size() != j.size()) {
    throw ValidationError("token stats must hold token_0..token_{K-1}");
  }
  return s;
}

}  // namespace

std::string TokenStatsToJson(const TokenWeightStats& stats) {
  return TokenStatsJson(stats).dump(2) + "\n";
}

TokenWeightStats TokenStatsFromJson(const std::string& text) {
  try {
    return TokenStatsFromJsonValue(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed token stats: ") + e.what());
  }
}

void WriteFileAtomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw ValidationError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

void WriteParams(const fs::path& path, const ParameterStore& params) {
  std::string out(kMagic, 4);
  PutU32(out, kCheckpointFormatVersion);
  PutU32(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params.All()) {
    PutU32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    PutU32(out, 2);
    PutU32(out, static_cast<std::uint32_t>(p->value.rows()));
    PutU32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(p->value.data()[i])));
    }
  }
  WriteFileAtomic(path, out);
}

void ReadParams(const fs::path& path, ParameterStore& params) {
  Reader r(ReadAll(path));
  if (r.Bytes(4) != std::string(kMagic, 4)) throw ValidationError("params.bin: bad magic");
  const std::uint32_t version = r.U32();
  if (version != static_cast<std::uint32_t>(kCheckpointFormatVersion)) {
    throw ValidationError("params.bin: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.U32();
  if (count != params.size()) throw ValidationError("params.bin: parameter count mismatch");
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.Bytes(r.U32());
    if (!params.Contains(name)) throw ValidationError("params.bin: unknown array " + name);
    Parameter& p = params.Get(name);
    const std::uint32_t rank = r.U32();
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = r.U32();
    const bool ok = (rank == 2 && dims[0] == p.value.rows() && dims[1] == p.value.cols()) ||
                    (rank == 1 && p.value.rows() == 1 && dims[0] == p.value.cols());
    if (!ok) throw ValidationError("params.bin: shape mismatch for " + name);
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      p.value.data()[i] = std::bit_cast<float>(r.U32());
    }
  }
  if (!r.done()) throw ValidationError("params.bin: trailing bytes");
}

void WriteLossLog(const fs::path& path, const std::vector<LossLogRow>& log) {
  std::ostringstream ss;
  ss.precision(9);
  ss << "step,lr,recon,duration,prior,total\n";
  for (const LossLogRow& r : log) {
    ss << r.step << ',' << r.lr << ',' << r.loss.recon << ',' << r.loss.duration << ','
       << r.loss.prior << ',' << r.loss.total << '\n';
  }
  WriteFileAtomic(path, ss.str());
}

void SaveCheckpoint(const fs::path& dir, const Model& model, const TrainingConfig& training,
                    int step, const std::vector<LossLogRow>& log) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ValidationError("cannot create checkpoint directory " + dir.string());
  }
  json cfg = {{"format_version", kCheckpointFormatVersion},
              {"model", ModelConfigToJson(model.config())},
              {"training", TrainingConfigToJson(training)},
              {"step", step}};
  if (model.token_stats) cfg["token_stats"] = TokenStatsJson(*model.token_stats);
  WriteParams(dir / "params.bin", model.params());
  WriteFileAtomic(dir / "config.json", cfg.dump(2) + "\n");
  if (!log.empty()) WriteLossLog(dir / "loss_log.csv", log);
}

Checkpoint LoadCheckpoint(const fs::path& dir) {
  json cfg;
  try {
    cfg = json::parse(ReadAll(dir / "config.json"));
    if (cfg.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw ValidationError("unsupported checkpoint format version");
    }
    Checkpoint ck{Model(ModelConfigFromJson(cfg.at("model"))),
                  TrainingConfigFromJson(cfg.at("training")), cfg.at("step").get<int>()};
    ReadParams(dir / "params.bin", ck.model.params());
    if (cfg.contains("token_stats")) {
      ck.model.token_stats = TokenStatsFromJsonValue(cfg.at("token_stats"));
    }
    return ck;
  } catch (const json::exception& e) {
    throw ValidationError(dir.string() + "/config.json: " + e.what());
  }
}

}  // namespace wst
