// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vidcus/nn.hpp"
#include "vidcus/tensor.hpp"
#include "vidcus/token_layout.hpp"

namespace vidcus::dit {

template <class S>
using Mat = nn::Mat<S>;

struct PatchGrid {
  int pt = 1;
  int ph = 2;
  int pw = 2;

  int token_dim(int channels) const { return pt * ph * pw * channels; }
  // Throws ShapeError if the video does not tile evenly.
  void check(const Video& v) const;
};

// Lossless rearrangement into [(F/pt)*(H/ph)*(W/pw), pt*ph*pw*C] tokens, time
// major, then patch row, then patch column.
std::vector<float> patchify(const Video& latent, const PatchGrid& grid);
Video unpatchify(const std::vector<float>& tokens, int frames, int height, int width, int channels,
                 const PatchGrid& grid);

// Fixed whitespace vocabulary for template captions, including IMG1..IMG6.
class Vocabulary {
 public:
  Vocabulary();
  static const Vocabulary& standard();
  int size() const { return static_cast<int>(words_.size()); }
  int id(const std::string& word) const;  // 0 (<unk>) for unknown words
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::vector<int> encode(const std::string& text) const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

struct DiTConfig {
  int hidden = 128;
  int heads = 4;
  int layers = 4;
  PatchGrid patch{1, 2, 2};
  int channels = 3;
  int control_channels = 1;
  int height = 32;
  int width = 32;
  int max_subjects = layout::kDefaultMaxSubjects;  // M
  int frames = 8;                                  // N
  int vocab_size = 0;                              // 0 = standard vocabulary size
  int encoding_dim = 32;
  int mlp_ratio = 4;
  // Output = c_skip(t) * xt + c_out(t) * network, so the network only models
  // what a linear function of xt cannot. Off reproduces a plain velocity head.
  bool precondition = true;
  double sigma_data = 0.8;  // RMS of training targets in model space

  void validate() const;
  std::pair<double, double> precondition_coefficients(double t) const;  // {c_skip, c_out}
  int grid_h() const { return height / patch.ph; }
  int grid_w() const { return width / patch.pw; }
  int tokens_per_frame() const { return grid_h() * grid_w(); }
  int rgb_dim() const { return patch.token_dim(channels); }
  int control_dim() const { return patch.token_dim(control_channels); }
  std::string to_json() const;
  static DiTConfig from_json(const std::string& text);
};

// Velocity network v_theta. Parameters live in the model; `parameters()`
// exposes them in a fixed order for the optimizer, checkpoints and tests.
template <class S>
class DiTModel {
 public:
  struct BlockCache;
  struct Cache;

  DiTModel() = default;
  DiTModel(const DiTConfig& config, std::uint64_t seed);

  const DiTConfig& config() const { return config_; }
  nn::ParamRefs<S> parameters();
  std::size_t parameter_count();
  void zero_grad();

  // Velocity for the noise segment, [noise tokens, rgb_dim].
  Mat<S> forward(const layout::TokenPlan& plan) const;
  Mat<S> forward(const layout::TokenPlan& plan, Cache& cache) const;
  // Accumulates parameter gradients for dL/d(output) = d_out and returns
  // dL/d(noise segment features).
  Mat<S> backward(const layout::TokenPlan& plan, const Cache& cache, const Mat<S>& d_out);

  // Parameter values cast to another scalar type (same names and order).
  template <class T>
  DiTModel<T> cast() const;

 private:
  template <class T>
  friend class DiTModel;

  struct Block {
    nn::LayerNorm<S> ln1;
    nn::Linear<S> qkv;
    nn::Linear<S> proj;
    nn::LayerNorm<S> ln2;
    nn::Linear<S> fc1;
    nn::Linear<S> fc2;
  };

  Mat<S> embed(const layout::TokenPlan& plan, Cache& cache) const;
  void embed_backward(const layout::TokenPlan& plan, const Cache& cache, const Mat<S>& dx, Mat<S>& d_noise);
  Mat<S> block_forward(const Block& b, const Mat<S>& x, BlockCache& c) const;
  Mat<S> block_backward(Block& b, const BlockCache& c, const Mat<S>& dy);
  const nn::Linear<S>& projection(layout::SegmentKind kind, layout::ControlKind control) const;
  nn::Linear<S>& projection(layout::SegmentKind kind, layout::ControlKind control);
  const nn::Mlp<S>& addend_mlp(layout::ControlKind kind) const;
  nn::Mlp<S>& addend_mlp(layout::ControlKind kind);
  void collect(nn::ParamRefs<S>& out);
  void build_position_tables();

  DiTConfig config_;
  nn::Param<S> text_embed_;
  nn::Linear<S> proj_subject_, proj_edit_, proj_depth_, proj_mask_, proj_camera_, proj_noise_;
  nn::Mlp<S> add_depth_, add_mask_;
  layout::EmbeddingTables<S> tables_;
  std::vector<Block> blocks_;
  nn::LayerNorm<S> final_ln_;
  nn::Linear<S> final_;
  Mat<S> grid_pe_;  // [tokens_per_frame, hidden]
};

template <class S>
struct DiTModel<S>::BlockCache {
  Mat<S> x;
  typename nn::LayerNorm<S>::Cache ln1;
  Mat<S> h1;
  Mat<S> qkv;
  std::vector<Mat<S>> probs;
  Mat<S> attn;
  Mat<S> x1;
  typename nn::LayerNorm<S>::Cache ln2;
  Mat<S> h2;
  Mat<S> pre;
  Mat<S> act;
};

template <class S>
struct DiTModel<S>::Cache {
  std::vector<Mat<S>> segment_inputs;  // projection inputs per visual segment
  Mat<S> frame_enc;
  typename nn::Mlp<S>::Cache frame_mlp;
  typename nn::Mlp<S>::Cache time_mlp;
  std::vector<typename nn::Mlp<S>::Cache> addend_mlp;
  std::vector<BlockCache> blocks;
  Mat<S> final_in;
  typename nn::LayerNorm<S>::Cache final_ln;
  Mat<S> final_h;
};

template <class S>
template <class T>
DiTModel<T> DiTModel<S>::cast() const {
  DiTModel<T> out(config_, 0);
  auto& self = const_cast<DiTModel<S>&>(*this);
  auto src = self.parameters();
  auto dst = out.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<T>();
  return out;
}

// Velocity prediction reshaped to the noise latent ([N, H, W, C]).
template <class S>
Video denoise(const DiTModel<S>& model, const layout::TokenPlan& plan);

// Versioned binary checkpoint: magic, version, config JSON, then named
// float32 arrays in parameter order. Byte layout is deterministic.
// `metadata` (JSON text, may be empty) rides along in the header under "meta".
void save_checkpoint(const std::filesystem::path& path, DiTModel<float>& model, const std::string& metadata = "");
DiTModel<float> load_checkpoint(const std::filesystem::path& path);
std::vector<char> read_checkpoint_bytes(const std::filesystem::path& path);
std::vector<char> serialize_checkpoint(DiTModel<float>& model, const std::string& metadata = "");
std::string checkpoint_metadata(const std::vector<char>& bytes);
DiTModel<float> deserialize_checkpoint(const std::vector<char>& bytes);

extern template class DiTModel<float>;
extern template class DiTModel<double>;

}  // namespace vidcus::dit
