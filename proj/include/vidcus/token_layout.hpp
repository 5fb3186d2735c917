// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

// Composition of the 1-D token sequence and the frame-position scheme:
// subject images draw their frame slots from [1, M] by lottery; dense control
// tokens and noise tokens of generated frame j share slot M + j.

#pragma once

#include <cstdint>
#include <optional>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "vidcus/error.hpp"
#include "vidcus/nn.hpp"
#include "vidcus/rng.hpp"

namespace vidcus::layout {

inline constexpr int kDefaultMaxSubjects = 6;

enum class SegmentKind : std::uint8_t { text, subject_image, edit_input_image, struct_control, noise };
enum class ControlKind : std::uint8_t { none, depth, mask, camera };

// How control tokens are positioned relative to the noise tokens.
//   tae:          control and noise of frame j share position M + j; timestep on noise only.
//   naive:        control at M+1..M+N, noise at M+N+1..M+2N; timestep on every token.
//   add_to_noise: dense controls pass through an MLP and are summed into the noise tokens.
enum class EmbeddingMode : std::uint8_t { tae, naive, add_to_noise };
// add_mlp: Plücker features are summed into noise tokens; concat_tokens: they become tokens.
enum class CameraMode : std::uint8_t { add_mlp, concat_tokens };

std::string to_string(SegmentKind k);
std::string to_string(ControlKind k);
std::string to_string(EmbeddingMode m);
std::string to_string(CameraMode m);
EmbeddingMode parse_embedding_mode(const std::string& s);
CameraMode parse_camera_mode(const std::string& s);

struct LotteryAssignment {
  int K = 0;
  int M = 0;
  std::vector<int> positions;  // ascending, distinct, in [1, M]

  void validate() const;
};

// Uniform K-subset of [1, M], returned ascending.
LotteryAssignment sample_lottery(int K, int M, Rng& rng);
// Positions 1..K; what training without the lottery uses.
LotteryAssignment sequential_assignment(int K, int M);

// Subject i (the one labelled IMG{i+1}) receives lottery.positions[i].
std::vector<int> assign_subject_positions(int subject_count, const LotteryAssignment& lottery);

struct TemporalPositions {
  std::vector<int> control;
  std::vector<int> noise;
};
TemporalPositions assign_temporal_positions(int M, int N, EmbeddingMode mode = EmbeddingMode::tae);

// One conditioning or noise block before composition. Visual segments are
// `frames` groups of `tokens_per_frame` patches; text is a single group of words.
struct Segment {
  SegmentKind kind = SegmentKind::text;
  ControlKind control = ControlKind::none;
  int frames = 1;
  int tokens_per_frame = 0;
  std::vector<int> frame_positions;  // one per frame group
  int feature_dim = 0;
  std::vector<float> features;  // [frames * tokens_per_frame, feature_dim]; empty for text
  std::vector<int> text_ids;    // text only
  int label = 0;                // IMG label for subject segments (1-based)

  int token_count() const { return frames * tokens_per_frame; }
};

// Features summed into the noise tokens rather than appended as tokens.
struct NoiseAddend {
  ControlKind kind = ControlKind::none;
  int feature_dim = 0;
  std::vector<float> features;  // one row per noise token
};

struct TokenRecord {
  SegmentKind kind = SegmentKind::text;
  ControlKind control = ControlKind::none;
  int frame_position = 0;
  int spatial_index = 0;
  bool receives_timestep = false;
  int segment = 0;
};

struct TokenPlan {
  std::vector<Segment> segments;  // composed order
  std::vector<TokenRecord> tokens;
  std::vector<NoiseAddend> addends;
  int M = kDefaultMaxSubjects;
  int N = 1;
  double t = 0.0;
  int grid_h = 1;
  int grid_w = 1;
  int noise_segment = -1;
  std::size_t noise_begin = 0;

  const Segment& noise() const { return segments.at(static_cast<std::size_t>(noise_segment)); }
  Segment& noise() { return segments.at(static_cast<std::size_t>(noise_segment)); }
  std::size_t size() const { return tokens.size(); }
  // Index of the first token of segment s.
  std::size_t segment_begin(int s) const;
};

struct ComposeOptions {
  int M = kDefaultMaxSubjects;
  int N = 1;
  double t = 0.0;
  int grid_h = 1;
  int grid_w = 1;
  bool timestep_on_all = false;  // naive ablation
};

// Concatenates segments in the canonical order TEXT, SUBJECT_IMAGE (ascending
// frame position), EDIT_INPUT_IMAGE, STRUCT_CONTROL, NOISE and fills per-token
// metadata.
TokenPlan compose_sequence(std::vector<Segment> segments, const ComposeOptions& options,
                           std::vector<NoiseAddend> addends = {});

// Debug dump: one line per span with kind, frame-position range and length.
std::string dump_plan(const TokenPlan& plan);

// Frame-position, timestep and camera maps. Each is an independent two-layer
// perceptron into the model width.
template <class S>
struct EmbeddingTables {
  int encoding_dim = 32;
  nn::Mlp<S> frame;     // MLP_f
  nn::Mlp<S> timestep;  // MLP_t
  nn::Mlp<S> camera;    // MLP_c

  void init(int hidden, int enc_dim, Rng& rng) {
    encoding_dim = enc_dim;
    frame.init("embed.frame", enc_dim, hidden, hidden, rng);
    timestep.init("embed.timestep", enc_dim, hidden, hidden, rng, /*zero_out=*/true);
    camera.init("embed.camera", 6, hidden, hidden, rng, /*zero_out=*/true);
  }

  nn::Mat<S> frame_encoding(const std::vector<int>& positions) const {
    nn::Mat<S> enc(static_cast<Eigen::Index>(positions.size()), encoding_dim);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const auto e = nn::sinusoidal(positions[i], encoding_dim, 100.0);
      for (int k = 0; k < encoding_dim; ++k) enc(static_cast<Eigen::Index>(i), k) = static_cast<S>(e[k]);
    }
    return enc;
  }

  nn::Mat<S> timestep_encoding(double t) const {
    nn::Mat<S> enc(1, encoding_dim);
    const auto e = nn::sinusoidal(t * 1000.0, encoding_dim);
    for (int k = 0; k < encoding_dim; ++k) enc(0, k) = static_cast<S>(e[k]);
    return enc;
  }

  void collect(nn::ParamRefs<S>& out) {
    frame.collect(out);
    timestep.collect(out);
    camera.collect(out);
  }
};

// Temporally aligned embedding on already-projected tokens. Rows are grouped
// by frame: frame j owns rows [j*P, (j+1)*P) with P = rows / N.
//   control_out = control + MLP_f(p_f)
//   noise_out   = noise + MLP_f(p_f) + MLP_t(t) + MLP_c(plucker)
// `plucker` (rows x 6) may be absent, which drops the camera term.
template <class S>
std::pair<nn::Mat<S>, nn::Mat<S>> apply_tae(const EmbeddingTables<S>& tables, const nn::Mat<S>& control,
                                            const nn::Mat<S>& noise,
                                            const std::optional<std::type_identity_t<nn::Mat<S>>>& plucker,
                                            const std::vector<int>& frame_positions, double t) {
  const auto n = static_cast<Eigen::Index>(frame_positions.size());
  if (n == 0 || control.rows() != noise.rows() || control.cols() != noise.cols() || noise.rows() % n != 0) {
    throw AlignmentError("control and noise tokens are not temporally aligned");
  }
  if (plucker && plucker->rows() != noise.rows()) throw AlignmentError("camera rows do not match noise rows");
  const Eigen::Index per_frame = noise.rows() / n;
  const nn::Mat<S> frame_emb = tables.frame.forward(tables.frame_encoding(frame_positions));
  const nn::Mat<S> time_emb = tables.timestep.forward(tables.timestep_encoding(t));
  nn::Mat<S> control_out = control;
  nn::Mat<S> noise_out = noise;
  for (Eigen::Index j = 0; j < n; ++j) {
    control_out.middleRows(j * per_frame, per_frame).rowwise() += frame_emb.row(j);
    noise_out.middleRows(j * per_frame, per_frame).rowwise() += frame_emb.row(j) + time_emb.row(0);
  }
  if (plucker) noise_out += tables.camera.forward(*plucker);
  return {std::move(control_out), std::move(noise_out)};
}

}  // namespace vidcus::layout
