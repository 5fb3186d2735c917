// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidcus/token_layout.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace vidcus::layout {

std::string to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::text: return "text";
    case SegmentKind::subject_image: return "subject_image";
    case SegmentKind::edit_input_image: return "edit_input_image";
    case SegmentKind::struct_control: return "struct_control";
    case SegmentKind::noise: return "noise";
  }
  return "?";
}

std::string to_string(ControlKind k) {
  switch (k) {
    case ControlKind::none: return "none";
    case ControlKind::depth: return "depth";
    case ControlKind::mask: return "mask";
    case ControlKind::camera: return "camera";
  }
  return "?";
}

std::string to_string(EmbeddingMode m) {
  switch (m) {
    case EmbeddingMode::tae: return "tae";
    case EmbeddingMode::naive: return "naive";
    case EmbeddingMode::add_to_noise: return "add_to_noise";
  }
  return "?";
}

std::string to_string(CameraMode m) { return m == CameraMode::add_mlp ? "add_mlp" : "concat_tokens"; }

EmbeddingMode parse_embedding_mode(const std::string& s) {
  if (s == "tae") return EmbeddingMode::tae;
  if (s == "naive") return EmbeddingMode::naive;
  if (s == "add_to_noise") return EmbeddingMode::add_to_noise;
  throw InvalidArgument("unknown embedding mode '" + s + "'");
}

CameraMode parse_camera_mode(const std::string& s) {
  if (s == "add_mlp") return CameraMode::add_mlp;
  if (s == "concat_tokens") return CameraMode::concat_tokens;
  throw InvalidArgument("unknown camera mode '" + s + "'");
}

void LotteryAssignment::validate() const {
  if (K < 1 || K > M) throw InvalidArgument("lottery requires 1 <= K <= M");
  if (static_cast<int>(positions.size()) != K) throw InvalidArgument("lottery size differs from K");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 1 || positions[i] > M) throw InvalidArgument("lottery position out of [1, M]");
    if (i > 0 && positions[i] <= positions[i - 1]) throw InvalidArgument("lottery positions not ascending");
  }
}

LotteryAssignment sample_lottery(int K, int M, Rng& rng) {
  if (K < 1 || K > M) {
    throw InvalidArgument("sample_lottery: need 1 <= K <= M, got K=" + std::to_string(K) +
                          " M=" + std::to_string(M));
  }
  // Partial Fisher-Yates: the first K slots are a uniform K-subset.
  std::vector<int> pool(static_cast<std::size_t>(M));
  std::iota(pool.begin(), pool.end(), 1);
  for (int i = 0; i < K; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, M - 1));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  LotteryAssignment out{K, M, std::vector<int>(pool.begin(), pool.begin() + K)};
  std::sort(out.positions.begin(), out.positions.end());
  return out;
}

LotteryAssignment sequential_assignment(int K, int M) {
  if (K < 1 || K > M) throw InvalidArgument("sequential_assignment: need 1 <= K <= M");
  LotteryAssignment out{K, M, std::vector<int>(static_cast<std::size_t>(K))};
  std::iota(out.positions.begin(), out.positions.end(), 1);
  return out;
}

std::vector<int> assign_subject_positions(int subject_count, const LotteryAssignment& lottery) {
  lottery.validate();
  if (subject_count != lottery.K) {
    throw InvalidArgument("assign_subject_positions: " + std::to_string(subject_count) +
                          " subjects but lottery has K=" + std::to_string(lottery.K));
  }
  return lottery.positions;
}

TemporalPositions assign_temporal_positions(int M, int N, EmbeddingMode mode) {
  if (M < 1 || N < 1) throw InvalidArgument("assign_temporal_positions: need M >= 1 and N >= 1");
  TemporalPositions out;
  for (int j = 1; j <= N; ++j) {
    out.control.push_back(M + j);
    out.noise.push_back(mode == EmbeddingMode::naive ? M + N + j : M + j);
  }
  return out;
}

std::size_t TokenPlan::segment_begin(int s) const {
  std::size_t begin = 0;
  for (int i = 0; i < s; ++i) begin += static_cast<std::size_t>(segments[static_cast<std::size_t>(i)].token_count());
  return begin;
}

namespace {

int kind_rank(SegmentKind k) {
  switch (k) {
    case SegmentKind::text: return 0;
    case SegmentKind::subject_image: return 1;
    case SegmentKind::edit_input_image: return 2;
    case SegmentKind::struct_control: return 3;
    case SegmentKind::noise: return 4;
  }
  return 5;
}

void check_segment(const Segment& s, int M) {
  const std::string name = to_string(s.kind);
  if (s.frames < 1 || s.tokens_per_frame < 1) throw ShapeError(name + " segment is empty");
  if (static_cast<int>(s.frame_positions.size()) != s.frames) {
    throw InvalidArgument(name + " segment needs one frame position per frame");
  }
  if (s.kind == SegmentKind::text) {
    if (s.frames != 1 || static_cast<int>(s.text_ids.size()) != s.tokens_per_frame) {
      throw ShapeError("text segment ids do not match its length");
    }
    return;
  }
  if (s.feature_dim < 1 ||
      s.features.size() != static_cast<std::size_t>(s.token_count()) * static_cast<std::size_t>(s.feature_dim)) {
    throw ShapeError(name + " segment features do not match tokens x feature_dim");
  }
  if (s.kind == SegmentKind::subject_image || s.kind == SegmentKind::edit_input_image) {
    for (int p : s.frame_positions) {
      if (p < 1 || p > M) throw InvalidArgument(name + " frame position outside [1, M]");
    }
  }
  if (s.kind == SegmentKind::struct_control && s.control == ControlKind::none) {
    throw InvalidArgument("struct_control segment needs a control kind");
  }
}

}  // namespace

TokenPlan compose_sequence(std::vector<Segment> segments, const ComposeOptions& options,
                           std::vector<NoiseAddend> addends) {
  int noise_count = 0;
  std::set<int> subject_positions;
  for (const auto& s : segments) {
    check_segment(s, options.M);
    if (s.kind == SegmentKind::noise) ++noise_count;
    if (s.kind == SegmentKind::subject_image) {
      for (int p : s.frame_positions) {
        if (!subject_positions.insert(p).second) {
          throw InvalidArgument("duplicate subject frame position " + std::to_string(p));
        }
      }
    }
  }
  if (noise_count != 1) throw InvalidArgument("plan needs exactly one noise segment");

  std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    const int ra = kind_rank(a.kind);
    const int rb = kind_rank(b.kind);
    if (ra != rb) return ra < rb;
    if (a.kind == SegmentKind::subject_image) return a.frame_positions.front() < b.frame_positions.front();
    return false;
  });

  TokenPlan plan;
  plan.M = options.M;
  plan.N = options.N;
  plan.t = options.t;
  plan.grid_h = options.grid_h;
  plan.grid_w = options.grid_w;
  for (std::size_t si = 0; si < segments.size(); ++si) {
    const Segment& s = segments[si];
    if (s.kind == SegmentKind::noise) {
      if (s.frames != options.N) throw ShapeError("noise segment frame count differs from N");
      plan.noise_segment = static_cast<int>(si);
      plan.noise_begin = plan.tokens.size();
    }
    for (int f = 0; f < s.frames; ++f) {
      for (int k = 0; k < s.tokens_per_frame; ++k) {
        TokenRecord r;
        r.kind = s.kind;
        r.control = s.control;
        r.frame_position = s.frame_positions[static_cast<std::size_t>(f)];
        r.spatial_index = k;
        r.receives_timestep = s.kind == SegmentKind::noise || options.timestep_on_all;
        r.segment = static_cast<int>(si);
        plan.tokens.push_back(r);
      }
    }
  }
  plan.segments = std::move(segments);
  const auto noise_tokens = static_cast<std::size_t>(plan.noise().token_count());
  for (const auto& a : addends) {
    if (a.feature_dim < 1 || a.features.size() != noise_tokens * static_cast<std::size_t>(a.feature_dim)) {
      throw AlignmentError("noise addend rows do not match noise tokens");
    }
  }
  plan.addends = std::move(addends);
  return plan;
}

std::string dump_plan(const TokenPlan& plan) {
  std::ostringstream out;
  out << "plan M=" << plan.M << " N=" << plan.N << " tokens=" << plan.size() << '\n';
  for (std::size_t si = 0; si < plan.segments.size(); ++si) {
    const Segment& s = plan.segments[si];
    const auto [lo, hi] = std::minmax_element(s.frame_positions.begin(), s.frame_positions.end());
    out << to_string(s.kind);
    if (s.control != ControlKind::none) out << ':' << to_string(s.control);
    if (s.kind == SegmentKind::subject_image) out << " IMG" << s.label;
    out << " pos=" << *lo << ".." << *hi << " len=" << s.token_count();
    const bool ts = s.kind == SegmentKind::noise || (!plan.tokens.empty() && plan.tokens[plan.segment_begin(static_cast<int>(si))].receives_timestep);
    if (ts) out << " +t";
    out << '\n';
  }
  for (const auto& a : plan.addends) out << "addend:" << to_string(a.kind) << " -> noise\n";
  return out.str();
}

}  // namespace vidcus::layout
