// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vidcus/dit.hpp"
#include "vidcus/token_layout.hpp"

namespace vidcus::testing {

inline layout::Segment random_visual(Rng& rng, layout::SegmentKind kind, int frames, int tpf, int dim,
                                     std::vector<int> positions,
                                     layout::ControlKind control = layout::ControlKind::none) {
  layout::Segment s;
  s.kind = kind;
  s.control = control;
  s.frames = frames;
  s.tokens_per_frame = tpf;
  s.frame_positions = std::move(positions);
  s.feature_dim = dim;
  s.features.resize(static_cast<std::size_t>(frames * tpf * dim));
  for (auto& v : s.features) v = static_cast<float>(rng.normal());
  return s;
}

// Text + two subjects + depth + noise (+ camera addend) for a model config.
inline layout::TokenPlan random_plan(const dit::DiTConfig& cfg, Rng& rng, bool camera = true) {
  using layout::SegmentKind;
  const int n = cfg.frames / cfg.patch.pt;
  const int tpf = cfg.tokens_per_frame();
  const auto tp = layout::assign_temporal_positions(cfg.max_subjects, n);
  std::vector<layout::Segment> segs;
  layout::Segment text;
  text.kind = SegmentKind::text;
  text.tokens_per_frame = 4;
  text.frame_positions = {0};
  for (int i = 0; i < 4; ++i) text.text_ids.push_back(static_cast<int>(rng.uniform_int(1, 20)));
  segs.push_back(text);
  segs.push_back(random_visual(rng, SegmentKind::subject_image, 1, tpf, cfg.rgb_dim(), {2}));
  segs.back().label = 1;
  segs.push_back(random_visual(rng, SegmentKind::subject_image, 1, tpf, cfg.rgb_dim(), {5}));
  segs.back().label = 2;
  segs.push_back(random_visual(rng, SegmentKind::struct_control, n, tpf, cfg.control_dim(), tp.control,
                               layout::ControlKind::depth));
  segs.push_back(random_visual(rng, SegmentKind::noise, n, tpf, cfg.rgb_dim(), tp.noise));
  layout::ComposeOptions opt;
  opt.M = cfg.max_subjects;
  opt.N = n;
  opt.t = rng.uniform();
  opt.grid_h = cfg.grid_h();
  opt.grid_w = cfg.grid_w();
  std::vector<layout::NoiseAddend> adds;
  if (camera) {
    layout::NoiseAddend a{layout::ControlKind::camera, 6, {}};
    a.features.resize(static_cast<std::size_t>(n * tpf * 6));
    for (auto& v : a.features) v = static_cast<float>(rng.normal());
    adds.push_back(a);
  }
  return layout::compose_sequence(std::move(segs), opt, std::move(adds));
}

// Rebuilds a plan whose segments appear in the given order, bypassing the
// canonical sort. Per-token metadata is carried over unchanged.
inline layout::TokenPlan reorder_segments(const layout::TokenPlan& plan, const std::vector<int>& order) {
  layout::TokenPlan out = plan;
  out.segments.clear();
  out.tokens.clear();
  for (int si : order) {
    const auto& s = plan.segments[static_cast<std::size_t>(si)];
    const auto begin = plan.segment_begin(si);
    if (s.kind == layout::SegmentKind::noise) {
      out.noise_segment = static_cast<int>(out.segments.size());
      out.noise_begin = out.tokens.size();
    }
    for (int k = 0; k < s.token_count(); ++k) {
      auto rec = plan.tokens[begin + static_cast<std::size_t>(k)];
      rec.segment = static_cast<int>(out.segments.size());
      out.tokens.push_back(rec);
    }
    out.segments.push_back(s);
  }
  return out;
}

}  // namespace vidcus::testing
