// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

// Desk-scale trend experiments shared by the acceptance suite and the
// `ablate` command: each trains a baseline and an ablated arm from the same
// data and seed, then scores both on held-out probes.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vidcus/ivtm.hpp"

namespace vidcus::experiments {

struct DeskScale {
  int steps = 3000;
  int batch = 4;
  int hidden = 32;
  int layers = 2;
  int heads = 4;
  int encoding_dim = 16;
  int patch = 8;
  double peak_lr = 2e-3;
  int warmup = 150;
  double min_lr = 2e-5;
  double grad_clip = 1.0;
  int train_scenes = 300;
  int val_scenes = 48;
  int probes = 16;
  int sample_steps = 16;
  std::uint64_t data_seed = 2024;
};

train::TrainConfig desk_config(const DeskScale& scale, std::uint64_t seed);

// Spearman rank correlation with average ranks for ties; 0 if either side is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Rank correlation between the target depth and the layer ordering visible in
// `generated`: each generated pixel takes the depth its palette color has in
// the reference video (background 0).
double depth_rank_correlation(const Video& generated, const Video& depth, const Video& reference);

struct SubjectKey {
  int color = 0;  // palette index
  factory::Shape shape = factory::Shape::circle;
};

// Silhouette classifier: the shape whose rendered mask, sized to the blob's
// area and placed on its centroid, has the highest IoU with the blob.
factory::Shape classify_blob(const std::vector<std::pair<int, int>>& pixels);

// Whether the largest blob of `key.color` (at least `min_pixels`) is
// classified as `key.shape` in at least half of the frames.
bool detect_subject(const Video& generated, const SubjectKey& key, int min_pixels = 6);

// Fraction of `subjects` detected in `generated`.
double subject_recall(const Video& generated, const std::vector<SubjectKey>& subjects, int min_pixels = 6);

struct ArmResult {
  std::string name;
  std::uint64_t seed = 0;
  double validation_loss = 0.0;
  double score = 0.0;
  double seconds = 0.0;
};

struct Comparison {
  std::string name;
  std::string metric;
  std::string baseline;  // arm expected to win
  std::string ablated;
  std::vector<ArmResult> baseline_runs;
  std::vector<ArmResult> ablated_runs;

  static double mean(const std::vector<ArmResult>& r, double ArmResult::*field);
};

using Progress = std::function<void(const std::string&)>;

// (a) TAE vs control added to noise, on depth2video: validation loss and depth rank correlation.
Comparison embedding_comparison(const DeskScale& scale, const std::vector<std::uint64_t>& seeds,
                                const Progress& progress = {});
// (b) Lottery vs sequential subject positions: trained on 1-2 subjects, probed with 3.
Comparison lottery_comparison(const DeskScale& scale, const std::vector<std::uint64_t>& seeds,
                              const Progress& progress = {});
// (c) IVTM mix vs video-only training: text alignment on edit-composed prompts.
Comparison ivtm_comparison(const DeskScale& scale, const std::vector<std::uint64_t>& seeds,
                           const Progress& progress = {});

// Edit-composed prompt for a labelled single-subject caption: the source color
// word is dropped and "make it <target>" appended.
std::string edit_prompt(const std::string& labeled_caption, const std::string& source_color,
                        const std::string& target_color);

// Applies an ablation mode (naive, add_to_noise, no_le, direct_mix, no_mix) to a config.
train::TrainConfig apply_ablation(train::TrainConfig config, const std::string& mode);

}  // namespace vidcus::experiments
