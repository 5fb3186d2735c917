// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

// Evaluation metrics over pluggable embedders and flow estimators. The toy
// embedders are cheap stand-ins; their scores are not comparable to numbers
// computed with large pretrained backbones.

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vidcus/tensor.hpp"

namespace vidcus::metrics {

using Feature = std::vector<double>;

double cosine(const Feature& a, const Feature& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string name() const = 0;
  virtual bool has_text() const { return false; }

  // Unit-norm embeddings of one frame of `video` and of a text prompt.
  Feature embed(const Video& video, int frame = 0) const;
  Feature embed_text(const std::string& text) const;

 protected:
  virtual Feature raw_image(const Video& video, int frame) const = 0;
  virtual Feature raw_text(const std::string& text) const;
};

// Normalized 8x8 downsample (per channel, mean removed) plus palette histogram.
class ToyPixelEmbedder : public Embedder {
 public:
  std::string name() const override { return "toy-pixel-hist"; }

 protected:
  Feature raw_image(const Video& video, int frame) const override;
};

// Luma-gradient orientation histogram on a 4x4 cell grid; a structure-leaning
// second opinion in the role usually played by self-supervised features.
class ToyStructureEmbedder : public Embedder {
 public:
  std::string name() const override { return "toy-structure"; }

 protected:
  Feature raw_image(const Video& video, int frame) const override;
};

// Palette-color coverage for images; color words for text.
class ToyTextImageEmbedder : public Embedder {
 public:
  std::string name() const override { return "toy-color-text"; }
  bool has_text() const override { return true; }

 protected:
  Feature raw_image(const Video& video, int frame) const override;
  Feature raw_text(const std::string& text) const override;
};

// Fraction of frame pixels attributed to each palette color (saturated pixels
// close to the palette entry). Doubles as a procedural subject detector.
std::vector<double> color_coverage(const Video& video, int frame);
// Palette index a pixel is attributed to, or -1 for background / unsaturated.
int palette_class(const Video& video, int frame, int y, int x);

// External embedder: `command <image.ppm>` (or `command --text <file>`) prints
// whitespace-separated floats on stdout.
class SubprocessEmbedder : public Embedder {
 public:
  SubprocessEmbedder(std::string command, bool text_branch);
  std::string name() const override { return "subprocess:" + command_; }
  bool has_text() const override { return text_branch_; }

 protected:
  Feature raw_image(const Video& video, int frame) const override;
  Feature raw_text(const std::string& text) const override;

 private:
  Feature run(const std::string& args) const;
  std::string command_;
  bool text_branch_;
};

struct FlowVector {
  double dx = 0.0, dy = 0.0;
};

class FlowEstimator {
 public:
  virtual ~FlowEstimator() = default;
  virtual std::string name() const = 0;
  // Per-block motion from frame f0 to frame f1; textureless blocks are omitted.
  virtual std::vector<FlowVector> flow(const Video& video, int f0, int f1) const = 0;
};

class BlockMatchingFlow : public FlowEstimator {
 public:
  explicit BlockMatchingFlow(int block = 8, int radius = 4, double min_std = 0.02)
      : block_(block), radius_(radius), min_std_(min_std) {}
  std::string name() const override { return "block-matching"; }
  std::vector<FlowVector> flow(const Video& video, int f0, int f1) const override;

 private:
  int block_, radius_;
  double min_std_;
};

double text_alignment(const Video& frames, const std::string& text, const Embedder& embedder);
double reference_similarity(const Video& frames, const std::vector<Video>& references, const Embedder& embedder);
double temporal_consistency(const Video& frames, const Embedder& embedder);
double dynamic_degree(const Video& frames, const FlowEstimator& estimator);

struct SampleMetrics {
  std::string id;
  double clip_t = 0.0;
  double clip_i = 0.0;
  double dino_i = 0.0;
  double temporal_consistency = 0.0;
  double dynamic_degree = 0.0;
  bool temporal = true;  // false for single-frame outputs
  bool referenced = true;  // false when no reference images were given
};

struct MetricReport {
  std::string embedder;
  std::string structure_embedder;
  std::string flow;
  double clip_t = 0.0;
  double clip_i = 0.0;
  double dino_i = 0.0;
  double temporal_consistency = 0.0;
  double dynamic_degree = 0.0;
  std::vector<SampleMetrics> rows;

  void finalize();  // fills the aggregate scalars from rows
  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

struct MetricBackends {
  const Embedder* text_image;
  const Embedder* clip;
  const Embedder* dino;
  const FlowEstimator* flow;
};

// Scores one generated clip; empty references leave clip_i / dino_i at 0.
SampleMetrics score_sample(const std::string& id, const Video& frames, const std::string& prompt,
                           const std::vector<Video>& references, const MetricBackends& backends);

}  // namespace vidcus::metrics
