// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

// Desk-scale customization data factory. A procedural renderer stands in for
// raw videos; the captioner, tracker and depth estimator sit behind
// AnnotationBackend with the renderer's ground truth as the default oracle.
// The pipeline then filters subjects, augments them, drops them onto random
// backgrounds and emits unpaired task samples.

#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vidcus/geometry.hpp"
#include "vidcus/rng.hpp"
#include "vidcus/tensor.hpp"

namespace vidcus::factory {

inline constexpr const char* kCaptionPrefix = "An image of ";
inline constexpr int kManifestSchema = 1;

enum class Shape { circle, square, triangle, star };
std::string to_string(Shape s);
Shape parse_shape(const std::string& s);

struct NamedColor {
  std::string name;
  std::array<float, 3> rgb;
};
const std::vector<NamedColor>& palette();
int color_index(const std::string& name);  // throws InvalidArgument for unknown names

struct SubjectSpec {
  Shape shape = Shape::circle;
  int color = 0;       // palette index
  double radius = 6;   // pixels
  double x = 16, y = 16;
  double vx = 0, vy = 0;  // pixels per frame
  int layer = 0;          // larger is nearer to the camera
};

struct SceneSpec {
  std::vector<SubjectSpec> subjects;
  int background_id = 0;
  int frames = 8;
  int height = 32;
  int width = 32;
  double camera_yaw_per_frame = 0.0;
  int caption_frame = 0;

  void validate() const;
};

struct SceneOptions {
  int min_subjects = 1;
  int max_subjects = 2;
  int frames = 8;
  int height = 32;
  int width = 32;
  double min_radius = 4.0;
  double max_radius = 7.0;
  double max_speed = 1.5;
  double static_probability = 0.1;
  double camera_probability = 0.25;
  double max_camera_yaw = 0.03;
  int background_count = 10;
  bool allow_overlap = false;
};

SceneSpec random_scene(Rng& rng, const SceneOptions& options = {});

struct Span {
  int start = 0;
  int end = 0;  // exclusive
  bool operator==(const Span&) const = default;
};

struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // [x0, x1) x [y0, y1)
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

struct CaptionRecord {
  std::string caption;
  std::vector<std::string> subjects;
  std::vector<Span> spans;
  std::vector<BoundingBox> bboxes;

  // Spans in bounds, ascending and non-overlapping; counts agree.
  void validate() const;
};

struct SubjectTrack {
  Video masks;  // [F, H, W, 1], binary
  std::vector<double> coverage;
};

struct RenderedScene {
  SceneSpec spec;
  Video video;                      // [F, H, W, 3]
  std::vector<SubjectTrack> tracks;  // visible masks, one per subject
  Video depth;                      // [F, H, W, 1], 0 = background, nearer subjects larger
  CaptionRecord caption;
  geometry::CameraTrajectory camera;
};

// Pixel of a background pattern in world coordinates (id 0 is pure white).
std::array<float, 3> background_pixel(int id, double wx, double wy);
Video background_image(int id, int height, int width);

RenderedScene render_scene(const SceneSpec& spec);

// Whether offset (dx, dy) from a subject's center lies inside its silhouette
// at radius r; the rasterizer samples this at pixel centers.
bool shape_contains(Shape shape, double dx, double dy, double r);

// Caption with IMG labels inserted after labelled subjects.
struct LabeledCaption {
  std::string text;
  std::vector<Span> spans;  // every subject, in the rewritten text
  std::vector<int> labeled;  // subject indices that received IMG labels, in label order
  bool prefix_missing = false;
};

std::string strip_prefix(const std::string& caption, bool* missing = nullptr);
// Labels `labeled` (subject indices; empty = all) as IMG1, IMG2, ... in caption order.
LabeledCaption rewrite_caption(const CaptionRecord& record, std::vector<int> labeled = {});
// Removes IMG{k} tokens and collapses the surrounding whitespace.
std::string strip_labels(const std::string& text);

struct FilterOptions {
  double min_coverage = 0.005;
  double min_frame_fraction = 0.9;
  double background_ceiling = 0.6;
};
std::vector<int> filter_subjects(const std::vector<SubjectTrack>& tracks, const FilterOptions& options = {});

struct AugmentRanges {
  double max_rotation_deg = 30.0;
  double min_scale = 0.7;
  double max_scale = 1.3;
  double min_color = 0.9;  // brightness, contrast, saturation factors
  double max_color = 1.1;
  double max_hue_deg = 10.0;
  double canonical_extent = 0.45;  // bbox extent after normalisation, fraction of canvas
  bool normalize_scale = true;
};

struct AugmentParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue_deg = 0.0;
};

struct AugmentLog {
  AugmentParams params;
  int source_extent = 0;         // bbox extent of the subject as cropped from the frame
  double normalize_factor = 1.0;  // effective resize before the drawn scale
  bool clamped = false;
};

struct SubjectImage {
  Video image;  // [1, S, S, 3]
  Video mask;   // [1, S, S, 1]
};

AugmentParams draw_augment(Rng& rng, const AugmentRanges& ranges = {});
// Subject pixels of one frame on an empty square canvas of side max(H, W).
SubjectImage extract_subject(const Video& frame, const Video& mask);
SubjectImage augment_subject(const SubjectImage& subject, const AugmentParams& params,
                             const AugmentRanges& ranges, AugmentLog* log = nullptr);
SubjectImage augment_subject(const SubjectImage& subject, Rng& rng, const AugmentRanges& ranges = {},
                             AugmentLog* log = nullptr);

// Color operators on RGB values in [0, 1]; `mask` (if given) limits them to subject pixels.
void adjust_brightness(Video& image, double factor, const Video* mask = nullptr);
void adjust_contrast(Video& image, double factor, const Video* mask = nullptr);
void adjust_saturation(Video& image, double factor, const Video* mask = nullptr);
void shift_hue(Video& image, double degrees, const Video* mask = nullptr);

struct BackgroundPool {
  std::vector<int> ids;  // always contains 0 (pure white)
  static BackgroundPool standard(int count = 10);
};

struct PlacedImage {
  Video image;
  int background_id = 0;
};
PlacedImage place_background(const SubjectImage& subject, const BackgroundPool& pool, Rng& rng);
Video composite(const SubjectImage& subject, const Video& background);

enum class TaskKind { subject_customization, depth2video, mask2video, text2video, image_edit, single_subject_image };
std::string to_string(TaskKind k);
TaskKind parse_task(const std::string& s);
const std::vector<TaskKind>& all_tasks();

struct SubjectInput {
  std::string label;   // "IMG1", ...
  std::string phrase;  // "a red circle"
  std::string color;
  std::string shape;
  Video image;  // subject composited on its background, [1, S, S, 3]
  Video mask;   // [1, S, S, 1]
  AugmentLog augment;
  int background_id = 0;
};

struct Sample {
  TaskKind task = TaskKind::text2video;
  std::string caption;  // labelled for customization tasks, plain otherwise
  int caption_frame = 0;
  std::vector<SubjectInput> subjects;  // customization inputs or the edit input image
  Video video;                         // target; one frame for image tasks
  Video control;                       // depth or mask sequence, [F, H, W, 1]
  std::optional<geometry::CameraTrajectory> camera;
  std::string edit_color;  // image_edit target color
  std::string source_color;

  bool has_control() const { return !control.empty(); }
};

struct EmitOptions {
  std::set<TaskKind> tasks{all_tasks().begin(), all_tasks().end()};
  AugmentRanges ranges;
  BackgroundPool pool = BackgroundPool::standard();
};

// Emits one sample per requested task. Customization tasks need at least one
// kept subject; control samples use the caption without image labels.
std::vector<Sample> emit_samples(const RenderedScene& scene, const CaptionRecord& record,
                                 const std::vector<SubjectTrack>& tracks, const Video& depth,
                                 const std::vector<int>& kept, Rng& rng, const EmitOptions& options = {});

// Annotation models. The default oracle reads the renderer's ground truth.
class AnnotationBackend {
 public:
  virtual ~AnnotationBackend() = default;
  virtual std::string name() const = 0;
  virtual CaptionRecord describe(const RenderedScene& scene) = 0;
  virtual std::vector<SubjectTrack> track(const RenderedScene& scene, const CaptionRecord& record) = 0;
  virtual Video estimate_depth(const RenderedScene& scene) = 0;
};

class ProceduralOracle : public AnnotationBackend {
 public:
  std::string name() const override { return "procedural-oracle"; }
  CaptionRecord describe(const RenderedScene& scene) override { return scene.caption; }
  std::vector<SubjectTrack> track(const RenderedScene& scene, const CaptionRecord&) override { return scene.tracks; }
  Video estimate_depth(const RenderedScene& scene) override { return scene.depth; }
};

// Depth from an external program: `command <frames_dir> <out_dir>` reads
// frame_XX.ppm and must write depth_XX.pgm. Other annotations come from `base`.
class CommandDepthBackend : public AnnotationBackend {
 public:
  CommandDepthBackend(std::string command, std::unique_ptr<AnnotationBackend> base);
  std::string name() const override { return "command-depth"; }
  CaptionRecord describe(const RenderedScene& scene) override { return base_->describe(scene); }
  std::vector<SubjectTrack> track(const RenderedScene& scene, const CaptionRecord& r) override {
    return base_->track(scene, r);
  }
  Video estimate_depth(const RenderedScene& scene) override;

 private:
  std::string command_;
  std::unique_ptr<AnnotationBackend> base_;
};

struct GenerateOptions {
  int count = 10;  // scenes
  std::uint64_t seed = 0;
  SceneOptions scene;
  FilterOptions filter;
  EmitOptions emit;
};

// Full pipeline over `count` scenes; each scene derives its own rng stream.
std::vector<Sample> generate(const GenerateOptions& options, AnnotationBackend& backend);
std::vector<Sample> generate(const GenerateOptions& options);

// On-disk layout: <dir>/shards/<id>/manifest.json plus image / tensor files.
void write_sample(const std::filesystem::path& shard_dir, const Sample& sample);
Sample load_sample(const std::filesystem::path& shard_dir);
void write_dataset(const std::filesystem::path& out, const std::vector<Sample>& samples,
                   const GenerateOptions& options);
std::vector<Sample> load_dataset(const std::filesystem::path& dir);

}  // namespace vidcus::factory
