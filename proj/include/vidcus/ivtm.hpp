// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

// Mixed-task training. Every step draws one task, builds a homogeneous batch
// of token plans from the in-memory dataset and applies one AdamW update.
// Image editing and single-subject customization share a K=1 lottery draw for
// the input-image frame position so the editing skill can transfer to video.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vidcus/cus_factory.hpp"
#include "vidcus/dit.hpp"
#include "vidcus/geometry.hpp"
#include "vidcus/rng.hpp"
#include "vidcus/token_layout.hpp"

namespace vidcus::train {

enum class Task : std::uint8_t {
  subject_customization,
  depth2video,
  mask2video,
  text2video,
  text2image,
  image_edit,
  single_subject_image,
};
inline constexpr int kTaskCount = 7;
std::string to_string(Task t);
Task parse_task(const std::string& s);
const std::array<Task, kTaskCount>& all_tasks();
bool is_image_task(Task t);

enum class MixMode : std::uint8_t { ivtm, direct, none };
std::string to_string(MixMode m);
MixMode parse_mix_mode(const std::string& s);

struct TaskMix {
  std::array<double, kTaskCount> weights{};

  double& operator[](Task t) { return weights[static_cast<std::size_t>(t)]; }
  double operator[](Task t) const { return weights[static_cast<std::size_t>(t)]; }
  void validate() const;  // throws InvalidArgument
  // Data-volume-proportional defaults, restricted to the tasks `mode` trains.
  static TaskMix defaults(MixMode mode = MixMode::ivtm);
};

Task sample_task(const TaskMix& mix, Rng& rng);

struct TrainConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.1;
  double peak_lr = 1e-5;
  int warmup_steps = 2000;
  double min_lr = 1e-6;
  double grad_clip = 0.0;  // global norm; 0 disables
  int batch_size = 16;
  int total_steps = 3000;
  std::uint64_t seed = 0;
  layout::EmbeddingMode embedding_mode = layout::EmbeddingMode::tae;
  layout::CameraMode camera_mode = layout::CameraMode::add_mlp;
  bool lottery_enabled = true;
  MixMode mix_mode = MixMode::ivtm;
  std::optional<TaskMix> mix;  // unset: TaskMix::defaults(mix_mode)
  bool use_camera = true;
  dit::DiTConfig model;

  void validate() const;
  TaskMix effective_mix() const;
  nlohmann::json to_json() const;
  // Every key optional; unknown keys raise InvalidArgument.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);
  // VIDCUS_<UPPER_KEY>=value overrides for scalar fields (for example
  // VIDCUS_PEAK_LR, VIDCUS_MODEL_HIDDEN). Returns the applied keys.
  std::vector<std::string> apply_env(const std::function<const char*(const char*)>& getenv);
};

double learning_rate(const TrainConfig& config, int step);

// In-memory samples grouped by training task. text2image reuses the caption
// frame of text2video samples.
class TaskPool {
 public:
  TaskPool() = default;
  explicit TaskPool(const std::vector<factory::Sample>& samples);
  const std::vector<const factory::Sample*>& samples(Task t) const;
  bool has(Task t) const { return !samples(t).empty(); }
  std::size_t size() const { return storage_.size(); }

 private:
  std::vector<factory::Sample> storage_;
  std::map<Task, std::vector<const factory::Sample*>> by_task_;
};

struct PlanTarget {
  layout::TokenPlan plan;
  std::vector<float> velocity;  // target tokens, same layout as the noise features
};

struct Batch {
  Task task = Task::text2video;
  std::vector<PlanTarget> items;
};

// [0, 1] pixels <-> model space [-1, 1].
Video to_model_space(const Video& v);
Video from_model_space(const Video& v);

// Token plan for one sample with noise features `xt` (model space) at time t.
layout::TokenPlan build_plan(Task task, const factory::Sample& sample, const Video& xt, double t,
                             const TrainConfig& config, Rng& rng);

Batch build_batch(Task task, const TaskPool& pool, const TrainConfig& config, Rng& rng);

class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(const TrainConfig& config) : cfg_(config) {}
  void step(nn::ParamRefs<float>& params, double lr);
  int steps() const { return t_; }

 private:
  TrainConfig cfg_;
  int t_ = 0;
  std::map<std::string, std::pair<nn::Mat<float>, nn::Mat<float>>> moments_;
};

struct StepResult {
  int step = 0;
  Task task = Task::text2video;
  double loss = 0.0;
  double lr = 0.0;
};

// Forward/backward over the batch then one optimizer update at learning_rate(step).
// A non-finite loss throws NumericError naming the step, task and t values.
double train_step(dit::DiTModel<float>& model, AdamW& opt, const Batch& batch, const TrainConfig& config, int step);

// Mean flow-matching loss on a batch without touching parameters.
double batch_loss(const dit::DiTModel<float>& model, const Batch& batch);

class Trainer {
 public:
  Trainer(const TrainConfig& config, const std::vector<factory::Sample>& data);

  StepResult step();
  std::vector<StepResult> run(int steps, const std::function<void(const StepResult&)>& on_step = {});

  dit::DiTModel<float>& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  const TaskPool& pool() const { return pool_; }
  int current_step() const { return step_; }

 private:
  TrainConfig config_;
  TaskPool pool_;
  TaskMix mix_;
  dit::DiTModel<float> model_;
  AdamW opt_;
  Rng task_rng_;
  Rng batch_rng_;
  int step_ = 0;
};

// Deterministic validation loss for one task: `batches` batches drawn from a
// fixed stream seeded by `seed`.
double validation_loss(const dit::DiTModel<float>& model, const TaskPool& pool, Task task, const TrainConfig& config,
                       int batches, std::uint64_t seed);

struct InferenceConditions {
  std::string prompt;
  std::vector<Video> subjects;  // [1, H, W, 3] each, already on their backgrounds
  std::string edit;             // appended to the prompt ("make it blue")
  std::optional<Video> depth;   // [N, H, W, 1] in [0, 1]
  std::optional<Video> mask;
  std::optional<geometry::CameraTrajectory> camera;
  int frames = 0;  // 0: model default
};

// Token plan for generation with zero noise features at t = 0; the sampler
// rewrites the noise features and t at every step.
layout::TokenPlan compose_inference(const InferenceConditions& c, const TrainConfig& config, Rng& rng);

// Euler integration from Gaussian noise; returns pixels in [0, 1].
Video generate(const dit::DiTModel<float>& model, const InferenceConditions& c, const TrainConfig& config,
               int steps, Rng& rng);

}  // namespace vidcus::train
