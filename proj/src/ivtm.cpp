// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidcus/ivtm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vidcus/flow_matching.hpp"

namespace vidcus::train {

using json = nlohmann::json;
using layout::ControlKind;
using layout::EmbeddingMode;
using layout::SegmentKind;

std::string to_string(Task t) {
  switch (t) {
    case Task::subject_customization: return "subject_customization";
    case Task::depth2video: return "depth2video";
    case Task::mask2video: return "mask2video";
    case Task::text2video: return "text2video";
    case Task::text2image: return "text2image";
    case Task::image_edit: return "image_edit";
    case Task::single_subject_image: return "single_subject_image";
  }
  return "?";
}

const std::array<Task, kTaskCount>& all_tasks() {
  static const std::array<Task, kTaskCount> tasks{Task::subject_customization, Task::depth2video, Task::mask2video,
                                                  Task::text2video,            Task::text2image,  Task::image_edit,
                                                  Task::single_subject_image};
  return tasks;
}

Task parse_task(const std::string& s) {
  for (Task t : all_tasks())
    if (to_string(t) == s) return t;
  throw InvalidArgument("unknown task '" + s + "'");
}

bool is_image_task(Task t) {
  return t == Task::text2image || t == Task::image_edit || t == Task::single_subject_image;
}

std::string to_string(MixMode m) {
  switch (m) {
    case MixMode::ivtm: return "ivtm";
    case MixMode::direct: return "direct";
    case MixMode::none: return "none";
  }
  return "?";
}

MixMode parse_mix_mode(const std::string& s) {
  for (MixMode m : {MixMode::ivtm, MixMode::direct, MixMode::none})
    if (to_string(m) == s) return m;
  throw InvalidArgument("unknown mix mode '" + s + "'");
}

void TaskMix::validate() const {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("task weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("task weights are all zero");
}

TaskMix TaskMix::defaults(MixMode mode) {
  TaskMix m;
  // Video volumes 1.2 / 1.4 / 1.6 / 1.2 (customization / depth / mask / edit);
  // the remaining weights are chosen here.
  m[Task::subject_customization] = 1.2;
  m[Task::depth2video] = 1.4;
  m[Task::mask2video] = 1.6;
  m[Task::image_edit] = 1.2;
  m[Task::text2video] = 0.6;
  m[Task::text2image] = 0.3;
  m[Task::single_subject_image] = 0.6;
  if (mode != MixMode::ivtm) m[Task::single_subject_image] = 0.0;
  if (mode == MixMode::none) {
    m[Task::image_edit] = 0.0;
    m[Task::text2image] = 0.0;
  }
  return m;
}

Task sample_task(const TaskMix& mix, Rng& rng) {
  mix.validate();
  double total = 0.0;
  for (double w : mix.weights) total += w;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < mix.weights.size(); ++i) {
    if (mix.weights[i] <= 0.0) continue;
    last = i;
    acc += mix.weights[i];
    if (u < acc) return all_tasks()[i];
  }
  return all_tasks()[last];
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  if (!(peak_lr > 0.0) || !(min_lr > 0.0) || min_lr > peak_lr) throw InvalidArgument("learning rates must be positive");
  if (warmup_steps < 0 || total_steps <= 0 || warmup_steps >= total_steps) {
    throw InvalidArgument("warmup must be shorter than the run");
  }
  if (batch_size < 1) throw InvalidArgument("batch size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("betas must be in [0, 1)");
  if (weight_decay < 0.0 || grad_clip < 0.0 || !(eps > 0.0)) throw InvalidArgument("invalid optimizer setting");
  model.validate();
  if (model.patch.pt != 1) throw InvalidArgument("mixed image/video training needs temporal patch size 1");
  if (model.height != model.width) throw InvalidArgument("subject canvases are square; use square frames");
  if (mix) mix->validate();
}

TaskMix TrainConfig::effective_mix() const { return mix ? *mix : TaskMix::defaults(mix_mode); }

json TrainConfig::to_json() const {
  json j;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["eps"] = eps;
  j["weight_decay"] = weight_decay;
  j["peak_lr"] = peak_lr;
  j["warmup_steps"] = warmup_steps;
  j["min_lr"] = min_lr;
  j["grad_clip"] = grad_clip;
  j["batch_size"] = batch_size;
  j["total_steps"] = total_steps;
  j["seed"] = seed;
  j["embedding_mode"] = layout::to_string(embedding_mode);
  j["camera_mode"] = layout::to_string(camera_mode);
  j["lottery_enabled"] = lottery_enabled;
  j["mix_mode"] = to_string(mix_mode);
  j["use_camera"] = use_camera;
  if (mix) {
    json m;
    for (Task t : all_tasks()) m[to_string(t)] = (*mix)[t];
    j["mix"] = m;
  }
  j["model"] = json::parse(model.to_json());
  return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("train config must be an object");
  TrainConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "beta1") c.beta1 = v.get<double>();
      else if (key == "beta2") c.beta2 = v.get<double>();
      else if (key == "eps") c.eps = v.get<double>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else if (key == "peak_lr") c.peak_lr = v.get<double>();
      else if (key == "warmup_steps") c.warmup_steps = v.get<int>();
      else if (key == "min_lr") c.min_lr = v.get<double>();
      else if (key == "grad_clip") c.grad_clip = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "total_steps") c.total_steps = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "embedding_mode") c.embedding_mode = layout::parse_embedding_mode(v.get<std::string>());
      else if (key == "camera_mode") c.camera_mode = layout::parse_camera_mode(v.get<std::string>());
      else if (key == "lottery_enabled") c.lottery_enabled = v.get<bool>();
      else if (key == "mix_mode") c.mix_mode = parse_mix_mode(v.get<std::string>());
      else if (key == "use_camera") c.use_camera = v.get<bool>();
      else if (key == "mix") {
        TaskMix m;
        for (const auto& [task, w] : v.items()) m[parse_task(task)] = w.get<double>();
        c.mix = m;
      } else if (key == "model") {
        // Partial model blocks are laid over the defaults.
        json merged = json::parse(c.model.to_json());
        for (const auto& [mk, mv] : v.items()) {
          if (!merged.contains(mk)) throw InvalidArgument("unknown model config key '" + mk + "'");
          merged[mk] = mv;
        }
        c.model = dit::DiTConfig::from_json(merged.dump());
      } else {
        throw InvalidArgument("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

namespace {

std::string env_name(const std::string& prefix, const std::string& key) {
  std::string out = "VIDCUS_" + prefix;
  for (char ch : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

json env_value(const json& current, const std::string& raw) {
  if (current.is_string()) return raw;
  try {
    return json::parse(raw);
  } catch (const json::exception&) {
    throw InvalidArgument("environment override '" + raw + "' is not a valid value");
  }
}

}  // namespace

std::vector<std::string> TrainConfig::apply_env(const std::function<const char*(const char*)>& getenv) {
  json j = to_json();
  std::vector<std::string> applied;
  for (auto& [key, v] : j.items()) {
    if (!v.is_primitive()) continue;
    const std::string name = env_name("", key);
    if (const char* raw = getenv(name.c_str())) {
      v = env_value(v, raw);
      applied.push_back(name);
    }
  }
  for (auto& [key, v] : j["model"].items()) {
    if (!v.is_primitive()) continue;
    const std::string name = env_name("MODEL_", key);
    if (const char* raw = getenv(name.c_str())) {
      v = env_value(v, raw);
      applied.push_back(name);
    }
  }
  if (!applied.empty()) *this = from_json(j);
  return applied;
}

double learning_rate(const TrainConfig& c, int step) {
  step = std::clamp(step, 0, c.total_steps);
  if (step < c.warmup_steps) return c.peak_lr * static_cast<double>(step) / c.warmup_steps;
  const double progress = static_cast<double>(step - c.warmup_steps) / (c.total_steps - c.warmup_steps);
  return c.min_lr + 0.5 * (c.peak_lr - c.min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

// ---------------------------------------------------------------------------
// Data

TaskPool::TaskPool(const std::vector<factory::Sample>& samples) {
  for (const auto& s : samples) {
    storage_.push_back(s);
    if (s.task == factory::TaskKind::text2video) {
      factory::Sample still = s;
      still.video = s.video.slice_frame(std::clamp(s.caption_frame, 0, s.video.frames - 1));
      still.camera.reset();
      storage_.push_back(std::move(still));
    }
  }
  for (std::size_t i = 0; i < storage_.size(); ++i) {
    const auto& s = storage_[i];
    Task t;
    switch (s.task) {
      case factory::TaskKind::subject_customization: t = Task::subject_customization; break;
      case factory::TaskKind::depth2video: t = Task::depth2video; break;
      case factory::TaskKind::mask2video: t = Task::mask2video; break;
      case factory::TaskKind::text2video: t = s.video.frames == 1 ? Task::text2image : Task::text2video; break;
      case factory::TaskKind::image_edit: t = Task::image_edit; break;
      case factory::TaskKind::single_subject_image: t = Task::single_subject_image; break;
      default: continue;
    }
    by_task_[t].push_back(&s);
  }
}

const std::vector<const factory::Sample*>& TaskPool::samples(Task t) const {
  static const std::vector<const factory::Sample*> empty;
  const auto it = by_task_.find(t);
  return it == by_task_.end() ? empty : it->second;
}

Video to_model_space(const Video& v) {
  Video out = v;
  for (float& x : out.data) x = 2.0f * x - 1.0f;
  return out;
}

Video from_model_space(const Video& v) {
  Video out = v;
  for (float& x : out.data) x = std::clamp(0.5f * (x + 1.0f), 0.0f, 1.0f);
  return out;
}

namespace {

struct VisualInput {
  SegmentKind kind;
  Video image;  // [1, H, W, 3], pixels
};

struct PlanSpec {
  std::string text;
  std::vector<VisualInput> images;
  ControlKind control = ControlKind::none;
  const Video* control_video = nullptr;  // pixels, [N, H, W, 1]
  const geometry::CameraTrajectory* camera = nullptr;
  bool fixed_edit_position = false;
};

layout::Segment visual_segment(SegmentKind kind, const Video& model_space, const dit::DiTConfig& cfg,
                               std::vector<int> positions, ControlKind control = ControlKind::none) {
  if (model_space.height != cfg.height || model_space.width != cfg.width) {
    throw ShapeError("input " + model_space.shape_string() + " does not match the model frame size");
  }
  layout::Segment s;
  s.kind = kind;
  s.control = control;
  s.frames = model_space.frames;
  s.tokens_per_frame = cfg.tokens_per_frame();
  s.frame_positions = std::move(positions);
  s.feature_dim = cfg.patch.token_dim(model_space.channels);
  s.features = dit::patchify(model_space, cfg.patch);
  return s;
}

std::vector<float> plucker_tokens(const geometry::CameraTrajectory& cam, const dit::DiTConfig& cfg, int frames) {
  if (static_cast<int>(cam.poses.size()) != frames) throw ShapeError("camera trajectory length differs from frames");
  const auto maps = geometry::trajectory_plucker(cam, cfg.grid_h(), cfg.grid_w());
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(frames * cfg.tokens_per_frame() * 6));
  for (const auto& m : maps)
    for (int v = 0; v < m.height; ++v)
      for (int u = 0; u < m.width; ++u)
        for (int k = 0; k < 6; ++k) out.push_back(static_cast<float>(m.pixel(v, u)[k]));
  return out;
}

layout::TokenPlan assemble(const PlanSpec& spec, const Video& xt, double t, const TrainConfig& config, Rng& rng) {
  const auto& cfg = config.model;
  const int M = cfg.max_subjects;
  const int N = xt.frames;
  const auto tp = layout::assign_temporal_positions(M, N, config.embedding_mode);

  std::vector<layout::Segment> segs;
  layout::Segment text;
  text.kind = SegmentKind::text;
  text.text_ids = dit::Vocabulary::standard().encode(spec.text);
  if (text.text_ids.empty()) text.text_ids.push_back(0);
  text.tokens_per_frame = static_cast<int>(text.text_ids.size());
  text.frame_positions = {0};
  segs.push_back(std::move(text));

  const int K = static_cast<int>(spec.images.size());
  if (K > M) throw InvalidArgument("more than M=" + std::to_string(M) + " input images");
  if (K > 0) {
    std::vector<int> positions;
    if (spec.fixed_edit_position) positions = layout::sequential_assignment(K, M).positions;
    else if (config.lottery_enabled) positions = layout::assign_subject_positions(K, layout::sample_lottery(K, M, rng));
    else positions = layout::assign_subject_positions(K, layout::sequential_assignment(K, M));
    for (int k = 0; k < K; ++k) {
      const auto& in = spec.images[static_cast<std::size_t>(k)];
      segs.push_back(visual_segment(in.kind, to_model_space(in.image), cfg, {positions[static_cast<std::size_t>(k)]}));
      segs.back().label = k + 1;
    }
  }

  std::vector<layout::NoiseAddend> addends;
  if (spec.control_video) {
    const Video ctrl = to_model_space(*spec.control_video);
    if (ctrl.frames != N) throw ShapeError("control sequence length differs from the target");
    if (config.embedding_mode == EmbeddingMode::add_to_noise) {
      addends.push_back({spec.control, cfg.control_dim(), dit::patchify(ctrl, cfg.patch)});
    } else {
      segs.push_back(visual_segment(SegmentKind::struct_control, ctrl, cfg, tp.control, spec.control));
    }
  }
  if (spec.camera) {
    auto feats = plucker_tokens(*spec.camera, cfg, N);
    if (config.camera_mode == layout::CameraMode::add_mlp) {
      addends.push_back({ControlKind::camera, 6, std::move(feats)});
    } else {
      layout::Segment cam;
      cam.kind = SegmentKind::struct_control;
      cam.control = ControlKind::camera;
      cam.frames = N;
      cam.tokens_per_frame = cfg.tokens_per_frame();
      cam.frame_positions = tp.control;
      cam.feature_dim = 6;
      cam.features = std::move(feats);
      segs.push_back(std::move(cam));
    }
  }
  segs.push_back(visual_segment(SegmentKind::noise, xt, cfg, tp.noise));

  layout::ComposeOptions opt;
  opt.M = M;
  opt.N = N;
  opt.t = t;
  opt.grid_h = cfg.grid_h();
  opt.grid_w = cfg.grid_w();
  opt.timestep_on_all = config.embedding_mode == EmbeddingMode::naive;
  return layout::compose_sequence(std::move(segs), opt, std::move(addends));
}

}  // namespace

layout::TokenPlan build_plan(Task task, const factory::Sample& s, const Video& xt, double t, const TrainConfig& config,
                             Rng& rng) {
  PlanSpec spec;
  spec.text = s.caption;
  switch (task) {
    case Task::subject_customization:
    case Task::single_subject_image:
      if (s.subjects.empty()) throw InvalidRecord(to_string(task) + " sample has no subject images");
      for (const auto& in : s.subjects) spec.images.push_back({SegmentKind::subject_image, in.image});
      break;
    case Task::image_edit:
      if (s.subjects.size() != 1) throw InvalidRecord("image_edit sample needs exactly one input image");
      spec.images.push_back({SegmentKind::edit_input_image, s.subjects[0].image});
      spec.fixed_edit_position = config.mix_mode == MixMode::direct;
      break;
    case Task::depth2video:
    case Task::mask2video:
      if (!s.has_control()) throw InvalidRecord(to_string(task) + " sample has no control sequence");
      spec.control = task == Task::depth2video ? ControlKind::depth : ControlKind::mask;
      spec.control_video = &s.control;
      break;
    case Task::text2video:
    case Task::text2image: break;
  }
  if (config.use_camera && s.camera && !is_image_task(task)) spec.camera = &*s.camera;
  return assemble(spec, xt, t, config, rng);
}

Batch build_batch(Task task, const TaskPool& pool, const TrainConfig& config, Rng& rng) {
  const auto& samples = pool.samples(task);
  if (samples.empty()) throw InvalidArgument("dataset has no " + to_string(task) + " samples");
  Batch b;
  b.task = task;
  for (int i = 0; i < config.batch_size; ++i) {
    const auto* s = samples[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(samples.size()) - 1))];
    const double t = rng.uniform();
    const auto pair = flow::make_training_pair(to_model_space(s->video), t, rng);
    PlanTarget item{build_plan(task, *s, pair.xt, t, config, rng), dit::patchify(pair.v, config.model.patch)};
    b.items.push_back(std::move(item));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Optimization

void AdamW::step(nn::ParamRefs<float>& params, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (auto* p : params) {
    auto& [m, v] = moments_[p->name];
    if (m.size() == 0) {
      m = nn::Mat<float>::Zero(p->value.rows(), p->value.cols());
      v = nn::Mat<float>::Zero(p->value.rows(), p->value.cols());
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double g = p->grad.data()[i];
      double mi = cfg_.beta1 * m.data()[i] + (1.0 - cfg_.beta1) * g;
      double vi = cfg_.beta2 * v.data()[i] + (1.0 - cfg_.beta2) * g * g;
      m.data()[i] = static_cast<float>(mi);
      v.data()[i] = static_cast<float>(vi);
      const double w = p->value.data()[i];
      const double update = (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps) + cfg_.weight_decay * w;
      p->value.data()[i] = static_cast<float>(w - lr * update);
    }
  }
}

namespace {

std::string diagnostics(int step, const Batch& batch) {
  std::ostringstream os;
  os << "step " << step << " task " << to_string(batch.task) << " t=[";
  for (std::size_t i = 0; i < batch.items.size(); ++i) os << (i ? "," : "") << batch.items[i].plan.t;
  os << "]";
  return os.str();
}

nn::Mat<float> as_matrix(const std::vector<float>& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const nn::Mat<float>>(v.data(), rows, cols);
}

}  // namespace

double train_step(dit::DiTModel<float>& model, AdamW& opt, const Batch& batch, const TrainConfig& config, int step) {
  model.zero_grad();
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.items.size());
  try {
    for (const auto& item : batch.items) {
      typename dit::DiTModel<float>::Cache cache;
      const nn::Mat<float> pred = model.forward(item.plan, cache);
      const nn::Mat<float> target = as_matrix(item.velocity, pred.rows(), pred.cols());
      const double l = flow::fm_loss(std::span<const float>(pred.data(), static_cast<std::size_t>(pred.size())),
                                     item.velocity);
      if (!std::isfinite(l)) throw NumericError("non-finite loss");
      loss += l * inv_b;
      const nn::Mat<float> d_out = (pred - target) * static_cast<float>(2.0 * inv_b / static_cast<double>(pred.size()));
      model.backward(item.plan, cache, d_out);
    }
  } catch (const NumericError& e) {
    throw NumericError(diagnostics(step, batch) + ": " + e.what());
  }
  auto params = model.parameters();
  if (config.grad_clip > 0.0) {
    double sq = 0.0;
    for (auto* p : params) sq += static_cast<double>(p->grad.squaredNorm());
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw NumericError(diagnostics(step, batch) + ": non-finite gradient norm");
    if (norm > config.grad_clip)
      for (auto* p : params) p->grad *= static_cast<float>(config.grad_clip / norm);
  }
  opt.step(params, learning_rate(config, step));
  return loss;
}

double batch_loss(const dit::DiTModel<float>& model, const Batch& batch) {
  double loss = 0.0;
  for (const auto& item : batch.items) {
    const nn::Mat<float> pred = model.forward(item.plan);
    loss += flow::fm_loss(std::span<const float>(pred.data(), static_cast<std::size_t>(pred.size())), item.velocity);
  }
  return loss / static_cast<double>(batch.items.size());
}

Trainer::Trainer(const TrainConfig& config, const std::vector<factory::Sample>& data)
    : config_(config),
      pool_(data),
      mix_(config.effective_mix()),
      opt_(config),
      task_rng_(Rng(config.seed).substream("train/tasks")),
      batch_rng_(Rng(config.seed).substream("train/batches")) {
  config_.validate();
  for (Task t : all_tasks())
    if (mix_[t] > 0.0 && !pool_.has(t)) mix_[t] = 0.0;  // tasks absent from the data are not drawn
  mix_.validate();
  model_ = dit::DiTModel<float>(config_.model, Rng(config.seed).substream("train/model").next_u64());
}

StepResult Trainer::step() {
  StepResult r;
  r.step = step_;
  r.task = sample_task(mix_, task_rng_);
  const Batch batch = build_batch(r.task, pool_, config_, batch_rng_);
  r.lr = learning_rate(config_, step_);
  r.loss = train_step(model_, opt_, batch, config_, step_);
  ++step_;
  return r;
}

std::vector<StepResult> Trainer::run(int steps, const std::function<void(const StepResult&)>& on_step) {
  std::vector<StepResult> out;
  for (int i = 0; i < steps; ++i) {
    out.push_back(step());
    if (on_step) on_step(out.back());
  }
  return out;
}

double validation_loss(const dit::DiTModel<float>& model, const TaskPool& pool, Task task, const TrainConfig& config,
                       int batches, std::uint64_t seed) {
  Rng rng = Rng(seed).substream("validation/" + to_string(task));
  double total = 0.0;
  for (int i = 0; i < batches; ++i) total += batch_loss(model, build_batch(task, pool, config, rng));
  return total / batches;
}

// ---------------------------------------------------------------------------
// Inference

layout::TokenPlan compose_inference(const InferenceConditions& c, const TrainConfig& config, Rng& rng) {
  const auto& cfg = config.model;
  if (c.prompt.empty() && c.edit.empty()) throw InvalidArgument("inference needs a text prompt");
  if (c.depth && c.mask) throw InvalidArgument("pass either a depth or a mask sequence, not both");
  if (static_cast<int>(c.subjects.size()) > cfg.max_subjects) {
    throw InvalidArgument("more than M=" + std::to_string(cfg.max_subjects) + " subjects");
  }
  int frames = c.frames > 0 ? c.frames : cfg.frames;
  if (c.depth) frames = c.depth->frames;
  if (c.mask) frames = c.mask->frames;
  PlanSpec spec;
  spec.text = c.edit.empty() ? c.prompt : (c.prompt.empty() ? c.edit : c.prompt + " " + c.edit);
  for (const auto& s : c.subjects) spec.images.push_back({SegmentKind::subject_image, s});
  if (c.depth) spec.control = ControlKind::depth, spec.control_video = &*c.depth;
  if (c.mask) spec.control = ControlKind::mask, spec.control_video = &*c.mask;
  if (c.camera) spec.camera = &*c.camera;
  const Video zeros(frames, cfg.height, cfg.width, cfg.channels);
  return assemble(spec, zeros, 0.0, config, rng);
}

Video generate(const dit::DiTModel<float>& model, const InferenceConditions& c, const TrainConfig& config, int steps,
               Rng& rng) {
  layout::TokenPlan plan = compose_inference(c, config, rng);
  const auto& cfg = config.model;
  const int frames = plan.N;
  const flow::VelocityField field = [&](const Video& x, double t) {
    plan.noise().features = dit::patchify(x, cfg.patch);
    plan.t = t;
    const nn::Mat<float> v = model.forward(plan);
    return dit::unpatchify(std::vector<float>(v.data(), v.data() + v.size()), frames, cfg.height, cfg.width,
                           cfg.channels, cfg.patch);
  };
  Rng noise = rng.substream("sample/noise");
  return from_model_space(flow::euler_sample(field, frames, cfg.height, cfg.width, cfg.channels, steps, noise));
}

}  // namespace vidcus::train
