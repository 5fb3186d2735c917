// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidcus/experiments.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "vidcus/metrics.hpp"

namespace vidcus::experiments {

using train::Task;

train::TrainConfig desk_config(const DeskScale& s, std::uint64_t seed) {
  train::TrainConfig c;
  c.model.hidden = s.hidden;
  c.model.layers = s.layers;
  c.model.heads = s.heads;
  c.model.encoding_dim = s.encoding_dim;
  c.model.patch = {1, s.patch, s.patch};
  c.batch_size = s.batch;
  c.total_steps = s.steps;
  c.warmup_steps = std::min(s.warmup, s.steps - 1);
  c.peak_lr = s.peak_lr;
  c.min_lr = s.min_lr;
  c.grad_clip = s.grad_clip;
  c.seed = seed;
  return c;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("spearman needs two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j);
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double depth_rank_correlation(const Video& generated, const Video& depth, const Video& reference) {
  if (generated.frames != depth.frames || generated.height != depth.height || generated.width != depth.width ||
      !generated.same_shape(reference)) {
    throw ShapeError("depth_rank_correlation: shapes differ");
  }
  const std::size_t colors = factory::palette().size();
  std::vector<double> sum(colors, 0.0), count(colors, 0.0);
  for (int f = 0; f < reference.frames; ++f)
    for (int y = 0; y < reference.height; ++y)
      for (int x = 0; x < reference.width; ++x) {
        const int k = metrics::palette_class(reference, f, y, x);
        if (k < 0) continue;
        sum[static_cast<std::size_t>(k)] += depth.at(f, y, x, 0);
        count[static_cast<std::size_t>(k)] += 1.0;
      }
  std::vector<double> target, layered;
  for (int f = 0; f < generated.frames; ++f)
    for (int y = 0; y < generated.height; ++y)
      for (int x = 0; x < generated.width; ++x) {
        const int k = metrics::palette_class(generated, f, y, x);
        const auto ku = static_cast<std::size_t>(k);
        target.push_back(depth.at(f, y, x, 0));
        layered.push_back(k >= 0 && count[ku] > 0 ? sum[ku] / count[ku] : 0.0);
      }
  return spearman(target, layered);
}

namespace {

struct ShapeModel {
  double area = 0.0;      // silhouette area at unit radius
  double centroid = 0.0;  // vertical centroid offset at unit radius
};

const std::array<ShapeModel, 4>& shape_models() {
  static const std::array<ShapeModel, 4> models = [] {
    std::array<ShapeModel, 4> out{};
    constexpr int n = 600;
    const double cell = 2.0 / n;
    for (int k = 0; k < 4; ++k) {
      double count = 0, sy = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double x = -1 + (j + 0.5) * cell, y = -1 + (i + 0.5) * cell;
          if (factory::shape_contains(static_cast<factory::Shape>(k), x, y, 1.0)) ++count, sy += y;
        }
      out[static_cast<std::size_t>(k)] = {count * cell * cell, sy / count};
    }
    return out;
  }();
  return models;
}

}  // namespace

factory::Shape classify_blob(const std::vector<std::pair<int, int>>& pixels) {
  if (pixels.empty()) throw InvalidArgument("classify_blob: empty blob");
  double cx = 0, cy = 0;
  std::set<std::pair<int, int>> blob(pixels.begin(), pixels.end());
  for (const auto& [y, x] : pixels) cx += x + 0.5, cy += y + 0.5;
  const double n = static_cast<double>(pixels.size());
  cx /= n, cy /= n;
  factory::Shape best = factory::Shape::circle;
  double best_iou = -1.0;
  for (int k = 0; k < 4; ++k) {
    const auto& m = shape_models()[static_cast<std::size_t>(k)];
    const double r = std::sqrt(n / m.area);
    const double oy = cy - m.centroid * r;
    const int reach = static_cast<int>(std::ceil(r)) + 1;
    int inter = 0, predicted = 0;
    for (int y = static_cast<int>(std::floor(oy)) - reach; y <= static_cast<int>(std::floor(oy)) + reach; ++y)
      for (int x = static_cast<int>(std::floor(cx)) - reach; x <= static_cast<int>(std::floor(cx)) + reach; ++x)
        if (factory::shape_contains(static_cast<factory::Shape>(k), x + 0.5 - cx, y + 0.5 - oy, r)) {
          ++predicted;
          inter += blob.count({y, x}) ? 1 : 0;
        }
    const double iou = inter / (predicted + n - inter);
    if (iou > best_iou) best_iou = iou, best = static_cast<factory::Shape>(k);
  }
  return best;
}

bool detect_subject(const Video& generated, const SubjectKey& key, int min_pixels) {
  int hits = 0;
  const int h = generated.height, w = generated.width;
  for (int f = 0; f < generated.frames; ++f) {
    std::vector<char> on(static_cast<std::size_t>(h * w), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) on[static_cast<std::size_t>(y * w + x)] = metrics::palette_class(generated, f, y, x) == key.color;
    // Largest 4-connected component.
    std::vector<std::pair<int, int>> largest, current, stack;
    for (int start = 0; start < h * w; ++start) {
      if (!on[static_cast<std::size_t>(start)]) continue;
      current.clear();
      stack = {{start / w, start % w}};
      on[static_cast<std::size_t>(start)] = 0;
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        current.emplace_back(y, x);
        for (auto [dy, dx] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= h || nx >= w || !on[static_cast<std::size_t>(ny * w + nx)]) continue;
          on[static_cast<std::size_t>(ny * w + nx)] = 0;
          stack.emplace_back(ny, nx);
        }
      }
      if (current.size() > largest.size()) largest = current;
    }
    if (static_cast<int>(largest.size()) >= min_pixels && classify_blob(largest) == key.shape) ++hits;
  }
  return 2 * hits >= generated.frames;
}

double subject_recall(const Video& generated, const std::vector<SubjectKey>& subjects, int min_pixels) {
  if (subjects.empty()) throw InvalidArgument("subject_recall needs at least one subject");
  double found = 0.0;
  for (const auto& s : subjects) found += detect_subject(generated, s, min_pixels) ? 1.0 : 0.0;
  return found / static_cast<double>(subjects.size());
}

double Comparison::mean(const std::vector<ArmResult>& r, double ArmResult::*field) {
  if (r.empty()) return 0.0;
  double s = 0.0;
  for (const auto& a : r) s += a.*field;
  return s / static_cast<double>(r.size());
}

std::string edit_prompt(const std::string& labeled_caption, const std::string& source_color,
                        const std::string& target_color) {
  std::istringstream in(labeled_caption);
  std::string w, out;
  bool dropped = false;
  while (in >> w) {
    if (!dropped && w == source_color) {
      dropped = true;
      continue;
    }
    out += (out.empty() ? "" : " ") + w;
  }
  return out + " make it " + target_color;
}

train::TrainConfig apply_ablation(train::TrainConfig c, const std::string& mode) {
  if (mode == "naive") c.embedding_mode = layout::EmbeddingMode::naive;
  else if (mode == "add_to_noise") c.embedding_mode = layout::EmbeddingMode::add_to_noise;
  else if (mode == "no_le") c.lottery_enabled = false;
  else if (mode == "direct_mix") c.mix_mode = train::MixMode::direct, c.mix.reset();
  else if (mode == "no_mix") c.mix_mode = train::MixMode::none, c.mix.reset();
  else throw InvalidArgument("unknown ablation mode '" + mode + "'");
  return c;
}

namespace {

std::vector<factory::Sample> make_data(int scenes, std::uint64_t seed, std::set<factory::TaskKind> tasks, int min_subj,
                                       int max_subj) {
  factory::GenerateOptions g;
  g.count = scenes;
  g.seed = seed;
  g.emit.tasks = std::move(tasks);
  g.scene.min_subjects = min_subj;
  g.scene.max_subjects = max_subj;
  return factory::generate(g);
}

struct Trained {
  train::Trainer trainer;
  double seconds;
};

void note(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

template <class Score>
ArmResult run_arm(const std::string& name, const train::TrainConfig& config, const std::vector<factory::Sample>& data,
                  const Progress& progress, Score&& score) {
  const auto t0 = std::chrono::steady_clock::now();
  train::Trainer trainer(config, data);
  const int every = std::max(1, config.total_steps / 5);
  double window = 0.0;
  trainer.run(config.total_steps, [&](const train::StepResult& r) {
    window += r.loss;
    if ((r.step + 1) % every == 0) {
      std::ostringstream os;
      os << name << " seed " << config.seed << " step " << r.step + 1 << " loss " << window / every;
      note(progress, os.str());
      window = 0.0;
    }
  });
  ArmResult out;
  out.name = name;
  out.seed = config.seed;
  score(trainer, out);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream os;
  os << name << " seed " << config.seed << " val_loss " << out.validation_loss << " score " << out.score << " ("
     << out.seconds << " s)";
  note(progress, os.str());
  return out;
}

}  // namespace

Comparison embedding_comparison(const DeskScale& scale, const std::vector<std::uint64_t>& seeds,
                                const Progress& progress) {
  Comparison cmp{"tae_vs_add_to_noise", "depth_rank_correlation", "tae", "add_to_noise", {}, {}};
  const auto data = make_data(scale.train_scenes, scale.data_seed, {factory::TaskKind::depth2video}, 1, 3);
  const auto val = make_data(scale.val_scenes, scale.data_seed + 1, {factory::TaskKind::depth2video}, 2, 3);
  const train::TaskPool val_pool(val);
  for (std::uint64_t seed : seeds) {
    for (auto mode : {layout::EmbeddingMode::tae, layout::EmbeddingMode::add_to_noise}) {
      train::TrainConfig c = desk_config(scale, seed);
      c.embedding_mode = mode;
      c.mix = train::TaskMix{};
      (*c.mix)[Task::depth2video] = 1.0;
      auto res = run_arm(layout::to_string(mode), c, data, progress, [&](train::Trainer& tr, ArmResult& out) {
        out.validation_loss = train::validation_loss(tr.model(), val_pool, Task::depth2video, c, 8, scale.data_seed);
        double corr = 0.0;
        const int n = std::min<int>(scale.probes, static_cast<int>(val.size()));
        for (int i = 0; i < n; ++i) {
          const auto& s = val[static_cast<std::size_t>(i)];
          train::InferenceConditions cond;
          cond.prompt = s.caption;
          cond.depth = s.control;
          cond.camera = s.camera;
          Rng rng = Rng(scale.data_seed).substream("probe" + std::to_string(i));
          const Video gen = train::generate(tr.model(), cond, c, scale.sample_steps, rng);
          corr += depth_rank_correlation(gen, s.control, s.video);
        }
        out.score = corr / n;
      });
      (mode == layout::EmbeddingMode::tae ? cmp.baseline_runs : cmp.ablated_runs).push_back(res);
    }
  }
  return cmp;
}

Comparison lottery_comparison(const DeskScale& scale, const std::vector<std::uint64_t>& seeds,
                              const Progress& progress) {
  Comparison cmp{"lottery_vs_sequential", "three_subject_recall", "lottery", "sequential", {}, {}};
  const auto data = make_data(scale.train_scenes, scale.data_seed + 10,
                              {factory::TaskKind::subject_customization, factory::TaskKind::text2video}, 1, 2);
  // Probes: scenes with three kept subjects.
  std::vector<factory::Sample> probes;
  for (std::uint64_t s = 0; static_cast<int>(probes.size()) < scale.probes && s < 50; ++s) {
    for (auto& p : make_data(scale.probes, scale.data_seed + 100 + s, {factory::TaskKind::subject_customization}, 3, 3))
      if (p.subjects.size() == 3 && static_cast<int>(probes.size()) < scale.probes) probes.push_back(std::move(p));
  }
  for (std::uint64_t seed : seeds) {
    for (bool lottery : {true, false}) {
      train::TrainConfig c = desk_config(scale, seed);
      c.lottery_enabled = lottery;
      c.mix = train::TaskMix{};
      (*c.mix)[Task::subject_customization] = 1.0;
      (*c.mix)[Task::text2video] = 0.25;
      auto res = run_arm(lottery ? "lottery" : "sequential", c, data, progress, [&](train::Trainer& tr, ArmResult& out) {
        double recall = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i) {
          const auto& s = probes[i];
          train::InferenceConditions cond;
          cond.prompt = s.caption;
          cond.camera = s.camera;
          std::vector<SubjectKey> keys;
          for (const auto& in : s.subjects) {
            cond.subjects.push_back(in.image);
            keys.push_back({factory::color_index(in.color), factory::parse_shape(in.shape)});
          }
          Rng rng = Rng(scale.data_seed).substream("probe" + std::to_string(i));
          recall += subject_recall(train::generate(tr.model(), cond, c, scale.sample_steps, rng), keys);
        }
        out.score = recall / static_cast<double>(probes.size());
      });
      (lottery ? cmp.baseline_runs : cmp.ablated_runs).push_back(res);
    }
  }
  return cmp;
}

Comparison ivtm_comparison(const DeskScale& scale, const std::vector<std::uint64_t>& seeds, const Progress& progress) {
  Comparison cmp{"ivtm_vs_no_mix", "edit_text_alignment", "ivtm", "none", {}, {}};
  const auto data = make_data(scale.train_scenes, scale.data_seed + 20,
                              {factory::TaskKind::subject_customization, factory::TaskKind::text2video,
                               factory::TaskKind::image_edit, factory::TaskKind::single_subject_image},
                              1, 1);
  const auto probes = make_data(scale.probes, scale.data_seed + 21, {factory::TaskKind::subject_customization}, 1, 1);
  const metrics::ToyTextImageEmbedder embedder;
  for (std::uint64_t seed : seeds) {
    for (auto mode : {train::MixMode::ivtm, train::MixMode::none}) {
      train::TrainConfig c = desk_config(scale, seed);
      c.mix_mode = mode;
      auto res = run_arm(train::to_string(mode), c, data, progress, [&](train::Trainer& tr, ArmResult& out) {
        double align = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i) {
          const auto& s = probes[i];
          Rng rng = Rng(scale.data_seed).substream("probe" + std::to_string(i));
          const int src = factory::color_index(s.subjects[0].color);
          int tgt = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(factory::palette().size()) - 2));
          if (tgt >= src) ++tgt;
          train::InferenceConditions cond;
          cond.prompt = edit_prompt(s.caption, s.subjects[0].color, factory::palette()[static_cast<std::size_t>(tgt)].name);
          cond.subjects = {s.subjects[0].image};
          cond.camera = s.camera;
          const Video gen = train::generate(tr.model(), cond, c, scale.sample_steps, rng);
          align += metrics::text_alignment(gen, cond.prompt, embedder);
        }
        out.score = align / static_cast<double>(probes.size());
      });
      (mode == train::MixMode::ivtm ? cmp.baseline_runs : cmp.ablated_runs).push_back(res);
    }
  }
  return cmp;
}

}  // namespace vidcus::experiments
