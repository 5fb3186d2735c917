// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "vidcus/experiments.hpp"

using namespace vidcus;
using namespace vidcus::experiments;

namespace {

// Distinct values only: 1 - 6 sum d^2 / (n (n^2 - 1)).
double spearman_no_ties(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  double d2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  const double n = static_cast<double>(a.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

std::vector<factory::Sample> three_subject_samples(int scenes, std::uint64_t seed) {
  factory::GenerateOptions g;
  g.count = scenes;
  g.seed = seed;
  g.emit.tasks = {factory::TaskKind::subject_customization};
  g.scene.min_subjects = g.scene.max_subjects = 3;
  return factory::generate(g);
}

}  // namespace

TEST_CASE("spearman") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(30), b(30);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = rng.uniform();
    CHECK(spearman(a, b) == doctest::Approx(spearman_no_ties(a, b)).epsilon(1e-12));
  }
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3}, {5, 5, 5}) == 0.0);
  // Ties take average ranks: Pearson of (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
  CHECK(spearman({1, 2, 2, 3}, {1, 2, 3, 4}) == doctest::Approx(0.9486832980505138));
  CHECK_THROWS_AS(spearman({1, 2}, {1}), InvalidArgument);
}

TEST_CASE("shape classifier recovers rendered silhouettes") {
  int hits = 0, total = 0;
  for (const auto& s : three_subject_samples(60, 5)) {
    std::vector<SubjectKey> keys;
    for (const auto& in : s.subjects) keys.push_back({factory::color_index(in.color), factory::parse_shape(in.shape)});
    for (const auto& k : keys) {
      for (int o = 0; o < 4; ++o) {
        const bool detected = detect_subject(s.video, {k.color, static_cast<factory::Shape>(o)});
        hits += detected == (static_cast<factory::Shape>(o) == k.shape);
        ++total;
      }
    }
    CHECK(subject_recall(s.video, keys) >= 2.0 / 3.0);
  }
  CHECK(static_cast<double>(hits) / total >= 0.97);

  const Video blank(8, 32, 32, 3, 0.5f);
  CHECK(subject_recall(blank, {{0, factory::Shape::circle}}) == 0.0);
  CHECK_THROWS_AS(subject_recall(blank, {}), InvalidArgument);
}

TEST_CASE("depth rank correlation of the reference itself is high") {
  factory::GenerateOptions g;
  g.count = 20;
  g.seed = 8;
  g.emit.tasks = {factory::TaskKind::depth2video};
  g.scene.min_subjects = 2;
  g.scene.max_subjects = 3;
  double mean = 0;
  const auto samples = factory::generate(g);
  for (const auto& s : samples) mean += depth_rank_correlation(s.video, s.control, s.video);
  mean /= static_cast<double>(samples.size());
  CHECK(mean > 0.8);
  const auto& s = samples.front();
  const Video gray(s.video.frames, s.video.height, s.video.width, 3, 0.5f);
  CHECK(depth_rank_correlation(gray, s.control, s.video) == 0.0);
  CHECK_THROWS_AS(depth_rank_correlation(Video(1, 4, 4, 3), s.control, s.video), ShapeError);
}

TEST_CASE("edit prompt and ablation modes") {
  CHECK(edit_prompt("a red circle IMG1 moving left", "red", "blue") == "a circle IMG1 moving left make it blue");
  CHECK(edit_prompt("a circle IMG1", "red", "blue") == "a circle IMG1 make it blue");

  const train::TrainConfig base;
  CHECK(apply_ablation(base, "naive").embedding_mode == layout::EmbeddingMode::naive);
  CHECK(apply_ablation(base, "add_to_noise").embedding_mode == layout::EmbeddingMode::add_to_noise);
  CHECK_FALSE(apply_ablation(base, "no_le").lottery_enabled);
  CHECK(apply_ablation(base, "direct_mix").mix_mode == train::MixMode::direct);
  CHECK(apply_ablation(base, "no_mix").mix_mode == train::MixMode::none);
  CHECK_THROWS_AS(apply_ablation(base, "sideways"), InvalidArgument);

  const auto c = desk_config(DeskScale{}, 7);
  CHECK(c.seed == 7);
  CHECK(c.model.hidden == 32);
  CHECK_NOTHROW(c.validate());
}
