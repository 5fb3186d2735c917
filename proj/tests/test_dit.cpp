// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "plan_fixtures.hpp"
#include "vidcus/dit.hpp"

using namespace vidcus;
using namespace vidcus::dit;

namespace {

DiTConfig small_config() {
  DiTConfig c;
  c.hidden = 32;
  c.heads = 4;
  c.layers = 2;
  c.patch = {1, 4, 4};
  c.height = 8;
  c.width = 8;
  c.frames = 2;
  c.encoding_dim = 16;
  return c;
}

Video random_video(Rng& rng, int f, int h, int w, int c) {
  Video v(f, h, w, c);
  for (auto& x : v.data) x = static_cast<float>(rng.normal());
  return v;
}

template <class S>
double mean_square(const Mat<S>& m) {
  return static_cast<double>(m.squaredNorm()) / static_cast<double>(m.size());
}

}  // namespace

TEST_CASE("patchify token count and round trip") {
  Rng rng(1);
  const Video v = random_video(rng, 4, 8, 8, 4);
  const auto tokens = patchify(v, {1, 2, 2});
  CHECK(tokens.size() == 64u * 16u);
  CHECK(unpatchify(tokens, 4, 8, 8, 4, {1, 2, 2}) == v);

  const auto t2 = patchify(v, {2, 4, 2});
  CHECK(unpatchify(t2, 4, 8, 8, 4, {2, 4, 2}) == v);

  const auto cells = patchify(v, {1, 1, 1});
  CHECK(cells == v.data);
  CHECK_THROWS_AS(patchify(v, {3, 2, 2}), ShapeError);
  CHECK_THROWS_AS(patchify(v, {1, 3, 2}), ShapeError);
}

TEST_CASE("vocabulary encodes captions and labels") {
  const auto& vocab = Vocabulary::standard();
  const auto ids = vocab.encode("a Red circle IMG1 moving left.");
  REQUIRE(ids.size() == 6);
  CHECK(vocab.word(ids[1]) == "red");
  CHECK(vocab.word(ids[3]) == "IMG1");
  CHECK(vocab.word(ids[5]) == "left");
  CHECK(vocab.id("zebra") == 0);
}

TEST_CASE("zero weights except the final bias give a constant output") {
  DiTConfig cfg = small_config();
  cfg.precondition = false;
  DiTModel<double> model(cfg, 3);
  for (auto* p : model.parameters()) p->value.setZero();
  auto params = model.parameters();
  nn::Param<double>* bias = params.back();
  REQUIRE(bias->name == "final.linear.bias");
  Rng rng(2);
  bias->value.setRandom();
  const auto out = model.forward(testing::random_plan(cfg, rng));
  for (Eigen::Index r = 0; r < out.rows(); ++r) CHECK((out.row(r) - bias->value.row(0)).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("preconditioned head adds the linear skip") {
    cfg.precondition = true;
    DiTModel<double> pre(cfg, 3);
    for (auto* p : pre.parameters()) p->value.setZero();
    pre.parameters().back()->value = bias->value;
    const auto plan = testing::random_plan(cfg, rng);
    const auto [c_skip, c_out] = cfg.precondition_coefficients(plan.t);
    const auto y = pre.forward(plan);
    const auto& xt = plan.noise().features;
    for (Eigen::Index r = 0; r < y.rows(); ++r)
      for (Eigen::Index c = 0; c < y.cols(); ++c)
        CHECK(y(r, c) == doctest::Approx(c_skip * xt[static_cast<std::size_t>(r * y.cols() + c)] + c_out * bias->value(0, c)));
  }
}

TEST_CASE("preconditioning coefficients") {
  DiTConfig cfg;
  cfg.sigma_data = 0.5;
  auto [s0, o0] = cfg.precondition_coefficients(0.0);
  CHECK(s0 == doctest::Approx(-1.0));
  CHECK(o0 == doctest::Approx(0.5));
  auto [s1, o1] = cfg.precondition_coefficients(1.0);
  CHECK(s1 == doctest::Approx(1.0));
  CHECK(o1 == doctest::Approx(1.0));
  // Monte Carlo: the skip is the least-squares slope of v on xt for Gaussian x1.
  Rng rng(1);
  const double t = 0.3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 200000; ++i) {
    const double x1 = 0.5 * rng.normal(), x0 = rng.normal();
    const double xt = t * x1 + (1 - t) * x0;
    sxy += (x1 - x0) * xt;
    sxx += xt * xt;
  }
  CHECK(cfg.precondition_coefficients(t).first == doctest::Approx(sxy / sxx).epsilon(0.02));
}

TEST_CASE("output depends on positions, not on concatenation order") {
  const DiTConfig cfg = small_config();
  DiTModel<double> model(cfg, 4);
  Rng rng(5);
  const auto plan = testing::random_plan(cfg, rng);
  const auto base = model.forward(plan);
  // Canonical order: text, subj(2), subj(5), depth, noise.
  const auto swapped = model.forward(testing::reorder_segments(plan, {0, 2, 1, 3, 4}));
  CHECK((base - swapped).cwiseAbs().maxCoeff() < 1e-10);
  const auto shuffled = model.forward(testing::reorder_segments(plan, {3, 2, 4, 0, 1}));
  CHECK((base - shuffled).cwiseAbs().maxCoeff() < 1e-5);

  DiTModel<float> fmodel = model.cast<float>();
  const auto fb = fmodel.forward(plan);
  const auto fs = fmodel.forward(testing::reorder_segments(plan, {4, 1, 3, 2, 0}));
  CHECK((fb - fs).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("every condition segment influences the output") {
  const DiTConfig cfg = small_config();
  DiTModel<double> model(cfg, 6);
  // Let the timestep and camera maps contribute too.
  for (auto* p : model.parameters())
    if (p->name.rfind("embed.", 0) == 0) p->value.setRandom();
  Rng rng(7);
  const auto plan = testing::random_plan(cfg, rng);
  const auto base = model.forward(plan);
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    auto perturbed = plan;
    auto& seg = perturbed.segments[s];
    if (seg.kind == layout::SegmentKind::text) {
      seg.text_ids[0] = seg.text_ids[0] % 20 + 21;
    } else {
      for (auto& v : seg.features) v += static_cast<float>(0.5 * rng.normal());
    }
    CHECK((model.forward(perturbed) - base).cwiseAbs().maxCoeff() > 1e-8);
  }
  auto cam = plan;
  for (auto& v : cam.addends[0].features) v += 1.0f;
  CHECK((model.forward(cam) - base).cwiseAbs().maxCoeff() > 1e-8);
  auto later = plan;
  later.t += 0.1;
  CHECK((model.forward(later) - base).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("analytic gradients match central differences (64-bit)") {
  const DiTConfig cfg = small_config();
  DiTModel<double> model(cfg, 8);
  for (auto* p : model.parameters())
    if (p->name.rfind("embed.", 0) == 0) p->value.setRandom();
  Rng rng(9);
  const auto plan = testing::random_plan(cfg, rng);

  DiTModel<double>::Cache cache;
  const auto out = model.forward(plan, cache);
  model.zero_grad();
  const Mat<double> d_out = out * (2.0 / static_cast<double>(out.size()));
  const Mat<double> d_noise = model.backward(plan, cache, d_out);

  const double h = 1e-3;
  double worst = 0.0;
  int checked = 0;
  for (auto* p : model.parameters()) {
    for (int k = 0; k < 3; ++k) {
      const auto idx = static_cast<Eigen::Index>(rng.uniform_int(0, p->value.size() - 1));
      const double orig = p->value.data()[idx];
      p->value.data()[idx] = orig + h;
      const double up = mean_square(model.forward(plan));
      p->value.data()[idx] = orig - h;
      const double down = mean_square(model.forward(plan));
      p->value.data()[idx] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad.data()[idx];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      const double rel = std::abs(numeric - analytic) / denom;
      if (std::abs(numeric) < 1e-9 && std::abs(analytic) < 1e-9) continue;
      worst = std::max(worst, rel);
      ++checked;
      INFO(p->name << "[" << idx << "] analytic=" << analytic << " numeric=" << numeric);
      CHECK(rel < 1e-3);
    }
  }
  CHECK(checked > 50);
  MESSAGE("worst relative error " << worst << " over " << checked << " entries");

  // Gradient with respect to the noisy input.
  auto& feats = const_cast<layout::TokenPlan&>(plan).noise().features;
  for (int k = 0; k < 10; ++k) {
    const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(feats.size()) - 1));
    const float orig = feats[idx];
    const double hf = 1e-2;
    feats[idx] = static_cast<float>(orig + hf);
    const double up = mean_square(model.forward(plan));
    feats[idx] = static_cast<float>(orig - hf);
    const double down = mean_square(model.forward(plan));
    feats[idx] = orig;
    const double numeric = (up - down) / (2 * hf);
    const double analytic = d_noise.data()[idx];
    CHECK(std::abs(numeric - analytic) <= 1e-3 * std::max(std::abs(analytic), 1e-4) + 1e-7);
  }
}

TEST_CASE("non-finite inputs and mismatched shapes are rejected") {
  const DiTConfig cfg = small_config();
  DiTModel<float> model(cfg, 1);
  Rng rng(10);
  auto plan = testing::random_plan(cfg, rng);
  plan.noise().features[0] = std::nanf("");
  CHECK_THROWS_AS(model.forward(plan), NumericError);
  auto bad = testing::random_plan(cfg, rng);
  DiTConfig other = cfg;
  other.height = 16;
  DiTModel<float> big(other, 1);
  CHECK_THROWS_AS(big.forward(bad), ShapeError);
}

TEST_CASE("denoise returns a latent shaped like the noise segment") {
  const DiTConfig cfg = small_config();
  DiTModel<float> model(cfg, 2);
  Rng rng(11);
  const Video v = denoise(model, testing::random_plan(cfg, rng, false));
  CHECK(v.frames == 2);
  CHECK(v.height == 8);
  CHECK(v.width == 8);
  CHECK(v.channels == 3);
}

TEST_CASE("checkpoint bytes are deterministic and round trip") {
  const DiTConfig cfg = small_config();
  DiTModel<float> a(cfg, 12);
  DiTModel<float> b(cfg, 12);
  const auto bytes = serialize_checkpoint(a);
  CHECK(bytes == serialize_checkpoint(b));
  CHECK(std::string(bytes.data(), 8) == "VIDCUSCK");
  CHECK(bytes[8] == 1);

  const auto path = std::filesystem::temp_directory_path() / "vidcus_test_ckpt.bin";
  save_checkpoint(path, a);
  DiTModel<float> loaded = load_checkpoint(path);
  CHECK(serialize_checkpoint(loaded) == bytes);
  Rng rng(13);
  const auto plan = testing::random_plan(cfg, rng);
  CHECK(a.forward(plan) == loaded.forward(plan));
  std::filesystem::remove(path);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(deserialize_checkpoint(truncated), InvalidRecord);
}
