// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "vidcus/cus_factory.hpp"
#include "vidcus/metrics.hpp"

using namespace vidcus;
using namespace vidcus::metrics;

namespace {

// Embeds frame f as a one-hot on its first pixel's red value bucket; used to
// build orthogonal frames on demand.
class OneHotEmbedder : public Embedder {
 public:
  std::string name() const override { return "one-hot"; }
  bool has_text() const override { return true; }

 protected:
  Feature raw_image(const Video& v, int f) const override {
    Feature out(4, 0.0);
    out[static_cast<std::size_t>(std::lround(v.at(f, 0, 0, 0) * 3))] = 1.0;
    return out;
  }
  Feature raw_text(const std::string&) const override { return {0, 0, 0, 1}; }
};

// Raw output scaled by a positive factor; normalization must cancel it.
class ScaledPixelEmbedder : public ToyPixelEmbedder {
 public:
  explicit ScaledPixelEmbedder(double s) : s_(s) {}

 protected:
  Feature raw_image(const Video& v, int f) const override {
    Feature x = ToyPixelEmbedder::raw_image(v, f);
    for (double& e : x) e *= s_;
    return x;
  }

 private:
  double s_;
};

Video random_video(Rng& rng, int frames, int h = 16, int w = 16) {
  Video v(frames, h, w, 3);
  for (auto& x : v.data) x = static_cast<float>(rng.uniform());
  return v;
}

double dot_oracle(const Feature& a, const Feature& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i], aa += a[i] * a[i], bb += b[i] * b[i];
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

Video translating_noise(int frames, int step, std::uint64_t seed) {
  Rng rng(seed);
  const int big = 64 + step * frames;
  std::vector<float> canvas(static_cast<std::size_t>(big * big));
  for (auto& c : canvas) c = static_cast<float>(rng.uniform());
  Video v(frames, 48, 48, 3);
  for (int f = 0; f < frames; ++f)
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x)
        for (int c = 0; c < 3; ++c) v.at(f, y, x, c) = canvas[static_cast<std::size_t>((y + 8) * big + x + 8 - step * f + step * frames)];
  return v;
}

}  // namespace

TEST_CASE("embedders return unit vectors") {
  Rng rng(1);
  const Video v = random_video(rng, 3);
  ToyPixelEmbedder pix;
  ToyStructureEmbedder st;
  ToyTextImageEmbedder ti;
  for (const Embedder* e : {static_cast<const Embedder*>(&pix), static_cast<const Embedder*>(&st),
                            static_cast<const Embedder*>(&ti)}) {
    for (int f = 0; f < v.frames; ++f) {
      double n = 0;
      for (double x : e->embed(v, f)) n += x * x;
      CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(pix.embed_text("a red circle"), InvalidArgument);
  const Video flat(1, 8, 8, 3, 0.5f);
  CHECK_NOTHROW(pix.embed(flat));
  CHECK_NOTHROW(st.embed(flat));
}

TEST_CASE("text_alignment") {
  OneHotEmbedder oh;
  const Video v(3, 4, 4, 3, 0.0f);
  CHECK(text_alignment(v, "anything", oh) == doctest::Approx(0.0));
  ToyTextImageEmbedder ti;
  Rng rng(3);
  const Video r = random_video(rng, 2);
  CHECK(text_alignment(r, "a red circle IMG1 moving left", ti) == text_alignment(r, "a red circle moving left", ti));
  ToyPixelEmbedder pix;
  CHECK_THROWS_AS(text_alignment(r, "x", pix), InvalidArgument);

  int wins = 0;
  for (int i = 0; i < 50; ++i) {
    factory::SceneSpec spec;
    spec.subjects.push_back({factory::Shape::circle, factory::color_index("red"), 4 + 0.05 * i, 16, 16, 0.3, 0, 0});
    spec.background_id = i % 10;
    const auto scene = factory::render_scene(spec);
    wins += text_alignment(scene.video, "red circle", ti) > text_alignment(scene.video, "blue square", ti);
  }
  CHECK(wins == 50);
}

TEST_CASE("reference_similarity") {
  Rng rng(5);
  ToyPixelEmbedder pix;
  const Video ref = random_video(rng, 1);
  Video same(4, 16, 16, 3);
  for (int f = 0; f < 4; ++f) std::copy(ref.data.begin(), ref.data.end(), same.frame(f).begin());
  CHECK(reference_similarity(same, {ref}, pix) == doctest::Approx(1.0).epsilon(1e-6));

  OneHotEmbedder oh;
  const Video zeros(2, 2, 2, 3, 0.0f), ones(1, 2, 2, 3, 1.0f);
  CHECK(reference_similarity(zeros, {ones}, oh) == 0.0);

  for (int trial = 0; trial < 5; ++trial) {
    const Video frames = random_video(rng, 5);
    const std::vector<Video> refs{random_video(rng, 1), random_video(rng, 2)};
    double oracle = 0;
    int n = 0;
    for (int f = 0; f < frames.frames; ++f)
      for (const auto& r : refs)
        for (int g = 0; g < r.frames; ++g, ++n) oracle += dot_oracle(pix.embed(frames, f), pix.embed(r, g));
    CHECK(std::abs(reference_similarity(frames, refs, pix) - oracle / n) < 1e-10);
    // Symmetry under swapping the two sets.
    const Video refs_joined = [&] {
      Video j(3, 16, 16, 3);
      std::copy(refs[0].data.begin(), refs[0].data.end(), j.data.begin());
      std::copy(refs[1].data.begin(), refs[1].data.end(), j.data.begin() + static_cast<long>(refs[0].size()));
      return j;
    }();
    CHECK(std::abs(reference_similarity(refs_joined, {frames}, pix) - reference_similarity(frames, refs, pix)) < 1e-12);
    ScaledPixelEmbedder scaled(37.5);
    CHECK(std::abs(reference_similarity(frames, refs, scaled) - reference_similarity(frames, refs, pix)) < 1e-12);
  }
}

TEST_CASE("temporal_consistency") {
  ToyPixelEmbedder pix;
  Rng rng(7);
  const Video one = random_video(rng, 1);
  Video still(6, 16, 16, 3);
  for (int f = 0; f < 6; ++f) std::copy(one.data.begin(), one.data.end(), still.frame(f).begin());
  CHECK(temporal_consistency(still, pix) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(temporal_consistency(one, pix), InvalidArgument);

  OneHotEmbedder oh;
  Video alt(6, 2, 2, 3);
  for (int f = 0; f < 6; ++f)
    for (float& x : alt.frame(f)) x = f % 2 ? 1.0f : 0.0f;
  CHECK(temporal_consistency(alt, oh) == 0.0);

  const Video clip = random_video(rng, 8);
  double oracle = 0;
  for (int f = 1; f < 8; ++f) oracle += dot_oracle(pix.embed(clip, f - 1), pix.embed(clip, f));
  CHECK(std::abs(temporal_consistency(clip, pix) - oracle / 7) < 1e-10);
}

TEST_CASE("dynamic_degree") {
  BlockMatchingFlow flow;
  Rng rng(9);
  const Video one = random_video(rng, 1);
  Video still(5, 16, 16, 3);
  for (int f = 0; f < 5; ++f) std::copy(one.data.begin(), one.data.end(), still.frame(f).begin());
  CHECK(dynamic_degree(still, flow) == 0.0);
  CHECK_THROWS_AS(dynamic_degree(one, flow), InvalidArgument);

  const double dd = dynamic_degree(translating_noise(6, 2, 4), flow);
  CHECK(std::abs(dd - 2.0) <= 0.5);

  factory::SceneSpec slow, fast;
  slow.subjects.push_back({factory::Shape::square, 0, 6, 8, 16, 0.5, 0, 0});
  fast.subjects.push_back({factory::Shape::square, 0, 6, 8, 16, 1.5, 0, 0});
  slow.background_id = fast.background_id = 3;
  CHECK(dynamic_degree(factory::render_scene(fast).video, flow) > dynamic_degree(factory::render_scene(slow).video, flow));

  factory::SceneSpec static_spec;
  static_spec.subjects.push_back({factory::Shape::circle, 0, 6, 16, 16, 0, 0, 0});
  CHECK(dynamic_degree(factory::render_scene(static_spec).video, flow) == 0.0);
}

TEST_CASE("metric report json round trip and determinism") {
  ToyPixelEmbedder pix;
  ToyStructureEmbedder st;
  ToyTextImageEmbedder ti;
  BlockMatchingFlow flow;
  MetricBackends b{&ti, &pix, &st, &flow};
  Rng rng(2);
  MetricReport rep;
  rep.embedder = ti.name();
  rep.structure_embedder = st.name();
  rep.flow = flow.name();
  const Video v = random_video(rng, 4);
  const Video ref = random_video(rng, 1);
  rep.rows.push_back(score_sample("a", v, "a red circle IMG1", {ref}, b));
  rep.rows.push_back(score_sample("b", v.slice_frame(0), "blue", {}, b));
  CHECK(score_sample("a", v, "a red circle IMG1", {ref}, b).clip_i == rep.rows[0].clip_i);
  rep.finalize();
  CHECK(rep.temporal_consistency == rep.rows[0].temporal_consistency);
  for (double m : {rep.clip_t, rep.clip_i, rep.dino_i, rep.temporal_consistency}) CHECK((m >= -1.0 && m <= 1.0));
  CHECK(rep.dynamic_degree >= 0.0);
  const MetricReport back = MetricReport::from_json(nlohmann::json::parse(rep.to_json().dump()));
  CHECK(back.to_json() == rep.to_json());
}

TEST_CASE("subprocess embedder plugin") {
  const auto dir = std::filesystem::temp_directory_path() / "vidcus_metrics_plugin";
  std::filesystem::create_directories(dir);
  const auto script = dir / "embed.sh";
  std::ofstream(script) << "#!/bin/sh\nif [ \"$1\" = --text ]; then echo 0 0 3; else echo 2 0 0; fi\n";
  std::filesystem::permissions(script, std::filesystem::perms::owner_all);
  SubprocessEmbedder e(script.string(), true);
  const Video v(2, 4, 4, 3, 0.2f);
  const Feature f = e.embed(v, 0);
  CHECK(f == Feature{1.0, 0.0, 0.0});
  CHECK(text_alignment(v, "x", e) == 0.0);
  SubprocessEmbedder broken("false", false);
  CHECK_THROWS_AS(broken.embed(v, 0), IoError);
  std::filesystem::remove_all(dir);
}
