// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "stats_util.hpp"
#include "vidcus/ivtm.hpp"

using namespace vidcus;
using namespace vidcus::train;
using layout::SegmentKind;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.model.hidden = 16;
  c.model.heads = 2;
  c.model.layers = 1;
  c.model.patch = {1, 8, 8};
  c.model.encoding_dim = 8;
  c.model.mlp_ratio = 2;
  c.batch_size = 2;
  c.warmup_steps = 5;
  c.total_steps = 100;
  c.peak_lr = 3e-3;
  c.min_lr = 1e-4;
  return c;
}

const std::vector<factory::Sample>& shared_data() {
  static const std::vector<factory::Sample> data = [] {
    factory::GenerateOptions g;
    g.count = 12;
    g.seed = 5;
    return factory::generate(g);
  }();
  return data;
}

std::vector<int> positions_of(const layout::TokenPlan& plan, SegmentKind kind) {
  std::vector<int> out;
  for (const auto& s : plan.segments)
    if (s.kind == kind) out.insert(out.end(), s.frame_positions.begin(), s.frame_positions.end());
  return out;
}

bool has_kind(const layout::TokenPlan& plan, SegmentKind kind) {
  for (const auto& s : plan.segments)
    if (s.kind == kind) return true;
  return false;
}

}  // namespace

TEST_CASE("sample_task") {
  Rng rng(1);
  TaskMix one;
  one[Task::mask2video] = 2.0;
  for (int i = 0; i < 1000; ++i) REQUIRE(sample_task(one, rng) == Task::mask2video);

  TaskMix two;
  two[Task::text2video] = 1.0;
  two[Task::image_edit] = 1.0;
  std::vector<double> counts(2, 0.0);
  for (int i = 0; i < 20000; ++i) counts[sample_task(two, rng) == Task::text2video ? 0 : 1] += 1;
  CHECK(vidcus::testing::chi_square_uniform_pvalue(counts) > 0.01);

  TaskMix def = TaskMix::defaults();
  def[Task::depth2video] = 0.0;
  for (int i = 0; i < 100000; ++i) REQUIRE(sample_task(def, rng) != Task::depth2video);

  CHECK_THROWS_AS(sample_task(TaskMix{}, rng), InvalidArgument);
  TaskMix neg;
  neg[Task::text2video] = -1.0;
  CHECK_THROWS_AS(neg.validate(), InvalidArgument);
}

TEST_CASE("default mixes follow the mix mode") {
  const TaskMix ivtm = TaskMix::defaults(MixMode::ivtm);
  CHECK(ivtm[Task::depth2video] / ivtm[Task::subject_customization] == doctest::Approx(1.4 / 1.2));
  CHECK(ivtm[Task::mask2video] / ivtm[Task::image_edit] == doctest::Approx(1.6 / 1.2));
  CHECK(ivtm[Task::single_subject_image] > 0.0);
  CHECK(TaskMix::defaults(MixMode::direct)[Task::single_subject_image] == 0.0);
  CHECK(TaskMix::defaults(MixMode::direct)[Task::image_edit] > 0.0);
  CHECK(TaskMix::defaults(MixMode::none)[Task::image_edit] == 0.0);
}

TEST_CASE("learning rate schedule") {
  TrainConfig c;
  CHECK(learning_rate(c, 0) == 0.0);
  CHECK(learning_rate(c, 2000) == doctest::Approx(1e-5).epsilon(1e-15));
  CHECK(std::abs(learning_rate(c, 2000) - 1e-5) < 1e-18);
  CHECK(std::abs(learning_rate(c, c.total_steps) - 1e-6) < 1e-18);
  CHECK(std::abs(learning_rate(c, 1000) - 5e-6) < 1e-18);
  // Continuity at the warmup junction.
  const double left = c.peak_lr * (2000.0 - 1e-9) / 2000.0;
  CHECK(std::abs(learning_rate(c, 2000) - left) < 1e-12);
  for (int s = 2000; s < c.total_steps; ++s) REQUIRE(learning_rate(c, s + 1) <= learning_rate(c, s));
  for (int s = 0; s < 2000; ++s) REQUIRE(learning_rate(c, s + 1) > learning_rate(c, s));
}

TEST_CASE("config json") {
  TrainConfig c = tiny_config();
  c.embedding_mode = layout::EmbeddingMode::naive;
  c.mix = TaskMix::defaults(MixMode::direct);
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(TrainConfig::from_json(nlohmann::json::object()).to_json() == TrainConfig{}.to_json());

  auto bad = c.to_json();
  bad["learning_rate"] = 1.0;
  CHECK_THROWS_AS(TrainConfig::from_json(bad), InvalidArgument);
  auto bad_warmup = c.to_json();
  bad_warmup["warmup_steps"] = 500;
  CHECK_THROWS_AS(TrainConfig::from_json(bad_warmup), InvalidArgument);
  auto bad_lr = c.to_json();
  bad_lr["peak_lr"] = -1.0;
  CHECK_THROWS_AS(TrainConfig::from_json(bad_lr), InvalidArgument);

  std::map<std::string, std::string> env{{"VIDCUS_PEAK_LR", "0.002"},
                                         {"VIDCUS_EMBEDDING_MODE", "add_to_noise"},
                                         {"VIDCUS_MODEL_HIDDEN", "24"}};
  const auto applied = c.apply_env([&](const char* k) -> const char* {
    const auto it = env.find(k);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  CHECK(applied.size() == 3);
  CHECK(c.peak_lr == 0.002);
  CHECK(c.embedding_mode == layout::EmbeddingMode::add_to_noise);
  CHECK(c.model.hidden == 24);
}

TEST_CASE("task pool and batches") {
  const TrainConfig c = tiny_config();
  const TaskPool pool(shared_data());
  for (Task t : all_tasks()) CHECK(pool.has(t));
  for (const auto* s : pool.samples(Task::text2image)) CHECK(s->video.frames == 1);
  for (const auto* s : pool.samples(Task::text2video)) CHECK(s->video.frames == c.model.frames);

  Rng rng(3);
  SUBCASE("depth2video has control and noise only") {
    const Batch b = build_batch(Task::depth2video, pool, c, rng);
    for (const auto& item : b.items) {
      CHECK(has_kind(item.plan, SegmentKind::struct_control));
      CHECK(has_kind(item.plan, SegmentKind::noise));
      CHECK_FALSE(has_kind(item.plan, SegmentKind::subject_image));
      CHECK_FALSE(has_kind(item.plan, SegmentKind::edit_input_image));
      auto ctrl = positions_of(item.plan, SegmentKind::struct_control);
      CHECK(ctrl == positions_of(item.plan, SegmentKind::noise));
      CHECK(item.velocity.size() == item.plan.noise().features.size());
    }
  }
  SUBCASE("image tasks use one temporal position") {
    for (Task t : {Task::text2image, Task::image_edit, Task::single_subject_image}) {
      const Batch b = build_batch(t, pool, c, rng);
      for (const auto& item : b.items) {
        CHECK(item.plan.N == 1);
        CHECK(item.plan.addends.empty());
      }
    }
  }
  SUBCASE("subject positions ascend and stay in range") {
    TrainConfig many = c;
    many.batch_size = 50;
    const Batch b = build_batch(Task::subject_customization, pool, many, rng);
    for (const auto& item : b.items) {
      const auto pos = positions_of(item.plan, SegmentKind::subject_image);
      for (std::size_t i = 0; i < pos.size(); ++i) {
        CHECK(pos[i] >= 1);
        CHECK(pos[i] <= c.model.max_subjects);
        if (i) CHECK(pos[i] > pos[i - 1]);
      }
    }
  }
  SUBCASE("edit and single-subject positions share one distribution") {
    TrainConfig many = c;
    many.batch_size = 3000;
    std::map<int, double> edit, single;
    std::vector<double> edit_counts(static_cast<std::size_t>(c.model.max_subjects), 0.0);
    for (const auto& item : build_batch(Task::image_edit, pool, many, rng).items) {
      const auto p = positions_of(item.plan, SegmentKind::edit_input_image);
      REQUIRE(p.size() == 1);
      edit[p[0]] += 1;
      edit_counts[static_cast<std::size_t>(p[0] - 1)] += 1;
    }
    for (const auto& item : build_batch(Task::single_subject_image, pool, many, rng).items) {
      single[positions_of(item.plan, SegmentKind::subject_image).at(0)] += 1;
    }
    CHECK(vidcus::testing::chi_square_uniform_pvalue(edit_counts) > 0.01);
    CHECK(vidcus::testing::chi_square_two_sample_pvalue(edit, single) > 0.01);

    TrainConfig direct = many;
    direct.mix_mode = MixMode::direct;
    direct.batch_size = 20;
    for (const auto& item : build_batch(Task::image_edit, pool, direct, rng).items)
      CHECK(positions_of(item.plan, SegmentKind::edit_input_image) == std::vector<int>{1});
  }
  SUBCASE("add_to_noise turns controls into addends") {
    TrainConfig a = c;
    a.embedding_mode = layout::EmbeddingMode::add_to_noise;
    for (const auto& item : build_batch(Task::mask2video, pool, a, rng).items) {
      CHECK_FALSE(has_kind(item.plan, SegmentKind::struct_control));
      bool mask_addend = false;
      for (const auto& add : item.plan.addends) mask_addend |= add.kind == layout::ControlKind::mask;
      CHECK(mask_addend);
    }
  }
  SUBCASE("naive mode separates control and noise positions") {
    TrainConfig n = c;
    n.embedding_mode = layout::EmbeddingMode::naive;
    for (const auto& item : build_batch(Task::depth2video, pool, n, rng).items) {
      const auto ctrl = positions_of(item.plan, SegmentKind::struct_control);
      const auto noise = positions_of(item.plan, SegmentKind::noise);
      CHECK(noise.front() == ctrl.back() + 1);
      for (const auto& tok : item.plan.tokens) CHECK(tok.receives_timestep);
    }
  }
  SUBCASE("missing task is an error") {
    CHECK_THROWS_AS(build_batch(Task::depth2video, TaskPool{}, c, rng), InvalidArgument);
  }
}

TEST_CASE("optimizer") {
  TrainConfig c = tiny_config();
  SUBCASE("zero gradient leaves pure weight decay") {
    dit::DiTModel<float> model(c.model, 1);
    auto params = model.parameters();
    std::vector<nn::Mat<float>> before;
    for (auto* p : params) before.push_back(p->value);
    model.zero_grad();
    AdamW opt(c);
    const double lr = 1e-3;
    opt.step(params, lr);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const nn::Mat<float> expected = before[i] * static_cast<float>(1.0 - lr * c.weight_decay);
      CHECK((params[i]->value - expected).cwiseAbs().maxCoeff() <= 2e-7f * (1.0f + before[i].cwiseAbs().maxCoeff()));
    }
  }
  SUBCASE("first step moves each weight by about the learning rate") {
    c.weight_decay = 0.0;
    nn::Param<float> p;
    p.name = "w";
    p.resize(1, 3);
    p.value << 1.0f, 2.0f, 3.0f;
    p.grad << 0.5f, -2.0f, 0.0f;
    nn::ParamRefs<float> refs{&p};
    AdamW opt(c);
    opt.step(refs, 0.1);
    CHECK(p.value(0, 0) == doctest::Approx(0.9).epsilon(1e-5));
    CHECK(p.value(0, 1) == doctest::Approx(2.1).epsilon(1e-5));
    CHECK(p.value(0, 2) == 3.0f);
  }
}

TEST_CASE("training") {
  TrainConfig c = tiny_config();
  c.mix = TaskMix{};
  (*c.mix)[Task::text2image] = 1.0;
  (*c.mix)[Task::single_subject_image] = 1.0;
  c.total_steps = 500;
  c.warmup_steps = 20;
  c.batch_size = 4;

  SUBCASE("loss descends") {
    Trainer tr(c, shared_data());
    const auto log = tr.run(500);
    double first = 0, last = 0;
    for (int i = 0; i < 50; ++i) first += log[static_cast<std::size_t>(i)].loss, last += log[log.size() - 1 - i].loss;
    CHECK(last < first);
    for (const auto& r : log) REQUIRE(std::isfinite(r.loss));
  }
  SUBCASE("identical seeds give identical loss trajectories") {
    c.total_steps = 100;
    Trainer a(c, shared_data()), b(c, shared_data());
    const auto la = a.run(100), lb = b.run(100);
    for (std::size_t i = 0; i < la.size(); ++i) {
      REQUIRE(la[i].task == lb[i].task);
      REQUIRE(std::abs(la[i].loss - lb[i].loss) <= 1e-10);
    }
    c.seed = 99;
    Trainer d(c, shared_data());
    CHECK(d.run(3)[2].loss != la[2].loss);
  }
  SUBCASE("non-finite loss aborts with diagnostics") {
    Trainer tr(c, shared_data());
    tr.model().parameters().back()->value(0, 0) = std::numeric_limits<float>::quiet_NaN();
    try {
      tr.step();
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("step 0") != std::string::npos);
      CHECK(msg.find("task") != std::string::npos);
      CHECK(msg.find("t=") != std::string::npos);
    }
  }
  SUBCASE("validation loss is deterministic") {
    Trainer tr(c, shared_data());
    const double a = validation_loss(tr.model(), tr.pool(), Task::text2image, c, 2, 7);
    CHECK(a == validation_loss(tr.model(), tr.pool(), Task::text2image, c, 2, 7));
  }
}

TEST_CASE("compose_inference") {
  TrainConfig c = tiny_config();
  Rng rng(2);
  const Video subject(1, 32, 32, 3, 0.5f);

  InferenceConditions four;
  four.prompt = "a red circle IMG1 a blue square IMG2 a green star IMG3 a cyan triangle IMG4";
  four.subjects = {subject, subject, subject, subject};
  const auto plan = compose_inference(four, c, rng);
  const auto pos = positions_of(plan, SegmentKind::subject_image);
  REQUIRE(pos.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(pos[i] >= 1);
    CHECK(pos[i] <= 6);
    if (i) CHECK(pos[i] > pos[i - 1]);
  }

  InferenceConditions full = four;
  full.subjects.resize(2);
  full.depth = Video(c.model.frames, 32, 32, 1, 0.3f);
  full.camera = geometry::make_pan_trajectory(c.model.frames, 0.02, geometry::CameraIntrinsics{32, 32, 16, 16, 32, 32});
  const auto with_cam = compose_inference(full, c, rng);
  full.camera.reset();
  const auto without_cam = compose_inference(full, c, rng);
  CHECK(with_cam.size() == without_cam.size());
  CHECK(with_cam.addends.size() == 1);
  CHECK(has_kind(with_cam, SegmentKind::struct_control));

  InferenceConditions text;
  text.prompt = "a red circle moving left";
  const auto t2v = compose_inference(text, c, rng);
  CHECK(t2v.segments.size() == 2);
  CHECK(t2v.N == c.model.frames);

  InferenceConditions edit;
  edit.prompt = "a circle IMG1 moving right";
  edit.edit = "make it blue";
  edit.subjects = {subject};
  const auto e = compose_inference(edit, c, rng);
  CHECK(e.segments.front().text_ids == dit::Vocabulary::standard().encode("a circle IMG1 moving right make it blue"));

  InferenceConditions seven;
  seven.prompt = "x";
  seven.subjects.assign(7, subject);
  CHECK_THROWS_AS(compose_inference(seven, c, rng), InvalidArgument);
  CHECK_THROWS_AS(compose_inference(InferenceConditions{}, c, rng), InvalidArgument);

  dit::DiTModel<float> model(c.model, 3);
  Rng g1(5), g2(5);
  const Video a = generate(model, text, c, 4, g1);
  CHECK(a.frames == c.model.frames);
  for (float v : a.data) CHECK((v >= 0.0f && v <= 1.0f));
  CHECK(a == generate(model, text, c, 4, g2));
}
