// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unistd.h>

#include "vidcus/cus_factory.hpp"
#include "vidcus/image_io.hpp"

namespace vidcus::factory {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::subject_customization: return "subject_customization";
    case TaskKind::depth2video: return "depth2video";
    case TaskKind::mask2video: return "mask2video";
    case TaskKind::text2video: return "text2video";
    case TaskKind::image_edit: return "image_edit";
    case TaskKind::single_subject_image: return "single_subject_image";
  }
  return "?";
}

TaskKind parse_task(const std::string& s) {
  for (TaskKind k : all_tasks())
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown task '" + s + "'");
}

const std::vector<TaskKind>& all_tasks() {
  static const std::vector<TaskKind> tasks{TaskKind::subject_customization, TaskKind::depth2video,
                                           TaskKind::mask2video,            TaskKind::text2video,
                                           TaskKind::image_edit,            TaskKind::single_subject_image};
  return tasks;
}

namespace {

std::pair<std::string, std::string> color_and_shape(const std::string& phrase) {
  std::istringstream in(phrase);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  if (words.size() < 2) return {"", words.empty() ? "" : words.back()};
  return {words[words.size() - 2], words.back()};
}

SubjectInput make_subject_input(const RenderedScene& scene, const CaptionRecord& record,
                                const std::vector<SubjectTrack>& tracks, int subject, int label, Rng& rng,
                                const EmitOptions& options) {
  const int cf = scene.spec.caption_frame;
  const Video frame = scene.video.slice_frame(cf);
  const Video mask = tracks.at(static_cast<std::size_t>(subject)).masks.slice_frame(cf);
  SubjectInput in;
  in.label = "IMG" + std::to_string(label);
  in.phrase = record.subjects.at(static_cast<std::size_t>(subject));
  std::tie(in.color, in.shape) = color_and_shape(in.phrase);
  Rng aug_rng = rng.substream("augment" + std::to_string(subject));
  const SubjectImage augmented = augment_subject(extract_subject(frame, mask), aug_rng, options.ranges, &in.augment);
  Rng bg_rng = rng.substream("background" + std::to_string(subject));
  PlacedImage placed = place_background(augmented, options.pool, bg_rng);
  in.image = std::move(placed.image);
  io::quantize8(in.image);
  in.mask = augmented.mask;
  in.background_id = placed.background_id;
  return in;
}

}  // namespace

std::vector<Sample> emit_samples(const RenderedScene& scene, const CaptionRecord& record,
                                 const std::vector<SubjectTrack>& tracks, const Video& depth,
                                 const std::vector<int>& kept, Rng& rng, const EmitOptions& options) {
  if (scene.video.empty() || tracks.size() != record.subjects.size()) {
    throw InvalidRecord("emit_samples: scene ground truth is missing or inconsistent");
  }
  const auto wants = [&](TaskKind k) { return options.tasks.count(k) > 0; };
  const std::string plain = strip_prefix(record.caption);
  Video video = scene.video;
  io::quantize8(video);
  std::vector<Sample> out;

  auto base = [&](TaskKind task) {
    Sample s;
    s.task = task;
    s.caption_frame = scene.spec.caption_frame;
    s.video = video;
    s.camera = scene.camera;
    s.caption = plain;
    return s;
  };

  if (wants(TaskKind::subject_customization) && !kept.empty()) {
    Sample s = base(TaskKind::subject_customization);
    s.caption = rewrite_caption(record, kept).text;
    Rng sub = rng.substream("customization");
    for (std::size_t i = 0; i < kept.size(); ++i) {
      s.subjects.push_back(make_subject_input(scene, record, tracks, kept[i], static_cast<int>(i) + 1, sub, options));
    }
    out.push_back(std::move(s));
  }
  if (wants(TaskKind::depth2video)) {
    if (depth.empty() || depth.frames != video.frames) throw InvalidRecord("emit_samples: depth sequence missing");
    Sample s = base(TaskKind::depth2video);
    s.control = depth;
    out.push_back(std::move(s));
  }
  if (wants(TaskKind::mask2video) && !kept.empty()) {
    Sample s = base(TaskKind::mask2video);
    s.control = Video(video.frames, video.height, video.width, 1);
    for (int k : kept) {
      const Video& m = tracks[static_cast<std::size_t>(k)].masks;
      for (std::size_t i = 0; i < m.size(); ++i) s.control.data[i] = std::max(s.control.data[i], m.data[i]);
    }
    out.push_back(std::move(s));
  }
  if (wants(TaskKind::text2video)) out.push_back(base(TaskKind::text2video));
  if (wants(TaskKind::single_subject_image) && !kept.empty()) {
    Rng sub = rng.substream("single");
    const int k = kept[static_cast<std::size_t>(sub.uniform_int(0, static_cast<std::int64_t>(kept.size()) - 1))];
    Sample s = base(TaskKind::single_subject_image);
    s.camera.reset();
    s.video = video.slice_frame(scene.spec.caption_frame);
    s.caption = rewrite_caption(record, {k}).text;
    s.subjects.push_back(make_subject_input(scene, record, tracks, k, 1, sub, options));
    out.push_back(std::move(s));
  }
  if (wants(TaskKind::image_edit) && !kept.empty()) {
    Rng sub = rng.substream("edit");
    const int k = kept[static_cast<std::size_t>(sub.uniform_int(0, static_cast<std::int64_t>(kept.size()) - 1))];
    Sample s = base(TaskKind::image_edit);
    s.camera.reset();
    SubjectInput input = make_subject_input(scene, record, tracks, k, 1, sub, options);
    const int source = color_index(input.color);
    int target = static_cast<int>(sub.uniform_int(0, static_cast<std::int64_t>(palette().size()) - 2));
    if (target >= source) ++target;
    s.source_color = input.color;
    s.edit_color = palette()[static_cast<std::size_t>(target)].name;
    s.caption = "make it " + s.edit_color;
    s.video = input.image;
    for (int y = 0; y < s.video.height; ++y)
      for (int x = 0; x < s.video.width; ++x)
        if (input.mask.at(0, y, x, 0) > 0.5f)
          for (int c = 0; c < 3; ++c) s.video.at(0, y, x, c) = palette()[static_cast<std::size_t>(target)].rgb[static_cast<std::size_t>(c)];
    io::quantize8(s.video);
    s.subjects.push_back(std::move(input));
    out.push_back(std::move(s));
  }
  return out;
}

CommandDepthBackend::CommandDepthBackend(std::string command, std::unique_ptr<AnnotationBackend> base)
    : command_(std::move(command)), base_(std::move(base)) {
  if (!base_) base_ = std::make_unique<ProceduralOracle>();
}

Video CommandDepthBackend::estimate_depth(const RenderedScene& scene) {
  static std::atomic<int> counter{0};
  const fs::path root = fs::temp_directory_path() /
                        ("vidcus_depth_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  const fs::path in = root / "frames", out = root / "depth";
  fs::create_directories(in);
  fs::create_directories(out);
  char name[32];
  for (int f = 0; f < scene.video.frames; ++f) {
    std::snprintf(name, sizeof(name), "frame_%02d.ppm", f);
    io::write_pnm(in / name, scene.video, f);
  }
  const std::string cmd = command_ + " '" + in.string() + "' '" + out.string() + "'";
  if (std::system(cmd.c_str()) != 0) {
    fs::remove_all(root);
    throw IoError("depth command failed: " + command_);
  }
  Video depth(scene.video.frames, scene.video.height, scene.video.width, 1);
  for (int f = 0; f < depth.frames; ++f) {
    std::snprintf(name, sizeof(name), "depth_%02d.pgm", f);
    const Video d = io::read_pnm(out / name);
    if (d.channels != 1 || d.height != depth.height || d.width != depth.width) {
      fs::remove_all(root);
      throw IoError("depth command produced a wrongly sized map");
    }
    std::copy(d.data.begin(), d.data.end(), depth.frame(f).begin());
  }
  fs::remove_all(root);
  return depth;
}

std::vector<Sample> generate(const GenerateOptions& options, AnnotationBackend& backend) {
  std::vector<Sample> samples;
  const Rng root(options.seed);
  for (int i = 0; i < options.count; ++i) {
    Rng scene_rng = root.substream("scene" + std::to_string(i));
    Rng spec_rng = scene_rng.substream("spec");
    Rng emit_rng = scene_rng.substream("emit");
    const RenderedScene scene = render_scene(random_scene(spec_rng, options.scene));
    const CaptionRecord record = backend.describe(scene);
    const auto tracks = backend.track(scene, record);
    const auto kept = filter_subjects(tracks, options.filter);
    const Video depth = options.emit.tasks.count(TaskKind::depth2video) ? backend.estimate_depth(scene) : Video();
    auto emitted = emit_samples(scene, record, tracks, depth, kept, emit_rng, options.emit);
    for (auto& s : emitted) samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Sample> generate(const GenerateOptions& options) {
  ProceduralOracle oracle;
  return generate(options, oracle);
}

namespace {

std::string frame_name(const char* stem, int f, const char* ext) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_%02d.%s", stem, f, ext);
  return buf;
}

json augment_to_json(const AugmentLog& a) {
  return {{"rotation_deg", a.params.rotation_deg}, {"scale", a.params.scale},
          {"brightness", a.params.brightness},     {"contrast", a.params.contrast},
          {"saturation", a.params.saturation},     {"hue_deg", a.params.hue_deg},
          {"source_extent", a.source_extent}, {"normalize_factor", a.normalize_factor}, {"clamped", a.clamped}};
}

AugmentLog augment_from_json(const json& j) {
  AugmentLog a;
  a.params.rotation_deg = j.at("rotation_deg");
  a.params.scale = j.at("scale");
  a.params.brightness = j.at("brightness");
  a.params.contrast = j.at("contrast");
  a.params.saturation = j.at("saturation");
  a.params.hue_deg = j.at("hue_deg");
  a.source_extent = j.value("source_extent", 0);
  a.normalize_factor = j.at("normalize_factor");
  a.clamped = j.at("clamped");
  return a;
}

Video read_frames(const fs::path& dir, const json& files) {
  std::vector<Video> frames;
  for (const auto& f : files) frames.push_back(io::read_pnm(dir / f.get<std::string>()));
  if (frames.empty()) throw InvalidRecord("manifest lists no frames");
  Video out(static_cast<int>(frames.size()), frames[0].height, frames[0].width, frames[0].channels);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].same_shape(frames[0])) throw InvalidRecord("frame sizes differ within a sequence");
    std::copy(frames[i].data.begin(), frames[i].data.end(), out.frame(static_cast<int>(i)).begin());
  }
  return out;
}

}  // namespace

void write_sample(const fs::path& dir, const Sample& s) {
  fs::create_directories(dir);
  json m;
  m["schema"] = kManifestSchema;
  m["task"] = to_string(s.task);
  m["caption"] = s.caption;
  m["caption_frame"] = s.caption_frame;
  m["video"] = json::array();
  for (int f = 0; f < s.video.frames; ++f) {
    const std::string name = frame_name("video", f, "ppm");
    io::write_pnm(dir / name, s.video, f);
    m["video"].push_back(name);
  }
  m["control"] = nullptr;
  if (s.has_control()) {
    if (s.task == TaskKind::depth2video) {
      io::write_tensor(dir / "depth.vten", s.control);
      m["control"] = {{"kind", "depth"}, {"file", "depth.vten"}};
    } else {
      json files = json::array();
      for (int f = 0; f < s.control.frames; ++f) {
        const std::string name = frame_name("mask", f, "pgm");
        io::write_pnm(dir / name, s.control, f);
        files.push_back(name);
      }
      m["control"] = {{"kind", "mask"}, {"files", files}};
    }
  }
  m["camera"] = nullptr;
  if (s.camera) {
    geometry::save_trajectory(dir / "camera.json", *s.camera);
    m["camera"] = "camera.json";
  }
  m["subjects"] = json::array();
  for (std::size_t i = 0; i < s.subjects.size(); ++i) {
    const auto& in = s.subjects[i];
    const std::string stem = "subject_" + std::to_string(i + 1);
    io::write_pnm(dir / (stem + ".ppm"), in.image);
    io::write_pnm(dir / (stem + "_mask.pgm"), in.mask);
    m["subjects"].push_back({{"label", in.label},
                             {"phrase", in.phrase},
                             {"color", in.color},
                             {"shape", in.shape},
                             {"image", stem + ".ppm"},
                             {"mask", stem + "_mask.pgm"},
                             {"background_id", in.background_id},
                             {"augment", augment_to_json(in.augment)}});
  }
  if (s.task == TaskKind::image_edit) m["edit"] = {{"source_color", s.source_color}, {"target_color", s.edit_color}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

Sample load_sample(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) throw IoError("missing manifest in " + dir.string());
  try {
    const json m = json::parse(in);
    if (m.at("schema").get<int>() != kManifestSchema) throw InvalidRecord("unsupported manifest schema");
    Sample s;
    s.task = parse_task(m.at("task"));
    s.caption = m.at("caption");
    s.caption_frame = m.at("caption_frame");
    s.video = read_frames(dir, m.at("video"));
    const json& c = m.at("control");
    if (!c.is_null()) {
      if (c.at("kind") == "depth") s.control = io::read_tensor(dir / c.at("file").get<std::string>());
      else s.control = read_frames(dir, c.at("files"));
    }
    if (!m.at("camera").is_null()) s.camera = geometry::load_trajectory(dir / m.at("camera").get<std::string>());
    for (const auto& j : m.at("subjects")) {
      SubjectInput si;
      si.label = j.at("label");
      si.phrase = j.at("phrase");
      si.color = j.at("color");
      si.shape = j.at("shape");
      si.image = io::read_pnm(dir / j.at("image").get<std::string>());
      si.mask = io::read_pnm(dir / j.at("mask").get<std::string>());
      si.background_id = j.at("background_id");
      si.augment = augment_from_json(j.at("augment"));
      s.subjects.push_back(std::move(si));
    }
    if (m.contains("edit")) {
      s.source_color = m["edit"].at("source_color");
      s.edit_color = m["edit"].at("target_color");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidRecord("manifest " + dir.string() + ": " + e.what());
  }
}

void write_dataset(const fs::path& out, const std::vector<Sample>& samples, const GenerateOptions& options) {
  fs::create_directories(out / "shards");
  json index;
  index["schema"] = kManifestSchema;
  index["seed"] = options.seed;
  index["scenes"] = options.count;
  index["samples"] = samples.size();
  index["tasks"] = json::array();
  for (TaskKind k : all_tasks())
    if (options.emit.tasks.count(k)) index["tasks"].push_back(to_string(k));
  char id[16];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(id, sizeof(id), "%06zu", i);
    write_sample(out / "shards" / id, samples[i]);
  }
  std::ofstream f(out / "dataset.json", std::ios::binary);
  if (!f) throw IoError("cannot write dataset index in " + out.string());
  f << index.dump(2) << '\n';
}

std::vector<Sample> load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir / "shards")) throw IoError("no shards directory under " + dir.string());
  std::vector<fs::path> shards;
  for (const auto& e : fs::directory_iterator(dir / "shards"))
    if (e.is_directory()) shards.push_back(e.path());
  std::sort(shards.begin(), shards.end());
  std::vector<Sample> samples;
  for (const auto& p : shards) samples.push_back(load_sample(p));
  return samples;
}

}  // namespace vidcus::factory
