// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

// vidcus command line: gen-data, train, sample, eval, ablate, inspect-plan.
// Exit codes: 0 ok, 1 runtime failure, 2 usage. Failures print one JSON line
// on stderr: {"error":"<kind>","message":"..."}.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "vidcus/cus_factory.hpp"
#include "vidcus/experiments.hpp"
#include "vidcus/image_io.hpp"
#include "vidcus/ivtm.hpp"
#include "vidcus/metrics.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace vidcus;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// One record per invocation, written next to the command's outputs.
struct RunRecord {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  std::string start = utc_now();
  std::vector<std::string> outputs;

  void write(const fs::path& path) const {
    json j;
    j["command"] = command;
    j["config_hash"] = fnv1a_hex(config.dump());
    j["config"] = config;
    j["seed"] = seed;
    j["start"] = start;
    j["end"] = utc_now();
    j["outputs"] = outputs;
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write run record " + path.string());
    out << j.dump(2) << '\n';
  }
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Video load_sequence(const fs::path& p) {
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p))
      if (e.path().extension() == ".pgm" || e.path().extension() == ".ppm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no frames in " + p.string());
    const Video first = io::read_pnm(files[0]);
    Video out(static_cast<int>(files.size()), first.height, first.width, first.channels);
    for (std::size_t i = 0; i < files.size(); ++i) {
      const Video f = io::read_pnm(files[i]);
      if (!f.same_shape(first)) throw ShapeError("frame sizes differ in " + p.string());
      std::copy(f.data.begin(), f.data.end(), out.frame(static_cast<int>(i)).begin());
    }
    return out;
  }
  if (p.extension() == ".vten") return io::read_tensor(p);
  return io::read_pnm(p);
}

void write_frames(const fs::path& dir, const Video& v, std::vector<std::string>& names) {
  char name[32];
  for (int f = 0; f < v.frames; ++f) {
    std::snprintf(name, sizeof(name), "video_%02d.ppm", f);
    io::write_pnm(dir / name, v, f);
    names.push_back(name);
  }
}

train::TrainConfig load_config(const std::string& path) {
  train::TrainConfig c = path.empty() ? train::TrainConfig{} : train::TrainConfig::load(path);
  c.apply_env([](const char* k) { return std::getenv(k); });
  return c;
}

struct Checkpoint {
  dit::DiTModel<float> model;
  train::TrainConfig config;
};

Checkpoint load_ckpt(const fs::path& path) {
  const auto bytes = dit::read_checkpoint_bytes(path);
  Checkpoint c{dit::deserialize_checkpoint(bytes), {}};
  const std::string meta = dit::checkpoint_metadata(bytes);
  if (!meta.empty()) c.config = train::TrainConfig::from_json(json::parse(meta).at("train"));
  c.config.model = c.model.config();
  return c;
}

void train_into(const train::TrainConfig& config, const std::vector<factory::Sample>& data, const fs::path& out,
                RunRecord& record, bool quiet) {
  fs::create_directories(out);
  train::Trainer trainer(config, data);
  std::ofstream log(out / "train_log.jsonl");
  if (!log) throw IoError("cannot write training log in " + out.string());
  const int every = std::max(1, config.total_steps / 20);
  trainer.run(config.total_steps, [&](const train::StepResult& r) {
    log << json{{"step", r.step}, {"task", train::to_string(r.task)}, {"loss", r.loss}, {"lr", r.lr}}.dump() << '\n';
    if (!quiet && (r.step + 1) % every == 0)
      std::cerr << "step " << r.step + 1 << "/" << config.total_steps << " " << train::to_string(r.task) << " loss "
                << r.loss << '\n';
  });
  json meta;
  meta["train"] = config.to_json();
  dit::save_checkpoint(out / "checkpoint.vck", trainer.model(), meta.dump());
  write_json(out / "config.json", config.to_json());
  record.outputs.insert(record.outputs.end(), {(out / "checkpoint.vck").string(), (out / "config.json").string(),
                                               (out / "train_log.jsonl").string()});
}

// Generated clip plus the prompt and references `eval` needs.
void write_generation(const fs::path& dir, const Video& video, const std::string& prompt,
                      const std::vector<Video>& refs, const json& extra) {
  fs::create_directories(dir);
  json j = extra;
  j["prompt"] = prompt;
  std::vector<std::string> frames;
  write_frames(dir, video, frames);
  j["video"] = frames;
  j["references"] = json::array();
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const std::string name = "ref_" + std::to_string(k + 1) + ".ppm";
    io::write_pnm(dir / name, refs[k]);
    j["references"].push_back(name);
  }
  write_json(dir / "sample.json", j);
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  int count = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string tasks;
  int frames = 8;
  int size = 32;
  int min_subjects = 1;
  int max_subjects = 2;
  std::string depth_command;
};

int cmd_gen_data(const GenDataArgs& a) {
  RunRecord rec;
  rec.command = "gen-data";
  rec.seed = a.seed;
  factory::GenerateOptions g;
  g.count = a.count;
  g.seed = a.seed;
  g.scene.frames = a.frames;
  g.scene.height = g.scene.width = a.size;
  g.scene.min_subjects = a.min_subjects;
  g.scene.max_subjects = a.max_subjects;
  if (!a.tasks.empty()) {
    g.emit.tasks.clear();
    for (const auto& t : split_list(a.tasks)) g.emit.tasks.insert(factory::parse_task(t));
  }
  if (a.count < 1) throw InvalidArgument("--count must be positive");
  std::vector<std::string> task_names;
  for (auto t : g.emit.tasks) task_names.push_back(factory::to_string(t));
  rec.config = {{"count", a.count},         {"tasks", task_names},
                {"frames", a.frames},       {"size", a.size},
                {"min_subjects", a.min_subjects}, {"max_subjects", a.max_subjects},
                {"depth_command", a.depth_command}};
  std::vector<factory::Sample> samples;
  if (a.depth_command.empty()) {
    samples = factory::generate(g);
  } else {
    factory::CommandDepthBackend backend(a.depth_command, nullptr);
    samples = factory::generate(g, backend);
  }
  const fs::path out(a.out);
  factory::write_dataset(out, samples, g);
  rec.outputs = {(out / "dataset.json").string(), (out / "shards").string()};
  rec.write(out / "run_record.json");
  std::cout << samples.size() << " samples from " << a.count << " scenes -> " << out.string() << '\n';
  return 0;
}

struct TrainArgs {
  std::string config, data, out;
  int steps = 0;
  std::int64_t seed = -1;
  bool quiet = false;
};

train::TrainConfig with_overrides(train::TrainConfig c, int steps, std::int64_t seed) {
  if (steps > 0) {
    c.total_steps = steps;
    if (c.warmup_steps >= steps) c.warmup_steps = steps / 10;
  }
  if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
  c.validate();
  return c;
}

int cmd_train(const TrainArgs& a) {
  const train::TrainConfig c = with_overrides(load_config(a.config), a.steps, a.seed);
  RunRecord rec;
  rec.command = "train";
  rec.seed = c.seed;
  rec.config = c.to_json();
  train_into(c, factory::load_dataset(a.data), a.out, rec, a.quiet);
  rec.write(fs::path(a.out) / "run_record.json");
  return 0;
}

struct SampleArgs {
  std::string ckpt, prompt, edit, depth, mask, camera, out;
  std::vector<std::string> subjects;
  int steps = 20;
  int frames = 0;
  std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& a) {
  Checkpoint ck = load_ckpt(a.ckpt);
  train::InferenceConditions cond;
  cond.prompt = a.prompt;
  cond.edit = a.edit;
  cond.frames = a.frames;
  for (const auto& s : a.subjects) cond.subjects.push_back(io::read_pnm(s));
  if (!a.depth.empty()) cond.depth = load_sequence(a.depth);
  if (!a.mask.empty()) cond.mask = load_sequence(a.mask);
  if (!a.camera.empty()) cond.camera = geometry::load_trajectory(a.camera);
  Rng rng = Rng(a.seed).substream("sample");
  const Video video = train::generate(ck.model, cond, ck.config, a.steps, rng);
  RunRecord rec;
  rec.command = "sample";
  rec.seed = a.seed;
  rec.config = {{"ckpt", a.ckpt}, {"prompt", a.prompt}, {"edit", a.edit}, {"subjects", a.subjects},
                {"depth", a.depth}, {"mask", a.mask},     {"camera", a.camera}, {"steps", a.steps}};
  const std::string prompt = a.edit.empty() ? a.prompt : a.prompt + " " + a.edit;
  write_generation(a.out, video, prompt, cond.subjects, {{"seed", a.seed}, {"steps", a.steps}});
  rec.outputs = {(fs::path(a.out) / "sample.json").string()};
  rec.write(fs::path(a.out) / "run_record.json");
  return 0;
}

struct EvalArgs {
  std::string pred, ref, report, embedder_command;
};

std::vector<Video> read_images(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".ppm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Video> out;
  for (const auto& f : files) out.push_back(io::read_pnm(f));
  return out;
}

int cmd_eval(const EvalArgs& a) {
  const fs::path pred(a.pred);
  std::vector<fs::path> dirs;
  if (fs::exists(pred / "sample.json")) {
    dirs.push_back(pred);
  } else {
    for (const auto& e : fs::recursive_directory_iterator(pred))
      if (e.path().filename() == "sample.json") dirs.push_back(e.path().parent_path());
    std::sort(dirs.begin(), dirs.end());
  }
  if (dirs.empty()) throw IoError("no generated samples (sample.json) under " + pred.string());

  const metrics::ToyTextImageEmbedder text_image;
  const metrics::ToyPixelEmbedder pixel;
  const metrics::ToyStructureEmbedder structure;
  const metrics::BlockMatchingFlow flow;
  std::unique_ptr<metrics::SubprocessEmbedder> plugin;
  if (!a.embedder_command.empty()) plugin = std::make_unique<metrics::SubprocessEmbedder>(a.embedder_command, false);
  const metrics::Embedder* clip = plugin ? static_cast<const metrics::Embedder*>(plugin.get()) : &pixel;
  const metrics::MetricBackends backends{&text_image, clip, &structure, &flow};

  metrics::MetricReport report;
  report.embedder = text_image.name();
  report.structure_embedder = structure.name();
  report.flow = flow.name();
  for (const auto& dir : dirs) {
    std::ifstream in(dir / "sample.json");
    const json j = json::parse(in);
    std::vector<Video> frames;
    for (const auto& f : j.at("video")) frames.push_back(io::read_pnm(dir / f.get<std::string>()));
    Video video(static_cast<int>(frames.size()), frames[0].height, frames[0].width, 3);
    for (std::size_t i = 0; i < frames.size(); ++i)
      std::copy(frames[i].data.begin(), frames[i].data.end(), video.frame(static_cast<int>(i)).begin());
    std::vector<Video> refs;
    const std::string id = fs::relative(dir, pred).string() == "." ? dir.filename().string() : fs::relative(dir, pred).string();
    if (!a.ref.empty()) {
      const fs::path per = fs::path(a.ref) / id;
      refs = read_images(fs::is_directory(per) ? per : fs::path(a.ref));
    } else {
      for (const auto& r : j.at("references")) refs.push_back(io::read_pnm(dir / r.get<std::string>()));
    }
    report.rows.push_back(metrics::score_sample(id, video, j.at("prompt").get<std::string>(), refs, backends));
  }
  report.finalize();
  const fs::path rp(a.report);
  if (rp.has_parent_path()) fs::create_directories(rp.parent_path());
  write_json(rp, report.to_json());
  RunRecord rec;
  rec.command = "eval";
  rec.config = {{"pred", a.pred}, {"ref", a.ref}, {"embedder_command", a.embedder_command}};
  rec.outputs = {rp.string()};
  rec.write(fs::path(rp.string() + ".run_record.json"));
  std::cout << report.to_json().dump() << '\n';
  return 0;
}

struct AblateArgs {
  std::string mode, config, data, out;
  int steps = 0;
  std::int64_t seed = -1;
  int probes = 4;
  int sample_steps = 16;
  bool quiet = false;
};

int cmd_ablate(const AblateArgs& a) {
  const train::TrainConfig base = with_overrides(load_config(a.config), a.steps, a.seed);
  const train::TrainConfig c = a.mode == "baseline" ? base : experiments::apply_ablation(base, a.mode);
  const auto data = factory::load_dataset(a.data);
  RunRecord rec;
  rec.command = "ablate";
  rec.seed = c.seed;
  rec.config = {{"mode", a.mode}, {"train", c.to_json()}};
  const fs::path out(a.out);
  train_into(c, data, out, rec, a.quiet);

  // Probe generations on the dataset's first conditioned samples, for `eval`.
  const train::Trainer probe_pool_owner(c, data);
  const auto& pool = probe_pool_owner.pool();
  const train::Task probe_task = a.mode == "naive" || a.mode == "add_to_noise" ? train::Task::depth2video
                                                                                : train::Task::subject_customization;
  const auto& candidates = pool.samples(probe_task);
  const auto model = dit::load_checkpoint(out / "checkpoint.vck");
  for (int i = 0; i < std::min<int>(a.probes, static_cast<int>(candidates.size())); ++i) {
    const auto& s = *candidates[static_cast<std::size_t>(i)];
    train::InferenceConditions cond;
    cond.prompt = s.caption;
    cond.camera = s.camera;
    std::vector<Video> refs;
    if (probe_task == train::Task::depth2video) cond.depth = s.control;
    for (const auto& in : s.subjects) cond.subjects.push_back(in.image), refs.push_back(in.image);
    Rng rng = Rng(c.seed).substream("probe" + std::to_string(i));
    const Video gen = train::generate(model, cond, c, a.sample_steps, rng);
    char id[16];
    std::snprintf(id, sizeof(id), "%03d", i);
    write_generation(out / "samples" / id, gen, cond.prompt, refs, {{"task", train::to_string(probe_task)}});
  }
  rec.outputs.push_back((out / "samples").string());
  rec.write(out / "run_record.json");
  return 0;
}

struct InspectArgs {
  std::string data, config, out, task;
  int index = 0;
  std::uint64_t seed = 0;
  double t = 0.5;
};

int cmd_inspect_plan(const InspectArgs& a) {
  const train::TrainConfig c = load_config(a.config);
  const auto data = factory::load_dataset(a.data);
  if (a.index < 0 || a.index >= static_cast<int>(data.size())) throw InvalidArgument("--index outside the dataset");
  const auto& s = data[static_cast<std::size_t>(a.index)];
  const train::Task task = a.task.empty() ? train::parse_task(factory::to_string(s.task)) : train::parse_task(a.task);
  Rng rng = Rng(a.seed).substream("inspect");
  const Video xt(s.video.frames, s.video.height, s.video.width, s.video.channels);
  const auto plan = train::build_plan(task, s, xt, a.t, c, rng);
  const std::string dump = layout::dump_plan(plan);
  std::cout << dump;
  const fs::path out(a.out);
  fs::create_directories(out);
  std::ofstream(out / "plan.txt") << dump;
  RunRecord rec;
  rec.command = "inspect-plan";
  rec.seed = a.seed;
  rec.config = {{"data", a.data}, {"index", a.index}, {"task", train::to_string(task)}, {"train", c.to_json()}};
  rec.outputs = {(out / "plan.txt").string()};
  rec.write(out / "run_record.json");
  return 0;
}

void fail_line(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vidcus: desk-scale subject-driven video customization"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Render procedural scenes and emit task samples");
  gen->add_option("--count", gd.count, "Number of scenes")->required();
  gen->add_option("--seed", gd.seed, "Root seed")->required();
  gen->add_option("--out", gd.out, "Output dataset directory")->required();
  gen->add_option("--tasks", gd.tasks, "Comma-separated task kinds (default: all)");
  gen->add_option("--frames", gd.frames, "Frames per video");
  gen->add_option("--size", gd.size, "Frame height and width");
  gen->add_option("--min-subjects", gd.min_subjects);
  gen->add_option("--max-subjects", gd.max_subjects);
  gen->add_option("--depth-command", gd.depth_command, "External depth estimator: CMD <frames_dir> <out_dir>");

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "Mixed-task training");
  trn->add_option("--config", tr.config, "Training config (JSON)")->check(CLI::ExistingFile);
  trn->add_option("--data", tr.data, "Dataset directory")->required();
  trn->add_option("--out", tr.out, "Output directory")->required();
  trn->add_option("--steps", tr.steps, "Override total_steps");
  trn->add_option("--seed", tr.seed, "Override seed");
  trn->add_flag("--quiet", tr.quiet);

  SampleArgs sa;
  auto* smp = app.add_subcommand("sample", "Generate a clip from a checkpoint");
  smp->add_option("--ckpt", sa.ckpt)->required()->check(CLI::ExistingFile);
  smp->add_option("--prompt", sa.prompt)->required();
  smp->add_option("--subjects", sa.subjects, "Subject images (PPM)");
  smp->add_option("--edit", sa.edit, "Edit instruction appended to the prompt");
  auto* depth_opt = smp->add_option("--depth", sa.depth, "Depth sequence (.vten or PGM directory)");
  auto* mask_opt = smp->add_option("--mask", sa.mask, "Mask sequence (.vten or PGM directory)");
  depth_opt->excludes(mask_opt);
  smp->add_option("--camera", sa.camera, "Camera trajectory JSON");
  smp->add_option("--out", sa.out)->required();
  smp->add_option("--steps", sa.steps, "Euler steps");
  smp->add_option("--frames", sa.frames, "Frames (default: model config)");
  smp->add_option("--seed", sa.seed);

  EvalArgs ev;
  auto* evl = app.add_subcommand("eval", "Score generated samples");
  evl->add_option("--pred", ev.pred)->required()->check(CLI::ExistingDirectory);
  evl->add_option("--ref", ev.ref, "Reference images (per-sample subdirectories or one shared directory)");
  evl->add_option("--report", ev.report)->required();
  evl->add_option("--embedder-command", ev.embedder_command, "External image embedder for CLIP-I");

  AblateArgs ab;
  auto* abl = app.add_subcommand("ablate", "Train an ablated configuration and write probe samples");
  abl->add_option("--mode", ab.mode)
      ->required()
      ->check(CLI::IsMember({"baseline", "naive", "add_to_noise", "no_le", "direct_mix", "no_mix"}));
  abl->add_option("--config", ab.config)->check(CLI::ExistingFile);
  abl->add_option("--data", ab.data)->required();
  abl->add_option("--out", ab.out)->required();
  abl->add_option("--steps", ab.steps);
  abl->add_option("--seed", ab.seed);
  abl->add_option("--probes", ab.probes);
  abl->add_option("--sample-steps", ab.sample_steps);
  abl->add_flag("--quiet", ab.quiet);

  InspectArgs ip;
  auto* ins = app.add_subcommand("inspect-plan", "Dump the token plan of one dataset sample");
  ins->add_option("--data", ip.data)->required();
  ins->add_option("--index", ip.index);
  ins->add_option("--task", ip.task, "Training task to build (default: the sample's)");
  ins->add_option("--config", ip.config)->check(CLI::ExistingFile);
  ins->add_option("--out", ip.out)->required();
  ins->add_option("--seed", ip.seed);
  ins->add_option("--t", ip.t);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail_line("usage", e.what());
    return 2;
  }

  try {
    if (*gen) return cmd_gen_data(gd);
    if (*trn) return cmd_train(tr);
    if (*smp) return cmd_sample(sa);
    if (*evl) return cmd_eval(ev);
    if (*abl) return cmd_ablate(ab);
    if (*ins) return cmd_inspect_plan(ip);
  } catch (const Error& e) {
    fail_line(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    fail_line("runtime", e.what());
    return 1;
  }
  return 2;
}
