// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidcus/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <unistd.h>

#include "vidcus/cus_factory.hpp"
#include "vidcus/image_io.hpp"

namespace vidcus::metrics {

namespace {

void check_frames(const Video& v, int min_frames, const char* what) {
  if (v.empty() || v.frames < min_frames) {
    throw InvalidArgument(std::string(what) + " needs at least " + std::to_string(min_frames) + " frame(s)");
  }
}

double luma(const Video& v, int f, int y, int x) {
  if (v.channels == 1) return v.at(f, y, x, 0);
  return 0.299 * v.at(f, y, x, 0) + 0.587 * v.at(f, y, x, 1) + 0.114 * v.at(f, y, x, 2);
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

}  // namespace

double cosine(const Feature& a, const Feature& b) {
  if (a.size() != b.size()) throw ShapeError("cosine: feature sizes differ");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw NumericError("cosine of a zero vector");
  return ab / std::sqrt(aa * bb);
}

Feature Embedder::embed(const Video& video, int frame) const {
  if (frame < 0 || frame >= video.frames) throw InvalidArgument("embed: frame index out of range");
  Feature f = raw_image(video, frame);
  double n = 0.0;
  for (double v : f) n += v * v;
  n = std::sqrt(n);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError(name() + ": degenerate image embedding");
  for (double& v : f) v /= n;
  return f;
}

Feature Embedder::embed_text(const std::string& text) const {
  if (!has_text()) throw InvalidArgument(name() + " has no text branch");
  Feature f = raw_text(text);
  double n = 0.0;
  for (double v : f) n += v * v;
  n = std::sqrt(n);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError(name() + ": degenerate text embedding");
  for (double& v : f) v /= n;
  return f;
}

Feature Embedder::raw_text(const std::string&) const { throw InvalidArgument(name() + " has no text branch"); }

int palette_class(const Video& video, int frame, int y, int x) {
  const auto& pal = factory::palette();
  const double r = video.at(frame, y, x, 0), g = video.at(frame, y, x, 1), b = video.at(frame, y, x, 2);
  if (std::max({r, g, b}) - std::min({r, g, b}) < 0.3) return -1;
  int best = -1;
  double best_d = 0.4;
  for (std::size_t k = 0; k < pal.size(); ++k) {
    const double d = std::hypot(r - pal[k].rgb[0], g - pal[k].rgb[1], b - pal[k].rgb[2]);
    if (d < best_d) best_d = d, best = static_cast<int>(k);
  }
  return best;
}

std::vector<double> color_coverage(const Video& video, int frame) {
  if (video.channels != 3) throw ShapeError("color_coverage expects RGB frames");
  std::vector<double> cov(factory::palette().size(), 0.0);
  for (int y = 0; y < video.height; ++y)
    for (int x = 0; x < video.width; ++x) {
      const int k = palette_class(video, frame, y, x);
      if (k >= 0) cov[static_cast<std::size_t>(k)] += 1.0;
    }
  for (double& c : cov) c /= static_cast<double>(video.height) * video.width;
  return cov;
}

Feature ToyPixelEmbedder::raw_image(const Video& v, int frame) const {
  constexpr int kGrid = 8;
  Feature f(static_cast<std::size_t>(kGrid * kGrid * v.channels), 0.0);
  std::vector<double> counts(kGrid * kGrid, 0.0);
  for (int y = 0; y < v.height; ++y)
    for (int x = 0; x < v.width; ++x) {
      const int cell = (y * kGrid / v.height) * kGrid + x * kGrid / v.width;
      counts[static_cast<std::size_t>(cell)] += 1.0;
      for (int c = 0; c < v.channels; ++c) f[static_cast<std::size_t>(cell * v.channels + c)] += v.at(frame, y, x, c);
    }
  double mean = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] /= counts[i / static_cast<std::size_t>(v.channels)];
    mean += f[i];
  }
  mean /= static_cast<double>(f.size());
  double n = 0.0;
  for (double& x : f) {
    x -= mean;
    n += x * x;
  }
  n = std::sqrt(n) + 1e-12;
  for (double& x : f) x /= n;
  // Histogram block, plus a constant so flat frames still embed.
  if (v.channels == 3)
    for (double c : color_coverage(v, frame)) f.push_back(c);
  f.push_back(0.05);
  return f;
}

Feature ToyStructureEmbedder::raw_image(const Video& v, int frame) const {
  constexpr int kCells = 4, kBins = 8;
  Feature f(kCells * kCells * kBins + 1, 0.0);
  for (int y = 1; y + 1 < v.height; ++y)
    for (int x = 1; x + 1 < v.width; ++x) {
      const double gx = luma(v, frame, y, x + 1) - luma(v, frame, y, x - 1);
      const double gy = luma(v, frame, y + 1, x) - luma(v, frame, y - 1, x);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx);
      if (ang < 0) ang += 3.14159265358979323846;  // unsigned orientation
      const int bin = std::min(kBins - 1, static_cast<int>(ang / 3.14159265358979323846 * kBins));
      const int cell = (y * kCells / v.height) * kCells + x * kCells / v.width;
      f[static_cast<std::size_t>(cell * kBins + bin)] += mag;
    }
  f.back() = 1e-3;
  return f;
}

Feature ToyTextImageEmbedder::raw_image(const Video& v, int frame) const {
  Feature f = color_coverage(v, frame);
  f.push_back(1e-3);
  return f;
}

Feature ToyTextImageEmbedder::raw_text(const std::string& text) const {
  const auto& pal = factory::palette();
  Feature f(pal.size() + 1, 0.0);
  std::istringstream in(text);
  std::string w;
  bool any = false;
  while (in >> w) {
    std::string lw;
    for (char c : w)
      if (std::isalpha(static_cast<unsigned char>(c))) lw += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (std::size_t k = 0; k < pal.size(); ++k)
      if (pal[k].name == lw) f[k] = 1.0, any = true;
  }
  if (!any)
    for (std::size_t k = 0; k < pal.size(); ++k) f[k] = 1.0;
  f.back() = 1e-3;
  return f;
}

SubprocessEmbedder::SubprocessEmbedder(std::string command, bool text_branch)
    : command_(std::move(command)), text_branch_(text_branch) {}

Feature SubprocessEmbedder::run(const std::string& args) const {
  const std::string cmd = command_ + " " + args;
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(::popen(cmd.c_str(), "r"), ::pclose);
  if (!pipe) throw IoError("cannot start embedder: " + command_);
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe.get())) out.append(buf.data(), n);
  const int status = ::pclose(pipe.release());
  if (status != 0) throw IoError("embedder exited with status " + std::to_string(status));
  std::istringstream in(out);
  Feature f;
  double v;
  while (in >> v) f.push_back(v);
  if (f.empty()) throw IoError("embedder printed no features");
  return f;
}

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& ext) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("vidcus_embed_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ext);
  }
  ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

Feature SubprocessEmbedder::raw_image(const Video& video, int frame) const {
  TempFile tmp(".ppm");
  io::write_pnm(tmp.path, video, frame);
  return run(shell_quote(tmp.path.string()));
}

Feature SubprocessEmbedder::raw_text(const std::string& text) const {
  TempFile tmp(".txt");
  std::ofstream(tmp.path) << text;
  return run("--text " + shell_quote(tmp.path.string()));
}

std::vector<FlowVector> BlockMatchingFlow::flow(const Video& v, int f0, int f1) const {
  std::vector<FlowVector> out;
  for (int by = 0; by + block_ <= v.height; by += block_)
    for (int bx = 0; bx + block_ <= v.width; bx += block_) {
      double mean = 0, sq = 0;
      for (int y = by; y < by + block_; ++y)
        for (int x = bx; x < bx + block_; ++x) {
          const double l = luma(v, f0, y, x);
          mean += l;
          sq += l * l;
        }
      const double n = block_ * block_;
      mean /= n;
      if (std::sqrt(std::max(0.0, sq / n - mean * mean)) < min_std_) continue;
      double best = 1e300;
      FlowVector best_v;
      double best_mag = 1e300;
      for (int dy = -radius_; dy <= radius_; ++dy)
        for (int dx = -radius_; dx <= radius_; ++dx) {
          if (by + dy < 0 || bx + dx < 0 || by + dy + block_ > v.height || bx + dx + block_ > v.width) continue;
          double sad = 0.0;
          for (int y = by; y < by + block_; ++y)
            for (int x = bx; x < bx + block_; ++x) sad += std::abs(luma(v, f1, y + dy, x + dx) - luma(v, f0, y, x));
          const double mag = std::hypot(dx, dy);
          if (sad < best - 1e-12 || (std::abs(sad - best) <= 1e-12 && mag < best_mag)) {
            best = sad;
            best_mag = mag;
            best_v = {static_cast<double>(dx), static_cast<double>(dy)};
          }
        }
      out.push_back(best_v);
    }
  return out;
}

double text_alignment(const Video& frames, const std::string& text, const Embedder& embedder) {
  check_frames(frames, 1, "text_alignment");
  if (!embedder.has_text()) throw InvalidArgument("text_alignment: " + embedder.name() + " has no text branch");
  const Feature t = embedder.embed_text(factory::strip_labels(text));
  double sum = 0.0;
  for (int f = 0; f < frames.frames; ++f) sum += cosine(embedder.embed(frames, f), t);
  return sum / frames.frames;
}

double reference_similarity(const Video& frames, const std::vector<Video>& references, const Embedder& embedder) {
  check_frames(frames, 1, "reference_similarity");
  std::vector<Feature> refs;
  for (const auto& r : references)
    for (int f = 0; f < r.frames; ++f) refs.push_back(embedder.embed(r, f));
  if (refs.empty()) throw InvalidArgument("reference_similarity needs at least one reference");
  double sum = 0.0;
  for (int f = 0; f < frames.frames; ++f) {
    const Feature e = embedder.embed(frames, f);
    for (const auto& r : refs) sum += cosine(e, r);
  }
  return sum / (static_cast<double>(frames.frames) * static_cast<double>(refs.size()));
}

double temporal_consistency(const Video& frames, const Embedder& embedder) {
  check_frames(frames, 2, "temporal_consistency");
  double sum = 0.0;
  Feature prev = embedder.embed(frames, 0);
  for (int f = 1; f < frames.frames; ++f) {
    Feature cur = embedder.embed(frames, f);
    sum += cosine(prev, cur);
    prev = std::move(cur);
  }
  return sum / (frames.frames - 1);
}

double dynamic_degree(const Video& frames, const FlowEstimator& estimator) {
  check_frames(frames, 2, "dynamic_degree");
  double sum = 0.0;
  for (int f = 1; f < frames.frames; ++f) {
    const auto field = estimator.flow(frames, f - 1, f);
    if (field.empty()) continue;  // nothing trackable counts as no motion
    double m = 0.0;
    for (const auto& v : field) m += std::hypot(v.dx, v.dy);
    sum += m / static_cast<double>(field.size());
  }
  return sum / (frames.frames - 1);
}

SampleMetrics score_sample(const std::string& id, const Video& frames, const std::string& prompt,
                           const std::vector<Video>& references, const MetricBackends& b) {
  SampleMetrics s;
  s.id = id;
  s.clip_t = text_alignment(frames, prompt, *b.text_image);
  s.referenced = !references.empty();
  if (s.referenced) {
    s.clip_i = reference_similarity(frames, references, *b.clip);
    s.dino_i = reference_similarity(frames, references, *b.dino);
  }
  s.temporal = frames.frames >= 2;
  if (s.temporal) {
    s.temporal_consistency = temporal_consistency(frames, *b.clip);
    s.dynamic_degree = dynamic_degree(frames, *b.flow);
  }
  return s;
}

void MetricReport::finalize() {
  clip_t = clip_i = dino_i = temporal_consistency = dynamic_degree = 0.0;
  int temporal_rows = 0, referenced_rows = 0;
  for (const auto& r : rows) {
    clip_t += r.clip_t;
    if (r.referenced) {
      clip_i += r.clip_i;
      dino_i += r.dino_i;
      ++referenced_rows;
    }
    if (r.temporal) {
      temporal_consistency += r.temporal_consistency;
      dynamic_degree += r.dynamic_degree;
      ++temporal_rows;
    }
  }
  if (!rows.empty()) clip_t /= static_cast<double>(rows.size());
  if (referenced_rows > 0) clip_i /= referenced_rows, dino_i /= referenced_rows;
  if (temporal_rows > 0) temporal_consistency /= temporal_rows, dynamic_degree /= temporal_rows;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["backends"] = {{"text_image", embedder}, {"structure", structure_embedder}, {"flow", flow}};
  j["clip_t"] = clip_t;
  j["clip_i"] = clip_i;
  j["dino_i"] = dino_i;
  j["temporal_consistency"] = temporal_consistency;
  j["dynamic_degree"] = dynamic_degree;
  j["samples"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["samples"].push_back({{"id", r.id},
                            {"clip_t", r.clip_t},
                            {"clip_i", r.clip_i},
                            {"dino_i", r.dino_i},
                            {"temporal_consistency", r.temporal_consistency},
                            {"dynamic_degree", r.dynamic_degree},
                            {"temporal", r.temporal},
                            {"referenced", r.referenced}});
  }
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  r.embedder = j.at("backends").at("text_image");
  r.structure_embedder = j.at("backends").at("structure");
  r.flow = j.at("backends").at("flow");
  r.clip_t = j.at("clip_t");
  r.clip_i = j.at("clip_i");
  r.dino_i = j.at("dino_i");
  r.temporal_consistency = j.at("temporal_consistency");
  r.dynamic_degree = j.at("dynamic_degree");
  for (const auto& s : j.at("samples")) {
    r.rows.push_back({s.at("id"), s.at("clip_t"), s.at("clip_i"), s.at("dino_i"), s.at("temporal_consistency"),
                      s.at("dynamic_degree"), s.at("temporal"), s.value("referenced", true)});
  }
  return r;
}

}  // namespace vidcus::metrics
