// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vidcus/cus_factory.hpp"

namespace vidcus::factory {

std::string to_string(Shape s) {
  switch (s) {
    case Shape::circle: return "circle";
    case Shape::square: return "square";
    case Shape::triangle: return "triangle";
    case Shape::star: return "star";
  }
  return "?";
}

Shape parse_shape(const std::string& s) {
  if (s == "circle") return Shape::circle;
  if (s == "square") return Shape::square;
  if (s == "triangle") return Shape::triangle;
  if (s == "star") return Shape::star;
  throw InvalidArgument("unknown shape '" + s + "'");
}

const std::vector<NamedColor>& palette() {
  static const std::vector<NamedColor> colors{
      {"red", {0.90f, 0.10f, 0.10f}},    {"green", {0.10f, 0.70f, 0.15f}},   {"blue", {0.10f, 0.20f, 0.95f}},
      {"yellow", {0.95f, 0.85f, 0.05f}}, {"magenta", {0.85f, 0.10f, 0.80f}}, {"cyan", {0.05f, 0.80f, 0.85f}},
      {"orange", {1.00f, 0.50f, 0.00f}}, {"purple", {0.45f, 0.15f, 0.65f}},
  };
  return colors;
}

int color_index(const std::string& name) {
  const auto& p = palette();
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i].name == name) return static_cast<int>(i);
  throw InvalidArgument("unknown color '" + name + "'");
}

void SceneSpec::validate() const {
  if (subjects.empty() || subjects.size() > 4) throw InvalidArgument("scene needs 1-4 subjects");
  if (frames < 1 || height < 4 || width < 4) throw InvalidArgument("scene dims too small");
  if (caption_frame < 0 || caption_frame >= frames) throw InvalidArgument("caption frame out of range");
  for (const auto& s : subjects) {
    if (s.color < 0 || s.color >= static_cast<int>(palette().size())) throw InvalidArgument("bad subject color");
    if (!(s.radius > 0.0)) throw InvalidArgument("subject radius must be positive");
  }
}

bool shape_contains(Shape shape, double dx, double dy, double r) {
  switch (shape) {
    case Shape::circle: return dx * dx + dy * dy <= r * r;
    case Shape::square: return std::abs(dx) <= 0.85 * r && std::abs(dy) <= 0.85 * r;
    case Shape::triangle: {
      // Apex up; vertices (0,-r), (0.95r, 0.8r), (-0.95r, 0.8r).
      const double ax = 0, ay = -r, bx = 0.95 * r, by = 0.8 * r, cx = -0.95 * r, cy = 0.8 * r;
      const auto edge = [](double x0, double y0, double x1, double y1, double px, double py) {
        return (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0);
      };
      const double e0 = edge(ax, ay, bx, by, dx, dy);
      const double e1 = edge(bx, by, cx, cy, dx, dy);
      const double e2 = edge(cx, cy, ax, ay, dx, dy);
      return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
    }
    case Shape::star: {
      const double rho = std::sqrt(dx * dx + dy * dy);
      const double theta = std::atan2(dy, dx) + 1.5707963267948966;
      const double bound = r * (0.45 + 0.55 * std::pow(0.5 + 0.5 * std::cos(5.0 * theta), 2.0));
      return rho <= bound;
    }
  }
  return false;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

geometry::CameraIntrinsics scene_intrinsics(const SceneSpec& spec) {
  return {static_cast<double>(spec.width), static_cast<double>(spec.width), spec.width / 2.0, spec.height / 2.0,
          spec.width, spec.height};
}

double pan_shift(const SceneSpec& spec, int f) {
  return spec.width * std::tan(spec.camera_yaw_per_frame * f);
}

std::string motion_phrase(const SceneSpec& spec) {
  double vx = 0, vy = 0;
  for (const auto& s : spec.subjects) {
    vx += s.vx;
    vy += s.vy;
  }
  vx /= static_cast<double>(spec.subjects.size());
  vy /= static_cast<double>(spec.subjects.size());
  std::string phrase;
  if (std::max(std::abs(vx), std::abs(vy)) < 0.25) {
    phrase = "stays still";
  } else if (std::abs(vx) >= std::abs(vy)) {
    phrase = vx > 0 ? "moving right" : "moving left";
  } else {
    phrase = vy > 0 ? "moving down" : "moving up";
  }
  if (spec.camera_yaw_per_frame > 0) phrase += " with camera panning right";
  if (spec.camera_yaw_per_frame < 0) phrase += " with camera panning left";
  return phrase;
}

}  // namespace

std::array<float, 3> background_pixel(int id, double wx, double wy) {
  if (id == 0) return {1.0f, 1.0f, 1.0f};
  static const std::array<std::array<float, 3>, 6> tints{{{0.93f, 0.86f, 0.80f},
                                                          {0.80f, 0.88f, 0.93f},
                                                          {0.86f, 0.93f, 0.82f},
                                                          {0.92f, 0.92f, 0.78f},
                                                          {0.85f, 0.82f, 0.92f},
                                                          {0.78f, 0.78f, 0.78f}}};
  const auto& a = tints[static_cast<std::size_t>(id % 6)];
  const auto& b = tints[static_cast<std::size_t>((id * 5 + 2) % 6)];
  double w = 0.0;
  switch ((id - 1) % 3) {
    case 0: w = 0.5 + 0.5 * std::sin(wy * 0.2 + id); break;                           // soft gradient
    case 1: w = std::fmod(std::floor((wx + wy) / 4.0), 2.0) == 0.0 ? 0.0 : 1.0; break;  // stripes
    default: w = (static_cast<long>(std::floor(wx / 8.0)) + static_cast<long>(std::floor(wy / 8.0))) % 2 == 0 ? 0.0 : 1.0;
  }
  w = std::abs(w);
  return {static_cast<float>(a[0] * (1 - w) + b[0] * w), static_cast<float>(a[1] * (1 - w) + b[1] * w),
          static_cast<float>(a[2] * (1 - w) + b[2] * w)};
}

Video background_image(int id, int height, int width) {
  Video out(1, height, width, 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto c = background_pixel(id, x + 0.5, y + 0.5);
      for (int k = 0; k < 3; ++k) out.at(0, y, x, k) = c[static_cast<std::size_t>(k)];
    }
  return out;
}

SceneSpec random_scene(Rng& rng, const SceneOptions& o) {
  SceneSpec spec;
  spec.frames = o.frames;
  spec.height = o.height;
  spec.width = o.width;
  spec.background_id = static_cast<int>(rng.uniform_int(0, o.background_count - 1));
  spec.caption_frame = static_cast<int>(rng.uniform_int(0, o.frames - 1));
  if (rng.bernoulli(o.camera_probability)) {
    spec.camera_yaw_per_frame = rng.uniform(-o.max_camera_yaw, o.max_camera_yaw);
  }
  const int count = static_cast<int>(rng.uniform_int(o.min_subjects, o.max_subjects));

  std::vector<int> colors(palette().size());
  std::iota(colors.begin(), colors.end(), 0);
  std::vector<int> layers(static_cast<std::size_t>(count));
  std::iota(layers.begin(), layers.end(), 0);
  for (std::size_t i = colors.size(); i > 1; --i) std::swap(colors[i - 1], colors[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);
  for (std::size_t i = layers.size(); i > 1; --i) std::swap(layers[i - 1], layers[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);

  std::vector<double> shift(static_cast<std::size_t>(o.frames));
  for (int f = 0; f < o.frames; ++f) shift[static_cast<std::size_t>(f)] = pan_shift(spec, f);

  for (int i = 0; i < count; ++i) {
    SubjectSpec s;
    s.shape = static_cast<Shape>(rng.uniform_int(0, 3));
    s.color = colors[static_cast<std::size_t>(i)];
    s.layer = layers[static_cast<std::size_t>(i)];
    s.radius = rng.uniform(o.min_radius, o.max_radius);
    const bool is_static = rng.bernoulli(o.static_probability);
    const double speed = is_static ? 0.0 : rng.uniform(0.5, o.max_speed);
    const double angle = rng.uniform(0.0, 2.0 * kPi);
    s.vx = speed * std::cos(angle);
    s.vy = speed * std::sin(angle);
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      if (attempt > 0 && attempt % 40 == 0) {
        s.vx *= 0.5;
        s.vy *= 0.5;
        s.radius = std::max(o.min_radius * 0.75, s.radius * 0.85);
      }
      double lo_x = s.radius, hi_x = o.width - s.radius, lo_y = s.radius, hi_y = o.height - s.radius;
      for (int f = 0; f < o.frames; ++f) {
        const double dx = s.vx * f - shift[static_cast<std::size_t>(f)];
        const double dy = s.vy * f;
        lo_x = std::max(lo_x, s.radius - dx);
        hi_x = std::min(hi_x, o.width - s.radius - dx);
        lo_y = std::max(lo_y, s.radius - dy);
        hi_y = std::min(hi_y, o.height - s.radius - dy);
      }
      if (lo_x > hi_x || lo_y > hi_y) continue;
      s.x = rng.uniform(lo_x, hi_x);
      s.y = rng.uniform(lo_y, hi_y);
      placed = true;
      if (!o.allow_overlap) {
        for (const auto& other : spec.subjects) {
          for (int f = 0; f < o.frames && placed; ++f) {
            const double ddx = (s.x + s.vx * f) - (other.x + other.vx * f);
            const double ddy = (s.y + s.vy * f) - (other.y + other.vy * f);
            if (std::sqrt(ddx * ddx + ddy * ddy) < s.radius + other.radius + 1.0) placed = false;
          }
        }
      }
    }
    if (!placed) {
      // Crowded canvas: fall back to a small static subject and accept overlap.
      s.vx = s.vy = 0.0;
      s.radius = o.min_radius;
      s.x = rng.uniform(s.radius, o.width - s.radius);
      s.y = rng.uniform(s.radius, o.height - s.radius);
    }
    spec.subjects.push_back(s);
  }
  return spec;
}

RenderedScene render_scene(const SceneSpec& spec) {
  spec.validate();
  RenderedScene out;
  out.spec = spec;
  const int n = static_cast<int>(spec.subjects.size());
  out.video = Video(spec.frames, spec.height, spec.width, 3);
  out.depth = Video(spec.frames, spec.height, spec.width, 1);
  out.tracks.resize(static_cast<std::size_t>(n));
  for (auto& t : out.tracks) {
    t.masks = Video(spec.frames, spec.height, spec.width, 1);
    t.coverage.assign(static_cast<std::size_t>(spec.frames), 0.0);
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return spec.subjects[static_cast<std::size_t>(a)].layer < spec.subjects[static_cast<std::size_t>(b)].layer;
  });
  std::vector<float> depth_value(static_cast<std::size_t>(n));
  for (int rank = 0; rank < n; ++rank) depth_value[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = static_cast<float>(rank + 1) / n;

  const double pixels = static_cast<double>(spec.height) * spec.width;
  for (int f = 0; f < spec.frames; ++f) {
    const double shift = pan_shift(spec, f);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        auto color = background_pixel(spec.background_id, px + shift, py);
        int top = -1;
        for (int i : order) {
          const auto& s = spec.subjects[static_cast<std::size_t>(i)];
          const double cx = s.x + s.vx * f - shift;
          const double cy = s.y + s.vy * f;
          if (shape_contains(s.shape, px - cx, py - cy, s.radius)) top = i;
        }
        if (top >= 0) {
          color = palette()[static_cast<std::size_t>(spec.subjects[static_cast<std::size_t>(top)].color)].rgb;
          out.tracks[static_cast<std::size_t>(top)].masks.at(f, y, x, 0) = 1.0f;
          out.tracks[static_cast<std::size_t>(top)].coverage[static_cast<std::size_t>(f)] += 1.0 / pixels;
          out.depth.at(f, y, x, 0) = depth_value[static_cast<std::size_t>(top)];
        }
        for (int k = 0; k < 3; ++k) out.video.at(f, y, x, k) = color[static_cast<std::size_t>(k)];
      }
    }
  }

  // Caption of the caption frame: "An image of a red circle and a blue square moving left".
  CaptionRecord& rec = out.caption;
  rec.caption = kCaptionPrefix;
  for (int i = 0; i < n; ++i) {
    const auto& s = spec.subjects[static_cast<std::size_t>(i)];
    if (i > 0) rec.caption += " and ";
    const std::string phrase = "a " + palette()[static_cast<std::size_t>(s.color)].name + " " + to_string(s.shape);
    rec.spans.push_back({static_cast<int>(rec.caption.size()), static_cast<int>(rec.caption.size() + phrase.size())});
    rec.subjects.push_back(phrase);
    rec.caption += phrase;

    BoundingBox box{spec.width, spec.height, 0, 0};
    const auto& m = out.tracks[static_cast<std::size_t>(i)].masks;
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        if (m.at(spec.caption_frame, y, x, 0) > 0.5f) {
          box.x0 = std::min(box.x0, x);
          box.y0 = std::min(box.y0, y);
          box.x1 = std::max(box.x1, x + 1);
          box.y1 = std::max(box.y1, y + 1);
        }
    if (box.empty()) box = {};
    rec.bboxes.push_back(box);
  }
  rec.caption += " " + motion_phrase(spec);

  out.camera = geometry::make_pan_trajectory(spec.frames, spec.camera_yaw_per_frame, scene_intrinsics(spec));
  return out;
}

}  // namespace vidcus::factory
