// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "vidcus/cus_factory.hpp"

namespace vidcus::factory {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

bool selected(const Video* mask, int y, int x) { return mask == nullptr || mask->at(0, y, x, 0) > 0.5f; }

float luma(const Video& img, int y, int x) {
  return 0.299f * img.at(0, y, x, 0) + 0.587f * img.at(0, y, x, 1) + 0.114f * img.at(0, y, x, 2);
}

int mask_extent(const Video& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = 0, y1 = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(0, y, x, 0) > 0.5f) x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x + 1), y1 = std::max(y1, y + 1);
  return x1 > x0 ? std::max(x1 - x0, y1 - y0) : 0;
}

void clamp01(Video& img) {
  for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace

AugmentParams draw_augment(Rng& rng, const AugmentRanges& r) {
  AugmentParams p;
  p.rotation_deg = rng.uniform(-r.max_rotation_deg, r.max_rotation_deg);
  p.scale = rng.uniform(r.min_scale, r.max_scale);
  p.brightness = rng.uniform(r.min_color, r.max_color);
  p.contrast = rng.uniform(r.min_color, r.max_color);
  p.saturation = rng.uniform(r.min_color, r.max_color);
  p.hue_deg = rng.uniform(-r.max_hue_deg, r.max_hue_deg);
  return p;
}

SubjectImage extract_subject(const Video& frame, const Video& mask) {
  if (frame.channels != 3 || mask.channels != 1 || frame.height != mask.height || frame.width != mask.width) {
    throw ShapeError("extract_subject: frame/mask shapes disagree");
  }
  const int side = std::max(frame.height, frame.width);
  SubjectImage out{Video(1, side, side, 3), Video(1, side, side, 1)};
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x)
      if (mask.at(0, y, x, 0) > 0.5f) {
        out.mask.at(0, y, x, 0) = 1.0f;
        for (int c = 0; c < 3; ++c) out.image.at(0, y, x, c) = frame.at(0, y, x, c);
      }
  return out;
}

void adjust_brightness(Video& image, double factor, const Video* mask) {
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (selected(mask, y, x))
        for (int c = 0; c < 3; ++c) image.at(0, y, x, c) = static_cast<float>(image.at(0, y, x, c) * factor);
  clamp01(image);
}

void adjust_contrast(Video& image, double factor, const Video* mask) {
  double mean = 0.0;
  int count = 0;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (selected(mask, y, x)) {
        mean += luma(image, y, x);
        ++count;
      }
  if (count == 0) return;
  mean /= count;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (selected(mask, y, x))
        for (int c = 0; c < 3; ++c) {
          float& v = image.at(0, y, x, c);
          v = static_cast<float>((v - mean) * factor + mean);
        }
  clamp01(image);
}

void adjust_saturation(Video& image, double factor, const Video* mask) {
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (selected(mask, y, x)) {
        const float g = luma(image, y, x);
        for (int c = 0; c < 3; ++c) {
          float& v = image.at(0, y, x, c);
          v = static_cast<float>(g + factor * (v - g));
        }
      }
  clamp01(image);
}

void shift_hue(Video& image, double degrees, const Video* mask) {
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      if (!selected(mask, y, x)) continue;
      const double r = image.at(0, y, x, 0), g = image.at(0, y, x, 1), b = image.at(0, y, x, 2);
      const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
      const double chroma = mx - mn;
      if (chroma <= 0.0) continue;  // gray: hue undefined
      double h;
      if (mx == r) h = std::fmod((g - b) / chroma, 6.0);
      else if (mx == g) h = (b - r) / chroma + 2.0;
      else h = (r - g) / chroma + 4.0;
      h = h * 60.0 + degrees;
      h = std::fmod(h, 360.0);
      if (h < 0) h += 360.0;
      const double hp = h / 60.0;
      const double xx = chroma * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
      double r1 = 0, g1 = 0, b1 = 0;
      switch (static_cast<int>(hp)) {
        case 0: r1 = chroma; g1 = xx; break;
        case 1: r1 = xx; g1 = chroma; break;
        case 2: g1 = chroma; b1 = xx; break;
        case 3: g1 = xx; b1 = chroma; break;
        case 4: r1 = xx; b1 = chroma; break;
        default: r1 = chroma; b1 = xx; break;
      }
      image.at(0, y, x, 0) = static_cast<float>(r1 + mn);
      image.at(0, y, x, 1) = static_cast<float>(g1 + mn);
      image.at(0, y, x, 2) = static_cast<float>(b1 + mn);
    }
  clamp01(image);
}

SubjectImage augment_subject(const SubjectImage& subject, const AugmentParams& p, const AugmentRanges& ranges,
                             AugmentLog* log) {
  const Video& mask = subject.mask;
  const int side = mask.height;
  if (mask.width != side || subject.image.height != side || subject.image.width != side) {
    throw ShapeError("augment_subject expects a square canvas");
  }
  double cx = 0, cy = 0;
  int count = 0, x0 = side, y0 = side, x1 = 0, y1 = 0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      if (mask.at(0, y, x, 0) > 0.5f) {
        cx += x + 0.5;
        cy += y + 0.5;
        ++count;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x + 1);
        y1 = std::max(y1, y + 1);
      }
  if (count == 0) throw InvalidArgument("augment_subject: empty mask");
  cx /= count;
  cy /= count;

  AugmentLog entry;
  entry.params = p;
  const int extent = std::max(x1 - x0, y1 - y0);
  entry.source_extent = extent;
  double reach = 0.0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      if (mask.at(0, y, x, 0) > 0.5f) {
        const double dx = std::abs(x + 0.5 - cx) + 0.5, dy = std::abs(y + 0.5 - cy) + 0.5;
        reach = std::max(reach, std::sqrt(dx * dx + dy * dy));
      }
  const double limit = side / 2.0 / reach;

  const double th = p.rotation_deg * kDegToRad;
  const double cs = std::cos(th), sn = std::sin(th);
  auto warp = [&](double total) {
    SubjectImage out{Video(1, side, side, 3), Video(1, side, side, 1)};
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        const double qx = x + 0.5 - side / 2.0, qy = y + 0.5 - side / 2.0;
        const double sx = cx + (cs * qx + sn * qy) / total;
        const double sy = cy + (-sn * qx + cs * qy) / total;
        const int ix = static_cast<int>(std::floor(sx)), iy = static_cast<int>(std::floor(sy));
        if (ix < 0 || iy < 0 || ix >= side || iy >= side || mask.at(0, iy, ix, 0) <= 0.5f) continue;
        out.mask.at(0, y, x, 0) = 1.0f;
        for (int c = 0; c < 3; ++c) out.image.at(0, y, x, c) = subject.image.at(0, iy, ix, c);
      }
    }
    return out;
  };

  double total = p.scale;
  if (ranges.normalize_scale) {
    // Resize by the measured output extent rather than the source extent alone:
    // pixelation and rotation otherwise leave a size trend that tracks the source.
    const double target = ranges.canonical_extent * side * p.scale;
    total = target / extent;
    for (int iter = 0; iter < 4; ++iter) {
      const int got = mask_extent(warp(std::min(total, limit)).mask);
      if (got == 0 || std::abs(got - target) <= 0.5) break;
      total *= target / got;
    }
  }
  if (total > limit) {
    total = limit;
    entry.clamped = true;
  }
  entry.normalize_factor = total / p.scale;
  SubjectImage out = warp(total);
  adjust_brightness(out.image, p.brightness, &out.mask);
  adjust_contrast(out.image, p.contrast, &out.mask);
  adjust_saturation(out.image, p.saturation, &out.mask);
  shift_hue(out.image, p.hue_deg, &out.mask);
  if (log) *log = entry;
  return out;
}

SubjectImage augment_subject(const SubjectImage& subject, Rng& rng, const AugmentRanges& ranges, AugmentLog* log) {
  return augment_subject(subject, draw_augment(rng, ranges), ranges, log);
}

BackgroundPool BackgroundPool::standard(int count) {
  BackgroundPool pool;
  for (int i = 0; i < std::max(count, 1); ++i) pool.ids.push_back(i);
  return pool;
}

Video composite(const SubjectImage& subject, const Video& background) {
  if (background.height != subject.image.height || background.width != subject.image.width) {
    throw ShapeError("background size differs from subject canvas");
  }
  Video out = background;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      if (subject.mask.at(0, y, x, 0) > 0.5f)
        for (int c = 0; c < 3; ++c) out.at(0, y, x, c) = subject.image.at(0, y, x, c);
  return out;
}

PlacedImage place_background(const SubjectImage& subject, const BackgroundPool& pool, Rng& rng) {
  if (pool.ids.empty()) throw InvalidArgument("background pool is empty");
  const int id = pool.ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.ids.size()) - 1))];
  return {composite(subject, background_image(id, subject.image.height, subject.image.width)), id};
}

}  // namespace vidcus::factory
