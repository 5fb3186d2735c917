// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vidcus/error.hpp"

namespace vidcus {

// Dense [frames, height, width, channels] array, row-major with channels
// fastest. Used for raw videos, latents, masks (C = 1) and depth (C = 1).
struct Video {
  int frames = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Video() = default;
  Video(int f, int h, int w, int c, float fill = 0.0f)
      : frames(f), height(h), width(w), channels(c),
        data(static_cast<std::size_t>(f) * h * w * c, fill) {
    if (f <= 0 || h <= 0 || w <= 0 || c <= 0) {
      throw ShapeError("video dims must be positive");
    }
  }

  std::size_t size() const { return data.size(); }
  std::size_t frame_size() const { return static_cast<std::size_t>(height) * width * channels; }
  bool empty() const { return data.empty(); }

  std::size_t index(int f, int y, int x, int c) const {
    return ((static_cast<std::size_t>(f) * height + y) * width + x) * channels + c;
  }
  float& at(int f, int y, int x, int c) { return data[index(f, y, x, c)]; }
  float at(int f, int y, int x, int c) const { return data[index(f, y, x, c)]; }

  std::span<float> frame(int f) { return {data.data() + f * frame_size(), frame_size()}; }
  std::span<const float> frame(int f) const { return {data.data() + f * frame_size(), frame_size()}; }

  // Single-frame copy as a one-frame video.
  Video slice_frame(int f) const {
    Video out(1, height, width, channels);
    auto src = frame(f);
    std::copy(src.begin(), src.end(), out.data.begin());
    return out;
  }

  bool same_shape(const Video& o) const {
    return frames == o.frames && height == o.height && width == o.width && channels == o.channels;
  }

  std::string shape_string() const {
    return "[" + std::to_string(frames) + "," + std::to_string(height) + "," +
           std::to_string(width) + "," + std::to_string(channels) + "]";
  }

  bool operator==(const Video& o) const { return same_shape(o) && data == o.data; }
};

}  // namespace vidcus
