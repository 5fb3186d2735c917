// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

// Portable image files (binary PPM for RGB, PGM for single channel) and a
// minimal float32 tensor container ("VTEN").

#pragma once

#include <filesystem>

#include "vidcus/tensor.hpp"

namespace vidcus::io {

// 8-bit quantization used for everything stored as an image: v -> round(v*255)/255.
float quantize8(float v);
void quantize8(Video& v);

// Writes frame `f` of a 1- or 3-channel video. Values are clamped to [0, 1].
void write_pnm(const std::filesystem::path& path, const Video& video, int frame = 0);
// Reads a P5/P6 file into a one-frame video with values k/255.
Video read_pnm(const std::filesystem::path& path);

void write_tensor(const std::filesystem::path& path, const Video& v);
Video read_tensor(const std::filesystem::path& path);

}  // namespace vidcus::io
