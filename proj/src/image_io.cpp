// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidcus/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace vidcus::io {

float quantize8(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<float>(std::lround(c * 255.0f)) / 255.0f;
}

void quantize8(Video& v) {
  for (auto& x : v.data) x = quantize8(x);
}

void write_pnm(const std::filesystem::path& path, const Video& video, int frame) {
  if (video.channels != 1 && video.channels != 3) throw ShapeError("pnm needs 1 or 3 channels");
  if (frame < 0 || frame >= video.frames) throw ShapeError("pnm frame index out of range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (video.channels == 3 ? "P6" : "P5") << '\n' << video.width << ' ' << video.height << "\n255\n";
  const auto src = video.frame(frame);
  std::string bytes(src.size(), '\0');
  for (std::size_t i = 0; i < src.size(); ++i) {
    bytes[i] = static_cast<char>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Video read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  if ((magic != "P5" && magic != "P6") || w <= 0 || h <= 0 || maxval != 255) {
    throw IoError("unsupported pnm file " + path.string());
  }
  Video out(1, h, w, magic == "P6" ? 3 : 1);
  std::string bytes(out.size(), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError("truncated pnm " + path.string());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    out.data[i] = static_cast<float>(static_cast<unsigned char>(bytes[i])) / 255.0f;
  }
  return out;
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("truncated tensor file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const Video& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("VTEN", 4);
  put_u32(out, 1);  // version
  put_u32(out, 4);  // rank
  for (int d : {v.frames, v.height, v.width, v.channels}) put_u32(out, static_cast<std::uint32_t>(d));
  for (float f : v.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

Video read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "VTEN", 4) != 0) throw IoError("not a tensor file: " + path.string());
  if (get_u32(in) != 1 || get_u32(in) != 4) throw IoError("unsupported tensor file " + path.string());
  int dims[4];
  for (int& d : dims) d = static_cast<int>(get_u32(in));
  Video v(dims[0], dims[1], dims[2], dims[3]);
  for (auto& f : v.data) {
    const std::uint32_t bits = get_u32(in);
    std::memcpy(&f, &bits, 4);
  }
  return v;
}

}  // namespace vidcus::io
