// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidcus/geometry.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "vidcus/error.hpp"

namespace vidcus::geometry {

using json = nlohmann::json;

void CameraIntrinsics::validate() const {
  if (width <= 0 || height <= 0) throw InvalidArgument("intrinsics: image size must be positive");
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("intrinsics: focal lengths must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgument("intrinsics: principal point outside image");
  }
}

CameraIntrinsics CameraIntrinsics::downscaled(int factor_y, int factor_x) const {
  if (factor_x <= 0 || factor_y <= 0 || width % factor_x != 0 || height % factor_y != 0) {
    throw InvalidArgument("intrinsics: downscale factor must divide image size");
  }
  CameraIntrinsics k;
  k.fx = fx / factor_x;
  k.fy = fy / factor_y;
  k.cx = cx / factor_x;
  k.cy = cy / factor_y;
  k.width = width / factor_x;
  k.height = height / factor_y;
  return k;
}

void CameraPose::validate() const {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw InvalidPose("rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > 1e-6) {
    throw InvalidPose("rotation determinant is not +1");
  }
  if (!translation.allFinite()) throw InvalidPose("translation is not finite");
}

Eigen::Vector3d RayField::origin(int v, int u) const {
  const double* p = data.data() + (static_cast<std::size_t>(v) * width + u) * 6;
  return {p[0], p[1], p[2]};
}

Eigen::Vector3d RayField::direction(int v, int u) const {
  const double* p = data.data() + (static_cast<std::size_t>(v) * width + u) * 6 + 3;
  return {p[0], p[1], p[2]};
}

void RayField::set(int v, int u, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  double* p = data.data() + (static_cast<std::size_t>(v) * width + u) * 6;
  for (int i = 0; i < 3; ++i) {
    p[i] = o[i];
    p[3 + i] = d[i];
  }
}

void CameraTrajectory::validate(int expected_frames) const {
  intrinsics.validate();
  if (static_cast<int>(poses.size()) != expected_frames) {
    throw InvalidArgument("trajectory has " + std::to_string(poses.size()) + " poses, expected " +
                          std::to_string(expected_frames));
  }
  for (const auto& p : poses) p.validate();
}

RayField make_rays(const CameraIntrinsics& intrinsics, const CameraPose& pose) {
  intrinsics.validate();
  pose.validate();
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = intrinsics.fx;
  k(1, 1) = intrinsics.fy;
  k(0, 2) = intrinsics.cx;
  k(1, 2) = intrinsics.cy;
  const Eigen::Matrix3d world_from_pixel = pose.rotation * k.inverse();

  RayField rays;
  rays.height = intrinsics.height;
  rays.width = intrinsics.width;
  rays.data.resize(static_cast<std::size_t>(rays.height) * rays.width * 6);
  for (int v = 0; v < rays.height; ++v) {
    for (int u = 0; u < rays.width; ++u) {
      const Eigen::Vector3d pixel(u + 0.5, v + 0.5, 1.0);
      rays.set(v, u, pose.translation, (world_from_pixel * pixel).normalized());
    }
  }
  return rays;
}

PluckerRayMap plucker_embed(const RayField& rays) {
  if (rays.data.size() != static_cast<std::size_t>(rays.height) * rays.width * 6) {
    throw ShapeError("ray field size does not match its dims");
  }
  PluckerRayMap out;
  out.height = rays.height;
  out.width = rays.width;
  out.data.resize(rays.data.size());
  for (int v = 0; v < rays.height; ++v) {
    for (int u = 0; u < rays.width; ++u) {
      const Eigen::Vector3d o = rays.origin(v, u);
      const Eigen::Vector3d d = rays.direction(v, u);
      const Eigen::Vector3d m = o.cross(d);
      double* p = out.data.data() + (static_cast<std::size_t>(v) * out.width + u) * 6;
      for (int i = 0; i < 3; ++i) {
        p[i] = m[i];
        p[3 + i] = d[i];
      }
    }
  }
  return out;
}

std::vector<PluckerRayMap> trajectory_plucker(const CameraTrajectory& traj, int grid_h, int grid_w) {
  if (grid_h <= 0 || grid_w <= 0 || traj.intrinsics.height % grid_h != 0 ||
      traj.intrinsics.width % grid_w != 0) {
    throw ShapeError("plucker grid must evenly divide the image");
  }
  const CameraIntrinsics k =
      traj.intrinsics.downscaled(traj.intrinsics.height / grid_h, traj.intrinsics.width / grid_w);
  std::vector<PluckerRayMap> maps;
  maps.reserve(traj.poses.size());
  for (const auto& pose : traj.poses) maps.push_back(plucker_embed(make_rays(k, pose)));
  return maps;
}

Eigen::Matrix3d yaw_rotation(double radians) {
  return Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

CameraTrajectory make_pan_trajectory(int frames, double yaw_per_frame, const CameraIntrinsics& intrinsics) {
  CameraTrajectory traj;
  traj.intrinsics = intrinsics;
  for (int f = 0; f < frames; ++f) {
    CameraPose p;
    p.rotation = yaw_rotation(yaw_per_frame * f);
    traj.poses.push_back(p);
  }
  return traj;
}

std::string serialize_trajectory(const CameraTrajectory& traj) {
  json j;
  j["version"] = 1;
  j["intrinsics"] = {{"fx", traj.intrinsics.fx}, {"fy", traj.intrinsics.fy},
                     {"cx", traj.intrinsics.cx}, {"cy", traj.intrinsics.cy},
                     {"width", traj.intrinsics.width}, {"height", traj.intrinsics.height}};
  j["frames"] = json::array();
  for (const auto& p : traj.poses) {
    std::vector<double> r(9);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) r[i * 3 + k] = p.rotation(i, k);
    j["frames"].push_back({{"rotation", r},
                           {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}});
  }
  return j.dump(1);
}

CameraTrajectory parse_trajectory(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != 1) throw InvalidRecord("unsupported trajectory version");
    CameraTrajectory traj;
    const auto& k = j.at("intrinsics");
    traj.intrinsics.fx = k.at("fx");
    traj.intrinsics.fy = k.at("fy");
    traj.intrinsics.cx = k.at("cx");
    traj.intrinsics.cy = k.at("cy");
    traj.intrinsics.width = k.at("width");
    traj.intrinsics.height = k.at("height");
    for (const auto& fr : j.at("frames")) {
      const auto r = fr.at("rotation").get<std::vector<double>>();
      const auto t = fr.at("translation").get<std::vector<double>>();
      if (r.size() != 9 || t.size() != 3) throw InvalidRecord("trajectory frame has wrong arity");
      CameraPose p;
      for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) p.rotation(i, c) = r[i * 3 + c];
      p.translation = {t[0], t[1], t[2]};
      traj.poses.push_back(p);
    }
    return traj;
  } catch (const json::exception& e) {
    throw InvalidRecord(std::string("trajectory: ") + e.what());
  }
}

void save_trajectory(const std::filesystem::path& path, const CameraTrajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_trajectory(traj) << '\n';
}

CameraTrajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trajectory(ss.str());
}

}  // namespace vidcus::geometry
