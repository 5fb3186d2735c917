// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "vidcus/error.hpp"

namespace vidcus::geometry {

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  int width = 1;
  int height = 1;

  void validate() const;
  // Intrinsics of the same camera sampled on a grid `factor_x` / `factor_y`
  // times coarser (e.g. the patch grid).
  CameraIntrinsics downscaled(int factor_y, int factor_x) const;
};

// World-from-camera rotation; translation is the camera center o.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const;
};

// Per-pixel ray origin and unit direction, layout [height, width, 2, 3].
struct RayField {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Eigen::Vector3d origin(int v, int u) const;
  Eigen::Vector3d direction(int v, int u) const;
  void set(int v, int u, const Eigen::Vector3d& o, const Eigen::Vector3d& d);
};

// Per-pixel 6-vector (o x d, d), layout [height, width, 6].
struct PluckerRayMap {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  const double* pixel(int v, int u) const { return data.data() + (static_cast<std::size_t>(v) * width + u) * 6; }
};

struct CameraTrajectory {
  CameraIntrinsics intrinsics;
  std::vector<CameraPose> poses;

  std::size_t size() const { return poses.size(); }
  void validate(int expected_frames) const;
};

RayField make_rays(const CameraIntrinsics& intrinsics, const CameraPose& pose);
PluckerRayMap plucker_embed(const RayField& rays);

// Plücker maps for every frame of a trajectory, sampled on a
// grid_h x grid_w lattice (typically the patch grid).
std::vector<PluckerRayMap> trajectory_plucker(const CameraTrajectory& traj, int grid_h, int grid_w);

// Rotation about the camera's vertical (y) axis.
Eigen::Matrix3d yaw_rotation(double radians);

// Trajectory that pans by `yaw_per_frame` radians each frame around a fixed center.
CameraTrajectory make_pan_trajectory(int frames, double yaw_per_frame, const CameraIntrinsics& intrinsics);

std::string serialize_trajectory(const CameraTrajectory& traj);
CameraTrajectory parse_trajectory(const std::string& text);
void save_trajectory(const std::filesystem::path& path, const CameraTrajectory& traj);
CameraTrajectory load_trajectory(const std::filesystem::path& path);

}  // namespace vidcus::geometry
