// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

// Python bindings: plain functions over numpy arrays and JSON-shaped dicts.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "vidcus/cus_factory.hpp"
#include "vidcus/flow_matching.hpp"
#include "vidcus/geometry.hpp"
#include "vidcus/ivtm.hpp"
#include "vidcus/metrics.hpp"
#include "vidcus/token_layout.hpp"

namespace py = pybind11;
using namespace vidcus;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const Video& v) {
  py::array_t<float> out({v.frames, v.height, v.width, v.channels});
  std::copy(v.data.begin(), v.data.end(), out.mutable_data());
  return out;
}

// Accepts [F, H, W, C] or a single [H, W, C] frame.
Video from_numpy(const FloatArray& a) {
  if (a.ndim() != 3 && a.ndim() != 4) throw ShapeError("expected an array of shape [F, H, W, C] or [H, W, C]");
  const int off = a.ndim() == 4 ? 1 : 0;
  Video v(off ? static_cast<int>(a.shape(0)) : 1, static_cast<int>(a.shape(off)), static_cast<int>(a.shape(off + 1)),
          static_cast<int>(a.shape(off + 2)));
  std::copy(a.data(), a.data() + a.size(), v.data.begin());
  return v;
}

train::TrainConfig config_from(const py::object& cfg) {
  if (cfg.is_none()) return {};
  const std::string text = py::str(py::module_::import("json").attr("dumps")(cfg));
  return train::TrainConfig::from_json(nlohmann::json::parse(text));
}

py::dict sample_dict(const factory::Sample& s) {
  py::dict d;
  d["task"] = factory::to_string(s.task);
  d["caption"] = s.caption;
  d["video"] = to_numpy(s.video);
  d["control"] = s.control.empty() ? py::object(py::none()) : py::object(to_numpy(s.control));
  py::list subjects;
  for (const auto& in : s.subjects) {
    py::dict sd;
    sd["label"] = in.label;
    sd["color"] = in.color;
    sd["shape"] = in.shape;
    sd["image"] = to_numpy(in.image);
    sd["mask"] = to_numpy(in.mask);
    subjects.append(sd);
  }
  d["subjects"] = subjects;
  return d;
}

}  // namespace

PYBIND11_MODULE(_vidcus, m) {
  m.doc() = "vidcus core bindings";

  static py::exception<Error> base(m, "VidcusError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ShapeError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), (e.kind() + ": " + e.what()).c_str());
    }
  });

  m.def(
      "sample_lottery",
      [](int K, int M, std::uint64_t seed) {
        Rng rng(seed);
        return layout::sample_lottery(K, M, rng).positions;
      },
      py::arg("k"), py::arg("m"), py::arg("seed"), "Uniform ascending K-subset of [1, M].");
  m.def(
      "sample_lottery_many",
      [](int K, int M, int draws, std::uint64_t seed) {
        Rng rng(seed);
        py::array_t<int> out({draws, K});
        auto w = out.mutable_unchecked<2>();
        for (int i = 0; i < draws; ++i) {
          const auto pos = layout::sample_lottery(K, M, rng).positions;
          for (int k = 0; k < K; ++k) w(i, k) = pos[static_cast<std::size_t>(k)];
        }
        return out;
      },
      py::arg("k"), py::arg("m"), py::arg("draws"), py::arg("seed"));
  m.def(
      "temporal_positions",
      [](int M, int N, const std::string& mode) {
        const auto p = layout::assign_temporal_positions(M, N, layout::parse_embedding_mode(mode));
        return std::make_pair(p.control, p.noise);
      },
      py::arg("m"), py::arg("n"), py::arg("mode") = "tae", "(control, noise) frame positions.");

  m.def(
      "plucker",
      [](double fx, double fy, double cx, double cy, int width, int height, const Eigen::Matrix3d& rotation,
         const Eigen::Vector3d& translation) {
        const auto map = geometry::plucker_embed(
            geometry::make_rays({fx, fy, cx, cy, width, height}, geometry::CameraPose{rotation, translation}));
        py::array_t<double> out({height, width, 6});
        std::copy(map.data.begin(), map.data.end(), out.mutable_data());
        return out;
      },
      py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"), py::arg("height"),
      py::arg("rotation"), py::arg("translation"), "Per-pixel Plücker coordinates (o x d, d), shape [H, W, 6].");

  m.def(
      "fm_loss", [](const FloatArray& pred, const FloatArray& target) { return flow::fm_loss(from_numpy(pred), from_numpy(target)); },
      py::arg("pred"), py::arg("target"));

  m.def(
      "generate",
      [](int count, std::uint64_t seed, const std::optional<std::vector<std::string>>& tasks,
         const std::optional<std::filesystem::path>& out) {
        factory::GenerateOptions g;
        g.count = count;
        g.seed = seed;
        if (tasks) {
          g.emit.tasks.clear();
          for (const auto& t : *tasks) g.emit.tasks.insert(factory::parse_task(t));
        }
        std::vector<factory::Sample> samples;
        {
          py::gil_scoped_release release;
          samples = factory::generate(g);
          if (out) factory::write_dataset(*out, samples, g);
        }
        py::list result;
        for (const auto& s : samples) result.append(sample_dict(s));
        return result;
      },
      py::arg("count"), py::arg("seed"), py::arg("tasks") = py::none(), py::arg("out") = py::none(),
      "Procedural samples as dicts; also written to `out` when given.");
  m.def(
      "load_dataset",
      [](const std::filesystem::path& dir) {
        py::list result;
        for (const auto& s : factory::load_dataset(dir)) result.append(sample_dict(s));
        return result;
      },
      py::arg("path"));

  m.def(
      "inspect_plan",
      [](const std::filesystem::path& data, int index, const py::object& config, std::uint64_t seed) {
        const auto samples = factory::load_dataset(data);
        if (index < 0 || index >= static_cast<int>(samples.size())) throw InvalidArgument("index outside the dataset");
        const auto& s = samples[static_cast<std::size_t>(index)];
        Rng rng = Rng(seed).substream("inspect");
        const Video xt(s.video.frames, s.video.height, s.video.width, s.video.channels);
        return layout::dump_plan(
            train::build_plan(train::parse_task(factory::to_string(s.task)), s, xt, 0.5, config_from(config), rng));
      },
      py::arg("data"), py::arg("index"), py::arg("config") = py::none(), py::arg("seed") = 0);

  m.def(
      "train",
      [](const std::filesystem::path& data, const py::object& config, const std::optional<std::filesystem::path>& out) {
        const auto cfg = config_from(config);
        const auto samples = factory::load_dataset(data);
        std::vector<double> losses;
        {
          py::gil_scoped_release release;
          train::Trainer trainer(cfg, samples);
          for (const auto& r : trainer.run(cfg.total_steps)) losses.push_back(r.loss);
          if (out) {
            std::filesystem::create_directories(*out);
            dit::save_checkpoint(*out / "checkpoint.vck", trainer.model(),
                                 nlohmann::json{{"train", cfg.to_json()}}.dump());
          }
        }
        return losses;
      },
      py::arg("data"), py::arg("config") = py::none(), py::arg("out") = py::none(),
      "Runs training and returns the per-step losses.");

  m.def(
      "temporal_consistency",
      [](const FloatArray& v) { return metrics::temporal_consistency(from_numpy(v), metrics::ToyPixelEmbedder{}); },
      py::arg("video"));
  m.def(
      "dynamic_degree", [](const FloatArray& v) { return metrics::dynamic_degree(from_numpy(v), metrics::BlockMatchingFlow{}); },
      py::arg("video"));
  m.def(
      "text_alignment",
      [](const FloatArray& v, const std::string& prompt) {
        return metrics::text_alignment(from_numpy(v), prompt, metrics::ToyTextImageEmbedder{});
      },
      py::arg("video"), py::arg("prompt"));
}
