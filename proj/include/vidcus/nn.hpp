// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal layers with hand-written backward passes. Activations are row-major
// [tokens, features] matrices. Backward methods accumulate into Param::grad.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "vidcus/rng.hpp"

namespace vidcus::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

template <class S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value = Mat<S>::Zero(rows, cols);
    grad = Mat<S>::Zero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
};

template <class S>
using ParamRefs = std::vector<Param<S>*>;

template <class S>
void init_normal(Param<S>& p, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<S>(rng.normal() * stddev);
}

template <class S>
struct Linear {
  Param<S> weight;  // [in, out]
  Param<S> bias;    // [1, out]

  void init(const std::string& name, int in, int out, Rng& rng, bool zero = false) {
    weight.name = name + ".weight";
    bias.name = name + ".bias";
    weight.resize(in, out);
    bias.resize(1, out);
    if (!zero) init_normal(weight, rng, std::sqrt(1.0 / in));
  }
  int in() const { return static_cast<int>(weight.value.rows()); }
  int out() const { return static_cast<int>(weight.value.cols()); }

  Mat<S> forward(const Mat<S>& x) const {
    Mat<S> y(x.rows(), out());
    y.noalias() = x * weight.value;
    y.rowwise() += bias.value.row(0);
    return y;
  }
  // Returns dL/dx.
  Mat<S> backward(const Mat<S>& x, const Mat<S>& dy) {
    weight.grad.noalias() += x.transpose() * dy;
    bias.grad.row(0) += dy.colwise().sum();
    Mat<S> dx(x.rows(), in());
    dx.noalias() = dy * weight.value.transpose();
    return dx;
  }
  void collect(ParamRefs<S>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

template <class S>
struct LayerNorm {
  Param<S> gamma;
  Param<S> beta;
  static constexpr double kEps = 1e-5;

  struct Cache {
    Mat<S> xhat;
    Eigen::Matrix<S, Eigen::Dynamic, 1> rstd;
  };

  void init(const std::string& name, int dim) {
    gamma.name = name + ".gamma";
    beta.name = name + ".beta";
    gamma.resize(1, dim);
    beta.resize(1, dim);
    gamma.value.setOnes();
  }

  Mat<S> forward(const Mat<S>& x, Cache& cache) const {
    const Eigen::Index n = x.cols();
    cache.xhat.resize(x.rows(), n);
    cache.rstd.resize(x.rows());
    Mat<S> y(x.rows(), n);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const S mean = x.row(r).mean();
      const S var = (x.row(r).array() - mean).square().mean();
      const S rstd = S(1) / std::sqrt(var + S(kEps));
      cache.rstd(r) = rstd;
      cache.xhat.row(r) = (x.row(r).array() - mean) * rstd;
      y.row(r) = cache.xhat.row(r).cwiseProduct(gamma.value.row(0)) + beta.value.row(0);
    }
    return y;
  }

  Mat<S> backward(const Cache& cache, const Mat<S>& dy) {
    const Eigen::Index n = dy.cols();
    gamma.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    beta.grad.row(0) += dy.colwise().sum();
    Mat<S> dx(dy.rows(), n);
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      const RowVec<S> g = dy.row(r).cwiseProduct(gamma.value.row(0));
      const S mean_g = g.mean();
      const S mean_gx = g.cwiseProduct(cache.xhat.row(r)).mean();
      dx.row(r) = cache.rstd(r) * (g.array() - mean_g - cache.xhat.row(r).array() * mean_gx).matrix();
    }
    return dx;
  }
  void collect(ParamRefs<S>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
};

enum class Activation { silu, gelu };

template <class S>
Mat<S> activate(Activation a, const Mat<S>& x) {
  if (a == Activation::silu) {
    return x.unaryExpr([](S v) { return v / (S(1) + std::exp(-v)); });
  }
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  return x.unaryExpr([](S v) {
    const S u = S(c) * (v + S(0.044715) * v * v * v);
    return S(0.5) * v * (S(1) + std::tanh(u));
  });
}

template <class S>
Mat<S> activate_backward(Activation a, const Mat<S>& x, const Mat<S>& dy) {
  if (a == Activation::silu) {
    return dy.binaryExpr(x, [](S g, S v) {
      const S s = S(1) / (S(1) + std::exp(-v));
      return g * s * (S(1) + v * (S(1) - s));
    });
  }
  constexpr double c = 0.7978845608028654;
  return dy.binaryExpr(x, [](S g, S v) {
    const S u = S(c) * (v + S(0.044715) * v * v * v);
    const S th = std::tanh(u);
    const S du = S(c) * (S(1) + S(3 * 0.044715) * v * v);
    return g * (S(0.5) * (S(1) + th) + S(0.5) * v * (S(1) - th * th) * du);
  });
}

// Two-layer perceptron: Linear -> activation -> Linear.
template <class S>
struct Mlp {
  Linear<S> fc1;
  Linear<S> fc2;
  Activation act = Activation::silu;

  struct Cache {
    Mat<S> x;
    Mat<S> pre;
    Mat<S> hidden;
  };

  // zero_out: output layer starts at zero, so the MLP contributes nothing at init.
  void init(const std::string& name, int in, int hidden, int out, Rng& rng, bool zero_out = false,
            Activation a = Activation::silu) {
    act = a;
    fc1.init(name + ".fc1", in, hidden, rng);
    fc2.init(name + ".fc2", hidden, out, rng, zero_out);
  }

  Mat<S> forward(const Mat<S>& x) const { return fc2.forward(activate(act, fc1.forward(x))); }

  Mat<S> forward(const Mat<S>& x, Cache& cache) const {
    cache.x = x;
    cache.pre = fc1.forward(x);
    cache.hidden = activate(act, cache.pre);
    return fc2.forward(cache.hidden);
  }

  Mat<S> backward(const Cache& cache, const Mat<S>& dy) {
    const Mat<S> dh = fc2.backward(cache.hidden, dy);
    return fc1.backward(cache.x, activate_backward(act, cache.pre, dh));
  }

  void collect(ParamRefs<S>& out) {
    fc1.collect(out);
    fc2.collect(out);
  }
};

// Sinusoidal encoding of a scalar position: [sin(p w_0..), cos(p w_0..)] with
// w_i = max_period^(-i / (dim/2)).
inline std::vector<double> sinusoidal(double position, int dim, double max_period = 10000.0) {
  std::vector<double> out(static_cast<std::size_t>(dim), 0.0);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(max_period) * i / half);
    out[i] = std::sin(position * freq);
    out[half + i] = std::cos(position * freq);
  }
  return out;
}

}  // namespace vidcus::nn
