// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidcus/dit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace vidcus::dit {

using layout::ControlKind;
using layout::SegmentKind;
using layout::TokenPlan;
using json = nlohmann::json;

void PatchGrid::check(const Video& v) const {
  if (pt < 1 || ph < 1 || pw < 1) throw ShapeError("patch sizes must be positive");
  if (v.frames % pt != 0 || v.height % ph != 0 || v.width % pw != 0) {
    throw ShapeError("latent " + v.shape_string() + " does not tile by patch (" + std::to_string(pt) + "," +
                     std::to_string(ph) + "," + std::to_string(pw) + ")");
  }
}

std::vector<float> patchify(const Video& latent, const PatchGrid& grid) {
  grid.check(latent);
  const int gt = latent.frames / grid.pt;
  const int gh = latent.height / grid.ph;
  const int gw = latent.width / grid.pw;
  const int dim = grid.token_dim(latent.channels);
  std::vector<float> out(static_cast<std::size_t>(gt) * gh * gw * dim);
  std::size_t o = 0;
  for (int tt = 0; tt < gt; ++tt)
    for (int yy = 0; yy < gh; ++yy)
      for (int xx = 0; xx < gw; ++xx)
        for (int dt = 0; dt < grid.pt; ++dt)
          for (int dy = 0; dy < grid.ph; ++dy)
            for (int dx = 0; dx < grid.pw; ++dx)
              for (int c = 0; c < latent.channels; ++c)
                out[o++] = latent.at(tt * grid.pt + dt, yy * grid.ph + dy, xx * grid.pw + dx, c);
  return out;
}

Video unpatchify(const std::vector<float>& tokens, int frames, int height, int width, int channels,
                 const PatchGrid& grid) {
  Video out(frames, height, width, channels);
  grid.check(out);
  if (tokens.size() != out.size()) throw ShapeError("token buffer size does not match target latent");
  const int gt = frames / grid.pt;
  const int gh = height / grid.ph;
  const int gw = width / grid.pw;
  std::size_t o = 0;
  for (int tt = 0; tt < gt; ++tt)
    for (int yy = 0; yy < gh; ++yy)
      for (int xx = 0; xx < gw; ++xx)
        for (int dt = 0; dt < grid.pt; ++dt)
          for (int dy = 0; dy < grid.ph; ++dy)
            for (int dx = 0; dx < grid.pw; ++dx)
              for (int c = 0; c < channels; ++c)
                out.at(tt * grid.pt + dt, yy * grid.ph + dy, xx * grid.pw + dx, c) = tokens[o++];
  return out;
}

Vocabulary::Vocabulary() {
  words_ = {"<unk>", "a",      "an",     "and",    "the",    "of",       "image",   "video",   "moving",
            "static", "left",  "right",  "up",     "down",   "slowly",   "quickly", "on",      "white",
            "background", "red", "green", "blue", "yellow", "magenta", "cyan",    "orange",  "purple",
            "circle", "square", "triangle", "star", "make", "it",      "turn",    "into",    "change",
            "color",  "to",    "camera", "panning", "object", "with",   "in",      "scene",   "stays",
            "still",  "IMG1",  "IMG2",   "IMG3",   "IMG4",   "IMG5",     "IMG6"};
  for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = static_cast<int>(i);
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary vocab;
  return vocab;
}

int Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? 0 : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> ids;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
    if (w.empty()) continue;
    if (w.rfind("IMG", 0) != 0) {
      std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    }
    ids.push_back(id(w));
  }
  return ids;
}

void DiTConfig::validate() const {
  if (hidden < 4 || hidden % 4 != 0) throw InvalidArgument("hidden width must be a positive multiple of 4");
  if (heads < 1 || hidden % heads != 0) throw InvalidArgument("hidden width must be divisible by head count");
  if (layers < 1) throw InvalidArgument("need at least one layer");
  if (patch.pt < 1 || patch.ph < 1 || patch.pw < 1) throw InvalidArgument("patch sizes must be positive");
  if (height % patch.ph != 0 || width % patch.pw != 0) throw ShapeError("frame size must tile by patch");
  if (frames % patch.pt != 0) throw ShapeError("frame count must tile by temporal patch");
  if (max_subjects < 1 || encoding_dim < 2 || encoding_dim % 2 != 0 || mlp_ratio < 1 || channels < 1 ||
      control_channels < 1 || !(sigma_data > 0.0)) {
    throw InvalidArgument("invalid model config");
  }
}

std::pair<double, double> DiTConfig::precondition_coefficients(double t) const {
  // Best linear predictor of v = x1 - x0 from xt = t x1 + (1 - t) x0 with
  // E[x1^2] = sigma_data^2, plus the standard deviation of what it misses.
  const double s2 = sigma_data * sigma_data;
  const double cov = t * s2 - (1.0 - t);
  const double var = t * t * s2 + (1.0 - t) * (1.0 - t);
  return {cov / var, std::sqrt(std::max(0.0, s2 + 1.0 - cov * cov / var))};
}

std::string DiTConfig::to_json() const {
  json j = {{"hidden", hidden},
            {"heads", heads},
            {"layers", layers},
            {"patch", {patch.pt, patch.ph, patch.pw}},
            {"channels", channels},
            {"control_channels", control_channels},
            {"height", height},
            {"width", width},
            {"max_subjects", max_subjects},
            {"frames", frames},
            {"vocab_size", vocab_size},
            {"encoding_dim", encoding_dim},
            {"mlp_ratio", mlp_ratio},
            {"precondition", precondition},
            {"sigma_data", sigma_data}};
  return j.dump();
}

DiTConfig DiTConfig::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    DiTConfig c;
    c.hidden = j.at("hidden");
    c.heads = j.at("heads");
    c.layers = j.at("layers");
    const auto p = j.at("patch").get<std::vector<int>>();
    if (p.size() != 3) throw InvalidRecord("patch must have three entries");
    c.patch = {p[0], p[1], p[2]};
    c.channels = j.at("channels");
    c.control_channels = j.at("control_channels");
    c.height = j.at("height");
    c.width = j.at("width");
    c.max_subjects = j.at("max_subjects");
    c.frames = j.at("frames");
    c.vocab_size = j.at("vocab_size");
    c.encoding_dim = j.at("encoding_dim");
    c.mlp_ratio = j.at("mlp_ratio");
    c.precondition = j.value("precondition", false);
    c.sigma_data = j.value("sigma_data", c.sigma_data);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw InvalidRecord(std::string("model config: ") + e.what());
  }
}

template <class S>
DiTModel<S>::DiTModel(const DiTConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  if (config_.vocab_size == 0) config_.vocab_size = Vocabulary::standard().size();
  Rng rng = Rng(seed).substream("dit.init");
  const int d = config_.hidden;
  text_embed_.name = "text_embed";
  text_embed_.resize(config_.vocab_size, d);
  nn::init_normal(text_embed_, rng, 0.5);
  proj_subject_.init("proj.subject", config_.rgb_dim(), d, rng);
  proj_edit_.init("proj.edit", config_.rgb_dim(), d, rng);
  proj_depth_.init("proj.depth", config_.control_dim(), d, rng);
  proj_mask_.init("proj.mask", config_.control_dim(), d, rng);
  proj_camera_.init("proj.camera", 6, d, rng);
  proj_noise_.init("proj.noise", config_.rgb_dim(), d, rng);
  add_depth_.init("add.depth", config_.control_dim(), d, d, rng);
  add_mask_.init("add.mask", config_.control_dim(), d, d, rng);
  tables_.init(d, config_.encoding_dim, rng);
  blocks_.resize(static_cast<std::size_t>(config_.layers));
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    auto& b = blocks_[i];
    b.ln1.init(p + ".ln1", d);
    b.qkv.init(p + ".qkv", d, 3 * d, rng);
    b.proj.init(p + ".proj", d, d, rng);
    b.ln2.init(p + ".ln2", d);
    b.fc1.init(p + ".fc1", d, config_.mlp_ratio * d, rng);
    b.fc2.init(p + ".fc2", config_.mlp_ratio * d, d, rng);
    const S shrink = S(1.0 / std::sqrt(2.0 * config_.layers));
    b.proj.weight.value *= shrink;
    b.fc2.weight.value *= shrink;
  }
  final_ln_.init("final.ln", d);
  final_.init("final.linear", d, config_.rgb_dim(), rng);
  final_.weight.value *= S(0.1);
  build_position_tables();
}

template <class S>
void DiTModel<S>::build_position_tables() {
  const int d = config_.hidden;
  const int gw = config_.grid_w();
  grid_pe_.resize(config_.tokens_per_frame(), d);
  for (int k = 0; k < config_.tokens_per_frame(); ++k) {
    const auto row = nn::sinusoidal(k / gw, d / 2, 100.0);
    const auto col = nn::sinusoidal(k % gw, d / 2, 100.0);
    for (int i = 0; i < d / 2; ++i) {
      grid_pe_(k, i) = static_cast<S>(row[static_cast<std::size_t>(i)]);
      grid_pe_(k, d / 2 + i) = static_cast<S>(col[static_cast<std::size_t>(i)]);
    }
  }
}

template <class S>
void DiTModel<S>::collect(nn::ParamRefs<S>& out) {
  out.push_back(&text_embed_);
  for (auto* l : {&proj_subject_, &proj_edit_, &proj_depth_, &proj_mask_, &proj_camera_, &proj_noise_}) {
    l->collect(out);
  }
  add_depth_.collect(out);
  add_mask_.collect(out);
  tables_.collect(out);
  for (auto& b : blocks_) {
    b.ln1.collect(out);
    b.qkv.collect(out);
    b.proj.collect(out);
    b.ln2.collect(out);
    b.fc1.collect(out);
    b.fc2.collect(out);
  }
  final_ln_.collect(out);
  final_.collect(out);
}

template <class S>
nn::ParamRefs<S> DiTModel<S>::parameters() {
  nn::ParamRefs<S> out;
  collect(out);
  return out;
}

template <class S>
std::size_t DiTModel<S>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <class S>
void DiTModel<S>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <class S>
const nn::Linear<S>& DiTModel<S>::projection(SegmentKind kind, ControlKind control) const {
  return const_cast<DiTModel<S>*>(this)->projection(kind, control);
}

template <class S>
nn::Linear<S>& DiTModel<S>::projection(SegmentKind kind, ControlKind control) {
  switch (kind) {
    case SegmentKind::subject_image: return proj_subject_;
    case SegmentKind::edit_input_image: return proj_edit_;
    case SegmentKind::noise: return proj_noise_;
    case SegmentKind::struct_control:
      if (control == ControlKind::depth) return proj_depth_;
      if (control == ControlKind::mask) return proj_mask_;
      if (control == ControlKind::camera) return proj_camera_;
      break;
    case SegmentKind::text: break;
  }
  throw InvalidArgument("no projection for segment kind " + layout::to_string(kind));
}

template <class S>
const nn::Mlp<S>& DiTModel<S>::addend_mlp(ControlKind kind) const {
  return const_cast<DiTModel<S>*>(this)->addend_mlp(kind);
}

template <class S>
nn::Mlp<S>& DiTModel<S>::addend_mlp(ControlKind kind) {
  switch (kind) {
    case ControlKind::depth: return add_depth_;
    case ControlKind::mask: return add_mask_;
    case ControlKind::camera: return tables_.camera;
    case ControlKind::none: break;
  }
  throw InvalidArgument("noise addend needs a control kind");
}

namespace {

template <class S>
Mat<S> to_matrix(const std::vector<float>& data, int rows, int cols) {
  Mat<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const float v = data[static_cast<std::size_t>(i)];
    if (!std::isfinite(v)) throw NumericError("non-finite value in model input");
    m.data()[i] = static_cast<S>(v);
  }
  return m;
}

}  // namespace

template <class S>
Mat<S> DiTModel<S>::embed(const TokenPlan& plan, Cache& cache) const {
  const int d = config_.hidden;
  const auto total = static_cast<Eigen::Index>(plan.size());
  if (plan.noise_segment < 0) throw ShapeError("plan has no noise segment");
  Mat<S> x = Mat<S>::Zero(total, d);
  cache.segment_inputs.assign(plan.segments.size(), Mat<S>());
  Eigen::Index row = 0;
  for (std::size_t si = 0; si < plan.segments.size(); ++si) {
    const auto& s = plan.segments[si];
    const int n = s.token_count();
    if (s.kind == SegmentKind::text) {
      for (int k = 0; k < n; ++k) {
        const int id = s.text_ids[static_cast<std::size_t>(k)];
        if (id < 0 || id >= config_.vocab_size) throw ShapeError("text id outside vocabulary");
        const auto pe = nn::sinusoidal(k, d, 100.0);
        for (int i = 0; i < d; ++i) x(row + k, i) = text_embed_.value(id, i) + static_cast<S>(pe[static_cast<std::size_t>(i)]);
      }
    } else {
      const auto& lin = projection(s.kind, s.control);
      if (s.feature_dim != lin.in()) throw ShapeError(layout::to_string(s.kind) + " feature dim mismatch");
      if (s.tokens_per_frame != config_.tokens_per_frame()) throw ShapeError("segment grid differs from model grid");
      Mat<S> in = to_matrix<S>(s.features, n, s.feature_dim);
      x.middleRows(row, n) = lin.forward(in);
      for (int f = 0; f < s.frames; ++f) x.middleRows(row + f * s.tokens_per_frame, s.tokens_per_frame) += grid_pe_;
      cache.segment_inputs[si] = std::move(in);
    }
    row += n;
  }

  std::vector<int> positions(plan.size());
  for (std::size_t r = 0; r < plan.size(); ++r) positions[r] = plan.tokens[r].frame_position;
  cache.frame_enc = tables_.frame_encoding(positions);
  x += tables_.frame.forward(cache.frame_enc, cache.frame_mlp);

  const Mat<S> te = tables_.timestep.forward(tables_.timestep_encoding(plan.t), cache.time_mlp);
  for (std::size_t r = 0; r < plan.size(); ++r) {
    if (plan.tokens[r].receives_timestep) x.row(static_cast<Eigen::Index>(r)) += te.row(0);
  }

  const auto noise_n = plan.noise().token_count();
  const auto noise_begin = static_cast<Eigen::Index>(plan.noise_begin);
  cache.addend_mlp.assign(plan.addends.size(), {});
  for (std::size_t a = 0; a < plan.addends.size(); ++a) {
    const auto& add = plan.addends[a];
    const auto& mlp = addend_mlp(add.kind);
    if (add.feature_dim != mlp.fc1.in()) throw ShapeError("noise addend feature dim mismatch");
    x.middleRows(noise_begin, noise_n) +=
        mlp.forward(to_matrix<S>(add.features, noise_n, add.feature_dim), cache.addend_mlp[a]);
  }
  return x;
}

template <class S>
void DiTModel<S>::embed_backward(const TokenPlan& plan, const Cache& cache, const Mat<S>& dx, Mat<S>& d_noise) {
  const auto noise_n = plan.noise().token_count();
  const auto noise_begin = static_cast<Eigen::Index>(plan.noise_begin);
  for (std::size_t a = 0; a < plan.addends.size(); ++a) {
    addend_mlp(plan.addends[a].kind).backward(cache.addend_mlp[a], dx.middleRows(noise_begin, noise_n));
  }
  Mat<S> dte = Mat<S>::Zero(1, config_.hidden);
  for (std::size_t r = 0; r < plan.size(); ++r) {
    if (plan.tokens[r].receives_timestep) dte.row(0) += dx.row(static_cast<Eigen::Index>(r));
  }
  tables_.timestep.backward(cache.time_mlp, dte);
  tables_.frame.backward(cache.frame_mlp, dx);

  Eigen::Index row = 0;
  for (std::size_t si = 0; si < plan.segments.size(); ++si) {
    const auto& s = plan.segments[si];
    const int n = s.token_count();
    if (s.kind == SegmentKind::text) {
      for (int k = 0; k < n; ++k) text_embed_.grad.row(s.text_ids[static_cast<std::size_t>(k)]) += dx.row(row + k);
    } else {
      Mat<S> d_in = projection(s.kind, s.control).backward(cache.segment_inputs[si], dx.middleRows(row, n));
      if (s.kind == SegmentKind::noise) d_noise = std::move(d_in);
    }
    row += n;
  }
}

template <class S>
Mat<S> DiTModel<S>::block_forward(const Block& b, const Mat<S>& x, BlockCache& c) const {
  const int d = config_.hidden;
  const int dh = d / config_.heads;
  const S scale = S(1.0 / std::sqrt(static_cast<double>(dh)));
  c.x = x;
  c.h1 = b.ln1.forward(x, c.ln1);
  c.qkv = b.qkv.forward(c.h1);
  c.attn.resize(x.rows(), d);
  c.probs.resize(static_cast<std::size_t>(config_.heads));
  for (int h = 0; h < config_.heads; ++h) {
    const auto q = c.qkv.middleCols(h * dh, dh);
    const auto k = c.qkv.middleCols(d + h * dh, dh);
    const auto v = c.qkv.middleCols(2 * d + h * dh, dh);
    Mat<S>& p = c.probs[static_cast<std::size_t>(h)];
    p.noalias() = (q * k.transpose()) * scale;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      const S mx = p.row(r).maxCoeff();
      p.row(r) = (p.row(r).array() - mx).exp();
      p.row(r) /= p.row(r).sum();
    }
    c.attn.middleCols(h * dh, dh).noalias() = p * v;
  }
  c.x1 = x + b.proj.forward(c.attn);
  c.h2 = b.ln2.forward(c.x1, c.ln2);
  c.pre = b.fc1.forward(c.h2);
  c.act = nn::activate(nn::Activation::gelu, c.pre);
  return c.x1 + b.fc2.forward(c.act);
}

template <class S>
Mat<S> DiTModel<S>::block_backward(Block& b, const BlockCache& c, const Mat<S>& dy) {
  const int d = config_.hidden;
  const int dh = d / config_.heads;
  const S scale = S(1.0 / std::sqrt(static_cast<double>(dh)));
  const Mat<S> d_act = b.fc2.backward(c.act, dy);
  const Mat<S> d_pre = nn::activate_backward(nn::Activation::gelu, c.pre, d_act);
  const Mat<S> d_h2 = b.fc1.backward(c.h2, d_pre);
  const Mat<S> dx1 = dy + b.ln2.backward(c.ln2, d_h2);
  const Mat<S> d_attn = b.proj.backward(c.attn, dx1);
  Mat<S> d_qkv(c.qkv.rows(), 3 * d);
  for (int h = 0; h < config_.heads; ++h) {
    const auto q = c.qkv.middleCols(h * dh, dh);
    const auto k = c.qkv.middleCols(d + h * dh, dh);
    const auto v = c.qkv.middleCols(2 * d + h * dh, dh);
    const Mat<S>& p = c.probs[static_cast<std::size_t>(h)];
    const auto d_o = d_attn.middleCols(h * dh, dh);
    d_qkv.middleCols(2 * d + h * dh, dh).noalias() = p.transpose() * d_o;
    Mat<S> dp(p.rows(), p.cols());
    dp.noalias() = d_o * v.transpose();
    const Eigen::Matrix<S, Eigen::Dynamic, 1> rs = dp.cwiseProduct(p).rowwise().sum();
    Mat<S> ds = p.cwiseProduct((dp.colwise() - rs));
    ds *= scale;
    d_qkv.middleCols(h * dh, dh).noalias() = ds * k;
    d_qkv.middleCols(d + h * dh, dh).noalias() = ds.transpose() * q;
  }
  const Mat<S> d_h1 = b.qkv.backward(c.h1, d_qkv);
  return dx1 + b.ln1.backward(c.ln1, d_h1);
}

template <class S>
Mat<S> DiTModel<S>::forward(const TokenPlan& plan) const {
  Cache cache;
  return forward(plan, cache);
}

template <class S>
Mat<S> DiTModel<S>::forward(const TokenPlan& plan, Cache& cache) const {
  Mat<S> x = embed(plan, cache);
  cache.blocks.resize(blocks_.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) x = block_forward(blocks_[i], x, cache.blocks[i]);
  const auto noise_n = plan.noise().token_count();
  cache.final_in = x.middleRows(static_cast<Eigen::Index>(plan.noise_begin), noise_n);
  cache.final_h = final_ln_.forward(cache.final_in, cache.final_ln);
  Mat<S> out = final_.forward(cache.final_h);
  if (config_.precondition) {
    const auto [c_skip, c_out] = config_.precondition_coefficients(plan.t);
    out = static_cast<S>(c_out) * out + static_cast<S>(c_skip) * to_matrix<S>(plan.noise().features, noise_n, out.cols());
  }
  if (!out.allFinite()) throw NumericError("non-finite model output");
  return out;
}

template <class S>
Mat<S> DiTModel<S>::backward(const TokenPlan& plan, const Cache& cache, const Mat<S>& d_out) {
  const auto [c_skip, c_out] =
      config_.precondition ? config_.precondition_coefficients(plan.t) : std::pair<double, double>{0.0, 1.0};
  const Mat<S> d_h = final_.backward(cache.final_h, static_cast<S>(c_out) * d_out);
  Mat<S> dx = Mat<S>::Zero(static_cast<Eigen::Index>(plan.size()), config_.hidden);
  dx.middleRows(static_cast<Eigen::Index>(plan.noise_begin), d_out.rows()) = final_ln_.backward(cache.final_ln, d_h);
  for (std::size_t i = blocks_.size(); i-- > 0;) dx = block_backward(blocks_[i], cache.blocks[i], dx);
  Mat<S> d_noise;
  embed_backward(plan, cache, dx, d_noise);
  if (config_.precondition) d_noise += static_cast<S>(c_skip) * d_out;
  return d_noise;
}

template <class S>
Video denoise(const DiTModel<S>& model, const TokenPlan& plan) {
  const Mat<S> out = model.forward(plan);
  const auto& cfg = model.config();
  std::vector<float> tokens(static_cast<std::size_t>(out.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) tokens[static_cast<std::size_t>(i)] = static_cast<float>(out.data()[i]);
  return unpatchify(tokens, plan.N * cfg.patch.pt, cfg.height, cfg.width, cfg.channels, cfg.patch);
}

template class DiTModel<float>;
template class DiTModel<double>;
template Video denoise<float>(const DiTModel<float>&, const TokenPlan&);
template Video denoise<double>(const DiTModel<double>&, const TokenPlan&);

namespace {

constexpr char kMagic[8] = {'V', 'I', 'D', 'C', 'U', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::vector<char>& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw InvalidRecord("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

void put_f32(std::vector<char>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

}  // namespace

std::vector<char> serialize_checkpoint(DiTModel<float>& model, const std::string& metadata) {
  std::vector<char> out(kMagic, kMagic + 8);
  put_u32(out, kVersion);
  json header = json::parse(model.config().to_json());
  if (!metadata.empty()) header["meta"] = json::parse(metadata);
  const std::string cfg = header.dump();
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.insert(out.end(), cfg.begin(), cfg.end());
  const auto params = model.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.insert(out.end(), p->name.begin(), p->name.end());
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) put_f32(out, p->value.data()[i]);
  }
  return out;
}

DiTModel<float> deserialize_checkpoint(const std::vector<char>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw InvalidRecord("not a vidcus checkpoint");
  std::size_t pos = 8;
  if (get_u32(bytes, pos) != kVersion) throw InvalidRecord("unsupported checkpoint version");
  const std::uint32_t cfg_len = get_u32(bytes, pos);
  if (pos + cfg_len > bytes.size()) throw InvalidRecord("checkpoint truncated");
  const DiTConfig cfg = DiTConfig::from_json(std::string(bytes.data() + pos, cfg_len));
  pos += cfg_len;
  DiTModel<float> model(cfg, 0);
  auto params = model.parameters();
  if (get_u32(bytes, pos) != params.size()) throw InvalidRecord("checkpoint parameter count mismatch");
  for (auto* p : params) {
    const std::uint32_t name_len = get_u32(bytes, pos);
    if (pos + name_len > bytes.size()) throw InvalidRecord("checkpoint truncated");
    const std::string name(bytes.data() + pos, name_len);
    pos += name_len;
    if (name != p->name) throw InvalidRecord("checkpoint expected '" + p->name + "' but found '" + name + "'");
    const std::uint32_t rows = get_u32(bytes, pos);
    const std::uint32_t cols = get_u32(bytes, pos);
    if (rows != p->value.rows() || cols != p->value.cols()) throw InvalidRecord("checkpoint shape mismatch for " + name);
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const std::uint32_t bits = get_u32(bytes, pos);
      float f;
      std::memcpy(&f, &bits, 4);
      p->value.data()[i] = f;
    }
  }
  if (pos != bytes.size()) throw InvalidRecord("trailing bytes in checkpoint");
  return model;
}

std::string checkpoint_metadata(const std::vector<char>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw InvalidRecord("not a vidcus checkpoint");
  std::size_t pos = 12;
  const std::uint32_t cfg_len = get_u32(bytes, pos);
  if (pos + cfg_len > bytes.size()) throw InvalidRecord("checkpoint truncated");
  try {
    const json header = json::parse(std::string(bytes.data() + pos, cfg_len));
    return header.contains("meta") ? header["meta"].dump() : std::string();
  } catch (const json::exception& e) {
    throw InvalidRecord(std::string("checkpoint header: ") + e.what());
  }
}

std::vector<char> read_checkpoint_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void save_checkpoint(const std::filesystem::path& path, DiTModel<float>& model, const std::string& metadata) {
  const auto bytes = serialize_checkpoint(model, metadata);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

DiTModel<float> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_checkpoint_bytes(path));
}

}  // namespace vidcus::dit
