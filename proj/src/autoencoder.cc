// src/autoencoder.cc

// Copyright 2026 The vsrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "vsr/autoencoder.h"

#include <cmath>
#include <numeric>
#include <random>

#include "vsr/binary_io.h"
#include "vsr/error.h"
#include "vsr/util.h"

namespace vsr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

// Activations are stored as (channels) x (batch * height * width) for spatial
// tensors and (features) x (batch) for flat ones; column index of a spatial
// element is b * H * W + y * W + x.
struct Layer {
  virtual ~Layer() = default;
  virtual std::unique_ptr<Layer> Clone() const = 0;
  virtual void Forward(const MatrixXd &in, MatrixXd &out) const = 0;
  // Writes parameter gradients (not accumulated across calls) and, when din
  // is non-null, the gradient with respect to the input.
  virtual void Backward(const MatrixXd &in, const MatrixXd &out, const MatrixXd &dout,
                        MatrixXd *din) = 0;
  virtual void Init(std::mt19937_64 &) {}
  virtual std::vector<ConvAutoencoder::ParamView> Params() { return {}; }
};

namespace {

std::span<double> View(MatrixXd &m) { return {m.data(), static_cast<size_t>(m.size())}; }
std::span<double> View(VectorXd &v) { return {v.data(), static_cast<size_t>(v.size())}; }

void HeInit(MatrixXd &w, double fan_in, double gain, std::mt19937_64 &rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in));
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
}

class Conv3x3 : public Layer {
 public:
  Conv3x3(std::string name, int cin, int cout, int stride, int hin, int win, double gain)
      : name_(std::move(name)), cin_(cin), cout_(cout), stride_(stride), hin_(hin), win_(win),
        hout_((hin + 2 - 3) / stride + 1), wout_((win + 2 - 3) / stride + 1), gain_(gain),
        w_(MatrixXd::Zero(cout, cin * 9)), b_(VectorXd::Zero(cout)),
        dw_(MatrixXd::Zero(cout, cin * 9)), db_(VectorXd::Zero(cout)) {}

  std::unique_ptr<Layer> Clone() const override { return std::make_unique<Conv3x3>(*this); }

  void Init(std::mt19937_64 &rng) override {
    HeInit(w_, cin_ * 9.0, gain_, rng);
    b_.setZero();
  }

  void Forward(const MatrixXd &in, MatrixXd &out) const override {
    const MatrixXd cols = Im2Col(in);
    out.noalias() = w_ * cols;
    out.colwise() += b_;
  }

  void Backward(const MatrixXd &in, const MatrixXd &, const MatrixXd &dout,
                MatrixXd *din) override {
    const MatrixXd cols = Im2Col(in);
    dw_.noalias() = dout * cols.transpose();
    db_ = dout.rowwise().sum();
    if (din) {
      const MatrixXd dcols = w_.transpose() * dout;
      Col2Im(dcols, *din, in.cols() / (hin_ * win_));
    }
  }

  std::vector<ConvAutoencoder::ParamView> Params() override {
    return {{name_ + ".weight", View(w_), View(dw_)}, {name_ + ".bias", View(b_), View(db_)}};
  }

 private:
  MatrixXd Im2Col(const MatrixXd &in) const {
    const Eigen::Index batch = in.cols() / (hin_ * win_);
    const Eigen::Index out_hw = static_cast<Eigen::Index>(hout_) * wout_;
    MatrixXd cols = MatrixXd::Zero(cin_ * 9, batch * out_hw);
    for (Eigen::Index b = 0; b < batch; ++b)
      for (int oy = 0; oy < hout_; ++oy)
        for (int ox = 0; ox < wout_; ++ox) {
          const Eigen::Index col = b * out_hw + oy * wout_ + ox;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * stride_ + ky - 1;
            if (iy < 0 || iy >= hin_) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * stride_ + kx - 1;
              if (ix < 0 || ix >= win_) continue;
              const Eigen::Index src = b * hin_ * win_ + iy * win_ + ix;
              for (int ci = 0; ci < cin_; ++ci) cols(ci * 9 + ky * 3 + kx, col) = in(ci, src);
            }
          }
        }
    return cols;
  }

  void Col2Im(const MatrixXd &dcols, MatrixXd &din, Eigen::Index batch) const {
    const Eigen::Index out_hw = static_cast<Eigen::Index>(hout_) * wout_;
    din = MatrixXd::Zero(cin_, batch * hin_ * win_);
    for (Eigen::Index b = 0; b < batch; ++b)
      for (int oy = 0; oy < hout_; ++oy)
        for (int ox = 0; ox < wout_; ++ox) {
          const Eigen::Index col = b * out_hw + oy * wout_ + ox;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * stride_ + ky - 1;
            if (iy < 0 || iy >= hin_) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * stride_ + kx - 1;
              if (ix < 0 || ix >= win_) continue;
              const Eigen::Index dst = b * hin_ * win_ + iy * win_ + ix;
              for (int ci = 0; ci < cin_; ++ci) din(ci, dst) += dcols(ci * 9 + ky * 3 + kx, col);
            }
          }
        }
  }

  std::string name_;
  int cin_, cout_, stride_, hin_, win_, hout_, wout_;
  double gain_;
  MatrixXd w_;
  VectorXd b_;
  MatrixXd dw_;
  VectorXd db_;
};

class Dense : public Layer {
 public:
  Dense(std::string name, int in, int out, double gain)
      : name_(std::move(name)), in_(in), gain_(gain), w_(MatrixXd::Zero(out, in)),
        b_(VectorXd::Zero(out)), dw_(MatrixXd::Zero(out, in)), db_(VectorXd::Zero(out)) {}

  std::unique_ptr<Layer> Clone() const override { return std::make_unique<Dense>(*this); }

  void Init(std::mt19937_64 &rng) override {
    HeInit(w_, in_, gain_, rng);
    b_.setZero();
  }

  void Forward(const MatrixXd &in, MatrixXd &out) const override {
    out.noalias() = w_ * in;
    out.colwise() += b_;
  }

  void Backward(const MatrixXd &in, const MatrixXd &, const MatrixXd &dout,
                MatrixXd *din) override {
    dw_.noalias() = dout * in.transpose();
    db_ = dout.rowwise().sum();
    if (din) *din = w_.transpose() * dout;
  }

  std::vector<ConvAutoencoder::ParamView> Params() override {
    return {{name_ + ".weight", View(w_), View(dw_)}, {name_ + ".bias", View(b_), View(db_)}};
  }

 private:
  std::string name_;
  int in_;
  double gain_;
  MatrixXd w_;
  VectorXd b_;
  MatrixXd dw_;
  VectorXd db_;
};

class Relu : public Layer {
 public:
  std::unique_ptr<Layer> Clone() const override { return std::make_unique<Relu>(*this); }
  void Forward(const MatrixXd &in, MatrixXd &out) const override { out = in.cwiseMax(0.0); }
  void Backward(const MatrixXd &, const MatrixXd &out, const MatrixXd &dout,
                MatrixXd *din) override {
    if (din) *din = (out.array() > 0.0).select(dout, 0.0);
  }
};

class Sigmoid : public Layer {
 public:
  std::unique_ptr<Layer> Clone() const override { return std::make_unique<Sigmoid>(*this); }
  void Forward(const MatrixXd &in, MatrixXd &out) const override {
    out = (1.0 + (-in.array()).exp()).inverse().matrix();
  }
  void Backward(const MatrixXd &, const MatrixXd &out, const MatrixXd &dout,
                MatrixXd *din) override {
    if (din) *din = (dout.array() * out.array() * (1.0 - out.array())).matrix();
  }
};

// (C) x (B*H*W)  <->  (C*H*W) x (B)
class Flatten : public Layer {
 public:
  Flatten(int c, int hw, bool inverse) : c_(c), hw_(hw), inverse_(inverse) {}
  std::unique_ptr<Layer> Clone() const override { return std::make_unique<Flatten>(*this); }
  void Forward(const MatrixXd &in, MatrixXd &out) const override {
    inverse_ ? Unflat(in, out) : Flat(in, out);
  }
  void Backward(const MatrixXd &, const MatrixXd &, const MatrixXd &dout,
                MatrixXd *din) override {
    if (din) inverse_ ? Flat(dout, *din) : Unflat(dout, *din);
  }

 private:
  void Flat(const MatrixXd &in, MatrixXd &out) const {
    const Eigen::Index batch = in.cols() / hw_;
    out.resize(static_cast<Eigen::Index>(c_) * hw_, batch);
    for (Eigen::Index b = 0; b < batch; ++b)
      for (int c = 0; c < c_; ++c)
        for (int p = 0; p < hw_; ++p) out(c * hw_ + p, b) = in(c, b * hw_ + p);
  }
  void Unflat(const MatrixXd &in, MatrixXd &out) const {
    const Eigen::Index batch = in.cols();
    out.resize(c_, batch * hw_);
    for (Eigen::Index b = 0; b < batch; ++b)
      for (int c = 0; c < c_; ++c)
        for (int p = 0; p < hw_; ++p) out(c, b * hw_ + p) = in(c * hw_ + p, b);
  }

  int c_, hw_;
  bool inverse_;
};

class Upsample2x : public Layer {
 public:
  Upsample2x(int h, int w) : h_(h), w_(w) {}
  std::unique_ptr<Layer> Clone() const override { return std::make_unique<Upsample2x>(*this); }
  void Forward(const MatrixXd &in, MatrixXd &out) const override {
    const Eigen::Index batch = in.cols() / (h_ * w_);
    const int h2 = 2 * h_, w2 = 2 * w_;
    out.resize(in.rows(), batch * h2 * w2);
    for (Eigen::Index b = 0; b < batch; ++b)
      for (int y = 0; y < h2; ++y)
        for (int x = 0; x < w2; ++x)
          out.col(b * h2 * w2 + y * w2 + x) = in.col(b * h_ * w_ + (y / 2) * w_ + x / 2);
  }
  void Backward(const MatrixXd &in, const MatrixXd &, const MatrixXd &dout,
                MatrixXd *din) override {
    if (!din) return;
    const Eigen::Index batch = in.cols() / (h_ * w_);
    const int h2 = 2 * h_, w2 = 2 * w_;
    *din = MatrixXd::Zero(in.rows(), in.cols());
    for (Eigen::Index b = 0; b < batch; ++b)
      for (int y = 0; y < h2; ++y)
        for (int x = 0; x < w2; ++x)
          din->col(b * h_ * w_ + (y / 2) * w_ + x / 2) += dout.col(b * h2 * w2 + y * w2 + x);
  }

 private:
  int h_, w_;
};

}  // namespace
}  // namespace detail

namespace {
constexpr int kInH = MouthFrame::kHeight;
constexpr int kInW = MouthFrame::kWidth;
}  // namespace

ConvAutoencoder::ConvAutoencoder(const AutoencoderArch &arch) : arch_(arch) {
  for (int c : arch_.channels)
    if (c < 1) throw ConfigError("autoencoder channel widths must be positive");
  if (arch_.bottleneck < 1) throw ConfigError("autoencoder bottleneck must be positive");
  Build();
}

ConvAutoencoder::~ConvAutoencoder() = default;
ConvAutoencoder::ConvAutoencoder(ConvAutoencoder &&) noexcept = default;
ConvAutoencoder &ConvAutoencoder::operator=(ConvAutoencoder &&) noexcept = default;

ConvAutoencoder::ConvAutoencoder(const ConvAutoencoder &other)
    : arch_(other.arch_), seed_(other.seed_), encoder_layers_(other.encoder_layers_) {
  for (const auto &l : other.layers_) layers_.push_back(l->Clone());
}

ConvAutoencoder &ConvAutoencoder::operator=(const ConvAutoencoder &other) {
  if (this != &other) {
    ConvAutoencoder tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void ConvAutoencoder::Build() {
  using namespace detail;
  const auto [c1, c2, c3] = arch_.channels;
  const int d = arch_.bottleneck;
  layers_.clear();
  layers_.push_back(std::make_unique<Conv3x3>("enc1", 1, c1, 2, kInH, kInW, 2.0));
  layers_.push_back(std::make_unique<Relu>());
  layers_.push_back(std::make_unique<Conv3x3>("enc2", c1, c2, 2, kInH / 2, kInW / 2, 2.0));
  layers_.push_back(std::make_unique<Relu>());
  layers_.push_back(std::make_unique<Conv3x3>("enc3", c2, c3, 2, kInH / 4, kInW / 4, 2.0));
  layers_.push_back(std::make_unique<Relu>());
  const int hw = (kInH / 8) * (kInW / 8);
  layers_.push_back(std::make_unique<Flatten>(c3, hw, false));
  layers_.push_back(std::make_unique<Dense>("bottleneck", c3 * hw, d, 1.0));
  encoder_layers_ = layers_.size();
  layers_.push_back(std::make_unique<Dense>("dec_dense", d, c3 * hw, 2.0));
  layers_.push_back(std::make_unique<Relu>());
  layers_.push_back(std::make_unique<Flatten>(c3, hw, true));
  layers_.push_back(std::make_unique<Upsample2x>(kInH / 8, kInW / 8));
  layers_.push_back(std::make_unique<Conv3x3>("dec1", c3, c2, 1, kInH / 4, kInW / 4, 2.0));
  layers_.push_back(std::make_unique<Relu>());
  layers_.push_back(std::make_unique<Upsample2x>(kInH / 4, kInW / 4));
  layers_.push_back(std::make_unique<Conv3x3>("dec2", c2, c1, 1, kInH / 2, kInW / 2, 2.0));
  layers_.push_back(std::make_unique<Relu>());
  layers_.push_back(std::make_unique<Upsample2x>(kInH / 2, kInW / 2));
  layers_.push_back(std::make_unique<Conv3x3>("dec3", c1, 1, 1, kInH, kInW, 1.0));
  layers_.push_back(std::make_unique<Sigmoid>());
}

void ConvAutoencoder::InitializeWeights(uint64_t seed) {
  seed_ = seed;
  std::mt19937_64 rng(seed);
  for (auto &l : layers_) l->Init(rng);
}

MatrixXd ConvAutoencoder::Run(size_t begin, size_t end, const MatrixXd &input,
                              std::vector<MatrixXd> *trace) const {
  MatrixXd cur = input, next;
  if (trace) trace->push_back(cur);
  for (size_t i = begin; i < end; ++i) {
    layers_[i]->Forward(cur, next);
    std::swap(cur, next);
    if (trace) trace->push_back(cur);
  }
  return cur;
}

namespace {

// 512 x B (one image per column) <-> 1 x (B * 512) spatial layout.
MatrixXd ToSpatial(const MatrixXd &images) {
  if (images.rows() != MouthFrame::kSize) throw ShapeError("expected 512-row image batch");
  return Eigen::Map<const MatrixXd>(images.data(), 1, images.size());
}

MatrixXd FromSpatial(const MatrixXd &spatial) {
  return Eigen::Map<const MatrixXd>(spatial.data(), MouthFrame::kSize,
                                    spatial.size() / MouthFrame::kSize);
}

}  // namespace

MatrixXd ConvAutoencoder::Encode(const MatrixXd &images) const {
  return Run(0, encoder_layers_, ToSpatial(images), nullptr);
}

MatrixXd ConvAutoencoder::Decode(const MatrixXd &codes) const {
  if (codes.rows() != arch_.bottleneck) throw ShapeError("code dimension mismatch");
  return FromSpatial(Run(encoder_layers_, layers_.size(), codes, nullptr));
}

MatrixXd ConvAutoencoder::Reconstruct(const MatrixXd &images) const {
  return FromSpatial(Run(0, layers_.size(), ToSpatial(images), nullptr));
}

double ConvAutoencoder::Loss(const MatrixXd &images) const {
  return (Reconstruct(images) - images).squaredNorm() / static_cast<double>(images.size());
}

double ConvAutoencoder::LossAndGradient(const MatrixXd &images) {
  std::vector<MatrixXd> trace;
  trace.reserve(layers_.size() + 1);
  Run(0, layers_.size(), ToSpatial(images), &trace);
  const MatrixXd target = ToSpatial(images);
  const double n = static_cast<double>(images.size());
  const MatrixXd diff = trace.back() - target;
  const double loss = diff.squaredNorm() / n;
  MatrixXd grad = (2.0 / n) * diff, next;
  for (size_t i = layers_.size(); i-- > 0;) {
    layers_[i]->Backward(trace[i], trace[i + 1], grad, i > 0 ? &next : nullptr);
    if (i > 0) std::swap(grad, next);
  }
  return loss;
}

std::vector<ConvAutoencoder::ParamView> ConvAutoencoder::Parameters() {
  std::vector<ParamView> out;
  for (auto &l : layers_)
    for (auto &p : l->Params()) out.push_back(p);
  return out;
}

size_t ConvAutoencoder::NumParameters() const {
  size_t n = 0;
  for (auto &p : const_cast<ConvAutoencoder *>(this)->Parameters()) n += p.value.size();
  return n;
}

void ConvAutoencoder::RoundToFloat() {
  for (auto &p : Parameters())
    for (double &v : p.value) v = static_cast<double>(static_cast<float>(v));
}

void ConvAutoencoder::Save(const std::filesystem::path &path) const {
  BinaryWriter w(path);
  w.WriteMagic("CAE1");
  w.WriteU32(static_cast<uint32_t>(arch_.channels.size()));
  for (int c : arch_.channels) w.WriteU32(static_cast<uint32_t>(c));
  w.WriteU32(static_cast<uint32_t>(arch_.bottleneck));
  w.WriteU64(seed_);
  // Parameters() exposes column-major storage; write weights row-major.
  auto &self = const_cast<ConvAutoencoder &>(*this);
  for (auto &l : self.layers_) {
    auto params = l->Params();
    for (auto &p : params) {
      if (p.name.ends_with(".weight")) {
        // Rows = output units; the bias that follows has one entry per row.
        const size_t rows = params[1].value.size();
        const size_t cols = p.value.size() / rows;
        for (size_t r = 0; r < rows; ++r)
          for (size_t c = 0; c < cols; ++c) w.WriteF32(static_cast<float>(p.value[c * rows + r]));
      } else {
        for (double v : p.value) w.WriteF32(static_cast<float>(v));
      }
    }
  }
  w.Close();
}

ConvAutoencoder ConvAutoencoder::Load(const std::filesystem::path &path) {
  BinaryReader r(path);
  r.ExpectMagic("CAE1");
  const uint32_t stages = r.ReadU32();
  if (stages != 3) throw IoError(path.string() + ": unsupported stage count " + std::to_string(stages));
  AutoencoderArch arch;
  for (auto &c : arch.channels) c = static_cast<int>(r.ReadU32());
  arch.bottleneck = static_cast<int>(r.ReadU32());
  ConvAutoencoder model(arch);
  model.seed_ = r.ReadU64();
  for (auto &l : model.layers_) {
    auto params = l->Params();
    for (auto &p : params) {
      if (p.name.ends_with(".weight")) {
        const size_t rows = params[1].value.size();
        const size_t cols = p.value.size() / rows;
        for (size_t row = 0; row < rows; ++row)
          for (size_t c = 0; c < cols; ++c) p.value[c * rows + row] = r.ReadF32();
      } else {
        for (double &v : p.value) v = r.ReadF32();
      }
    }
  }
  return model;
}

MatrixXd FramesToBatch(std::span<const MouthFrame> frames) {
  MatrixXd batch(MouthFrame::kSize, static_cast<Eigen::Index>(frames.size()));
  for (size_t i = 0; i < frames.size(); ++i)
    for (int k = 0; k < MouthFrame::kSize; ++k)
      batch(k, static_cast<Eigen::Index>(i)) = frames[i].pixels[k];
  return batch;
}

std::pair<ConvAutoencoder, TrainReport> TrainAutoencoder(std::span<const MouthFrame> frames,
                                                         const AutoencoderOptions &options) {
  if (frames.empty()) throw InsufficientDataError("autoencoder training set is empty");
  if (options.epochs < 1 || options.batch_size < 1 || !(options.learning_rate > 0.0))
    throw ConfigError("autoencoder hyperparameters must be positive");
  ConvAutoencoder model(options.arch);
  model.InitializeWeights(options.seed);
  auto params = model.Parameters();
  std::vector<std::vector<double>> velocity;
  for (auto &p : params) velocity.emplace_back(p.value.size(), 0.0);

  const MatrixXd all = FramesToBatch(frames);
  std::vector<Eigen::Index> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainReport report;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double weighted = 0.0;
    for (size_t start = 0; start < order.size(); start += options.batch_size) {
      const size_t end = std::min(order.size(), start + options.batch_size);
      MatrixXd batch(MouthFrame::kSize, static_cast<Eigen::Index>(end - start));
      for (size_t i = start; i < end; ++i) batch.col(i - start) = all.col(order[i]);
      const double loss = model.LossAndGradient(batch);
      if (!std::isfinite(loss))
        throw TrainingDivergedError("autoencoder training diverged in epoch " +
                                    std::to_string(epoch + 1));
      weighted += loss * static_cast<double>(end - start);
      for (size_t k = 0; k < params.size(); ++k) {
        auto &v = velocity[k];
        auto value = params[k].value;
        auto grad = params[k].grad;
        for (size_t j = 0; j < v.size(); ++j) {
          v[j] = options.momentum * v[j] - options.learning_rate * grad[j];
          value[j] += v[j];
        }
      }
    }
    const double epoch_loss = weighted / static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw TrainingDivergedError("autoencoder training diverged in epoch " +
                                  std::to_string(epoch + 1));
    report.epoch_losses.push_back(epoch_loss);
    LogInfo("autoencoder epoch " + std::to_string(epoch + 1) + " loss " +
            std::to_string(epoch_loss));
  }
  report.epochs = options.epochs;
  model.RoundToFloat();
  return {std::move(model), std::move(report)};
}

Eigen::VectorXd Encode(const ConvAutoencoder &model, const MouthFrame &frame) {
  MouthFrame copy = frame;
  return model.Encode(FramesToBatch(std::span<const MouthFrame>(&copy, 1))).col(0);
}

}  // namespace vsr
