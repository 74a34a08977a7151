#include "roughcount/toy/encoder.hpp"

#include <cmath>
#include <string>

#include "roughcount/error.hpp"
#include "roughcount/rng.hpp"

namespace roughcount::toy {
namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void check_shape(const EncoderShape& s) {
  if (s.input_dim == 0 || s.output_dim == 0 || (s.kind == EncoderKind::kMlp && s.hidden_dim == 0)) {
    throw Error(ErrorCode::kInvalidArgument, "encoder dimensions must be >= 1");
  }
}

}  // namespace

std::string_view to_string(EncoderKind kind) {
  return kind == EncoderKind::kAffine ? "affine" : "mlp";
}

std::size_t ToyImageEncoder::param_count(const EncoderShape& s) {
  if (s.kind == EncoderKind::kAffine) return s.output_dim * s.input_dim + s.output_dim;
  return s.hidden_dim * s.input_dim + s.hidden_dim + s.output_dim * s.hidden_dim + s.output_dim;
}

ToyImageEncoder::ToyImageEncoder(EncoderShape shape, std::vector<double> params, std::uint64_t seed)
    : shape_(shape), params_(std::move(params)), seed_(seed) {
  check_shape(shape_);
  if (params_.size() != param_count(shape_)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "encoder expects " + std::to_string(param_count(shape_)) + " parameters, got " +
                    std::to_string(params_.size()));
  }
}

ToyImageEncoder ToyImageEncoder::initialize(const EncoderShape& shape, std::uint64_t seed,
                                            double first_layer_gain) {
  check_shape(shape);
  SplitMix64 rng(derive_seed(seed, {0xE1C0DE}));
  std::vector<double> p(param_count(shape), 0.0);
  const double in_std = first_layer_gain / std::sqrt(static_cast<double>(shape.input_dim));
  std::size_t at = 0;
  if (shape.kind == EncoderKind::kAffine) {
    for (std::size_t i = 0; i < shape.output_dim * shape.input_dim; ++i) p[at++] = rng.normal() * in_std;
  } else {
    for (std::size_t i = 0; i < shape.hidden_dim * shape.input_dim; ++i) p[at++] = rng.normal() * in_std;
    for (std::size_t i = 0; i < shape.hidden_dim; ++i) p[at++] = rng.normal();
    const double out_std = 1.0 / std::sqrt(static_cast<double>(shape.hidden_dim));
    for (std::size_t i = 0; i < shape.output_dim * shape.hidden_dim; ++i) p[at++] = rng.normal() * out_std;
  }
  return ToyImageEncoder(shape, std::move(p), seed);
}

RowMatrix ToyImageEncoder::forward_batch(const RowMatrix& inputs, Activations* acts) const {
  if (static_cast<std::size_t>(inputs.cols()) != shape_.input_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "encoder input dim " +
                                                   std::to_string(shape_.input_dim) + " vs " +
                                                   std::to_string(inputs.cols()));
  }
  const auto in = idx(shape_.input_dim);
  const auto out = idx(shape_.output_dim);
  const double guard = kOutputGuard / std::sqrt(static_cast<double>(shape_.output_dim));
  RowMatrix y;
  if (shape_.kind == EncoderKind::kAffine) {
    ConstMap w(params_.data(), out, in);
    ConstVecMap b(params_.data() + out * in, out);
    y = inputs * w.transpose();
    y.rowwise() += b;
    if (acts != nullptr) acts->inputs = inputs;
  } else {
    const auto hid = idx(shape_.hidden_dim);
    const double* p = params_.data();
    ConstMap w1(p, hid, in);
    ConstVecMap b1(p + hid * in, hid);
    ConstMap w2(p + hid * in + hid, out, hid);
    ConstVecMap b2(p + hid * in + hid + out * hid, out);
    RowMatrix h = inputs * w1.transpose();
    h.rowwise() += b1;
    h = h.array().tanh().matrix();
    y = h * w2.transpose();
    y.rowwise() += b2;
    if (acts != nullptr) {
      acts->inputs = inputs;
      acts->hidden = std::move(h);
    }
  }
  y.array() += guard;
  return y;
}

Embedding ToyImageEncoder::forward(std::span<const double> features) const {
  RowMatrix x(1, idx(features.size()));
  for (std::size_t k = 0; k < features.size(); ++k) x(0, idx(k)) = features[k];
  const RowMatrix y = forward_batch(x);
  return Embedding(std::span<const double>(y.data(), static_cast<std::size_t>(y.cols())));
}

std::vector<double> ToyImageEncoder::backward(const Activations& acts,
                                              const RowMatrix& grad_outputs) const {
  std::vector<double> grad(params_.size(), 0.0);
  const auto in = idx(shape_.input_dim);
  const auto out = idx(shape_.output_dim);
  if (shape_.kind == EncoderKind::kAffine) {
    Map gw(grad.data(), out, in);
    VecMap gb(grad.data() + out * in, out);
    gw = grad_outputs.transpose() * acts.inputs;
    gb = grad_outputs.colwise().sum();
    return grad;
  }
  const auto hid = idx(shape_.hidden_dim);
  const double* p = params_.data();
  ConstMap w2(p + hid * in + hid, out, hid);
  double* g = grad.data();
  Map gw1(g, hid, in);
  VecMap gb1(g + hid * in, hid);
  Map gw2(g + hid * in + hid, out, hid);
  VecMap gb2(g + hid * in + hid + out * hid, out);

  gw2 = grad_outputs.transpose() * acts.hidden;
  gb2 = grad_outputs.colwise().sum();
  const RowMatrix grad_hidden = grad_outputs * w2;
  const RowMatrix grad_pre =
      (grad_hidden.array() * (1.0 - acts.hidden.array().square())).matrix();
  gw1 = grad_pre.transpose() * acts.inputs;
  gb1 = grad_pre.colwise().sum();
  return grad;
}

}  // namespace roughcount::toy
