#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "roughcount/contrastive_loss.hpp"
#include "roughcount/embedding.hpp"

namespace roughcount::toy {

enum class EncoderKind { kAffine = 1, kMlp = 2 };
enum class Activation { kTanh = 1 };

std::string_view to_string(EncoderKind kind);

struct EncoderShape {
  EncoderKind kind = EncoderKind::kMlp;
  std::size_t input_dim = 128;
  std::size_t hidden_dim = 256;  // ignored for affine encoders
  std::size_t output_dim = 64;
  Activation activation = Activation::kTanh;

  friend bool operator==(const EncoderShape&, const EncoderShape&) = default;
};

/// Size of the constant offset added to every output, along the all-ones
/// direction, so an all-zero network still yields a normalizable embedding.
inline constexpr double kOutputGuard = 1e-6;

/// Small trainable image encoder: affine map or one-hidden-layer tanh MLP.
///
/// Parameters live in one flat vector so optimizers, gradient checks and
/// checkpoints all see the same layout:
///   affine: W [out x in], b [out]
///   mlp:    W1 [hidden x in], b1 [hidden], W2 [out x hidden], b2 [out]
class ToyImageEncoder {
 public:
  ToyImageEncoder(EncoderShape shape, std::vector<double> params, std::uint64_t seed = 0);

  /// Gaussian init: first-layer weights N(0, (gain^2)/in), biases N(0, 1) for
  /// the hidden layer, zero output bias.
  static ToyImageEncoder initialize(const EncoderShape& shape, std::uint64_t seed,
                                    double first_layer_gain = 1.0);

  static std::size_t param_count(const EncoderShape& shape);

  const EncoderShape& shape() const noexcept { return shape_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> mutable_params() noexcept { return params_; }

  Embedding forward(std::span<const double> features) const;

  struct Activations {
    RowMatrix inputs;
    RowMatrix hidden;  // post-activation; empty for affine
  };

  /// Rows of `inputs` are samples. Fills `acts` when non-null for backward().
  RowMatrix forward_batch(const RowMatrix& inputs, Activations* acts = nullptr) const;

  /// Gradient of a scalar loss with respect to the flat parameters, given its
  /// gradient with respect to the batch outputs.
  std::vector<double> backward(const Activations& acts, const RowMatrix& grad_outputs) const;

 private:
  EncoderShape shape_;
  std::vector<double> params_;
  std::uint64_t seed_ = 0;
};

}  // namespace roughcount::toy
