#pragma once

// Reverse-mode differentiation over the small operation set the ranker needs.
//
// A Tape records every operation applied during one forward pass. Values are
// computed eagerly; backward() walks the record in reverse and accumulates
// gradients into the ParameterSet the parameter leaves were read from.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sir/tensor.hpp"

namespace sir {

struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(const ParameterSet& params, std::size_t index);
  Var parameter(const ParameterSet& params, std::string_view name);

  /// input [B x I] times weight [I x O] plus bias [O], giving [B x O].
  Var affine(Var input, Var weight, Var bias);
  Var relu(Var x);
  /// Natural log; every element must be strictly positive.
  Var log(Var x);
  /// Softmax over a non-empty vector, max-shifted.
  Var softmax(Var x);
  /// Row `index` of table [C x E]. `feature` names the lookup in errors.
  Var embedding(Var table, std::size_t index, std::string_view feature);

  /// Horizontal concatenation of matrices with equal row counts.
  Var concat_cols(std::span<const Var> parts);
  /// Concatenation of vectors.
  Var concat(std::span<const Var> parts);
  /// [n] or [1 x n] stacked `count` times into [count x n].
  Var repeat_rows(Var row, std::size_t count);
  Var reshape(Var x, Shape shape);

  /// out[b] = <weights, compressed (x) features[b, :]> with the Kronecker
  /// product laid out as compressed-major: index l * K + k.
  Var kron_inner(Var compressed, Var features, Var weights);

  Var add(Var a, Var b);
  Var sum(Var x);
  Var dot(Var a, Var b);

  /// Scalar node whose value and input gradient were computed elsewhere
  /// (loss functions with closed-form score gradients).
  Var external(Var input, double value, Tensor input_gradient);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse pass from a scalar loss. Parameter gradients are added into
  /// `params`, which must be the set the parameter leaves came from.
  void backward(Var loss, ParameterSet& params);
  /// Reverse pass seeded with an arbitrary upstream gradient.
  void backward(Var output, const Tensor& seed, ParameterSet& params);

 private:
  using Backprop = std::function<void(Tape&, std::size_t)>;

  struct Node {
    Tensor value;
    const Tensor* borrowed = nullptr;
    Tensor grad;
    Backprop backprop;
    std::ptrdiff_t param_index = -1;
  };

  Var push(Tensor value, Backprop backprop = {});
  const Tensor& val(std::size_t id) const;
  Tensor& grad_mut(std::size_t id);

  std::vector<Node> nodes_;
  const ParameterSet* owner_ = nullptr;
};

struct GradientCheckOptions {
  double step = 1e-5;
  std::size_t max_coordinates = 64;
  std::uint64_t seed = 0;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

using LossBuilder = std::function<Var(Tape&, const ParameterSet&)>;

/// Compares reverse-mode gradients against central differences on a sample
/// of parameter coordinates. Error per coordinate is
/// |analytic - numeric| / max(1, |analytic|).
GradientCheckResult gradient_check(const LossBuilder& loss_fn, ParameterSet& params,
                                   const GradientCheckOptions& options = {});

/// theta -= lr * grad for every entry, then zeroes the gradients.
void sgd_step(ParameterSet& params, double learning_rate);

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
Tensor uniform_tensor(Shape shape, double limit, std::mt19937_64& rng);

}  // namespace sir
