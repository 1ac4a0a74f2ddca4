#include "sir/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sir/error.hpp"

namespace sir {

namespace {

void require_matrix(const Tensor& t, std::string_view op, std::string_view what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": " + std::string(what) + " must be a matrix, got " +
                         shape_to_string(t.shape));
  }
}

}  // namespace

Var Tape::push(Tensor value, Backprop backprop) {
  Node node;
  node.value = std::move(value);
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

const Tensor& Tape::val(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.borrowed ? *n.borrowed : n.value;
}

Tensor& Tape::grad_mut(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.values.empty()) n.grad = Tensor(val(id).shape, 0.0);
  return n.grad;
}

const Tensor& Tape::value(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  return val(v.id);
}

const Tensor& Tape::grad(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  return nodes_[v.id].grad;
}

Var Tape::constant(Tensor value) { return push(std::move(value)); }

Var Tape::parameter(const ParameterSet& params, std::size_t index) {
  if (owner_ && owner_ != &params) {
    throw ContractError("a tape may only read parameters from one ParameterSet");
  }
  owner_ = &params;
  Node node;
  node.borrowed = &params[index].value;
  node.param_index = static_cast<std::ptrdiff_t>(index);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(const ParameterSet& params, std::string_view name) {
  return parameter(params, params.index_of(name));
}

Var Tape::affine(Var input, Var weight, Var bias) {
  const Tensor& x = val(input.id);
  const Tensor& w = val(weight.id);
  const Tensor& b = val(bias.id);
  require_matrix(x, "affine", "input");
  require_matrix(w, "affine", "weight");
  const std::size_t batch = x.shape[0], in = x.shape[1], out = w.shape[1];
  if (w.shape[0] != in || b.size() != out) {
    throw DimensionError("affine: input " + shape_to_string(x.shape) + " weight " +
                         shape_to_string(w.shape) + " bias " + shape_to_string(b.shape) +
                         " do not conform");
  }
  Tensor y(Shape{batch, out});
  for (std::size_t r = 0; r < batch; ++r) {
    double* yr = y.values.data() + r * out;
    std::copy(b.values.begin(), b.values.end(), yr);
    const double* xr = x.values.data() + r * in;
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xr[i];
      const double* wi = w.values.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wi[o];
    }
  }
  return push(std::move(y), [input, weight, bias, batch, in, out](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    const Tensor& xv = t.val(input.id);
    const Tensor& wv = t.val(weight.id);
    Tensor& dx = t.grad_mut(input.id);
    Tensor& dw = t.grad_mut(weight.id);
    Tensor& db = t.grad_mut(bias.id);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* dyr = dy.values.data() + r * out;
      const double* xr = xv.values.data() + r * in;
      double* dxr = dx.values.data() + r * in;
      for (std::size_t o = 0; o < out; ++o) db.values[o] += dyr[o];
      for (std::size_t i = 0; i < in; ++i) {
        const double* wi = wv.values.data() + i * out;
        double* dwi = dw.values.data() + i * out;
        double acc = 0.0;
        const double xi = xr[i];
        for (std::size_t o = 0; o < out; ++o) {
          acc += dyr[o] * wi[o];
          dwi[o] += xi * dyr[o];
        }
        dxr[i] += acc;
      }
    }
  });
}

Var Tape::relu(Var x) {
  Tensor y = val(x.id);
  for (double& v : y.values) v = v > 0.0 ? v : 0.0;
  return push(std::move(y), [x](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    const Tensor& xv = t.val(x.id);
    Tensor& dx = t.grad_mut(x.id);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if (xv.values[i] > 0.0) dx.values[i] += dy.values[i];
    }
  });
}

Var Tape::log(Var x) {
  Tensor y = val(x.id);
  for (double& v : y.values) {
    if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v));
    v = std::log(v);
  }
  return push(std::move(y), [x](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    const Tensor& xv = t.val(x.id);
    Tensor& dx = t.grad_mut(x.id);
    for (std::size_t i = 0; i < dy.size(); ++i) dx.values[i] += dy.values[i] / xv.values[i];
  });
}

Var Tape::softmax(Var x) {
  const Tensor& xv = val(x.id);
  if (xv.size() == 0) throw DomainError("softmax: empty input");
  Tensor y(Shape{xv.size()});
  const double m = *std::max_element(xv.values.begin(), xv.values.end());
  double z = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    y.values[i] = std::exp(xv.values[i] - m);
    z += y.values[i];
  }
  for (double& v : y.values) v /= z;
  return push(std::move(y), [x](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    const Tensor& yv = t.nodes_[self].value;
    double inner = 0.0;
    for (std::size_t i = 0; i < yv.size(); ++i) inner += dy.values[i] * yv.values[i];
    Tensor& dx = t.grad_mut(x.id);
    for (std::size_t i = 0; i < yv.size(); ++i) dx.values[i] += yv.values[i] * (dy.values[i] - inner);
  });
}

Var Tape::embedding(Var table, std::size_t index, std::string_view feature) {
  const Tensor& tv = val(table.id);
  require_matrix(tv, "embedding", "table");
  const std::size_t cardinality = tv.shape[0], dim = tv.shape[1];
  if (index >= cardinality) {
    throw DomainError("embedding: index " + std::to_string(index) + " out of range for feature '" +
                      std::string(feature) + "' with cardinality " + std::to_string(cardinality));
  }
  auto row = tv.values.begin() + static_cast<std::ptrdiff_t>(index * dim);
  Tensor y(Shape{dim}, std::vector<double>(row, row + static_cast<std::ptrdiff_t>(dim)));
  return push(std::move(y), [table, index, dim](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    Tensor& dt = t.grad_mut(table.id);
    for (std::size_t e = 0; e < dim; ++e) dt.values[index * dim + e] += dy.values[e];
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t batch = val(parts[0].id).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& pv = val(p.id);
    require_matrix(pv, "concat_cols", "part");
    if (pv.shape[0] != batch) {
      throw DimensionError("concat_cols: row mismatch " + shape_to_string(val(parts[0].id).shape) +
                           " vs " + shape_to_string(pv.shape));
    }
    widths.push_back(pv.shape[1]);
    total += pv.shape[1];
  }
  Tensor y(Shape{batch, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = val(parts[k].id);
    for (std::size_t r = 0; r < batch; ++r) {
      std::copy_n(pv.values.data() + r * widths[k], widths[k], y.values.data() + r * total + offset);
    }
    offset += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(y), [inputs, widths, batch, total](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    std::size_t off = 0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      Tensor& dp = t.grad_mut(inputs[k].id);
      for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t c = 0; c < widths[k]; ++c) {
          dp.values[r * widths[k] + c] += dy.values[r * total + off + c];
        }
      }
      off += widths[k];
    }
  });
}

Var Tape::concat(std::span<const Var> parts) {
  std::vector<double> out;
  for (Var p : parts) {
    const Tensor& pv = val(p.id);
    out.insert(out.end(), pv.values.begin(), pv.values.end());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(Tensor::vector(std::move(out)), [inputs](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    std::size_t off = 0;
    for (Var p : inputs) {
      Tensor& dp = t.grad_mut(p.id);
      for (std::size_t i = 0; i < dp.size(); ++i) dp.values[i] += dy.values[off + i];
      off += dp.size();
    }
  });
}

Var Tape::repeat_rows(Var row, std::size_t count) {
  const Tensor& rv = val(row.id);
  if (rv.rank() == 2 && rv.shape[0] != 1) {
    throw DimensionError("repeat_rows: expected a single row, got " + shape_to_string(rv.shape));
  }
  const std::size_t width = rv.size();
  Tensor y(Shape{count, width});
  for (std::size_t r = 0; r < count; ++r) {
    std::copy(rv.values.begin(), rv.values.end(), y.values.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return push(std::move(y), [row, count, width](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    Tensor& dr = t.grad_mut(row.id);
    for (std::size_t r = 0; r < count; ++r) {
      for (std::size_t c = 0; c < width; ++c) dr.values[c] += dy.values[r * width + c];
    }
  });
}

Var Tape::reshape(Var x, Shape shape) {
  const Tensor& xv = val(x.id);
  if (shape_size(shape) != xv.size()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(xv.shape) + " as " +
                         shape_to_string(shape));
  }
  Tensor y(std::move(shape), xv.values);
  return push(std::move(y), [x](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    Tensor& dx = t.grad_mut(x.id);
    for (std::size_t i = 0; i < dy.size(); ++i) dx.values[i] += dy.values[i];
  });
}

Var Tape::kron_inner(Var compressed, Var features, Var weights) {
  const Tensor& s = val(compressed.id);
  const Tensor& v = val(features.id);
  const Tensor& w = val(weights.id);
  require_matrix(v, "kron_inner", "features");
  const std::size_t dim_l = s.size(), batch = v.shape[0], dim_k = v.shape[1];
  if (w.size() != dim_l * dim_k) {
    throw DimensionError("kron_inner: weights " + shape_to_string(w.shape) + " do not match " +
                         shape_to_string(s.shape) + " (x) " + shape_to_string(v.shape));
  }
  // u[k] = sum_l w[l*K + k] s[l], so out[b] = <u, v[b, :]>.
  std::vector<double> u(dim_k, 0.0);
  for (std::size_t l = 0; l < dim_l; ++l) {
    for (std::size_t k = 0; k < dim_k; ++k) u[k] += w.values[l * dim_k + k] * s.values[l];
  }
  Tensor y(Shape{batch});
  for (std::size_t b = 0; b < batch; ++b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dim_k; ++k) acc += u[k] * v.values[b * dim_k + k];
    y.values[b] = acc;
  }
  return push(std::move(y), [compressed, features, weights, u = std::move(u), dim_l, dim_k, batch](
                                Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    const Tensor& sv = t.val(compressed.id);
    const Tensor& fv = t.val(features.id);
    const Tensor& wv = t.val(weights.id);
    // g[k] = sum_b dy[b] v[b, k]
    std::vector<double> g(dim_k, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < dim_k; ++k) g[k] += dy.values[b] * fv.values[b * dim_k + k];
    }
    Tensor& ds = t.grad_mut(compressed.id);
    Tensor& dw = t.grad_mut(weights.id);
    for (std::size_t l = 0; l < dim_l; ++l) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim_k; ++k) {
        acc += wv.values[l * dim_k + k] * g[k];
        dw.values[l * dim_k + k] += sv.values[l] * g[k];
      }
      ds.values[l] += acc;
    }
    Tensor& dv = t.grad_mut(features.id);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < dim_k; ++k) dv.values[b * dim_k + k] += dy.values[b] * u[k];
    }
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  if (av.shape != bv.shape) {
    throw DimensionError("add: shape mismatch " + shape_to_string(av.shape) + " vs " +
                         shape_to_string(bv.shape));
  }
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y.values[i] += bv.values[i];
  return push(std::move(y), [a, b](Tape& t, std::size_t self) {
    const Tensor& dy = t.nodes_[self].grad;
    Tensor& da = t.grad_mut(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da.values[i] += dy.values[i];
    Tensor& db = t.grad_mut(b.id);
    for (std::size_t i = 0; i < dy.size(); ++i) db.values[i] += dy.values[i];
  });
}

Var Tape::sum(Var x) {
  const Tensor& xv = val(x.id);
  const double total = std::accumulate(xv.values.begin(), xv.values.end(), 0.0);
  return push(Tensor::scalar(total), [x](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad.values[0];
    Tensor& dx = t.grad_mut(x.id);
    for (double& v : dx.values) v += g;
  });
}

Var Tape::dot(Var a, Var b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  if (av.size() != bv.size()) {
    throw DimensionError("dot: size mismatch " + shape_to_string(av.shape) + " vs " +
                         shape_to_string(bv.shape));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av.values[i] * bv.values[i];
  return push(Tensor::scalar(acc), [a, b](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad.values[0];
    const Tensor& avv = t.val(a.id);
    const Tensor& bvv = t.val(b.id);
    Tensor& da = t.grad_mut(a.id);
    for (std::size_t i = 0; i < da.size(); ++i) da.values[i] += g * bvv.values[i];
    Tensor& db = t.grad_mut(b.id);
    for (std::size_t i = 0; i < db.size(); ++i) db.values[i] += g * avv.values[i];
  });
}

Var Tape::external(Var input, double value, Tensor input_gradient) {
  if (input_gradient.size() != val(input.id).size()) {
    throw DimensionError("external: gradient " + shape_to_string(input_gradient.shape) +
                         " does not match input " + shape_to_string(val(input.id).shape));
  }
  return push(Tensor::scalar(value), [input, g = std::move(input_gradient)](Tape& t, std::size_t self) {
    const double up = t.nodes_[self].grad.values[0];
    Tensor& dx = t.grad_mut(input.id);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.values[i] += up * g.values[i];
  });
}

void Tape::backward(Var loss, ParameterSet& params) {
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_to_string(lv.shape));
  }
  backward(loss, Tensor(lv.shape, 1.0), params);
}

void Tape::backward(Var output, const Tensor& seed, ParameterSet& params) {
  if (output.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  if (owner_ && owner_ != &params) {
    throw ContractError("backward: parameters were read from a different ParameterSet");
  }
  if (seed.size() != val(output.id).size()) {
    throw DimensionError("backward: seed " + shape_to_string(seed.shape) + " does not match output " +
                         shape_to_string(val(output.id).shape));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_mut(output.id).values = seed.values;
  for (std::size_t id = output.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.values.empty()) continue;
    if (n.backprop) n.backprop(*this, id);
    if (n.param_index >= 0) {
      Tensor& pg = params[static_cast<std::size_t>(n.param_index)].grad;
      for (std::size_t i = 0; i < pg.size(); ++i) pg.values[i] += nodes_[id].grad.values[i];
    }
  }
}

GradientCheckResult gradient_check(const LossBuilder& loss_fn, ParameterSet& params,
                                   const GradientCheckOptions& options) {
  if (!(options.step > 0.0)) throw DomainError("gradient_check: step must be positive");
  auto evaluate = [&]() {
    Tape tape;
    Var loss = loss_fn(tape, params);
    return tape.value(loss).values.at(0);
  };

  params.zero_grad();
  double base = 0.0;
  {
    Tape tape;
    Var loss = loss_fn(tape, params);
    base = tape.value(loss).values.at(0);
    tape.backward(loss, params);
  }
  if (evaluate() != base) {
    throw ContractError("gradient_check: loss function is not deterministic");
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].value.size(); ++i) coords.emplace_back(p, i);
  }
  if (coords.size() > options.max_coordinates) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coordinates);
  }

  GradientCheckResult result;
  for (auto [p, i] : coords) {
    double& theta = params[p].value.values[i];
    const double saved = theta;
    theta = saved + options.step;
    const double plus = evaluate();
    theta = saved - options.step;
    const double minus = evaluate();
    theta = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double analytic = params[p].grad.values[i];
    const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    result.max_relative_error = std::max(result.max_relative_error, err);
    ++result.coordinates;
  }
  params.zero_grad();
  return result;
}

void sgd_step(ParameterSet& params, double learning_rate) {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw DomainError("sgd_step: learning rate must be a non-negative finite number");
  }
  for (const Parameter& p : params) {
    if (!p.grad.all_finite()) throw TrainingError("non-finite gradient in parameter '" + p.name + "'");
  }
  for (Parameter& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value.values[i] -= learning_rate * p.grad.values[i];
    p.grad.fill(0.0);
  }
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_tensor(Shape{fan_in, fan_out}, limit, rng);
}

Tensor uniform_tensor(Shape shape, double limit, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.values) v = dist(rng);
  return t;
}

}  // namespace sir
