#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sir {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major tensor of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> v);

  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);
  static Tensor scalar(double v);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  bool all_finite() const;
  void fill(double v);

  bool operator==(const Tensor&) const = default;
};

/// A named trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Ordered collection of parameters. Entries keep stable indices once added.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const;

  Parameter& operator[](std::size_t i) { return entries_[i]; }
  const Parameter& operator[](std::size_t i) const { return entries_[i]; }
  Parameter& get(std::string_view name) { return entries_[index_of(name)]; }
  const Parameter& get(std::string_view name) const { return entries_[index_of(name)]; }

  std::size_t size() const { return entries_.size(); }
  std::size_t total_values() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();

  bool operator==(const ParameterSet& other) const;

 private:
  std::vector<Parameter> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace sir
