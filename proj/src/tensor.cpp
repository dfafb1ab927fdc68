/*
 * Copyright 2026 The curreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "curreg/tensor.hpp"

#include <cstring>
#include <sstream>

#include "curreg/error.hpp"

namespace curreg {

Shape::Shape(std::initializer_list<int> dims) : Shape(std::vector<int>(dims)) {}

Shape::Shape(std::vector<int> dims) : dims_(std::move(dims)) {
  for (int d : dims_) {
    if (d < 1) throw ConfigError("shape extents must be >= 1, got " + str());
  }
}

std::size_t Shape::numel() const {
  std::size_t n = 1;
  for (int d : dims_) n *= static_cast<std::size_t>(d);
  return n;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
  os << ')';
  return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape, bool requires_grad) {
  return full(shape, T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape& shape, T value, bool requires_grad) {
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->shape = shape;
  t.s_->values.assign(shape.numel(), value);
  t.s_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from(const Shape& shape, std::vector<T> values, bool requires_grad) {
  if (values.size() != shape.numel()) {
    throw ConfigError("buffer of " + std::to_string(values.size()) + " elements does not match shape " +
                      shape.str());
  }
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->shape = shape;
  t.s_->values = std::move(values);
  t.s_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return full(Shape{1}, value, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw UsageError("item() on tensor of shape " + shape().str());
  return s_->values[0];
}

template <typename T>
std::span<T> Tensor<T>::grad_buffer() const {
  if (s_->grad.empty()) s_->grad.assign(s_->values.size(), T(0));
  return s_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() const {
  std::fill(s_->grad.begin(), s_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone(bool requires_grad) const {
  return from(shape(), s_->values, requires_grad);
}

void Tape::record(const char* op, BackwardFn fn) {
  entries_.push_back(Entry{op, std::move(fn)});
}

std::size_t Tape::replay_backward() {
  std::size_t visited = 0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    it->fn();
    ++visited;
  }
  entries_.clear();
  return visited;
}

template <typename T>
void backward(Tensor<T>& loss, Tape& tape) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() requires a scalar loss");
  }
  if (!loss.requires_grad()) throw UsageError("loss does not depend on any tensor requiring grad");
  loss.grad_buffer()[0] += T(1);
  tape.replay_backward();
}

template <typename T>
Tensor<T>& ParameterStore<T>::add(const std::string& name, Tensor<T> tensor) {
  if (params_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  tensor.set_requires_grad(true);
  return params_.emplace(name, std::move(tensor)).first->second;
}

template <typename T>
Tensor<T>& ParameterStore<T>::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

template <typename T>
const Tensor<T>& ParameterStore<T>::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

template <typename T>
std::uint64_t ParameterStore<T>::checksum() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& [name, t] : params_) {
    feed(name.data(), name.size());
    for (int d : t.shape().dims()) feed(&d, sizeof d);
    feed(t.data(), t.numel() * sizeof(T));
  }
  return h;
}

template class Tensor<float>;
template class Tensor<double>;
template class ParameterStore<float>;
template class ParameterStore<double>;
template void backward<float>(Tensor<float>&, Tape&);
template void backward<double>(Tensor<double>&, Tape&);

}  // namespace curreg
