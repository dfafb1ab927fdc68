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

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace curreg {

/// Ordered list of positive extents. Activations use (batch, channels,
/// depth, height, width).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int> dims);
  explicit Shape(std::vector<int> dims);

  std::size_t rank() const { return dims_.size(); }
  int operator[](std::size_t i) const { return dims_[i]; }
  const std::vector<int>& dims() const { return dims_; }
  std::size_t numel() const;
  std::string str() const;

  bool operator==(const Shape&) const = default;

 private:
  std::vector<int> dims_;
};

/// Dense array with an optional gradient buffer. Copies share storage, the
/// same way handles into an autodiff graph do.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, T value, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(s_); }
  const Shape& shape() const { return s_->shape; }
  std::size_t numel() const { return s_->values.size(); }
  int dim(std::size_t i) const { return s_->shape[i]; }

  std::span<const T> values() const { return s_->values; }
  std::span<T> mutable_values() { return s_->values; }
  const T* data() const { return s_->values.data(); }
  T* mutable_data() { return s_->values.data(); }
  T item() const;

  bool requires_grad() const { return s_ && s_->requires_grad; }
  // Gradient state lives in the shared storage, so these are const on the handle.
  void set_requires_grad(bool on) const { s_->requires_grad = on; }

  bool has_grad() const { return s_ && !s_->grad.empty(); }
  std::span<const T> grad() const { return s_->grad; }
  // Zero-filled on first access.
  std::span<T> grad_buffer() const;
  void zero_grad() const;
  void clear_grad() const { s_->grad.clear(); s_->grad.shrink_to_fit(); }

  // Deep copy of values only; the copy is a fresh leaf.
  Tensor clone(bool requires_grad = false) const;

  bool same_storage(const Tensor& other) const { return s_ == other.s_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

/// Records differentiable operations in execution order; backward replays
/// them in reverse, each exactly once.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  bool enabled() const { return enabled_; }
  void set_enabled(bool on) { enabled_ = on; }

  void record(const char* op, BackwardFn fn);
  std::size_t size() const { return entries_.size(); }
  const char* op_name(std::size_t i) const { return entries_[i].op; }
  void clear() { entries_.clear(); }

  // Runs every recorded backward rule in reverse order and clears the tape.
  // Returns the number of rules visited.
  std::size_t replay_backward();

 private:
  struct Entry {
    const char* op;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  bool enabled_ = true;
};

/// Seeds d(loss)/d(loss) = 1 and sweeps the tape. Gradients accumulate into
/// existing buffers; call ParameterStore::zero_grad between steps.
template <typename T>
void backward(Tensor<T>& loss, Tape& tape);

/// Named learnable tensors, iterated in sorted-name order.
template <typename T>
class ParameterStore {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> tensor);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Tensor<T>& at(const std::string& name);
  const Tensor<T>& at(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Deep copy, optionally converting the scalar type.
  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& [name, t] : params_) {
      std::vector<U> v(t.values().begin(), t.values().end());
      out.add(name, Tensor<U>::from(t.shape(), std::move(v), true));
    }
    return out;
  }

  // FNV-1a over names, shapes, and raw value bytes.
  std::uint64_t checksum() const;

 private:
  std::map<std::string, Tensor<T>> params_;
};

}  // namespace curreg
