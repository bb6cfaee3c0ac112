#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "decnn/errors.hpp"

namespace decnn {

struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  bool operator==(const Shape&) const = default;
  std::size_t count() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
};

// Dense rank-4 float32 tensor, contiguous n-major (then c, h, w).
// Plain value type: copyable, movable, no shared state.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, float fill = 0.0f);
  Tensor(int n, int c, int h, int w, float fill = 0.0f)
      : Tensor(Shape{n, c, h, w}, fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  float& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  float at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  void fill(float v);

  // Elementwise ops; tensor-tensor variants require equal shapes.
  Tensor add(const Tensor& other) const;
  Tensor sub(const Tensor& other) const;
  Tensor mul(const Tensor& other) const;
  Tensor scale(float s) const;
  void add_inplace(const Tensor& other);

  // Reductions run in fixed n,c,h,w order with a double accumulator,
  // so results are reproducible across runs of the same build.
  double sum() const;
  double sum_sq() const;
  double sum_abs() const;
  float max() const;

  bool all_finite() const;

 private:
  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w +
           w;
  }

  Shape shape_{1, 1, 1, 1};
  std::vector<float> data_{0.0f};
};

// Seedable PRNG: std::mt19937_64 core (bit-exact per the standard) with
// self-contained Box-Muller and bounded-draw helpers, so the draw sequence
// does not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double next_double();
  // Uniform integer in [0, bound); bound > 0.
  std::uint64_t next_below(std::uint64_t bound);
  // Standard normal via Box-Muller (pairs cached).
  double next_normal();

  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

Tensor rng_normal(Rng& rng, Shape shape, float mean, float std);

}  // namespace decnn
