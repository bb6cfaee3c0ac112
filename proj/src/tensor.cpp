#include "decnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace decnn {

namespace {

void check_shape(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw ShapeError("tensor shape extents must all be >= 1, got (" +
                     std::to_string(s.n) + "," + std::to_string(s.c) + "," +
                     std::to_string(s.h) + "," + std::to_string(s.w) + ")");
  }
}

void check_same_shape(const Shape& a, const Shape& b) {
  if (!(a == b)) {
    throw ShapeError("tensor shape mismatch in elementwise op");
  }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  check_shape(shape);
  data_.assign(shape.count(), fill);
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::add(const Tensor& other) const {
  check_same_shape(shape_, other.shape_);
  Tensor out(shape_);
  for (std::size_t i = 0; i < data_.size(); ++i)
    out.data_[i] = data_[i] + other.data_[i];
  return out;
}

Tensor Tensor::sub(const Tensor& other) const {
  check_same_shape(shape_, other.shape_);
  Tensor out(shape_);
  for (std::size_t i = 0; i < data_.size(); ++i)
    out.data_[i] = data_[i] - other.data_[i];
  return out;
}

Tensor Tensor::mul(const Tensor& other) const {
  check_same_shape(shape_, other.shape_);
  Tensor out(shape_);
  for (std::size_t i = 0; i < data_.size(); ++i)
    out.data_[i] = data_[i] * other.data_[i];
  return out;
}

Tensor Tensor::scale(float s) const {
  Tensor out(shape_);
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] * s;
  return out;
}

void Tensor::add_inplace(const Tensor& other) {
  check_same_shape(shape_, other.shape_);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

double Tensor::sum() const {
  double acc = 0.0;
  for (float v : data_) acc += v;
  return acc;
}

double Tensor::sum_sq() const {
  double acc = 0.0;
  for (float v : data_) acc += static_cast<double>(v) * v;
  return acc;
}

double Tensor::sum_abs() const {
  double acc = 0.0;
  for (float v : data_) acc += std::abs(static_cast<double>(v));
  return acc;
}

float Tensor::max() const {
  float m = data_[0];
  for (float v : data_) m = std::max(m, v);
  return m;
}

bool Tensor::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Rng::Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

std::uint64_t Rng::next_u64() { return gen_(); }

double Rng::next_double() {
  // 53 uniform bits -> [0, 1)
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  // rejection sampling, bias-free
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = gen_();
  } while (v >= limit);
  return v % bound;
}

double Rng::next_normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1, u2;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

Tensor rng_normal(Rng& rng, Shape shape, float mean, float std) {
  if (std < 0.0f) throw ParamError("rng_normal: std must be >= 0");
  Tensor out(shape);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = mean + std * static_cast<float>(rng.next_normal());
  return out;
}

}  // namespace decnn
