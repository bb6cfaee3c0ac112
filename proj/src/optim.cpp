#include "decnn/optim.hpp"

#include <cmath>
#include <cstring>

namespace decnn {

Adam::Adam(const std::vector<ParamRef>& params, double lr, double beta1,
           double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const ParamRef& p : params) {
    m_.emplace_back(p.size, 0.0f);
    v_.emplace_back(p.size, 0.0f);
  }
}

void Adam::step(const std::vector<ParamRef>& params) {
  if (params.size() != m_.size())
    throw StateError("Adam::step: parameter list does not match optimizer state");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamRef& p = params[i];
    if (m_[i].size() != p.size)
      throw StateError("Adam::step: parameter size changed");
    float* m = m_[i].data();
    float* v = v_[i].data();
    for (std::size_t j = 0; j < p.size; ++j) {
      const float g = p.grad[j];
      m[j] = static_cast<float>(beta1_ * m[j] + (1.0 - beta1_) * g);
      v[j] = static_cast<float>(beta2_ * v[j] + (1.0 - beta2_) * g * g);
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.data[j] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
    std::memset(p.grad, 0, sizeof(float) * p.size);
  }
}

}  // namespace decnn
