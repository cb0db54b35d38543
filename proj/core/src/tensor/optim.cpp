#include "bafrcnn/tensor/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "bafrcnn/common/error.hpp"

namespace bafrcnn::tensor {

template <typename Real>
Sgd<Real>::Sgd(Real learning_rate, Real momentum) : lr_(learning_rate), momentum_(momentum) {
  set_learning_rate(learning_rate);
  if (!(momentum >= Real{0} && momentum < Real{1})) {
    throw std::invalid_argument("sgd: momentum must lie in [0, 1)");
  }
}

template <typename Real>
void Sgd<Real>::set_learning_rate(Real lr) {
  if (!(lr >= Real{0}) || !std::isfinite(lr)) throw std::invalid_argument("sgd: learning rate must be finite and >= 0");
  lr_ = lr;
}

template <typename Real>
void Sgd<Real>::step(std::span<const Parameter<Real>> params) {
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) throw std::invalid_argument("sgd_step: parameter '" + p.name + "' has no gradient");
    for (Real g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericalError("sgd_step: non-finite gradient in '" + p.name + "'");
    }
  }
  for (const auto& p : params) {
    Tensor<Real> t = p.tensor;
    auto& v = velocity_[p.name];
    if (v.size() != t.numel()) v.assign(t.numel(), Real{0});
    auto g = t.grad();
    auto w = t.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum_ * v[i] + g[i];
      w[i] -= lr_ * v[i];
    }
    t.zero_grad();
  }
}

template <typename Real>
std::vector<Parameter<Real>> Sgd<Real>::state(std::string_view prefix) const {
  std::vector<Parameter<Real>> out;
  for (const auto& [name, v] : velocity_) {
    out.push_back({std::string(prefix) + name, Tensor<Real>(Shape{v.size()}, v)});
  }
  return out;
}

template <typename Real>
void Sgd<Real>::load_state(std::span<const Parameter<Real>> entries, std::string_view prefix) {
  velocity_.clear();
  for (const auto& e : entries) {
    if (!e.name.starts_with(prefix)) continue;
    velocity_[e.name.substr(prefix.size())].assign(e.tensor.data().begin(), e.tensor.data().end());
  }
}

template class Sgd<float>;
template class Sgd<double>;

}  // namespace bafrcnn::tensor
