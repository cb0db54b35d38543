#include "bafrcnn/tensor/parameter.hpp"

#include <cmath>

#include "bafrcnn/common/rng.hpp"

namespace bafrcnn::tensor {

template <typename Real>
Tensor<Real> ParameterSet<Real>::add(std::string name, Shape shape, std::size_t fan_in, Init init) {
  if (find(name) != nullptr) throw std::invalid_argument("ParameterSet: duplicate parameter name '" + name + "'");
  Tensor<Real> t(std::move(shape), true);
  if (init == Init::kUniformFanIn) {
    if (fan_in == 0) throw std::invalid_argument("ParameterSet: fan_in must be positive for '" + name + "'");
    Rng rng(seed_, fnv1a64(name));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Real& v : t.mutable_data()) v = static_cast<Real>(rng.uniform(-bound, bound));
  }
  params_.push_back(Parameter<Real>{std::move(name), t});
  return t;
}

template <typename Real>
const Parameter<Real>* ParameterSet<Real>::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename Real>
Tensor<Real> ParameterSet<Real>::get(std::string_view name) const {
  const auto* p = find(name);
  if (p == nullptr) throw std::out_of_range("ParameterSet: unknown parameter '" + std::string(name) + "'");
  return p->tensor;
}

template <typename Real>
std::vector<Parameter<Real>> ParameterSet<Real>::with_prefix(std::string_view prefix) const {
  std::vector<Parameter<Real>> out;
  for (const auto& p : params_)
    if (p.name.starts_with(prefix)) out.push_back(p);
  return out;
}

template <typename Real>
std::size_t ParameterSet<Real>::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

template <typename Real>
void ParameterSet<Real>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template <typename Real>
void ParameterSet<Real>::load(std::span<const Parameter<Real>> values) {
  for (const auto& v : values) {
    const auto* p = find(v.name);
    if (p == nullptr) throw std::invalid_argument("ParameterSet::load: unknown parameter '" + v.name + "'");
    if (p->tensor.shape() != v.tensor.shape()) {
      throw std::invalid_argument("ParameterSet::load: shape mismatch for '" + v.name + "' (" +
                                  shape_string(p->tensor.shape()) + " vs " + shape_string(v.tensor.shape()) + ")");
    }
  }
  for (const auto& v : values) {
    Tensor<Real> dst = get(v.name);
    auto out = dst.mutable_data();
    auto in = v.tensor.data();
    std::copy(in.begin(), in.end(), out.begin());
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace bafrcnn::tensor
