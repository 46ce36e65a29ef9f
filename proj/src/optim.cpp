#include "igrec/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace igrec {

std::size_t ParameterSet::add(std::string name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("ParameterSet: duplicate name " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("ParameterSet: no parameter named " + name);
  return static_cast<std::size_t>(it - names_.begin());
}

bool ParameterSet::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

double ParameterSet::squared_norm() const {
  double s = 0.0;
  for (const auto& v : values_) s += v.squared_norm();
  return s;
}

std::uint64_t ParameterSet::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (std::size_t i = 0; i < values_.size(); ++i) {
    mix(names_[i].data(), names_[i].size());
    mix(values_[i].data(), values_[i].size() * sizeof(double));
  }
  return h;
}

AdamState AdamState::for_params(const ParameterSet& params) {
  AdamState s;
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m.emplace_back(params[i].rows(), params[i].cols());
    s.v.emplace_back(params[i].rows(), params[i].cols());
  }
  return s;
}

void adam_step(ParameterSet& params, const std::vector<Matrix>& grads, AdamState& state, double lr,
               double weight_decay) {
  if (!(lr >= 0.0)) throw std::invalid_argument("adam_step: learning rate must be non-negative");
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i], grads[i], "adam_step");
    require_same_shape(params[i], state.m[i], "adam_step");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = params[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    const Matrix& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] + weight_decay * p[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double finite_difference_check(const std::function<double(const ParameterSet&)>& loss,
                               ParameterSet params, const std::vector<Matrix>& analytic, double h,
                               std::size_t max_coords) {
  if (analytic.size() != params.size()) throw std::invalid_argument("finite_difference_check: gradient count");
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i], analytic[i], "finite_difference_check");
    const std::size_t n = params[i].size();
    const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(1, max_coords));
    for (std::size_t k = 0; k < n; k += stride) {
      const double orig = params[i][k];
      params[i][k] = orig + h;
      const double up = loss(params);
      params[i][k] = orig - h;
      const double down = loss(params);
      params[i][k] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double a = analytic[i][k];
      worst = std::max(worst, std::abs(a - fd) / (std::abs(a) + std::abs(fd) + 1e-12));
    }
  }
  return worst;
}

}  // namespace igrec
