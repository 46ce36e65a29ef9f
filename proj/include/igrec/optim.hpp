#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "igrec/tensor.hpp"

namespace igrec {

// Named trainable tensors. Order is stable and defines checkpoint layout.
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix value);
  std::size_t size() const { return values_.size(); }
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;

  Matrix& operator[](std::size_t i) { return values_[i]; }
  const Matrix& operator[](std::size_t i) const { return values_[i]; }
  Matrix& at(const std::string& name) { return values_[index_of(name)]; }
  const Matrix& at(const std::string& name) const { return values_[index_of(name)]; }
  const std::string& name(std::size_t i) const { return names_[i]; }

  std::size_t scalar_count() const;
  double squared_norm() const;
  // Order-sensitive FNV-1a hash of every stored bit; used for determinism checks.
  std::uint64_t checksum() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  static AdamState for_params(const ParameterSet& params);
};

// One bias-corrected Adam update. `weight_decay * param` is added to each
// gradient before the moment update (L2 coupling, as in classic Adam).
void adam_step(ParameterSet& params, const std::vector<Matrix>& grads, AdamState& state, double lr,
               double weight_decay);

// Central-difference gradient check. `loss` evaluates the scalar objective at
// the current parameters; `analytic` must hold d(loss)/d(param) for each
// tensor. Checks at most `max_coords` coordinates per tensor, spread evenly.
// Returns max |a - fd| / (|a| + |fd| + 1e-12).
double finite_difference_check(const std::function<double(const ParameterSet&)>& loss,
                               ParameterSet params, const std::vector<Matrix>& analytic, double h,
                               std::size_t max_coords = 64);

}  // namespace igrec
