#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "fracgamma/error.hpp"

namespace fracgamma {

/// One real value per node of an associated NodeCloud.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(std::size_t n, double value = 0.0) : values_(n, value) {}
  explicit ScalarField(std::vector<double> values) : values_(std::move(values)) {}
  ScalarField(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }
  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }

  bool operator==(const ScalarField&) const = default;

 private:
  std::vector<double> values_;
};

namespace detail {

inline void require_finite(const ScalarField& u, const char* name) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) {
      throw Error(ErrorKind::InvalidField,
                  std::string(name) + " has a non-finite value at node " + std::to_string(i));
    }
  }
}

inline void require_size(const ScalarField& u, std::size_t n, const char* name) {
  if (u.size() != n) {
    throw Error(ErrorKind::SizeMismatch, std::string(name) + " has " + std::to_string(u.size()) +
                                             " values, cloud has " + std::to_string(n) + " nodes");
  }
}

}  // namespace detail
}  // namespace fracgamma
