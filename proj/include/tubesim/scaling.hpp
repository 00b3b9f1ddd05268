#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tubesim {

// Per-vertex radius law r_j(eps) = c_j * eps^{beta_j}. Power laws make the
// radius order classes decidable: larger beta means smaller radius, equal
// beta means same order class regardless of c_j.
class ScalingLaw {
 public:
  ScalingLaw() = default;
  ScalingLaw(std::vector<double> c, std::vector<double> beta, int dim)
      : c_(std::move(c)), beta_(std::move(beta)) {
    if (c_.size() != beta_.size()) throw std::invalid_argument("scaling: c/beta size mismatch");
    const double beta_max = static_cast<double>(dim - 1) / dim;
    for (size_t j = 0; j < c_.size(); ++j) {
      if (!(c_[j] > 0.0)) throw std::invalid_argument("scaling: c must be positive");
      if (!(beta_[j] > 0.0 && beta_[j] < beta_max))
        throw std::invalid_argument("scaling: beta_" + std::to_string(j) + " = " +
                                    std::to_string(beta_[j]) + " outside (0, " +
                                    std::to_string(beta_max) + ") required by r >> eps^((d-1)/d)");
    }
  }

  int size() const { return static_cast<int>(c_.size()); }
  double c(int j) const { return c_[j]; }
  double beta(int j) const { return beta_[j]; }
  double radius(int j, double eps) const { return c_[j] * std::pow(eps, beta_[j]); }

 private:
  std::vector<double> c_;
  std::vector<double> beta_;
};

}  // namespace tubesim
