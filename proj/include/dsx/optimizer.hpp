#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dsx/features.hpp"
#include "dsx/parallel.hpp"

namespace dsx {

/// Regularized multinomial cross-entropy over sparse binary rows. Labels are
/// class positions in [0, classes]; `classes` itself denotes the reference.
/// Parameter layout: weights row-major (classes x features), then intercepts.
class SoftmaxObjective {
 public:
  SoftmaxObjective(std::span<const FeatureVector> rows, std::span<const std::size_t> labels,
                   std::size_t classes, std::size_t features, double C);

  std::size_t dimension() const { return classes_ * features_ + classes_; }

  /// Loss value; fills `grad` (size dimension()).
  double evaluate(std::span<const double> theta, std::span<double> grad, Exec exec = Exec::Parallel) const;

 private:
  std::span<const FeatureVector> rows_;
  std::span<const std::size_t> labels_;
  std::size_t classes_;
  std::size_t features_;
  double C_;
  // Column view: for each feature, the rows containing it (ascending).
  std::vector<std::size_t> col_start_;
  std::vector<std::size_t> col_rows_;
};

struct LbfgsResult {
  int iterations = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
};

using ObjectiveFn = std::function<double(std::span<const double>, std::span<double>)>;

/// Limited-memory BFGS with backtracking Armijo search. Stops when the
/// gradient 2-norm is <= tol, after max_iter steps, or when no step decreases
/// the objective.
LbfgsResult minimize_lbfgs(const ObjectiveFn& f, std::vector<double>& x, double tol, int max_iter,
                           std::size_t memory = 10);

}  // namespace dsx
