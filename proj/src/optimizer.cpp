#include "dsx/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace dsx {

SoftmaxObjective::SoftmaxObjective(std::span<const FeatureVector> rows, std::span<const std::size_t> labels,
                                   std::size_t classes, std::size_t features, double C)
    : rows_(rows), labels_(labels), classes_(classes), features_(features), C_(C) {
  if (rows.size() != labels.size()) throw std::invalid_argument("rows and labels differ in length");
  if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
  col_start_.assign(features_ + 1, 0);
  for (const auto& r : rows_)
    for (auto j : r.indices) {
      if (j >= features_) throw std::invalid_argument("feature index out of range");
      ++col_start_[j + 1];
    }
  for (std::size_t j = 0; j < features_; ++j) col_start_[j + 1] += col_start_[j];
  col_rows_.resize(col_start_.back());
  std::vector<std::size_t> fill(col_start_.begin(), col_start_.end() - 1);
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (auto j : rows_[i].indices) col_rows_[fill[j]++] = i;
}

double SoftmaxObjective::evaluate(std::span<const double> theta, std::span<double> grad, Exec exec) const {
  const std::size_t M = classes_;
  const std::size_t n = features_;
  const std::size_t N = rows_.size();
  const double* W = theta.data();
  const double* b = theta.data() + M * n;

  // Residuals p - y per row and class, plus per-row loss.
  std::vector<double> residual(N * M);
  std::vector<double> row_loss(N);
  parallel_for(exec, N, [&](std::size_t i) {
    double* z = residual.data() + i * M;
    for (std::size_t k = 0; k < M; ++k) {
      double s = b[k];
      for (auto j : rows_[i].indices) s += W[k * n + j];
      z[k] = s;
    }
    double peak = 0.0;
    for (std::size_t k = 0; k < M; ++k) peak = std::max(peak, z[k]);
    double total = std::exp(-peak);
    for (std::size_t k = 0; k < M; ++k) total += std::exp(z[k] - peak);
    const double lse = peak + std::log(total);
    const std::size_t y = labels_[i];
    row_loss[i] = lse - (y < M ? z[y] : 0.0);
    for (std::size_t k = 0; k < M; ++k) z[k] = std::exp(z[k] - lse) - (k == y ? 1.0 : 0.0);
  });

  double loss = 0.0;
  for (double l : row_loss) loss += l;
  double reg = 0.0;
  for (std::size_t t = 0; t < M * n; ++t) reg += W[t] * W[t];
  loss += reg / (2.0 * C_);

  // Column-parallel gradient; each entry sums its rows in ascending order, so
  // the result does not depend on the thread count.
  parallel_for(exec, n, [&](std::size_t j) {
    for (std::size_t k = 0; k < M; ++k) {
      double g = 0.0;
      for (std::size_t p = col_start_[j]; p < col_start_[j + 1]; ++p) g += residual[col_rows_[p] * M + k];
      grad[k * n + j] = g + W[k * n + j] / C_;
    }
  });
  for (std::size_t k = 0; k < M; ++k) {
    double g = 0.0;
    for (std::size_t i = 0; i < N; ++i) g += residual[i * M + k];
    grad[M * n + k] = g;
  }
  return loss;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LbfgsResult minimize_lbfgs(const ObjectiveFn& f, std::vector<double>& x, double tol, int max_iter,
                           std::size_t memory) {
  const std::size_t d = x.size();
  std::vector<double> g(d);
  LbfgsResult res;
  res.value = f(x, g);
  res.grad_norm = std::sqrt(dot(g, g));
  if (res.grad_norm <= tol) {
    res.converged = true;
    return res;
  }

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> history;
  std::vector<double> dir(d), x_new(d), g_new(d), alpha(memory);

  for (int it = 0; it < max_iter; ++it) {
    // Two-loop recursion for dir = -H g.
    for (std::size_t i = 0; i < d; ++i) dir[i] = -g[i];
    for (std::size_t h = history.size(); h-- > 0;) {
      alpha[h] = history[h].rho * dot(history[h].s, dir);
      for (std::size_t i = 0; i < d; ++i) dir[i] -= alpha[h] * history[h].y[i];
    }
    double step = 1.0;
    if (!history.empty()) {
      const auto& last = history.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& v : dir) v *= gamma;
    } else {
      step = 1.0 / res.grad_norm;
    }
    for (std::size_t h = 0; h < history.size(); ++h) {
      const double beta = history[h].rho * dot(history[h].y, dir);
      for (std::size_t i = 0; i < d; ++i) dir[i] += history[h].s[i] * (alpha[h] - beta);
    }
    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      history.clear();
      for (std::size_t i = 0; i < d; ++i) dir[i] = -g[i];
      slope = -res.grad_norm * res.grad_norm;
      step = 1.0 / res.grad_norm;
    }

    double value_new = 0.0;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t i = 0; i < d; ++i) x_new[i] = x[i] + step * dir[i];
      value_new = f(x_new, g_new);
      if (std::isfinite(value_new) && value_new <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    if (!accepted) break;

    Pair p{std::vector<double>(d), std::vector<double>(d), 0.0};
    for (std::size_t i = 0; i < d; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    x.swap(x_new);
    g.swap(g_new);
    res.value = value_new;
    res.grad_norm = std::sqrt(dot(g, g));
    if (sy > 1e-12 * std::sqrt(dot(p.y, p.y)) * std::sqrt(dot(p.s, p.s))) {
      p.rho = 1.0 / sy;
      history.push_back(std::move(p));
      if (history.size() > memory) history.pop_front();
    }
    if (res.grad_norm <= tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace dsx
