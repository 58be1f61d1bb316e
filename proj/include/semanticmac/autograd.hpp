#pragma once

// Reverse-mode automatic differentiation over dense double matrices.
// Every forward op records a pull-back closure; backward() runs them in
// reverse topological order. Scalars are 1x1 matrices.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "semanticmac/util.hpp"

namespace smac::ag {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Matrix value;
  Matrix grad;  // allocated lazily in backward()
  bool requires_grad = false;
  bool grad_ready = false;
  std::vector<Var> parents;
  std::function<void(Node&)> pull;  // distributes this->grad into parents

  int rows() const { return static_cast<int>(value.rows()); }
  int cols() const { return static_cast<int>(value.cols()); }
  double scalar() const {
    require(value.size() == 1, "scalar() on non-scalar node");
    return value(0, 0);
  }
  void ensure_grad() {
    if (!grad_ready) {
      grad = Matrix::Zero(value.rows(), value.cols());
      grad_ready = true;
    }
  }
};

// Global switch: with gradients disabled, ops emit leaf nodes with no tape.
// Inference and label-refresh passes run under NoGradGuard.
inline bool& grad_enabled() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_enabled()) { grad_enabled() = false; }
  ~NoGradGuard() { grad_enabled() = prev; }
};

inline Var constant(Matrix v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

inline Var constant_scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

/// Trainable leaf.
inline Var param(Matrix v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return n;
}

namespace detail {

inline Var make(Matrix value, std::vector<Var> parents, std::function<void(Node&)> pull) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (grad_enabled()) {
    for (const auto& p : parents)
      if (p->requires_grad) {
        n->requires_grad = true;
        break;
      }
    if (n->requires_grad) {
      n->parents = std::move(parents);
      n->pull = std::move(pull);
    }
  }
  return n;
}

inline void add_grad(const Var& p, const Matrix& g) {
  if (!p->requires_grad) return;
  p->ensure_grad();
  p->grad += g;
}

}  // namespace detail

// ---------------------------------------------------------------- basic ops

inline Var add(const Var& a, const Var& b) {
  require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(),
          "add: shape mismatch");
  return detail::make(a->value + b->value, {a, b}, [a, b](Node& n) {
    detail::add_grad(a, n.grad);
    detail::add_grad(b, n.grad);
  });
}

inline Var sub(const Var& a, const Var& b) {
  require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(),
          "sub: shape mismatch");
  return detail::make(a->value - b->value, {a, b}, [a, b](Node& n) {
    detail::add_grad(a, n.grad);
    detail::add_grad(b, -n.grad);
  });
}

/// Adds a 1xd row vector to every row of a.
inline Var add_rowvec(const Var& a, const Var& row) {
  require(row->value.rows() == 1 && row->value.cols() == a->value.cols(),
          "add_rowvec: row must be 1 x cols(a)");
  Matrix out = a->value.rowwise() + row->value.row(0);
  return detail::make(std::move(out), {a, row}, [a, row](Node& n) {
    detail::add_grad(a, n.grad);
    detail::add_grad(row, n.grad.colwise().sum());
  });
}

inline Var matmul(const Var& a, const Var& b) {
  require(a->value.cols() == b->value.rows(), "matmul: inner dims differ");
  return detail::make(a->value * b->value, {a, b}, [a, b](Node& n) {
    detail::add_grad(a, n.grad * b->value.transpose());
    detail::add_grad(b, a->value.transpose() * n.grad);
  });
}

inline Var transpose(const Var& a) {
  return detail::make(a->value.transpose(), {a},
                      [a](Node& n) { detail::add_grad(a, n.grad.transpose()); });
}

inline Var cmul(const Var& a, const Var& b) {
  require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(),
          "cmul: shape mismatch");
  return detail::make(a->value.cwiseProduct(b->value), {a, b}, [a, b](Node& n) {
    detail::add_grad(a, n.grad.cwiseProduct(b->value));
    detail::add_grad(b, n.grad.cwiseProduct(a->value));
  });
}

inline Var cdiv(const Var& a, const Var& b) {
  require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(),
          "cdiv: shape mismatch");
  return detail::make(a->value.cwiseQuotient(b->value), {a, b}, [a, b](Node& n) {
    detail::add_grad(a, n.grad.cwiseQuotient(b->value));
    detail::add_grad(b, -n.grad.cwiseProduct(a->value).cwiseQuotient(b->value.cwiseProduct(b->value)));
  });
}

inline Var scale(const Var& a, double s) {
  return detail::make(a->value * s, {a}, [a, s](Node& n) { detail::add_grad(a, n.grad * s); });
}

inline Var add_scalar(const Var& a, double s) {
  return detail::make(a->value.array() + s, {a}, [a](Node& n) { detail::add_grad(a, n.grad); });
}

inline Var neg(const Var& a) { return scale(a, -1.0); }

inline Var exp(const Var& a) {
  Matrix out = a->value.array().exp();
  return detail::make(out, {a}, [a, out](Node& n) {
    detail::add_grad(a, n.grad.cwiseProduct(out));
  });
}

inline Var log(const Var& a) {
  return detail::make(a->value.array().log(), {a}, [a](Node& n) {
    detail::add_grad(a, n.grad.cwiseQuotient(a->value));
  });
}

inline Var relu(const Var& a) {
  Matrix out = a->value.cwiseMax(0.0);
  return detail::make(std::move(out), {a}, [a](Node& n) {
    Matrix mask = (a->value.array() > 0.0).cast<double>();
    detail::add_grad(a, n.grad.cwiseProduct(mask));
  });
}

// -------------------------------------------------------- shape manipulation

inline Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: empty");
  int cols = parts[0]->cols();
  int rows = 0;
  for (const auto& p : parts) {
    require(p->cols() == cols, "concat_rows: col mismatch");
    rows += p->rows();
  }
  Matrix out(rows, cols);
  int r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p->rows()) = p->value;
    r += p->rows();
  }
  return detail::make(std::move(out), parts, [parts](Node& n) {
    int r = 0;
    for (const auto& p : parts) {
      detail::add_grad(p, n.grad.middleRows(r, p->rows()));
      r += p->rows();
    }
  });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: empty");
  int rows = parts[0]->rows();
  int cols = 0;
  for (const auto& p : parts) {
    require(p->rows() == rows, "concat_cols: row mismatch");
    cols += p->cols();
  }
  Matrix out(rows, cols);
  int c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p->cols()) = p->value;
    c += p->cols();
  }
  return detail::make(std::move(out), parts, [parts](Node& n) {
    int c = 0;
    for (const auto& p : parts) {
      detail::add_grad(p, n.grad.middleCols(c, p->cols()));
      c += p->cols();
    }
  });
}

inline Var slice_rows(const Var& a, int start, int count) {
  require(start >= 0 && count >= 0 && start + count <= a->rows(), "slice_rows: out of range");
  Matrix out = a->value.middleRows(start, count);
  return detail::make(std::move(out), {a}, [a, start, count](Node& n) {
    Matrix g = Matrix::Zero(a->rows(), a->cols());
    g.middleRows(start, count) = n.grad;
    detail::add_grad(a, g);
  });
}

inline Var slice_cols(const Var& a, int start, int count) {
  require(start >= 0 && count >= 0 && start + count <= a->cols(), "slice_cols: out of range");
  Matrix out = a->value.middleCols(start, count);
  return detail::make(std::move(out), {a}, [a, start, count](Node& n) {
    Matrix g = Matrix::Zero(a->rows(), a->cols());
    g.middleCols(start, count) = n.grad;
    detail::add_grad(a, g);
  });
}

/// [a a ... a], `times` copies along the column axis.
inline Var tile_cols(const Var& a, int times) {
  require(times >= 1, "tile_cols: times < 1");
  int c = a->cols();
  Matrix out(a->rows(), c * times);
  for (int t = 0; t < times; ++t) out.middleCols(t * c, c) = a->value;
  return detail::make(std::move(out), {a}, [a, times, c](Node& n) {
    Matrix g = Matrix::Zero(a->rows(), c);
    for (int t = 0; t < times; ++t) g += n.grad.middleCols(t * c, c);
    detail::add_grad(a, g);
  });
}

// ----------------------------------------------------------------- reductions

inline Var mean_rows(const Var& a) {  // n x d -> 1 x d
  Matrix out = a->value.colwise().mean();
  int n = a->rows();
  return detail::make(std::move(out), {a}, [a, n](Node& n_) {
    detail::add_grad(a, (Matrix::Ones(n, 1) * n_.grad) / static_cast<double>(n));
  });
}

inline Var sum_rows(const Var& a) {  // n x d -> n x 1
  Matrix out = a->value.rowwise().sum();
  return detail::make(std::move(out), {a}, [a](Node& n) {
    detail::add_grad(a, n.grad * Matrix::Ones(1, a->cols()));
  });
}

inline Var sum_all(const Var& a) {
  return detail::make(Matrix::Constant(1, 1, a->value.sum()), {a}, [a](Node& n) {
    detail::add_grad(a, Matrix::Constant(a->rows(), a->cols(), n.grad(0, 0)));
  });
}

inline Var mean_all(const Var& a) { return scale(sum_all(a), 1.0 / a->value.size()); }

// --------------------------------------------------------------- activations

inline Var softmax_rows(const Var& a) {
  Matrix out(a->rows(), a->cols());
  for (int i = 0; i < a->rows(); ++i) {
    Eigen::RowVectorXd row = a->value.row(i);
    double mx = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - mx).exp();
    out.row(i) = e / e.sum();
  }
  return detail::make(out, {a}, [a, out](Node& n) {
    Matrix g(out.rows(), out.cols());
    for (int i = 0; i < out.rows(); ++i) {
      double dot = n.grad.row(i).cwiseProduct(out.row(i)).sum();
      Eigen::RowVectorXd shifted = (n.grad.row(i).array() - dot).matrix();
      g.row(i) = out.row(i).cwiseProduct(shifted);
    }
    detail::add_grad(a, g);
  });
}

inline Var log_softmax_rows(const Var& a) {
  Matrix out(a->rows(), a->cols());
  for (int i = 0; i < a->rows(); ++i) {
    Eigen::RowVectorXd row = a->value.row(i);
    double mx = row.maxCoeff();
    double lse = mx + std::log((row.array() - mx).exp().sum());
    out.row(i) = row.array() - lse;
  }
  return detail::make(out, {a}, [a, out](Node& n) {
    Matrix soft = out.array().exp();
    Matrix g(out.rows(), out.cols());
    for (int i = 0; i < out.rows(); ++i) {
      double s = n.grad.row(i).sum();
      g.row(i) = n.grad.row(i) - s * soft.row(i);
    }
    detail::add_grad(a, g);
  });
}

/// Row-wise layer norm with learned 1xd gain/bias.
inline Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5) {
  require(gain->rows() == 1 && gain->cols() == a->cols(), "layer_norm: gain shape");
  require(bias->rows() == 1 && bias->cols() == a->cols(), "layer_norm: bias shape");
  int d = a->cols();
  Matrix xhat(a->rows(), d);
  Eigen::VectorXd inv_std(a->rows());
  for (int i = 0; i < a->rows(); ++i) {
    double mu = a->value.row(i).mean();
    double var = (a->value.row(i).array() - mu).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_std(i) = is;
    xhat.row(i) = (a->value.row(i).array() - mu) * is;
  }
  Matrix out = (xhat.array().rowwise() * gain->value.row(0).array()).rowwise() +
               bias->value.row(0).array();
  return detail::make(std::move(out), {a, gain, bias}, [a, gain, bias, xhat, inv_std, d](Node& n) {
    detail::add_grad(gain, n.grad.cwiseProduct(xhat).colwise().sum());
    detail::add_grad(bias, n.grad.colwise().sum());
    if (a->requires_grad) {
      Matrix ga(a->rows(), d);
      for (int i = 0; i < a->rows(); ++i) {
        Eigen::RowVectorXd dxhat = n.grad.row(i).cwiseProduct(gain->value.row(0));
        double m1 = dxhat.mean();
        double m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
        ga.row(i) = inv_std(i) * (dxhat.array() - m1 - xhat.row(i).array() * m2);
      }
      detail::add_grad(a, ga);
    }
  });
}

/// Adaptive 1-D average pooling over the row axis: n rows -> m rows,
/// bin i = mean of rows [floor(i*n/m), ceil((i+1)*n/m)).
inline Var adaptive_avg_pool_rows(const Var& a, int m) {
  int n = a->rows();
  require(m >= 1, "adaptive_avg_pool_rows: m < 1");
  std::vector<std::pair<int, int>> bins(m);
  for (int i = 0; i < m; ++i) {
    int lo = static_cast<int>(std::floor(static_cast<double>(i) * n / m));
    int hi = static_cast<int>(std::ceil(static_cast<double>(i + 1) * n / m));
    bins[i] = {lo, hi};
  }
  Matrix out(m, a->cols());
  for (int i = 0; i < m; ++i) {
    auto [lo, hi] = bins[i];
    out.row(i) = a->value.middleRows(lo, hi - lo).colwise().mean();
  }
  return detail::make(std::move(out), {a}, [a, bins](Node& nd) {
    Matrix g = Matrix::Zero(a->rows(), a->cols());
    for (size_t i = 0; i < bins.size(); ++i) {
      auto [lo, hi] = bins[i];
      double w = 1.0 / (hi - lo);
      for (int r = lo; r < hi; ++r) g.row(r) += w * nd.grad.row(static_cast<int>(i));
    }
    detail::add_grad(a, g);
  });
}

/// L2-normalizes each row to unit length. Throws on (near-)zero rows.
inline Var normalize_rows(const Var& a, double min_norm = 1e-12) {
  Matrix out(a->rows(), a->cols());
  Eigen::VectorXd norms(a->rows());
  for (int i = 0; i < a->rows(); ++i) {
    double nr = a->value.row(i).norm();
    require(nr > min_norm, "degenerate representation: zero-norm row cannot be normalized");
    norms(i) = nr;
    out.row(i) = a->value.row(i) / nr;
  }
  return detail::make(out, {a}, [a, out, norms](Node& n) {
    Matrix g(out.rows(), out.cols());
    for (int i = 0; i < out.rows(); ++i) {
      double dot = n.grad.row(i).cwiseProduct(out.row(i)).sum();
      g.row(i) = (n.grad.row(i) - dot * out.row(i)) / norms(i);
    }
    detail::add_grad(a, g);
  });
}

/// Inverted dropout; identity when `training` is false or rate == 0.
inline Var dropout(const Var& a, double rate, std::mt19937_64& rng, bool training) {
  if (!training || rate <= 0.0) return a;
  require(rate < 1.0, "dropout: rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(a->rows(), a->cols());
  double inv = 1.0 / (1.0 - rate);
  for (int i = 0; i < a->rows(); ++i)
    for (int j = 0; j < a->cols(); ++j) mask(i, j) = keep(rng) ? inv : 0.0;
  return cmul(a, constant(mask));
}

// ------------------------------------------------------------------ backward

/// Accumulates gradients of `root` (scalar) into every reachable parameter.
inline void backward(const Var& root) {
  require(root->value.size() == 1, "backward: root must be scalar");
  if (!root->requires_grad) return;
  // iterative post-order topological sort
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->pull && node->grad_ready) node->pull(*node);
  }
}

inline void zero_grad(const std::vector<Var>& params) {
  for (const auto& p : params) {
    p->grad_ready = false;
    p->grad.resize(0, 0);
  }
}

}  // namespace smac::ag
