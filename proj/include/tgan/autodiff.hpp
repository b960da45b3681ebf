#pragma once

// Define-by-run reverse-mode differentiation over dense row-major arrays.
//
// A Graph owns a tape of nodes. Every op appends one node holding its forward
// value and a vector-Jacobian-product closure; backward() walks the tape in
// reverse creation order, which is a valid topological order. Graphs are
// rebuilt every training step and are confined to a single thread.

#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "tgan/array.hpp"

namespace tgan {

enum class OpKind {
  leaf,
  matmul,
  add_rowwise_bias,
  add,
  sub,
  scale,
  tanh,
  leaky_relu,
  elu,
  square,
  sqrt,
  mean_all,
  sum_rows,
  rowwise_l2_norm,
  rowwise_normalize,
  clamp,
  arccos,
  min_with_const,
  pairwise_row_distance,
  gather,
  softplus,
  softmax_cross_entropy,
};

const char* op_name(OpKind op);

/// Guard added under the square root of rowwise_normalize.
inline constexpr double kNormalizeEps = 1e-12;
/// arccos derivatives are evaluated no closer than this to +-1.
inline constexpr double kArccosGuard = 1e-9;

template <typename Scalar>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph<Scalar>& graph() const { return *graph_; }
  int id() const { return id_; }

  const Array2<Scalar>& value() const { return graph_->value(id_); }
  const Array2<Scalar>& grad() const { return graph_->grad(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  Scalar item() const;

 private:
  friend class Graph<Scalar>;
  Var(Graph<Scalar>* graph, int id) : graph_(graph), id_(id) {}

  Graph<Scalar>* graph_ = nullptr;
  int id_ = -1;
};

template <typename Scalar>
class Graph {
 public:
  using Matrix = Array2<Scalar>;
  using Vjp = std::function<void(Graph&, const Matrix& upstream)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf whose gradient is wanted.
  Var<Scalar> variable(Matrix value);
  /// Leaf treated as a constant; no gradient flows into it.
  Var<Scalar> constant(Matrix value);

  /// Appends an op node. Its gradient is tracked iff any parent's is.
  Var<Scalar> record(OpKind op, Matrix value, std::initializer_list<Var<Scalar>> parents,
                     Vjp vjp);

  /// Fills grad() of every node that requires one with d(loss)/d(node).
  /// Requires a 1x1 loss. Gradients of nodes used more than once are summed.
  void backward(Var<Scalar> loss);

  const Matrix& value(int id) const { return nodes_.at(id).value; }
  const Matrix& grad(int id) const;
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  OpKind op(int id) const { return nodes_.at(id).op; }
  const std::vector<int>& parents(int id) const { return nodes_.at(id).parents; }
  std::size_t size() const { return nodes_.size(); }

  /// Adds a contribution to a node's gradient; no-op for constant subgraphs.
  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& contribution) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = contribution;
    } else {
      n.grad += contribution;
    }
  }

 private:
  struct Node {
    Matrix value;
    mutable Matrix grad;
    OpKind op = OpKind::leaf;
    std::vector<int> parents;
    bool requires_grad = false;
    Vjp vjp;
  };

  Var<Scalar> leaf(Matrix value, bool requires_grad);

  // deque: references returned by value() stay valid as the tape grows.
  std::deque<Node> nodes_;
};

template <typename Scalar>
Scalar Var<Scalar>::item() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("item() on non-scalar node of shape " + shape_str(v));
  }
  return v(0, 0);
}

// ---- ops -------------------------------------------------------------------

template <typename S> Var<S> matmul(Var<S> a, Var<S> b);
/// x (m x n) plus bias row b (1 x n) broadcast over rows.
template <typename S> Var<S> add_rowwise_bias(Var<S> x, Var<S> b);
template <typename S> Var<S> add(Var<S> a, Var<S> b);
template <typename S> Var<S> sub(Var<S> a, Var<S> b);
template <typename S> Var<S> scale(Var<S> a, double s);
template <typename S> Var<S> tanh(Var<S> a);
template <typename S> Var<S> leaky_relu(Var<S> a, double slope);
template <typename S> Var<S> elu(Var<S> a);
template <typename S> Var<S> square(Var<S> a);
template <typename S> Var<S> sqrt(Var<S> a);
/// 1x1 mean of all entries.
template <typename S> Var<S> mean_all(Var<S> a);
/// m x 1: each row summed.
template <typename S> Var<S> sum_rows(Var<S> a);
/// m x 1 Euclidean norm of each row.
template <typename S> Var<S> rowwise_l2_norm(Var<S> a);
/// Each row divided by sqrt(|row|^2 + kNormalizeEps).
template <typename S> Var<S> rowwise_normalize(Var<S> a);
/// Gradient passes only where lo < x < hi.
template <typename S> Var<S> clamp(Var<S> a, double lo, double hi);
/// Inputs must lie in [-1, 1]; the derivative is taken at the input clamped
/// to [-1 + kArccosGuard, 1 - kArccosGuard].
template <typename S> Var<S> arccos(Var<S> a);
/// min(x, c). Subgradient 1 below c and 0 at or above c.
template <typename S> Var<S> min_with_const(Var<S> a, double c);
/// m x k matrix of distances between rows of a and rows of b. Arc distance is
/// arccos(clamp(a_i . b_j, -1, 1)) and is only a geodesic for unit rows.
template <typename S> Var<S> pairwise_row_distance(Var<S> a, Var<S> b, Metric metric);
/// T x 1 column of a(r, c) for each (r, c) index pair.
template <typename S>
Var<S> gather(Var<S> a, std::span<const std::pair<int, int>> index);
/// log(1 + exp(x)), evaluated without overflow.
template <typename S> Var<S> softplus(Var<S> a);
/// 1x1 mean cross-entropy of row-wise softmax(logits) against integer labels.
template <typename S>
Var<S> softmax_cross_entropy(Var<S> logits, std::span<const int> labels);

template <typename S> Var<S> operator+(Var<S> a, Var<S> b) { return add(a, b); }
template <typename S> Var<S> operator-(Var<S> a, Var<S> b) { return sub(a, b); }
template <typename S> Var<S> operator*(double s, Var<S> a) { return scale(a, s); }
template <typename S> Var<S> operator*(Var<S> a, double s) { return scale(a, s); }
template <typename S> Var<S> operator-(Var<S> a) { return scale(a, -1.0); }

// ---- gradient checking -----------------------------------------------------

/// Scalar function of several array arguments, built on a fresh graph.
using MultiArgFn =
    std::function<Var<double>(Graph<double>&, std::span<const Var<double>>)>;

/// Max over coordinates of |analytic - central| / (|analytic| + |central| + 1e-12).
/// step must lie in [1e-7, 1e-4]. Throws NumericError when f is non-finite at
/// a perturbed point.
double grad_check(const MultiArgFn& f, const std::vector<Array2d>& point, double step);
double grad_check(const std::function<Var<double>(Var<double>)>& f, const Array2d& point,
                  double step);

}  // namespace tgan
