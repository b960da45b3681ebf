#include "tgan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <string>

namespace tgan {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::add_rowwise_bias: return "add_rowwise_bias";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::scale: return "scale";
    case OpKind::tanh: return "tanh";
    case OpKind::leaky_relu: return "leaky_relu";
    case OpKind::elu: return "elu";
    case OpKind::square: return "square";
    case OpKind::sqrt: return "sqrt";
    case OpKind::mean_all: return "mean_all";
    case OpKind::sum_rows: return "sum_rows";
    case OpKind::rowwise_l2_norm: return "rowwise_l2_norm";
    case OpKind::rowwise_normalize: return "rowwise_normalize";
    case OpKind::clamp: return "clamp";
    case OpKind::arccos: return "arccos";
    case OpKind::min_with_const: return "min_with_const";
    case OpKind::pairwise_row_distance: return "pairwise_row_distance";
    case OpKind::gather: return "gather";
    case OpKind::softplus: return "softplus";
    case OpKind::softmax_cross_entropy: return "softmax_cross_entropy";
  }
  return "unknown";
}

// ---- Graph -----------------------------------------------------------------

template <typename Scalar>
Var<Scalar> Graph<Scalar>::leaf(Matrix value, bool requires_grad) {
  if (!all_finite(value)) {
    throw NumericError("leaf of shape " + shape_str(value) + " holds non-finite values");
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename Scalar>
Var<Scalar> Graph<Scalar>::variable(Matrix value) {
  return leaf(std::move(value), true);
}

template <typename Scalar>
Var<Scalar> Graph<Scalar>::constant(Matrix value) {
  return leaf(std::move(value), false);
}

template <typename Scalar>
Var<Scalar> Graph<Scalar>::record(OpKind op, Matrix value,
                                  std::initializer_list<Var<Scalar>> parents, Vjp vjp) {
  if (!all_finite(value)) {
    throw NumericError(std::string(op_name(op)) + " produced non-finite output of shape " +
                       shape_str(value));
  }
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (const auto& p : parents) {
    if (&p.graph() != this) throw ContractError(std::string(op_name(op)) + ": operand from another graph");
    n.parents.push_back(p.id());
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.vjp = std::move(vjp);
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename Scalar>
const typename Graph<Scalar>::Matrix& Graph<Scalar>::grad(int id) const {
  const Node& n = nodes_.at(id);
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename Scalar>
void Graph<Scalar>::backward(Var<Scalar> loss) {
  if (&loss.graph() != this) throw ContractError("backward: loss belongs to another graph");
  const Matrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward requires a 1x1 loss, got " + shape_str(lv));
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0 || !n.vjp) continue;
    n.vjp(*this, n.grad);
  }
}

// ---- ops -------------------------------------------------------------------

namespace {

template <typename M>
[[noreturn]] void shape_mismatch(OpKind op, const M& a, const M& b) {
  throw DimensionError(std::string(op_name(op)) + ": incompatible shapes " + shape_str(a) +
                       " and " + shape_str(b));
}

template <typename S>
void same_shape(OpKind op, Var<S> a, Var<S> b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch(op, a.value(), b.value());
}

}  // namespace

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  using M = Array2<S>;
  if (a.cols() != b.rows()) shape_mismatch(OpKind::matmul, a.value(), b.value());
  M out;
  out.noalias() = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return a.graph().record(OpKind::matmul, std::move(out), {a, b},
                          [ia, ib](Graph<S>& g, const M& up) {
                            if (g.requires_grad(ia)) g.accumulate(ia, up * g.value(ib).transpose());
                            if (g.requires_grad(ib)) g.accumulate(ib, g.value(ia).transpose() * up);
                          });
}

template <typename S>
Var<S> add_rowwise_bias(Var<S> x, Var<S> b) {
  using M = Array2<S>;
  if (b.rows() != 1 || b.cols() != x.cols()) {
    shape_mismatch(OpKind::add_rowwise_bias, x.value(), b.value());
  }
  M out = x.value().rowwise() + b.value().row(0);
  const int ix = x.id(), ib = b.id();
  return x.graph().record(OpKind::add_rowwise_bias, std::move(out), {x, b},
                          [ix, ib](Graph<S>& g, const M& up) {
                            g.accumulate(ix, up);
                            if (g.requires_grad(ib)) g.accumulate(ib, up.colwise().sum());
                          });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  using M = Array2<S>;
  same_shape(OpKind::add, a, b);
  M out = a.value() + b.value();
  const int ia = a.id(), ib = b.id();
  return a.graph().record(OpKind::add, std::move(out), {a, b}, [ia, ib](Graph<S>& g, const M& up) {
    g.accumulate(ia, up);
    g.accumulate(ib, up);
  });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  using M = Array2<S>;
  same_shape(OpKind::sub, a, b);
  M out = a.value() - b.value();
  const int ia = a.id(), ib = b.id();
  return a.graph().record(OpKind::sub, std::move(out), {a, b}, [ia, ib](Graph<S>& g, const M& up) {
    g.accumulate(ia, up);
    if (g.requires_grad(ib)) g.accumulate(ib, -up);
  });
}

template <typename S>
Var<S> scale(Var<S> a, double s) {
  using M = Array2<S>;
  const S k = static_cast<S>(s);
  M out = k * a.value();
  const int ia = a.id();
  return a.graph().record(OpKind::scale, std::move(out), {a},
                          [ia, k](Graph<S>& g, const M& up) { g.accumulate(ia, k * up); });
}

template <typename S>
Var<S> tanh(Var<S> a) {
  using M = Array2<S>;
  M out;
  if constexpr (std::is_same_v<S, double>) {
    // Eigen's double tanh is scalar libm; this form vectorizes and stays
    // within a few ulp of 1 in absolute terms.
    const auto& x = a.value().array();
    out = (x.sign() * (1.0 - 2.0 / ((2.0 * x.abs()).exp() + 1.0))).matrix();
  } else {
    out = a.value().array().tanh().matrix();
  }
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  return a.graph().record(OpKind::tanh, std::move(out), {a}, [ia, self](Graph<S>& g, const M& up) {
    const auto& y = g.value(self).array();
    g.accumulate(ia, (up.array() * (S(1) - y.square())).matrix());
  });
}

template <typename S>
Var<S> leaky_relu(Var<S> a, double slope) {
  using M = Array2<S>;
  const S k = static_cast<S>(slope);
  const auto& x = a.value().array();
  M out = (x > S(0)).select(x, k * x).matrix();
  const int ia = a.id();
  return a.graph().record(OpKind::leaky_relu, std::move(out), {a},
                          [ia, k](Graph<S>& g, const M& up) {
                            const auto& x = g.value(ia).array();
                            g.accumulate(ia, (x > S(0)).select(up.array(), k * up.array()).matrix());
                          });
}

template <typename S>
Var<S> elu(Var<S> a) {
  using M = Array2<S>;
  const auto& x = a.value().array();
  M out = (x > S(0)).select(x, x.exp() - S(1)).matrix();
  const int ia = a.id();
  return a.graph().record(OpKind::elu, std::move(out), {a}, [ia](Graph<S>& g, const M& up) {
    const auto& x = g.value(ia).array();
    g.accumulate(ia, (x > S(0)).select(up.array(), up.array() * x.exp()).matrix());
  });
}

template <typename S>
Var<S> square(Var<S> a) {
  using M = Array2<S>;
  M out = a.value().array().square().matrix();
  const int ia = a.id();
  return a.graph().record(OpKind::square, std::move(out), {a}, [ia](Graph<S>& g, const M& up) {
    g.accumulate(ia, (S(2) * g.value(ia).array() * up.array()).matrix());
  });
}

template <typename S>
Var<S> sqrt(Var<S> a) {
  using M = Array2<S>;
  if ((a.value().array() < S(0)).any()) {
    throw NumericError("sqrt of negative entry in array of shape " + shape_str(a.value()));
  }
  M out = a.value().array().sqrt().matrix();
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  return a.graph().record(OpKind::sqrt, std::move(out), {a}, [ia, self](Graph<S>& g, const M& up) {
    g.accumulate(ia, (up.array() / (S(2) * g.value(self).array())).matrix());
  });
}

template <typename S>
Var<S> mean_all(Var<S> a) {
  using M = Array2<S>;
  if (a.value().size() == 0) throw DimensionError("mean_all: empty array");
  M out(1, 1);
  out(0, 0) = a.value().mean();
  const int ia = a.id();
  return a.graph().record(OpKind::mean_all, std::move(out), {a}, [ia](Graph<S>& g, const M& up) {
    const auto& x = g.value(ia);
    g.accumulate(ia, M::Constant(x.rows(), x.cols(), up(0, 0) / static_cast<S>(x.size())));
  });
}

template <typename S>
Var<S> sum_rows(Var<S> a) {
  using M = Array2<S>;
  M out = a.value().rowwise().sum();
  const int ia = a.id();
  return a.graph().record(OpKind::sum_rows, std::move(out), {a}, [ia](Graph<S>& g, const M& up) {
    g.accumulate(ia, up.col(0).replicate(1, g.value(ia).cols()));
  });
}

template <typename S>
Var<S> rowwise_l2_norm(Var<S> a) {
  using M = Array2<S>;
  M out = a.value().rowwise().norm();
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  return a.graph().record(OpKind::rowwise_l2_norm, std::move(out), {a},
                          [ia, self](Graph<S>& g, const M& up) {
                            const M& x = g.value(ia);
                            const M& n = g.value(self);
                            M dx = M::Zero(x.rows(), x.cols());
                            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                              if (n(i, 0) > S(0)) dx.row(i) = (up(i, 0) / n(i, 0)) * x.row(i);
                            }
                            g.accumulate(ia, dx);
                          });
}

template <typename S>
Var<S> rowwise_normalize(Var<S> a) {
  using M = Array2<S>;
  const M& x = a.value();
  Eigen::Matrix<S, Eigen::Dynamic, 1> s =
      (x.rowwise().squaredNorm().array() + static_cast<S>(kNormalizeEps)).sqrt();
  M out = s.cwiseInverse().asDiagonal() * x;
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  return a.graph().record(OpKind::rowwise_normalize, std::move(out), {a},
                          [ia, self, s = std::move(s)](Graph<S>& g, const M& up) {
                            const M& y = g.value(self);
                            // (I - y y^T) up / s, row by row.
                            Eigen::Matrix<S, Eigen::Dynamic, 1> proj =
                                (y.array() * up.array()).rowwise().sum();
                            M dx = up - proj.asDiagonal() * y;
                            g.accumulate(ia, s.cwiseInverse().asDiagonal() * dx);
                          });
}

template <typename S>
Var<S> clamp(Var<S> a, double lo, double hi) {
  using M = Array2<S>;
  if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
  const S l = static_cast<S>(lo), h = static_cast<S>(hi);
  M out = a.value().cwiseMax(l).cwiseMin(h);
  const int ia = a.id();
  return a.graph().record(OpKind::clamp, std::move(out), {a}, [ia, l, h](Graph<S>& g, const M& up) {
    const auto& x = g.value(ia).array();
    g.accumulate(ia, ((x > l) && (x < h)).select(up.array(), S(0)).matrix());
  });
}

template <typename S>
Var<S> arccos(Var<S> a) {
  using M = Array2<S>;
  if ((a.value().array().abs() > S(1)).any()) {
    throw NumericError("arccos: input outside [-1, 1] in array of shape " + shape_str(a.value()));
  }
  M out = a.value().array().acos().matrix();
  const int ia = a.id();
  return a.graph().record(OpKind::arccos, std::move(out), {a}, [ia](Graph<S>& g, const M& up) {
    const M& x = g.value(ia);
    M dx(x.rows(), x.cols());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double c = std::clamp(static_cast<double>(x.data()[k]), -1.0 + kArccosGuard,
                                  1.0 - kArccosGuard);
      dx.data()[k] = static_cast<S>(-static_cast<double>(up.data()[k]) / std::sqrt(1.0 - c * c));
    }
    g.accumulate(ia, dx);
  });
}

template <typename S>
Var<S> min_with_const(Var<S> a, double c) {
  using M = Array2<S>;
  const S k = static_cast<S>(c);
  M out = a.value().cwiseMin(k);
  const int ia = a.id();
  return a.graph().record(OpKind::min_with_const, std::move(out), {a},
                          [ia, k](Graph<S>& g, const M& up) {
                            g.accumulate(ia, (g.value(ia).array() < k).select(up.array(), S(0)).matrix());
                          });
}

template <typename S>
Var<S> pairwise_row_distance(Var<S> a, Var<S> b, Metric metric) {
  using M = Array2<S>;
  const M& A = a.value();
  const M& B = b.value();
  if (A.cols() != B.cols()) shape_mismatch(OpKind::pairwise_row_distance, A, B);
  const Eigen::Index m = A.rows(), k = B.rows();
  M out(m, k);
  const int ia = a.id(), ib = b.id();

  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) out(i, j) = (A.row(i) - B.row(j)).norm();
  }
  // h holds d(distance)/d(chord) / chord, so both metrics share the chord
  // backward. The arc uses 2 asin(chord / 2), which stays exact for coincident
  // rows where arccos of a rounded dot product does not.
  M h_scale(m, k);
  for (Eigen::Index t = 0; t < out.size(); ++t) {
    const double chord = static_cast<double>(out.data()[t]);
    double scale = chord > 0.0 ? 1.0 / chord : 0.0;  // subgradient 0 where rows coincide
    if (metric == Metric::arc) {
      const double half = 0.5 * chord;
      if (half >= 1.0) {
        scale = 0.0;  // antipodal: clamp active
      } else {
        scale /= std::sqrt(std::max(1.0 - half * half, kArccosGuard));
      }
      out.data()[t] = static_cast<S>(2.0 * std::asin(std::min(1.0, half)));
    }
    h_scale.data()[t] = static_cast<S>(scale);
  }
  return a.graph().record(OpKind::pairwise_row_distance, std::move(out), {a, b},
                          [ia, ib, h_scale = std::move(h_scale)](Graph<S>& g, const M& up) {
                            const M h = up.cwiseProduct(h_scale);
                            const M& A = g.value(ia);
                            const M& B = g.value(ib);
                            if (g.requires_grad(ia)) {
                              M da = h.rowwise().sum().asDiagonal() * A;
                              da.noalias() -= h * B;
                              g.accumulate(ia, da);
                            }
                            if (g.requires_grad(ib)) {
                              M db = h.colwise().sum().transpose().asDiagonal() * B;
                              db.noalias() -= h.transpose() * A;
                              g.accumulate(ib, db);
                            }
                          });
}

template <typename S>
Var<S> gather(Var<S> a, std::span<const std::pair<int, int>> index) {
  using M = Array2<S>;
  const M& x = a.value();
  M out(static_cast<Eigen::Index>(index.size()), 1);
  for (std::size_t t = 0; t < index.size(); ++t) {
    const auto [r, c] = index[t];
    if (r < 0 || c < 0 || r >= x.rows() || c >= x.cols()) {
      throw ContractError("gather: index (" + std::to_string(r) + ", " + std::to_string(c) +
                          ") out of range for shape " + shape_str(x));
    }
    out(static_cast<Eigen::Index>(t), 0) = x(r, c);
  }
  const int ia = a.id();
  std::vector<std::pair<int, int>> idx(index.begin(), index.end());
  return a.graph().record(OpKind::gather, std::move(out), {a},
                          [ia, idx = std::move(idx)](Graph<S>& g, const M& up) {
                            const M& x = g.value(ia);
                            M dx = M::Zero(x.rows(), x.cols());
                            for (std::size_t t = 0; t < idx.size(); ++t) {
                              dx(idx[t].first, idx[t].second) += up(static_cast<Eigen::Index>(t), 0);
                            }
                            g.accumulate(ia, dx);
                          });
}

template <typename S>
Var<S> softplus(Var<S> a) {
  using M = Array2<S>;
  const auto& x = a.value().array();
  M out = (x.max(S(0)) + (-x.abs()).exp().log1p()).matrix();
  const int ia = a.id();
  return a.graph().record(OpKind::softplus, std::move(out), {a}, [ia](Graph<S>& g, const M& up) {
    const auto& x = g.value(ia).array();
    // logistic(x), written to avoid exp overflow on either side.
    auto e = (-x.abs()).exp();
    auto sig = (x >= S(0)).select(S(1) / (S(1) + e), e / (S(1) + e));
    g.accumulate(ia, (up.array() * sig).matrix());
  });
}

template <typename S>
Var<S> softmax_cross_entropy(Var<S> logits, std::span<const int> labels) {
  using M = Array2<S>;
  const M& z = logits.value();
  if (static_cast<Eigen::Index>(labels.size()) != z.rows() || z.rows() == 0) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for logits of shape " + shape_str(z));
  }
  M prob(z.rows(), z.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= z.cols()) throw ContractError("softmax_cross_entropy: label out of range");
    const S mx = z.row(i).maxCoeff();
    auto e = (z.row(i).array() - mx).exp();
    const S sum = e.sum();
    prob.row(i) = (e / sum).matrix();
    total += static_cast<double>(mx + std::log(sum) - z(i, y));
  }
  M out(1, 1);
  out(0, 0) = static_cast<S>(total / static_cast<double>(z.rows()));
  const int il = logits.id();
  std::vector<int> lab(labels.begin(), labels.end());
  return logits.graph().record(
      OpKind::softmax_cross_entropy, std::move(out), {logits},
      [il, prob = std::move(prob), lab = std::move(lab)](Graph<S>& g, const M& up) {
        M d = prob;
        for (std::size_t i = 0; i < lab.size(); ++i) d(static_cast<Eigen::Index>(i), lab[i]) -= S(1);
        g.accumulate(il, (up(0, 0) / static_cast<S>(lab.size())) * d);
      });
}

// ---- gradient checking -----------------------------------------------------

double grad_check(const MultiArgFn& f, const std::vector<Array2d>& point, double step) {
  if (!(step >= 1e-7 && step <= 1e-4)) {
    throw ContractError("grad_check: step " + std::to_string(step) + " outside [1e-7, 1e-4]");
  }
  std::vector<Array2d> analytic;
  {
    Graph<double> g;
    std::vector<Var<double>> vars;
    for (const auto& p : point) vars.push_back(g.variable(p));
    Var<double> loss = f(g, vars);
    g.backward(loss);
    for (const auto& v : vars) analytic.push_back(v.grad());
  }

  auto eval = [&f](const std::vector<Array2d>& at) {
    Graph<double> g;
    std::vector<Var<double>> vars;
    for (const auto& p : at) vars.push_back(g.constant(p));
    const double v = f(g, vars).item();
    if (!std::isfinite(v)) throw NumericError("grad_check: function non-finite at perturbed point");
    return v;
  };

  std::vector<Array2d> probe = point;
  double worst = 0.0;
  for (std::size_t t = 0; t < probe.size(); ++t) {
    for (Eigen::Index k = 0; k < probe[t].size(); ++k) {
      const double x0 = probe[t].data()[k];
      probe[t].data()[k] = x0 + step;
      const double fp = eval(probe);
      probe[t].data()[k] = x0 - step;
      const double fm = eval(probe);
      probe[t].data()[k] = x0;
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[t].data()[k];
      worst = std::max(worst, std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12));
    }
  }
  return worst;
}

double grad_check(const std::function<Var<double>(Var<double>)>& f, const Array2d& point,
                  double step) {
  return grad_check([&f](Graph<double>&, std::span<const Var<double>> v) { return f(v[0]); },
                    std::vector<Array2d>{point}, step);
}

// ---- instantiation ---------------------------------------------------------

#define TGAN_INSTANTIATE_AUTODIFF(S)                                                    \
  template class Graph<S>;                                                              \
  template Var<S> matmul(Var<S>, Var<S>);                                               \
  template Var<S> add_rowwise_bias(Var<S>, Var<S>);                                     \
  template Var<S> add(Var<S>, Var<S>);                                                  \
  template Var<S> sub(Var<S>, Var<S>);                                                  \
  template Var<S> scale(Var<S>, double);                                                \
  template Var<S> tanh(Var<S>);                                                         \
  template Var<S> leaky_relu(Var<S>, double);                                           \
  template Var<S> elu(Var<S>);                                                          \
  template Var<S> square(Var<S>);                                                       \
  template Var<S> sqrt(Var<S>);                                                         \
  template Var<S> mean_all(Var<S>);                                                     \
  template Var<S> sum_rows(Var<S>);                                                     \
  template Var<S> rowwise_l2_norm(Var<S>);                                              \
  template Var<S> rowwise_normalize(Var<S>);                                            \
  template Var<S> clamp(Var<S>, double, double);                                        \
  template Var<S> arccos(Var<S>);                                                       \
  template Var<S> min_with_const(Var<S>, double);                                       \
  template Var<S> pairwise_row_distance(Var<S>, Var<S>, Metric);                        \
  template Var<S> gather(Var<S>, std::span<const std::pair<int, int>>);                 \
  template Var<S> softplus(Var<S>);                                                     \
  template Var<S> softmax_cross_entropy(Var<S>, std::span<const int>);

TGAN_INSTANTIATE_AUTODIFF(double)
TGAN_INSTANTIATE_AUTODIFF(float)

#undef TGAN_INSTANTIATE_AUTODIFF

}  // namespace tgan
