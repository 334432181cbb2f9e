#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "date_ad/common.hpp"

namespace date_ad::ad {

template <typename S>
using EigenMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major matrix. The whole numeric core works on 2-D values;
// vectors are 1xN or Nx1, scalars are 1x1.
template <typename S>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<S> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, S(0)) {}

  static Mat zeros(int r, int c) { return Mat(r, c); }
  static Mat scalar(S x) {
    Mat m(1, 1);
    m.v[0] = x;
    return m;
  }

  std::size_t size() const { return v.size(); }
  S& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  S operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  Eigen::Map<EigenMat<S>> map() { return {v.data(), rows, cols}; }
  Eigen::Map<const EigenMat<S>> map() const { return {v.data(), rows, cols}; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const {
    for (S x : v) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }
};

// Row-wise softmax on a concrete matrix (no tape). Used by the probability
// accessors and the scorers.
template <typename S>
void softmax_rows_inplace(Mat<S>& m) {
  for (int i = 0; i < m.rows; ++i) {
    S* row = m.v.data() + static_cast<std::size_t>(i) * m.cols;
    S mx = row[0];
    for (int j = 1; j < m.cols; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < m.cols; ++j) z += std::exp(static_cast<double>(row[j] - mx));
    for (int j = 0; j < m.cols; ++j) {
      row[j] = static_cast<S>(std::exp(static_cast<double>(row[j] - mx)) / z);
    }
  }
}

// A trainable tensor owned by a model. Gradients are accumulated here by the
// trainer after per-document tapes have run.
template <typename S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), S(0)); }
};

using VarId = std::int32_t;
inline constexpr VarId kNoVar = -1;

// Reverse-mode tape over Mat values. A tape is built (and differentiated)
// single-threaded; independent tapes may run in parallel threads as long as
// parameter values stay immutable during the forward/backward pass.
template <typename S>
class Tape {
 public:
  VarId input(Mat<S> value) { return push(std::move(value), false, nullptr); }

  // Parameter leaf. The tape aliases the parameter's storage, so parameter
  // values must stay unchanged for the lifetime of the tape.
  VarId param(Param<S>* p) {
    VarId id = push(Mat<S>(), true, p);
    node(id).external = &p->value;
    return id;
  }

  const Mat<S>& value(VarId id) const { return val(id); }
  const Mat<S>& grad(VarId id) const { return nodes_[id].grad; }
  S scalar(VarId id) const { return nodes_[id].value.v.at(0); }
  bool requires_grad(VarId id) const { return nodes_[id].requires_grad; }

  // ---- primitives ----

  VarId matmul(VarId a, VarId b) {
    const Mat<S>&A = val(a), &B = val(b);
    if (A.cols != B.rows) throw InvalidArgument("matmul: inner dimensions differ");
    Mat<S> out(A.rows, B.cols);
    out.map().noalias() = A.map() * B.map();
    VarId id = push_op(std::move(out), {a, b});
    if (node(id).requires_grad) {
      node(id).back = [a, b, id](Tape& t) {
        const Mat<S>& g = t.node(id).grad;
        if (t.node(a).requires_grad) {
          t.node(a).grad.map().noalias() += g.map() * t.val(b).map().transpose();
        }
        if (t.node(b).requires_grad) {
          t.node(b).grad.map().noalias() += t.val(a).map().transpose() * g.map();
        }
      };
    }
    return id;
  }

  // C = A * B^T
  VarId matmul_nt(VarId a, VarId b) {
    const Mat<S>&A = val(a), &B = val(b);
    if (A.cols != B.cols) throw InvalidArgument("matmul_nt: inner dimensions differ");
    Mat<S> out(A.rows, B.rows);
    out.map().noalias() = A.map() * B.map().transpose();
    VarId id = push_op(std::move(out), {a, b});
    if (node(id).requires_grad) {
      node(id).back = [a, b, id](Tape& t) {
        const Mat<S>& g = t.node(id).grad;
        if (t.node(a).requires_grad) {
          t.node(a).grad.map().noalias() += g.map() * t.val(b).map();
        }
        if (t.node(b).requires_grad) {
          t.node(b).grad.map().noalias() += g.map().transpose() * t.val(a).map();
        }
      };
    }
    return id;
  }

  VarId add(VarId a, VarId b) {
    const Mat<S>&A = val(a), &B = val(b);
    if (!A.same_shape(B)) throw InvalidArgument("add: shape mismatch");
    Mat<S> out(A.rows, A.cols);
    out.map() = A.map() + B.map();
    VarId id = push_op(std::move(out), {a, b});
    if (node(id).requires_grad) {
      node(id).back = [a, b, id](Tape& t) {
        const Mat<S>& g = t.node(id).grad;
        if (t.node(a).requires_grad) t.node(a).grad.map() += g.map();
        if (t.node(b).requires_grad) t.node(b).grad.map() += g.map();
      };
    }
    return id;
  }

  // Bias broadcast over rows: out_ij = a_ij + bias_0j.
  VarId add_rowvec(VarId a, VarId bias) {
    const Mat<S>&A = val(a), &B = val(bias);
    if (B.rows != 1 || B.cols != A.cols) throw InvalidArgument("add_rowvec: bias must be 1xN");
    Mat<S> out(A.rows, A.cols);
    out.map() = A.map().rowwise() + B.map().row(0);
    VarId id = push_op(std::move(out), {a, bias});
    if (node(id).requires_grad) {
      node(id).back = [a, bias, id](Tape& t) {
        const Mat<S>& g = t.node(id).grad;
        if (t.node(a).requires_grad) t.node(a).grad.map() += g.map();
        if (t.node(bias).requires_grad) {
          t.node(bias).grad.map().row(0) += g.map().colwise().sum();
        }
      };
    }
    return id;
  }

  VarId scale(VarId a, S c) {
    Mat<S> out = val(a);
    out.map() *= c;
    VarId id = push_op(std::move(out), {a});
    if (node(id).requires_grad) {
      node(id).back = [a, c, id](Tape& t) {
        if (t.node(a).requires_grad) t.node(a).grad.map() += c * t.node(id).grad.map();
      };
    }
    return id;
  }

  // Row gather: out.row(i) = table.row(ids[i]).
  VarId emb_rows(VarId table, std::vector<int> ids) {
    const Mat<S>& T_ = val(table);
    for (int x : ids) {
      if (x < 0 || x >= T_.rows) throw InvalidArgument("emb_rows: id out of range");
    }
    Mat<S> out(static_cast<int>(ids.size()), T_.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out.map().row(static_cast<int>(i)) = T_.map().row(ids[i]);
    }
    VarId id = push_op(std::move(out), {table});
    if (node(id).requires_grad) {
      node(id).back = [table, ids = std::move(ids), id](Tape& t) {
        if (!t.node(table).requires_grad) return;
        const Mat<S>& g = t.node(id).grad;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          t.node(table).grad.map().row(ids[i]) += g.map().row(static_cast<int>(i));
        }
      };
    }
    return id;
  }

  // Per-row layer normalization with affine parameters (gain, bias are 1xN).
  // Statistics are accumulated in double.
  VarId layernorm(VarId x, VarId gain, VarId bias, S eps = S(1e-6)) {
    const Mat<S>& X = val(x);
    const int n = X.cols;
    if (val(gain).cols != n || val(bias).cols != n) {
      throw InvalidArgument("layernorm: affine shape mismatch");
    }
    Mat<S> xhat(X.rows, n);
    std::vector<S> inv_sigma(X.rows);
    for (int i = 0; i < X.rows; ++i) {
      double mu = 0.0;
      for (int j = 0; j < n; ++j) mu += X(i, j);
      mu /= n;
      double var = 0.0;
      for (int j = 0; j < n; ++j) {
        double d = X(i, j) - mu;
        var += d * d;
      }
      var /= n;
      double is = 1.0 / std::sqrt(var + static_cast<double>(eps));
      inv_sigma[i] = static_cast<S>(is);
      for (int j = 0; j < n; ++j) xhat(i, j) = static_cast<S>((X(i, j) - mu) * is);
    }
    Mat<S> out(X.rows, n);
    {
      const Mat<S>&G = val(gain), &B = val(bias);
      for (int i = 0; i < X.rows; ++i) {
        for (int j = 0; j < n; ++j) out(i, j) = xhat(i, j) * G(0, j) + B(0, j);
      }
    }
    VarId id = push_op(std::move(out), {x, gain, bias});
    if (node(id).requires_grad) {
      node(id).back = [x, gain, bias, id, xhat = std::move(xhat),
                       inv_sigma = std::move(inv_sigma)](Tape& t) {
        const Mat<S>& g = t.node(id).grad;
        const int n = g.cols;
        if (t.node(gain).requires_grad) {
          t.node(gain).grad.map().row(0) +=
              (g.map().array() * xhat.map().array()).colwise().sum().matrix();
        }
        if (t.node(bias).requires_grad) {
          t.node(bias).grad.map().row(0) += g.map().colwise().sum();
        }
        if (t.node(x).requires_grad) {
          const auto gn = t.val(gain).map().row(0);
          for (int i = 0; i < g.rows; ++i) {
            double s1 = 0.0, s2 = 0.0;
            for (int j = 0; j < n; ++j) {
              double dxh = static_cast<double>(g(i, j)) * gn(j);
              s1 += dxh;
              s2 += dxh * xhat(i, j);
            }
            s1 /= n;
            s2 /= n;
            for (int j = 0; j < n; ++j) {
              double dxh = static_cast<double>(g(i, j)) * gn(j);
              t.node(x).grad(i, j) +=
                  static_cast<S>(inv_sigma[i] * (dxh - s1 - xhat(i, j) * s2));
            }
          }
        }
      };
    }
    return id;
  }

  // tanh-approximated GELU.
  VarId gelu(VarId x) {
    constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double kA = 0.044715;
    const Mat<S>& X = val(x);
    Mat<S> out(X.rows, X.cols);
    for (std::size_t i = 0; i < X.size(); ++i) {
      double xv = X.v[i];
      double u = kC * (xv + kA * xv * xv * xv);
      out.v[i] = static_cast<S>(0.5 * xv * (1.0 + std::tanh(u)));
    }
    VarId id = push_op(std::move(out), {x});
    if (node(id).requires_grad) {
      node(id).back = [x, id](Tape& t) {
        if (!t.node(x).requires_grad) return;
        const Mat<S>& X = t.val(x);
        const Mat<S>& g = t.node(id).grad;
        for (std::size_t i = 0; i < X.size(); ++i) {
          double xv = X.v[i];
          double u = kC * (xv + kA * xv * xv * xv);
          double th = std::tanh(u);
          double d = 0.5 * (1.0 + th) +
                     0.5 * xv * (1.0 - th * th) * kC * (1.0 + 3.0 * kA * xv * xv);
          t.node(x).grad.v[i] += static_cast<S>(d * static_cast<double>(g.v[i]));
        }
      };
    }
    return id;
  }

  VarId softmax_rows(VarId x) { return softmax_impl(x, val(x).cols); }

  // Softmax over columns [0, active_cols); the remaining columns get exactly
  // zero probability and zero gradient. Used for attention over padding.
  VarId masked_softmax_rows(VarId x, int active_cols) {
    if (active_cols < 1 || active_cols > val(x).cols) {
      throw InvalidArgument("masked_softmax_rows: bad active column count");
    }
    return softmax_impl(x, active_cols);
  }

  // Elementwise log with a floor; clamped entries get zero gradient.
  VarId log(VarId x, S floor_val = S(1e-12)) {
    const Mat<S>& X = val(x);
    Mat<S> out(X.rows, X.cols);
    for (std::size_t i = 0; i < X.size(); ++i) {
      out.v[i] = static_cast<S>(std::log(std::max(static_cast<double>(X.v[i]),
                                                  static_cast<double>(floor_val))));
    }
    VarId id = push_op(std::move(out), {x});
    if (node(id).requires_grad) {
      node(id).back = [x, floor_val, id](Tape& t) {
        if (!t.node(x).requires_grad) return;
        const Mat<S>& X = t.val(x);
        const Mat<S>& g = t.node(id).grad;
        for (std::size_t i = 0; i < X.size(); ++i) {
          if (X.v[i] >= floor_val) t.node(x).grad.v[i] += g.v[i] / X.v[i];
        }
      };
    }
    return id;
  }

  VarId mean_all(VarId x) {
    const Mat<S>& X = val(x);
    if (X.size() == 0) throw InvalidArgument("mean_all: empty tensor");
    double acc = 0.0;
    for (S v : X.v) acc += v;
    VarId id = push_op(Mat<S>::scalar(static_cast<S>(acc / X.size())), {x});
    if (node(id).requires_grad) {
      node(id).back = [x, id](Tape& t) {
        if (!t.node(x).requires_grad) return;
        S g = t.node(id).grad.v[0] / static_cast<S>(t.val(x).size());
        for (auto& gv : t.node(x).grad.v) gv += g;
      };
    }
    return id;
  }

  // Inverted dropout; identity when train is false.
  VarId dropout(VarId x, double rate, Rng& rng, bool train) {
    if (!train || rate <= 0.0) return x;
    if (rate >= 1.0) throw InvalidArgument("dropout: rate must be < 1");
    const Mat<S>& X = val(x);
    Mat<S> mask(X.rows, X.cols);
    std::bernoulli_distribution keep(1.0 - rate);
    const S inv = static_cast<S>(1.0 / (1.0 - rate));
    for (auto& mv : mask.v) mv = keep(rng) ? inv : S(0);
    Mat<S> out(X.rows, X.cols);
    out.map() = X.map().cwiseProduct(mask.map());
    VarId id = push_op(std::move(out), {x});
    if (node(id).requires_grad) {
      node(id).back = [x, id, mask = std::move(mask)](Tape& t) {
        if (!t.node(x).requires_grad) return;
        t.node(x).grad.map() += t.node(id).grad.map().cwiseProduct(mask.map());
      };
    }
    return id;
  }

  // Weighted mean of per-row cross-entropy: rows with weight 0 are excluded.
  // Fused log-softmax keeps the computation stable; sums run in double.
  VarId nll_rows(VarId logits, std::vector<int> targets, std::vector<S> row_weights) {
    const Mat<S>& Z = val(logits);
    if (static_cast<int>(targets.size()) != Z.rows ||
        static_cast<int>(row_weights.size()) != Z.rows) {
      throw InvalidArgument("nll_rows: targets/weights must have one entry per row");
    }
    double wsum = 0.0;
    for (S w : row_weights) wsum += w;
    if (wsum <= 0.0) throw InvalidArgument("nll_rows: no rows with positive weight");

    Mat<S> probs(Z.rows, Z.cols);
    double loss = 0.0;
    for (int i = 0; i < Z.rows; ++i) {
      if (targets[i] < 0 || targets[i] >= Z.cols) {
        throw InvalidArgument("nll_rows: target out of range");
      }
      double mx = Z(i, 0);
      for (int j = 1; j < Z.cols; ++j) mx = std::max(mx, static_cast<double>(Z(i, j)));
      double z = 0.0;
      for (int j = 0; j < Z.cols; ++j) z += std::exp(Z(i, j) - mx);
      double lse = mx + std::log(z);
      for (int j = 0; j < Z.cols; ++j) {
        probs(i, j) = static_cast<S>(std::exp(Z(i, j) - lse));
      }
      loss += static_cast<double>(row_weights[i]) * (lse - Z(i, targets[i]));
    }
    VarId id = push_op(Mat<S>::scalar(static_cast<S>(loss / wsum)), {logits});
    if (node(id).requires_grad) {
      node(id).back = [logits, id, targets = std::move(targets),
                       row_weights = std::move(row_weights), probs = std::move(probs),
                       wsum](Tape& t) {
        if (!t.node(logits).requires_grad) return;
        const S g = t.node(id).grad.v[0];
        Mat<S>& dz = t.node(logits).grad;
        for (int i = 0; i < dz.rows; ++i) {
          if (row_weights[i] == S(0)) continue;
          const S c = static_cast<S>(g * row_weights[i] / wsum);
          for (int j = 0; j < dz.cols; ++j) dz(i, j) += c * probs(i, j);
          dz(i, targets[i]) -= c;
        }
      };
    }
    return id;
  }

  VarId row_slice(VarId x, int r0, int nrows) {
    const Mat<S>& X = val(x);
    if (r0 < 0 || r0 + nrows > X.rows) throw InvalidArgument("row_slice: out of range");
    Mat<S> out(nrows, X.cols);
    out.map() = X.map().middleRows(r0, nrows);
    VarId id = push_op(std::move(out), {x});
    if (node(id).requires_grad) {
      node(id).back = [x, r0, nrows, id](Tape& t) {
        if (!t.node(x).requires_grad) return;
        t.node(x).grad.map().middleRows(r0, nrows) += t.node(id).grad.map();
      };
    }
    return id;
  }

  VarId col_slice(VarId x, int c0, int ncols) {
    const Mat<S>& X = val(x);
    if (c0 < 0 || c0 + ncols > X.cols) throw InvalidArgument("col_slice: out of range");
    Mat<S> out(X.rows, ncols);
    out.map() = X.map().middleCols(c0, ncols);
    VarId id = push_op(std::move(out), {x});
    if (node(id).requires_grad) {
      node(id).back = [x, c0, ncols, id](Tape& t) {
        if (!t.node(x).requires_grad) return;
        t.node(x).grad.map().middleCols(c0, ncols) += t.node(id).grad.map();
      };
    }
    return id;
  }

  VarId concat_cols(const std::vector<VarId>& parts) {
    if (parts.empty()) throw InvalidArgument("concat_cols: empty list");
    int rows = val(parts[0]).rows;
    int cols = 0;
    for (VarId p : parts) {
      if (val(p).rows != rows) throw InvalidArgument("concat_cols: row mismatch");
      cols += val(p).cols;
    }
    Mat<S> out(rows, cols);
    int c0 = 0;
    for (VarId p : parts) {
      out.map().middleCols(c0, val(p).cols) = val(p).map();
      c0 += val(p).cols;
    }
    VarId id = push_op(std::move(out), parts);
    if (node(id).requires_grad) {
      node(id).back = [parts, id](Tape& t) {
        int c0 = 0;
        for (VarId p : parts) {
          int w = t.val(p).cols;
          if (t.node(p).requires_grad) {
            t.node(p).grad.map() += t.node(id).grad.map().middleCols(c0, w);
          }
          c0 += w;
        }
      };
    }
    return id;
  }

  // linear layer convenience: x * W + b.
  VarId linear(VarId x, VarId w, VarId b) { return add_rowvec(matmul(x, w), b); }

  // ---- differentiation ----

  void backward(VarId root) {
    if (val(root).size() != 1) throw InvalidArgument("backward: root must be scalar");
    if (!node(root).requires_grad) return;  // detached graph: nothing to do
    for (VarId id = 0; id < static_cast<VarId>(nodes_.size()); ++id) {
      if (nodes_[id].requires_grad) {
        nodes_[id].grad = Mat<S>::zeros(val(id).rows, val(id).cols);
      }
    }
    node(root).grad.v[0] = S(1);
    for (VarId id = root; id >= 0; --id) {
      if (nodes_[id].requires_grad && nodes_[id].back) nodes_[id].back(*this);
    }
  }

  struct ParamGrad {
    Param<S>* param;
    const Mat<S>* grad;
  };

  // Per-parameter gradients of this tape, in registration order. The caller
  // reduces them; doing that in a fixed order keeps training deterministic.
  std::vector<ParamGrad> param_grads() {
    std::vector<ParamGrad> out;
    for (VarId id = 0; id < static_cast<VarId>(nodes_.size()); ++id) {
      auto& n = nodes_[id];
      if (n.param != nullptr && n.grad.size() > 0) out.push_back({n.param, &n.grad});
    }
    return out;
  }

  void accumulate_param_grads() {
    for (auto [p, g] : param_grads()) p->grad.map() += g->map();
  }

  // Moves the per-parameter gradients out of the tape (registration order),
  // letting the caller drop the activations while keeping the gradients.
  std::vector<std::pair<Param<S>*, Mat<S>>> take_param_grads() {
    std::vector<std::pair<Param<S>*, Mat<S>>> out;
    for (auto& n : nodes_) {
      if (n.param != nullptr && n.grad.size() > 0) out.emplace_back(n.param, std::move(n.grad));
    }
    return out;
  }

  void assert_finite(VarId id, const std::string& context) const {
    if (!val(id).all_finite()) {
      throw NumericError("non-finite values in " + context);
    }
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Mat<S> value;
    const Mat<S>* external = nullptr;  // set for parameter leaves
    Mat<S> grad;
    bool requires_grad = false;
    Param<S>* param = nullptr;
    std::function<void(Tape&)> back;
  };

  Node& node(VarId id) { return nodes_[id]; }
  const Mat<S>& val(VarId id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }

  VarId push(Mat<S> value, bool requires_grad, Param<S>* p) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.param = p;
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size() - 1);
  }

  VarId push_op(Mat<S> value, const std::vector<VarId>& parents) {
    bool rg = false;
    for (VarId p : parents) rg = rg || nodes_[p].requires_grad;
    return push(std::move(value), rg, nullptr);
  }

  VarId softmax_impl(VarId x, int active_cols) {
    const Mat<S>& X = val(x);
    Mat<S> out = Mat<S>::zeros(X.rows, X.cols);
    for (int i = 0; i < X.rows; ++i) {
      double mx = X(i, 0);
      for (int j = 1; j < active_cols; ++j) mx = std::max(mx, static_cast<double>(X(i, j)));
      double z = 0.0;
      for (int j = 0; j < active_cols; ++j) z += std::exp(X(i, j) - mx);
      for (int j = 0; j < active_cols; ++j) {
        out(i, j) = static_cast<S>(std::exp(X(i, j) - mx) / z);
      }
    }
    VarId id = push_op(std::move(out), {x});
    if (node(id).requires_grad) {
      node(id).back = [x, id, active_cols](Tape& t) {
        if (!t.node(x).requires_grad) return;
        const Mat<S>& y = t.node(id).value;
        const Mat<S>& g = t.node(id).grad;
        for (int i = 0; i < y.rows; ++i) {
          double dot = 0.0;
          for (int j = 0; j < active_cols; ++j) {
            dot += static_cast<double>(g(i, j)) * y(i, j);
          }
          for (int j = 0; j < active_cols; ++j) {
            t.node(x).grad(i, j) += static_cast<S>(y(i, j) * (g(i, j) - dot));
          }
        }
      };
    }
    return id;
  }

  std::vector<Node> nodes_;
};

}  // namespace date_ad::ad

namespace date_ad {
// Parameters appear throughout the model and trainer interfaces.
using ad::Param;
}  // namespace date_ad
