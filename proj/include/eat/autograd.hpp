#pragma once
// Reverse-mode automatic differentiation over Mat<T>. A Tape records an
// acyclic graph of primitive operations as they execute; backward() walks
// the nodes in reverse creation order and accumulates gradients, whose
// shapes always match the corresponding value shapes.
//
// Parameters live outside the tape (struct Param). Binding a parameter
// creates a leaf node and remembers the Param so backward() can add the
// leaf's gradient into Param::grad. A fresh tape is built per forward
// pass; gradients accumulate across tapes until the optimizer consumes
// them.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eat/matrix.hpp"

namespace eat {

template <class T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
  // Optimizer slots (first and second moments), lazily shaped by the trainer.
  Mat<T> m;
  Mat<T> v;

  Param() = default;
  Param(std::string n, Mat<T> val) : name(std::move(n)), value(std::move(val)) {
    grad = Mat<T>(value.rows, value.cols);
  }

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), T(0)); }
};

template <class T>
class Tape {
 public:
  using M = Mat<T>;

  int leaf(M v) { return push(Op::kLeaf, {}, std::move(v)); }

  int param(Param<T>& p) {
    const int id = push(Op::kLeaf, {}, p.value);
    bindings_.emplace_back(id, &p);
    return id;
  }

  int matmul(int a, int b) {
    return push(Op::kMatMul, {a, b}, eat::matmul(val(a), val(b)));
  }

  int add(int a, int b) { return push(Op::kAdd, {a, b}, eat::add(val(a), val(b))); }

  int mul(int a, int b) {
    return push(Op::kMul, {a, b}, eat::hadamard(val(a), val(b)));
  }

  int scale(int a, T s) {
    const int id = push(Op::kScale, {a}, eat::scale(val(a), s));
    nodes_[id].scalar = s;
    return id;
  }

  int add_row_vec(int a, int b) {
    return push(Op::kAddRowVec, {a, b}, eat::add_row_vector(val(a), val(b)));
  }

  int transpose(int a) { return push(Op::kTranspose, {a}, eat::transpose(val(a))); }

  int softmax_rows(int a) {
    return push(Op::kSoftmax, {a}, eat::softmax_rows(val(a)));
  }

  int layer_norm(int a, int gain, int bias, T eps) {
    const int id =
        push(Op::kLayerNorm, {a, gain, bias}, eat::layer_norm(val(a), val(gain), val(bias), eps));
    nodes_[id].scalar = eps;
    return id;
  }

  int gelu(int a) { return push(Op::kGelu, {a}, eat::gelu(val(a))); }

  int gather_rows(int a, std::vector<int> idx) {
    const int id = push(Op::kGatherRows, {a}, eat::gather_rows(val(a), idx));
    nodes_[id].idx = std::move(idx);
    return id;
  }

  int sum_all(int a) {
    M out(1, 1);
    out(0, 0) = eat::sum(val(a));
    return push(Op::kSumAll, {a}, std::move(out));
  }

  // Adds a constant matrix (no gradient flows into it).
  int add_constant(int a, M c) {
    const int id = push(Op::kAddConst, {a}, eat::add(val(a), c));
    nodes_[id].aux = std::move(c);
    return id;
  }

  // -log(probs[0, label]); probs must be a 1 x C row of a distribution.
  int cross_entropy_from_probs(int probs, int label) {
    const M& p = val(probs);
    if (p.rows != 1) throw DimensionError("cross_entropy: expected a 1 x C row");
    if (label < 0 || label >= p.cols)
      throw std::invalid_argument("cross_entropy: label out of range");
    M out(1, 1);
    out(0, 0) = -std::log(std::max(p(0, label), T(1e-30)));
    const int id = push(Op::kCrossEntropy, {probs}, std::move(out));
    nodes_[id].label = label;
    return id;
  }

  // KL(p_teacher || softmax(student_logits / temp)) for one 1 x C row.
  // teacher_probs is a fixed distribution (already temperature-softened).
  int kl_tempered(int student_logits, M teacher_probs, T temp) {
    const M& z = val(student_logits);
    if (z.rows != 1 || !z.same_shape(teacher_probs))
      throw DimensionError("kl_tempered: logits/teacher shape mismatch");
    const M q = eat::softmax_rows(eat::scale(z, T(1) / temp));
    M out(1, 1);
    T kl = T(0);
    for (int j = 0; j < z.cols; ++j) {
      const T p = teacher_probs(0, j);
      if (p > T(0)) kl += p * (std::log(p) - std::log(std::max(q(0, j), T(1e-30))));
    }
    out(0, 0) = kl;
    const int id = push(Op::kKlTempered, {student_logits}, std::move(out));
    nodes_[id].aux = std::move(teacher_probs);
    nodes_[id].scalar = temp;
    return id;
  }

  const M& value(int id) const { return nodes_[id].value; }
  const M& grad(int id) const { return nodes_[id].grad; }
  size_t node_count() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients for every node the
  // loss depends on, then adds leaf gradients into their bound Params.
  void backward(int loss) {
    if (loss < 0 || loss >= static_cast<int>(nodes_.size()))
      throw std::invalid_argument("backward: bad loss node");
    if (nodes_[loss].value.rows != 1 || nodes_[loss].value.cols != 1)
      throw std::invalid_argument("backward: loss must be a 1x1 scalar");
    g(loss)(0, 0) += T(1);
    for (int id = loss; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.data.empty()) continue;  // not on any path to the loss
      step_backward(n);
    }
    for (auto& [id, p] : bindings_) {
      const M& gr = nodes_[id].grad;
      if (gr.data.empty()) continue;
      for (size_t i = 0; i < gr.data.size(); ++i) p->grad.data[i] += gr.data[i];
    }
  }

 private:
  enum class Op {
    kLeaf,
    kMatMul,
    kAdd,
    kMul,
    kScale,
    kAddRowVec,
    kTranspose,
    kSoftmax,
    kLayerNorm,
    kGelu,
    kGatherRows,
    kSumAll,
    kAddConst,
    kCrossEntropy,
    kKlTempered,
  };

  struct Node {
    Op op;
    int in[3] = {-1, -1, -1};
    M value;
    M grad;  // empty until touched by backward
    M aux;
    std::vector<int> idx;
    T scalar = T(0);
    int label = -1;
  };

  const M& val(int id) const { return nodes_[id].value; }

  M& g(int id) {
    Node& n = nodes_[id];
    if (n.grad.data.empty()) n.grad = M(n.value.rows, n.value.cols);
    return n.grad;
  }

  int push(Op op, std::initializer_list<int> ins, M value) {
    Node n;
    n.op = op;
    int i = 0;
    for (int in_id : ins) n.in[i++] = in_id;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void step_backward(Node& n) {
    const M& go = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul: {
        const M& a = val(n.in[0]);
        const M& b = val(n.in[1]);
        accumulate(g(n.in[0]), eat::matmul(go, eat::transpose(b)));
        accumulate(g(n.in[1]), eat::matmul(eat::transpose(a), go));
        break;
      }
      case Op::kAdd:
        accumulate(g(n.in[0]), go);
        accumulate(g(n.in[1]), go);
        break;
      case Op::kMul:
        accumulate(g(n.in[0]), eat::hadamard(go, val(n.in[1])));
        accumulate(g(n.in[1]), eat::hadamard(go, val(n.in[0])));
        break;
      case Op::kScale:
        accumulate(g(n.in[0]), eat::scale(go, n.scalar));
        break;
      case Op::kAddRowVec: {
        accumulate(g(n.in[0]), go);
        M& gb = g(n.in[1]);
        for (int i = 0; i < go.rows; ++i)
          for (int j = 0; j < go.cols; ++j) gb(0, j) += go(i, j);
        break;
      }
      case Op::kTranspose:
        accumulate(g(n.in[0]), eat::transpose(go));
        break;
      case Op::kSoftmax: {
        // dx_i = y_i * (g_i - sum_j g_j y_j) per row
        const M& y = n.value;
        M& gx = g(n.in[0]);
        for (int i = 0; i < y.rows; ++i) {
          T dot = T(0);
          for (int j = 0; j < y.cols; ++j) dot += go(i, j) * y(i, j);
          for (int j = 0; j < y.cols; ++j) gx(i, j) += y(i, j) * (go(i, j) - dot);
        }
        break;
      }
      case Op::kLayerNorm:
        layer_norm_backward(n);
        break;
      case Op::kGelu: {
        const M& x = val(n.in[0]);
        M& gx = g(n.in[0]);
        for (size_t i = 0; i < x.data.size(); ++i)
          gx.data[i] += go.data[i] * gelu_derivative_scalar(x.data[i]);
        break;
      }
      case Op::kGatherRows: {
        M& gx = g(n.in[0]);
        for (size_t i = 0; i < n.idx.size(); ++i) {
          const int r = n.idx[i];
          for (int j = 0; j < go.cols; ++j) gx(r, j) += go(static_cast<int>(i), j);
        }
        break;
      }
      case Op::kSumAll: {
        M& gx = g(n.in[0]);
        const T s = go(0, 0);
        for (T& v : gx.data) v += s;
        break;
      }
      case Op::kAddConst:
        accumulate(g(n.in[0]), go);
        break;
      case Op::kCrossEntropy: {
        const M& p = val(n.in[0]);
        M& gp = g(n.in[0]);
        const T pv = std::max(p(0, n.label), T(1e-30));
        gp(0, n.label) += go(0, 0) * (T(-1) / pv);
        break;
      }
      case Op::kKlTempered: {
        // d/dz_j = (softmax(z/temp)_j - p_j) / temp
        const M& z = val(n.in[0]);
        const M q = eat::softmax_rows(eat::scale(z, T(1) / n.scalar));
        M& gz = g(n.in[0]);
        const T s = go(0, 0) / n.scalar;
        for (int j = 0; j < z.cols; ++j) gz(0, j) += s * (q(0, j) - n.aux(0, j));
        break;
      }
    }
  }

  void layer_norm_backward(Node& n) {
    const M& x = val(n.in[0]);
    const M& gain = val(n.in[1]);
    const M& go = n.grad;
    const T eps = n.scalar;
    M& gx = g(n.in[0]);
    M& gg = g(n.in[1]);
    M& gb = g(n.in[2]);
    const int c = x.cols;
    for (int i = 0; i < x.rows; ++i) {
      T mean = T(0);
      for (int j = 0; j < c; ++j) mean += x(i, j);
      mean /= T(c);
      T var = T(0);
      for (int j = 0; j < c; ++j) {
        const T d = x(i, j) - mean;
        var += d * d;
      }
      var /= T(c);
      const T inv = T(1) / std::sqrt(var + eps);
      T m1 = T(0);  // mean of gain*go
      T m2 = T(0);  // mean of gain*go*xhat
      for (int j = 0; j < c; ++j) {
        const T xh = (x(i, j) - mean) * inv;
        const T gy = go(i, j);
        gb(0, j) += gy;
        gg(0, j) += gy * xh;
        m1 += gain(0, j) * gy;
        m2 += gain(0, j) * gy * xh;
      }
      m1 /= T(c);
      m2 /= T(c);
      for (int j = 0; j < c; ++j) {
        const T xh = (x(i, j) - mean) * inv;
        gx(i, j) += inv * (gain(0, j) * go(i, j) - m1 - xh * m2);
      }
    }
  }

  static void accumulate(M& dst, const M& src) {
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<int, Param<T>*>> bindings_;
};

}  // namespace eat
