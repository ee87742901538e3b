#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <initializer_list>
#include <vector>

#include "charmt/error.hpp"
#include "charmt/params.hpp"
#include "charmt/tensor.hpp"

namespace charmt {

// Handle into a Graph's node tape.
struct Expr {
  int id = -1;
  bool valid() const { return id >= 0; }
};

namespace detail {

template <typename S>
S stable_sigmoid(S x) {
  if (x >= S{0}) {
    const S e = std::exp(-x);
    return S{1} / (S{1} + e);
  }
  const S e = std::exp(x);
  return e / (S{1} + e);
}

template <typename S>
S stable_log_sigmoid(S x) {
  // log(1/(1+e^-x)) without overflow on either tail.
  if (x >= S{0}) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace detail

// Reverse-mode tape over tensor-valued primitive ops. Forward values are
// computed eagerly as nodes are recorded; backward() replays the tape in
// reverse order exactly once, accumulating into parameter gradients.
// A graph lives for one training example or one decode step.
template <typename S>
class Graph {
  enum class Op {
    kInput,
    kParam,
    kLookupRow,
    kMatVec,        // W[m,n] * x[n] -> [m]
    kMatTVec,       // W[m,n]^T * x[m] -> [n]
    kAdd,
    kSub,
    kMul,           // elementwise
    kScale,         // constant factor
    kSigmoid,
    kTanh,
    kConcat,
    kSoftmax,
    kPickLogSoftmax,
    kPick,
    kDot,
    kSum,
    kLogSigmoid,
    kWeightedSum,   // extras[0]: coefficients, extras[1..]: vectors
    kSquaredDist,
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    std::vector<int> extras;  // n-ary ops only
    int idx = 0;              // row or pick index
    S factor = S{0};          // kScale
    bool needs_grad = false;
    Param<S>* param = nullptr;
    Tensor<S> val;   // unused for kParam (value lives in the store)
    Tensor<S> aux;   // cached softmax for kPickLogSoftmax
    Tensor<S> grad;  // allocated on first touch during backward
  };

 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  int node_count() const { return static_cast<int>(nodes_.size()); }

  const Tensor<S>& value(Expr e) const {
    const Node& n = node(e);
    return n.op == Op::kParam ? n.param->value : n.val;
  }

  S scalar(Expr e) const {
    const Tensor<S>& v = value(e);
    require(v.size() == 1, "expected scalar node");
    return v[0];
  }

  // Gradient of the last backward()'s loss w.r.t. this node. Parameter
  // gradients live in the store; use Param::grad for those.
  const Tensor<S>& gradient(Expr e) const {
    const Node& n = node(e);
    require(n.op != Op::kParam, "use the parameter store for parameter gradients");
    return n.grad;
  }

  Expr input(Tensor<S> t) {
    t.check_finite("graph input");
    Node n;
    n.op = Op::kInput;
    n.val = std::move(t);
    return push(std::move(n));
  }

  Expr param(Param<S>& p) {
    Node n;
    n.op = Op::kParam;
    n.param = &p;
    n.needs_grad = true;
    return push(std::move(n));
  }

  Expr lookup_row(Expr table, int row) {
    const Tensor<S>& t = value(table);
    require(t.rank() == 2, "lookup_row expects a matrix");
    require(row >= 0 && row < t.rows(), "lookup row out of range");
    Node n = unary(Op::kLookupRow, table);
    n.idx = row;
    const int cols = t.shape()[1];
    n.val = Tensor<S>({cols});
    std::copy(t.row(row), t.row(row) + cols, n.val.data());
    return push(std::move(n));
  }

  Expr matvec(Expr w, Expr x) {
    const Tensor<S>& wv = value(w);
    const Tensor<S>& xv = value(x);
    if (wv.rank() != 2 || xv.rank() != 1 || wv.shape()[1] != xv.size())
      fail("matvec dimension mismatch: " + shape_string(wv.shape()) + " * " +
           shape_string(xv.shape()));
    const int rows = wv.shape()[0];
    const int cols = wv.shape()[1];
    Node n = binary(Op::kMatVec, w, x);
    n.val = Tensor<S>({rows});
    const S* wp = wv.data();
    const S* xp = xv.data();
    S* out = n.val.data();
    for (int i = 0; i < rows; ++i) {
      const S* row = wp + static_cast<std::size_t>(i) * cols;
      S acc{0};
      for (int j = 0; j < cols; ++j) acc += row[j] * xp[j];
      out[i] = acc;
    }
    return push(std::move(n));
  }

  Expr mat_tvec(Expr w, Expr x) {
    const Tensor<S>& wv = value(w);
    const Tensor<S>& xv = value(x);
    if (wv.rank() != 2 || xv.rank() != 1 || wv.shape()[0] != xv.size())
      fail("mat_tvec dimension mismatch");
    const int rows = wv.shape()[0];
    const int cols = wv.shape()[1];
    Node n = binary(Op::kMatTVec, w, x);
    n.val = Tensor<S>({cols});
    const S* wp = wv.data();
    const S* xp = xv.data();
    S* out = n.val.data();
    for (int i = 0; i < rows; ++i) {
      const S* row = wp + static_cast<std::size_t>(i) * cols;
      const S xi = xp[i];
      for (int j = 0; j < cols; ++j) out[j] += row[j] * xi;
    }
    return push(std::move(n));
  }

  Expr add(Expr a, Expr b) { return elementwise(Op::kAdd, a, b); }
  Expr sub(Expr a, Expr b) { return elementwise(Op::kSub, a, b); }
  Expr mul(Expr a, Expr b) { return elementwise(Op::kMul, a, b); }

  Expr scale(Expr a, S factor) {
    Node n = unary(Op::kScale, a);
    n.factor = factor;
    const Tensor<S>& av = value(a);
    const int len = av.size();
    n.val = Tensor<S>(av.shape());
    for (int i = 0; i < len; ++i) n.val[i] = factor * av[i];
    return push(std::move(n));
  }

  Expr sigmoid(Expr a) {
    Node n = unary(Op::kSigmoid, a);
    const Tensor<S>& av = value(a);
    const int len = av.size();
    n.val = Tensor<S>(av.shape());
    for (int i = 0; i < len; ++i) n.val[i] = detail::stable_sigmoid(av[i]);
    return push(std::move(n));
  }

  Expr tanh(Expr a) {
    Node n = unary(Op::kTanh, a);
    const Tensor<S>& av = value(a);
    const int len = av.size();
    n.val = Tensor<S>(av.shape());
    for (int i = 0; i < len; ++i) n.val[i] = std::tanh(av[i]);
    return push(std::move(n));
  }

  Expr log_sigmoid(Expr a) {
    Node n = unary(Op::kLogSigmoid, a);
    const Tensor<S>& av = value(a);
    const int len = av.size();
    n.val = Tensor<S>(av.shape());
    for (int i = 0; i < len; ++i)
      n.val[i] = detail::stable_log_sigmoid(av[i]);
    return push(std::move(n));
  }

  Expr concat(std::initializer_list<Expr> parts) {
    return concat(std::vector<Expr>(parts));
  }

  Expr concat(const std::vector<Expr>& parts) {
    require(!parts.empty(), "concat of nothing");
    Node n;
    n.op = Op::kConcat;
    int total = 0;
    for (const Expr e : parts) {
      const Tensor<S>& v = value(e);
      require(v.rank() == 1, "concat expects vectors");
      total += v.size();
      n.extras.push_back(e.id);
      n.needs_grad = n.needs_grad || node(e).needs_grad;
    }
    n.val = Tensor<S>({total});
    int off = 0;
    for (const Expr e : parts) {
      const Tensor<S>& v = value(e);
      std::copy(v.data(), v.data() + v.size(), n.val.data() + off);
      off += v.size();
    }
    return push(std::move(n));
  }

  // Max-subtracted softmax; output entries are in (0,1) and sum to 1.
  Expr softmax(Expr a) {
    const Tensor<S>& av = value(a);
    require(av.rank() == 1 && av.size() > 0, "softmax expects a nonempty vector");
    av.check_finite("softmax input");
    Node n = unary(Op::kSoftmax, a);
    n.val = softmax_values(av);
    return push(std::move(n));
  }

  // log softmax(scores)[k] as one stable scalar node.
  Expr pick_log_softmax(Expr a, int k) {
    const Tensor<S>& av = value(a);
    require(av.rank() == 1 && av.size() > 0, "pick_log_softmax expects a vector");
    require(k >= 0 && k < av.size(), "pick index out of range");
    av.check_finite("pick_log_softmax input");
    Node n = unary(Op::kPickLogSoftmax, a);
    n.idx = k;
    n.aux = softmax_values(av);
    n.val = Tensor<S>({1});
    n.val[0] = std::log(n.aux[k]);
    return push(std::move(n));
  }

  Expr pick(Expr a, int k) {
    const Tensor<S>& av = value(a);
    require(av.rank() == 1 && k >= 0 && k < av.size(), "pick index out of range");
    Node n = unary(Op::kPick, a);
    n.idx = k;
    n.val = Tensor<S>({1});
    n.val[0] = av[k];
    return push(std::move(n));
  }

  Expr dot(Expr a, Expr b) {
    const Tensor<S>& av = value(a);
    const Tensor<S>& bv = value(b);
    require(av.same_shape(bv), "dot dimension mismatch");
    Node n = binary(Op::kDot, a, b);
    n.val = Tensor<S>({1});
    const int len = av.size();
    S acc{0};
    for (int i = 0; i < len; ++i) acc += av[i] * bv[i];
    n.val[0] = acc;
    return push(std::move(n));
  }

  Expr sum(Expr a) {
    const Tensor<S>& av = value(a);
    Node n = unary(Op::kSum, a);
    n.val = Tensor<S>({1});
    const int len = av.size();
    S acc{0};
    for (int i = 0; i < len; ++i) acc += av[i];
    n.val[0] = acc;
    return push(std::move(n));
  }

  // sum_i coeffs[i] * vectors[i]
  Expr weighted_sum(Expr coeffs, const std::vector<Expr>& vectors) {
    const Tensor<S>& cv = value(coeffs);
    require(cv.rank() == 1 && cv.size() == static_cast<int>(vectors.size()),
            "weighted_sum needs one coefficient per vector");
    require(!vectors.empty(), "weighted_sum of nothing");
    Node n;
    n.op = Op::kWeightedSum;
    n.extras.push_back(coeffs.id);
    n.needs_grad = node(coeffs).needs_grad;
    const int dim = value(vectors.front()).size();
    n.val = Tensor<S>({dim});
    S* out = n.val.data();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const Tensor<S>& v = value(vectors[i]);
      require(v.rank() == 1 && v.size() == dim, "weighted_sum dimension mismatch");
      n.extras.push_back(vectors[i].id);
      n.needs_grad = n.needs_grad || node(vectors[i]).needs_grad;
      const S c = cv[i];
      const S* vp = v.data();
      for (int j = 0; j < dim; ++j) out[j] += c * vp[j];
    }
    return push(std::move(n));
  }

  // ||a - b||^2 as a scalar node.
  Expr squared_distance(Expr a, Expr b) {
    const Tensor<S>& av = value(a);
    const Tensor<S>& bv = value(b);
    require(av.same_shape(bv), "squared_distance dimension mismatch");
    Node n = binary(Op::kSquaredDist, a, b);
    n.val = Tensor<S>({1});
    const int len = av.size();
    S acc{0};
    for (int i = 0; i < len; ++i) {
      const S d = av[i] - bv[i];
      acc += d * d;
    }
    n.val[0] = acc;
    return push(std::move(n));
  }

  Expr affine(Expr w, Expr x, Expr bias) { return add(matvec(w, x), bias); }

  Expr add_all(const std::vector<Expr>& terms) {
    require(!terms.empty(), "add_all of nothing");
    Expr acc = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
    return acc;
  }

  // Reverse sweep from a scalar loss. May be called once per graph.
  void backward(Expr loss) {
    const Tensor<S>& lv = value(loss);
    require(lv.size() == 1, "backward requires a scalar loss");
    require(!backward_done_, "backward already ran on this graph");
    backward_done_ = true;
    grad_of(loss.id)[0] = S{1};
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.needs_grad) continue;
      if (n.op != Op::kParam && n.grad.size() == 0) continue;  // not reached
      backprop(n);
    }
  }

 private:
  Node unary(Op op, Expr a) {
    Node n;
    n.op = op;
    n.a = a.id;
    n.needs_grad = node(a).needs_grad;
    return n;
  }

  Node binary(Op op, Expr a, Expr b) {
    Node n;
    n.op = op;
    n.a = a.id;
    n.b = b.id;
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return n;
  }

  Expr elementwise(Op op, Expr a, Expr b) {
    const Tensor<S>& av = value(a);
    const Tensor<S>& bv = value(b);
    if (!av.same_shape(bv))
      fail("elementwise shape mismatch: " + shape_string(av.shape()) + " vs " +
           shape_string(bv.shape()));
    Node n = binary(op, a, b);
    n.val = Tensor<S>(av.shape());
    const int len = av.size();
    const S* ap = av.data();
    const S* bp = bv.data();
    S* out = n.val.data();
    switch (op) {
      case Op::kAdd:
        for (int i = 0; i < len; ++i) out[i] = ap[i] + bp[i];
        break;
      case Op::kSub:
        for (int i = 0; i < len; ++i) out[i] = ap[i] - bp[i];
        break;
      case Op::kMul:
        for (int i = 0; i < len; ++i) out[i] = ap[i] * bp[i];
        break;
      default:
        fail("not an elementwise op");
    }
    return push(std::move(n));
  }

  static Tensor<S> softmax_values(const Tensor<S>& z) {
    const int len = z.size();
    Tensor<S> out(z.shape());
    S mx = z[0];
    for (int i = 1; i < len; ++i) mx = std::max(mx, z[i]);
    S total{0};
    for (int i = 0; i < len; ++i) {
      out[i] = std::exp(z[i] - mx);
      total += out[i];
    }
    for (int i = 0; i < len; ++i) out[i] /= total;
    return out;
  }

  const Node& node(Expr e) const {
    require(e.id >= 0 && e.id < node_count(), "expression from another graph");
    return nodes_[e.id];
  }

  Expr push(Node n) {
    nodes_.push_back(std::move(n));
    return Expr{node_count() - 1};
  }

  // Gradient buffer for node i; parameter leaves accumulate straight into
  // the store so shared parameters sum across all uses.
  Tensor<S>& grad_of(int i) {
    Node& n = nodes_[i];
    if (n.op == Op::kParam) return n.param->grad;
    if (n.grad.size() == 0) n.grad = Tensor<S>(n.val.shape());
    return n.grad;
  }

  bool wants(int i) const { return i >= 0 && nodes_[i].needs_grad; }

  const Tensor<S>& val_of(int i) const {
    const Node& n = nodes_[i];
    return n.op == Op::kParam ? n.param->value : n.val;
  }

  void backprop(Node& n) {
    const Tensor<S>& g = n.op == Op::kParam ? n.param->grad : n.grad;
    switch (n.op) {
      case Op::kInput:
      case Op::kParam:
        break;  // leaves

      case Op::kLookupRow: {
        if (!wants(n.a)) break;
        Tensor<S>& ta = grad_of(n.a);
        S* row = ta.row(n.idx);
        const int len = g.size();
        const S* gp = g.data();
        for (int j = 0; j < len; ++j) row[j] += gp[j];
        break;
      }

      case Op::kMatVec: {
        const Tensor<S>& w = val_of(n.a);
        const Tensor<S>& x = val_of(n.b);
        const int rows = w.shape()[0];
        const int cols = w.shape()[1];
        const S* gp = g.data();
        const S* xp = x.data();
        if (wants(n.a)) {
          S* gw = grad_of(n.a).data();
          for (int i = 0; i < rows; ++i) {
            const S gi = gp[i];
            S* grow = gw + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < cols; ++j) grow[j] += gi * xp[j];
          }
        }
        if (wants(n.b)) {
          S* gx = grad_of(n.b).data();
          const S* wp = w.data();
          for (int i = 0; i < rows; ++i) {
            const S gi = gp[i];
            const S* wrow = wp + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < cols; ++j) gx[j] += gi * wrow[j];
          }
        }
        break;
      }

      case Op::kMatTVec: {
        const Tensor<S>& w = val_of(n.a);
        const Tensor<S>& x = val_of(n.b);
        const int rows = w.shape()[0];
        const int cols = w.shape()[1];
        const S* gp = g.data();
        const S* xp = x.data();
        if (wants(n.a)) {
          S* gw = grad_of(n.a).data();
          for (int i = 0; i < rows; ++i) {
            const S xi = xp[i];
            S* grow = gw + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < cols; ++j) grow[j] += xi * gp[j];
          }
        }
        if (wants(n.b)) {
          S* gx = grad_of(n.b).data();
          const S* wp = w.data();
          for (int i = 0; i < rows; ++i) {
            const S* wrow = wp + static_cast<std::size_t>(i) * cols;
            S acc{0};
            for (int j = 0; j < cols; ++j) acc += wrow[j] * gp[j];
            gx[i] += acc;
          }
        }
        break;
      }

      case Op::kAdd: {
        accumulate(n.a, g, S{1});
        accumulate(n.b, g, S{1});
        break;
      }
      case Op::kSub: {
        accumulate(n.a, g, S{1});
        accumulate(n.b, g, S{-1});
        break;
      }
      case Op::kMul: {
        const int len = g.size();
        const S* gp = g.data();
        if (wants(n.a)) {
          const S* bp = val_of(n.b).data();
          S* ga = grad_of(n.a).data();
          for (int i = 0; i < len; ++i) ga[i] += gp[i] * bp[i];
        }
        if (wants(n.b)) {
          const S* ap = val_of(n.a).data();
          S* gb = grad_of(n.b).data();
          for (int i = 0; i < len; ++i) gb[i] += gp[i] * ap[i];
        }
        break;
      }
      case Op::kScale:
        accumulate(n.a, g, n.factor);
        break;

      case Op::kSigmoid: {
        if (!wants(n.a)) break;
        S* ga = grad_of(n.a).data();
        const int len = g.size();
        const S* gp = g.data();
        const S* vp = n.val.data();
        for (int i = 0; i < len; ++i) ga[i] += gp[i] * vp[i] * (S{1} - vp[i]);
        break;
      }
      case Op::kTanh: {
        if (!wants(n.a)) break;
        S* ga = grad_of(n.a).data();
        const int len = g.size();
        const S* gp = g.data();
        const S* vp = n.val.data();
        for (int i = 0; i < len; ++i) ga[i] += gp[i] * (S{1} - vp[i] * vp[i]);
        break;
      }
      case Op::kLogSigmoid: {
        if (!wants(n.a)) break;
        // d/dx log sigmoid(x) = sigmoid(-x) = 1 - exp(out)
        S* ga = grad_of(n.a).data();
        const int len = g.size();
        const S* gp = g.data();
        const S* vp = n.val.data();
        for (int i = 0; i < len; ++i) ga[i] += gp[i] * (S{1} - std::exp(vp[i]));
        break;
      }

      case Op::kConcat: {
        int off = 0;
        const S* gp = g.data();
        for (const int part : n.extras) {
          const int len = val_of(part).size();
          if (wants(part)) {
            S* pg = grad_of(part).data();
            for (int i = 0; i < len; ++i) pg[i] += gp[off + i];
          }
          off += len;
        }
        break;
      }

      case Op::kSoftmax: {
        if (!wants(n.a)) break;
        S* ga = grad_of(n.a).data();
        const int len = g.size();
        const S* gp = g.data();
        const S* vp = n.val.data();
        S inner{0};
        for (int i = 0; i < len; ++i) inner += gp[i] * vp[i];
        for (int i = 0; i < len; ++i) ga[i] += vp[i] * (gp[i] - inner);
        break;
      }

      case Op::kPickLogSoftmax: {
        if (!wants(n.a)) break;
        S* ga = grad_of(n.a).data();
        const S gs = g[0];
        const int len = n.aux.size();
        const S* pp = n.aux.data();
        for (int i = 0; i < len; ++i) ga[i] -= gs * pp[i];
        ga[n.idx] += gs;
        break;
      }

      case Op::kPick: {
        if (!wants(n.a)) break;
        grad_of(n.a)[n.idx] += g[0];
        break;
      }

      case Op::kDot: {
        const S gs = g[0];
        if (wants(n.a)) {
          const Tensor<S>& bv = val_of(n.b);
          S* ga = grad_of(n.a).data();
          const S* bp = bv.data();
          const int len = bv.size();
          for (int i = 0; i < len; ++i) ga[i] += gs * bp[i];
        }
        if (wants(n.b)) {
          const Tensor<S>& av = val_of(n.a);
          S* gb = grad_of(n.b).data();
          const S* ap = av.data();
          const int len = av.size();
          for (int i = 0; i < len; ++i) gb[i] += gs * ap[i];
        }
        break;
      }

      case Op::kSum: {
        if (!wants(n.a)) break;
        Tensor<S>& ga = grad_of(n.a);
        const S gs = g[0];
        const int len = ga.size();
        S* gp = ga.data();
        for (int i = 0; i < len; ++i) gp[i] += gs;
        break;
      }

      case Op::kWeightedSum: {
        const int coeffs = n.extras[0];
        const Tensor<S>& cv = val_of(coeffs);
        const int dim = g.size();
        const S* gp = g.data();
        for (std::size_t k = 1; k < n.extras.size(); ++k) {
          const int vec = n.extras[k];
          const Tensor<S>& vv = val_of(vec);
          const S* vp = vv.data();
          if (wants(coeffs)) {
            S acc{0};
            for (int j = 0; j < dim; ++j) acc += gp[j] * vp[j];
            grad_of(coeffs)[k - 1] += acc;
          }
          if (wants(vec)) {
            S* gv = grad_of(vec).data();
            const S c = cv[k - 1];
            for (int j = 0; j < dim; ++j) gv[j] += c * gp[j];
          }
        }
        break;
      }

      case Op::kSquaredDist: {
        const S gs = g[0];
        const Tensor<S>& av = val_of(n.a);
        const Tensor<S>& bv = val_of(n.b);
        const S* ap = av.data();
        const S* bp = bv.data();
        const int len = av.size();
        if (wants(n.a)) {
          S* ga = grad_of(n.a).data();
          for (int i = 0; i < len; ++i) ga[i] += gs * S{2} * (ap[i] - bp[i]);
        }
        if (wants(n.b)) {
          S* gb = grad_of(n.b).data();
          for (int i = 0; i < len; ++i) gb[i] -= gs * S{2} * (ap[i] - bp[i]);
        }
        break;
      }
    }
  }

  void accumulate(int target, const Tensor<S>& g, S factor) {
    if (!wants(target)) return;
    Tensor<S>& gt = grad_of(target);
    const int len = g.size();
    const S* gp = g.data();
    S* tp = gt.data();
    for (int i = 0; i < len; ++i) tp[i] += factor * gp[i];
  }

  std::deque<Node> nodes_;  // deque keeps value() references stable as the tape grows
  bool backward_done_ = false;
};

// Standalone stable softmax over raw values; the graph op shares the math.
template <typename S>
std::vector<S> softmax_vector(const std::vector<S>& scores) {
  require(!scores.empty(), "softmax of empty vector");
  for (const S v : scores)
    require(std::isfinite(static_cast<double>(v)), "softmax input must be finite");
  S mx = scores[0];
  for (const S v : scores) mx = std::max(mx, v);
  std::vector<S> out(scores.size());
  S total{0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace charmt
