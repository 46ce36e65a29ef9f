#include "igrec/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "igrec/kernels.hpp"

namespace igrec::ad {

namespace kp = igrec::kernels::parallel;

const Matrix& Var::value() const { return tape->value(id); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::invalid_argument("Var::scalar: node is " + v.shape_string());
  return v[0];
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, true, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw std::invalid_argument("Tape::record: input from another tape");
    needs = needs || nodes_[v.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, false, needs, needs ? std::move(backward) : BackwardFn{}});
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("Tape::backward: foreign variable");
  if (nodes_[loss.id].value.size() != 1) throw std::invalid_argument("Tape::backward: loss must be scalar");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Matrix();
  }
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, i);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.has_grad) return n.grad;
  return Matrix(n.value.rows(), n.value.cols());
}

const Matrix* Tape::grad_if_any(std::size_t id) const {
  return nodes_[id].has_grad ? &nodes_[id].grad : nullptr;
}

Matrix& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  if (!nodes_[id].requires_grad) return;
  Matrix& dst = grad_buffer(id);
  require_same_shape(dst, g, "Tape::accumulate");
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

// ---- helpers -------------------------------------------------------------

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid_scalar(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("autodiff: operands live on different tapes");
  return *a.tape;
}

template <class F>
Matrix map(const Matrix& x, F f) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

void check_offsets(std::span<const std::size_t> offsets, std::size_t rows, const char* what) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != rows ||
      !std::is_sorted(offsets.begin(), offsets.end())) {
    throw std::invalid_argument(std::string(what) + ": offsets do not partition the rows");
  }
}

}  // namespace

// ---- elementwise ----------------------------------------------------------

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    tp.accumulate(a.id, g);
    tp.accumulate(b.id, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    tp.accumulate(a.id, g);
    tp.accumulate(b.id, map(g, [](double v) { return -v; }));
  });
}

Var scale(Var a, double c) {
  Matrix out = map(a.value(), [c](double v) { return c * v; });
  return a.tape->record(std::move(out), {a}, [a, c](Tape& tp, std::size_t self) {
    tp.accumulate(a.id, map(tp.grad_buffer(self), [c](double v) { return c * v; }));
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "hadamard");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(a.id)) {
      Matrix ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= tp.value(b.id)[i];
      tp.accumulate(a.id, ga);
    }
    if (tp.requires_grad(b.id)) {
      Matrix gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= tp.value(a.id)[i];
      tp.accumulate(b.id, gb);
    }
  });
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw std::invalid_argument("add_row: expected 1x" + std::to_string(av.cols()) + " row, got " +
                                rv.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) += rv[j];
  return t.record(std::move(out), {a, row}, [a, row](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    tp.accumulate(a.id, g);
    if (tp.requires_grad(row.id)) {
      Matrix gr(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
      tp.accumulate(row.id, gr);
    }
  });
}

Var sigmoid(Var a) {
  Matrix out = map(a.value(), sigmoid_scalar);
  return a.tape->record(std::move(out), {a}, [a](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    Matrix g = tp.grad_buffer(self);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
    tp.accumulate(a.id, g);
  });
}

Var log_sigmoid(Var a) {
  Matrix out = map(a.value(), log_sigmoid_scalar);
  return a.tape->record(std::move(out), {a}, [a](Tape& tp, std::size_t self) {
    const Matrix& x = tp.value(a.id);
    Matrix g = tp.grad_buffer(self);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= sigmoid_scalar(-x[i]);
    tp.accumulate(a.id, g);
  });
}

Var softmax_rows(Var logits, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_rows: temperature must be positive");
  const Matrix& x = logits.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    auto out = y.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp((in[j] - mx) / tau);
      z += out[j];
    }
    for (double& v : out) v /= z;
  }
  return logits.tape->record(std::move(y), {logits}, [logits, tau](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad_buffer(self);
    Matrix gx(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(r, j) * y(r, j);
      for (std::size_t j = 0; j < y.cols(); ++j) gx(r, j) = y(r, j) * (g(r, j) - dot) / tau;
    }
    tp.accumulate(logits.id, gx);
  });
}

Var straight_through_onehot(Var soft) {
  const Matrix& s = soft.value();
  Matrix out(s.rows(), s.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto row = s.row_span(r);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    out(r, best) = 1.0;
  }
  return soft.tape->record(std::move(out), {soft}, [soft](Tape& tp, std::size_t self) {
    tp.accumulate(soft.id, tp.grad_buffer(self));
  });
}

// ---- products ---------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = kp::matmul(a.value(), b.value());
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(a.id)) tp.accumulate(a.id, kp::matmul_nt(g, tp.value(b.id)));
    if (tp.requires_grad(b.id)) tp.accumulate(b.id, kp::matmul_tn(tp.value(a.id), g));
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = kp::matmul_nt(a.value(), b.value());
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(a.id)) tp.accumulate(a.id, kp::matmul(g, tp.value(b.id)));
    if (tp.requires_grad(b.id)) tp.accumulate(b.id, kp::matmul_tn(g, tp.value(a.id)));
  });
}

Var spmm(const SparseMatrix& s, const SparseMatrix& s_t, Var x) {
  if (s_t.rows() != s.cols() || s_t.cols() != s.rows() || s_t.nnz() != s.nnz()) {
    throw std::invalid_argument("spmm: s_t is not the transpose of s");
  }
  Matrix out = kp::spmm(s, x.value());
  return x.tape->record(std::move(out), {x}, [&s_t, x](Tape& tp, std::size_t self) {
    tp.accumulate(x.id, kp::spmm(s_t, tp.grad_buffer(self)));
  });
}

Var gather_rows(Var x, std::span<const std::size_t> index) {
  const Matrix& xv = x.value();
  const std::size_t d = xv.cols();
  Matrix out(index.size(), d);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= xv.rows()) throw std::out_of_range("gather_rows: index out of range");
    std::copy_n(xv.data() + index[i] * d, d, out.data() + i * d);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return x.tape->record(std::move(out), {x}, [x, idx = std::move(idx)](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& dst = tp.grad_buffer(x.id);
    const std::size_t d = g.cols();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double* row = dst.data() + idx[i] * d;
      const double* src = g.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += src[j];
    }
  });
}

Var row_dot(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "row_dot");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) s += av(r, j) * bv(r, j);
    out[r] = s;
  }
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    const Matrix& av = tp.value(a.id);
    const Matrix& bv = tp.value(b.id);
    if (tp.requires_grad(a.id)) {
      Matrix ga(av.rows(), av.cols());
      for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t j = 0; j < av.cols(); ++j) ga(r, j) = g[r] * bv(r, j);
      tp.accumulate(a.id, ga);
    }
    if (tp.requires_grad(b.id)) {
      Matrix gb(bv.rows(), bv.cols());
      for (std::size_t r = 0; r < bv.rows(); ++r)
        for (std::size_t j = 0; j < bv.cols(); ++j) gb(r, j) = g[r] * av(r, j);
      tp.accumulate(b.id, gb);
    }
  });
}

Var row_cosine(Var a, Var b) {
  constexpr double kMinNorm = 1e-12;
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "row_cosine");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const std::size_t n = av.rows();
  Matrix out(n, 1);
  std::vector<double> na(n), nb(n);
  for (std::size_t r = 0; r < n; ++r) {
    double dot = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) {
      dot += av(r, j) * bv(r, j);
      aa += av(r, j) * av(r, j);
      bb += bv(r, j) * bv(r, j);
    }
    na[r] = std::sqrt(aa);
    nb[r] = std::sqrt(bb);
    out[r] = (na[r] < kMinNorm || nb[r] < kMinNorm) ? 0.0 : dot / (na[r] * nb[r]);
  }
  return t.record(std::move(out), {a, b},
                  [a, b, na = std::move(na), nb = std::move(nb)](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad_buffer(self);
                    const Matrix& c = tp.value(self);
                    const Matrix& av = tp.value(a.id);
                    const Matrix& bv = tp.value(b.id);
                    Matrix ga(av.rows(), av.cols());
                    Matrix gb(bv.rows(), bv.cols());
                    for (std::size_t r = 0; r < av.rows(); ++r) {
                      if (na[r] < kMinNorm || nb[r] < kMinNorm) continue;
                      const double inv = 1.0 / (na[r] * nb[r]);
                      for (std::size_t j = 0; j < av.cols(); ++j) {
                        ga(r, j) = g[r] * (bv(r, j) * inv - c[r] * av(r, j) / (na[r] * na[r]));
                        gb(r, j) = g[r] * (av(r, j) * inv - c[r] * bv(r, j) / (nb[r] * nb[r]));
                      }
                    }
                    tp.accumulate(a.id, ga);
                    tp.accumulate(b.id, gb);
                  });
}

Var mul_col(Var x, Var c) {
  Tape& t = tape_of(x, c);
  const Matrix& xv = x.value();
  const Matrix& cv = c.value();
  if (cv.rows() != xv.rows() || cv.cols() != 1) {
    throw std::invalid_argument("mul_col: expected " + std::to_string(xv.rows()) + "x1 column, got " +
                                cv.shape_string());
  }
  Matrix out = xv;
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t j = 0; j < xv.cols(); ++j) out(r, j) *= cv[r];
  return t.record(std::move(out), {x, c}, [x, c](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    const Matrix& xv = tp.value(x.id);
    const Matrix& cv = tp.value(c.id);
    if (tp.requires_grad(x.id)) {
      Matrix gx = g;
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < g.cols(); ++j) gx(r, j) *= cv[r];
      tp.accumulate(x.id, gx);
    }
    if (tp.requires_grad(c.id)) {
      Matrix gc(cv.rows(), 1);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) s += g(r, j) * xv(r, j);
        gc[r] = s;
      }
      tp.accumulate(c.id, gc);
    }
  });
}

// ---- segment reductions ------------------------------------------------------

Var segment_sum(Var x, std::span<const std::size_t> offsets) {
  const Matrix& xv = x.value();
  check_offsets(offsets, xv.rows(), "segment_sum");
  const std::size_t segs = offsets.size() - 1;
  Matrix out(segs, xv.cols());
  for (std::size_t s = 0; s < segs; ++s)
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
      for (std::size_t j = 0; j < xv.cols(); ++j) out(s, j) += xv(r, j);
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  return x.tape->record(std::move(out), {x}, [x, off = std::move(off)](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix gx(tp.value(x.id).rows(), g.cols());
    for (std::size_t s = 0; s + 1 < off.size(); ++s)
      for (std::size_t r = off[s]; r < off[s + 1]; ++r)
        for (std::size_t j = 0; j < g.cols(); ++j) gx(r, j) = g(s, j);
    tp.accumulate(x.id, gx);
  });
}

Var segment_softmax(Var x, std::span<const std::size_t> offsets) {
  const Matrix& xv = x.value();
  if (xv.cols() != 1) throw std::invalid_argument("segment_softmax: expected a column");
  check_offsets(offsets, xv.rows(), "segment_softmax");
  Matrix y(xv.rows(), 1);
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const std::size_t lo = offsets[s], hi = offsets[s + 1];
    if (lo == hi) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t r = lo; r < hi; ++r) mx = std::max(mx, xv[r]);
    double z = 0.0;
    for (std::size_t r = lo; r < hi; ++r) {
      y[r] = std::exp(xv[r] - mx);
      z += y[r];
    }
    for (std::size_t r = lo; r < hi; ++r) y[r] /= z;
  }
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  return x.tape->record(std::move(y), {x}, [x, off = std::move(off)](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad_buffer(self);
    Matrix gx(y.rows(), 1);
    for (std::size_t s = 0; s + 1 < off.size(); ++s) {
      double dot = 0.0;
      for (std::size_t r = off[s]; r < off[s + 1]; ++r) dot += g[r] * y[r];
      for (std::size_t r = off[s]; r < off[s + 1]; ++r) gx[r] = y[r] * (g[r] - dot);
    }
    tp.accumulate(x.id, gx);
  });
}

Var segment_max(Var x, std::span<const std::size_t> offsets) {
  const Matrix& xv = x.value();
  check_offsets(offsets, xv.rows(), "segment_max");
  const std::size_t segs = offsets.size() - 1;
  const std::size_t d = xv.cols();
  Matrix out(segs, d);
  std::vector<std::size_t> arg(segs * d, std::numeric_limits<std::size_t>::max());
  for (std::size_t s = 0; s < segs; ++s) {
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
        if (arg[s * d + j] == std::numeric_limits<std::size_t>::max() || xv(r, j) > out(s, j)) {
          out(s, j) = xv(r, j);
          arg[s * d + j] = r;
        }
      }
    }
  }
  return x.tape->record(std::move(out), {x}, [x, arg = std::move(arg), d](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix gx(tp.value(x.id).rows(), d);
    for (std::size_t k = 0; k < arg.size(); ++k) {
      if (arg[k] != std::numeric_limits<std::size_t>::max()) gx(arg[k], k % d) += g[k];
    }
    tp.accumulate(x.id, gx);
  });
}

// ---- shape --------------------------------------------------------------------

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = *parts.front().tape;
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.tape != &t || p.rows() != rows) throw std::invalid_argument("concat_cols: incompatible parts");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t c0 = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < v.cols(); ++j) out(r, c0 + j) = v(r, j);
    c0 += v.cols();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [ins](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    std::size_t c0 = 0;
    for (const Var& p : ins) {
      const std::size_t w = tp.value(p.id).cols();
      if (tp.requires_grad(p.id)) {
        Matrix gp(g.rows(), w);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t j = 0; j < w; ++j) gp(r, j) = g(r, c0 + j);
        tp.accumulate(p.id, gp);
      }
      c0 += w;
    }
  });
}

Var col(Var x, std::size_t c) {
  const Matrix& xv = x.value();
  if (c >= xv.cols()) throw std::out_of_range("col: column out of range");
  Matrix out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) out[r] = xv(r, c);
  return x.tape->record(std::move(out), {x}, [x, c](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& dst = tp.grad_buffer(x.id);
    for (std::size_t r = 0; r < g.rows(); ++r) dst(r, c) += g[r];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape->record(Matrix(1, 1, s), {a}, [a](Tape& tp, std::size_t self) {
    const double g = tp.grad_buffer(self)[0];
    const Matrix& av = tp.value(a.id);
    tp.accumulate(a.id, Matrix(av.rows(), av.cols(), g));
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw std::invalid_argument("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

}  // namespace igrec::ad
