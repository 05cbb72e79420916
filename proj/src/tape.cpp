#include "pmmm/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pmmm/error.hpp"

namespace pmmm {

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw std::out_of_range("Tape: invalid Var");
  return nodes_[v.id];
}

Var Tape::constant(DenseMat value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(DenseMat value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var{nodes_.size() - 1};
}

const DenseMat& Tape::value(Var v) const { return node(v).value; }

const DenseMat& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.grad.same_shape(n.value)) {
    // Never reached by a backward pass.
    auto& self = const_cast<Node&>(n);
    self.grad = DenseMat(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Var Tape::record(DenseMat value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(DenseMat value, std::span<const Var> inputs, BackwardFn fn) {
  bool rg = false;
  for (Var in : inputs) rg = rg || node(in).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, rg, rg ? std::move(fn) : BackwardFn{}});
  return Var{nodes_.size() - 1};
}

DenseMat& Tape::grad_ref(Var v) { return nodes_.at(v.id).grad; }

void Tape::backward(Var loss) {
  const Node& l = node(loss);
  if (l.value.rows() != 1 || l.value.cols() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + l.value.shape_str());
  }
  for (auto& n : nodes_) n.grad = DenseMat(n.value.rows(), n.value.cols());
  nodes_[loss.id].grad(0, 0) = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.requires_grad && n.backward) n.backward(*this, Var{id});
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

namespace ops {
namespace {

[[noreturn]] void shape_fail(const std::string& op, const DenseMat& a, const DenseMat& b) {
  throw ShapeError(op + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

void accumulate(DenseMat& dst, const DenseMat& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const DenseMat& av = t.value(a);
  const DenseMat& bv = t.value(b);
  if (av.cols() != bv.rows()) shape_fail("matmul", av, bv);
  return t.record(pmmm::matmul(av, bv), {a, b}, [a, b](Tape& tp, Var self) {
    const DenseMat& g = tp.grad(self);
    if (tp.requires_grad(a)) accumulate(tp.grad_ref(a), matmul_a_bt(g, tp.value(b)));
    if (tp.requires_grad(b)) accumulate(tp.grad_ref(b), matmul_at_b(tp.value(a), g));
  });
}

Var spmm(Tape& t, const SparseMat& a, Var x) {
  const DenseMat& xv = t.value(x);
  if (a.cols() != xv.rows()) {
    throw ShapeError("spmm: incompatible shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " and " + xv.shape_str());
  }
  const SparseMat* ap = &a;
  return t.record(pmmm::spmm(a, xv), {x}, [ap, x](Tape& tp, Var self) {
    accumulate(tp.grad_ref(x), spmm_transposed(*ap, tp.grad(self)));
  });
}

Var add(Tape& t, Var a, Var b) {
  const DenseMat& av = t.value(a);
  const DenseMat& bv = t.value(b);
  if (!av.same_shape(bv)) shape_fail("add", av, bv);
  DenseMat out = av;
  accumulate(out, bv);
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
    const DenseMat& g = tp.grad(self);
    if (tp.requires_grad(a)) accumulate(tp.grad_ref(a), g);
    if (tp.requires_grad(b)) accumulate(tp.grad_ref(b), g);
  });
}

Var add_n(Tape& t, std::span<const Var> terms) {
  if (terms.empty()) throw ShapeError("add_n: no terms");
  const DenseMat& first = t.value(terms[0]);
  DenseMat out = first;
  for (std::size_t k = 1; k < terms.size(); ++k) {
    const DenseMat& v = t.value(terms[k]);
    if (!v.same_shape(first)) shape_fail("add_n", first, v);
    accumulate(out, v);
  }
  std::vector<Var> ins(terms.begin(), terms.end());
  return t.record(std::move(out), terms, [ins](Tape& tp, Var self) {
    const DenseMat& g = tp.grad(self);
    for (Var in : ins) {
      if (tp.requires_grad(in)) accumulate(tp.grad_ref(in), g);
    }
  });
}

Var scale(Tape& t, Var x, double c) {
  DenseMat out = t.value(x);
  for (double& v : out.data()) v *= c;
  return t.record(std::move(out), {x}, [x, c](Tape& tp, Var self) {
    auto g = tp.grad(self).data();
    auto d = tp.grad_ref(x).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += c * g[i];
  });
}

Var scale_by(Tape& t, Var s, Var x) {
  const DenseMat& sv = t.value(s);
  if (sv.rows() != 1 || sv.cols() != 1) shape_fail("scale_by", sv, t.value(x));
  const double c = sv(0, 0);
  DenseMat out = t.value(x);
  for (double& v : out.data()) v *= c;
  return t.record(std::move(out), {s, x}, [s, x](Tape& tp, Var self) {
    auto g = tp.grad(self).data();
    if (tp.requires_grad(s)) {
      auto xv = tp.value(x).data();
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xv[i];
      tp.grad_ref(s)(0, 0) += acc;
    }
    if (tp.requires_grad(x)) {
      const double c2 = tp.value(s)(0, 0);
      auto d = tp.grad_ref(x).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += c2 * g[i];
    }
  });
}

Var relu(Tape& t, Var x) {
  DenseMat out = t.value(x);
  for (double& v : out.data()) v = v < 0.0 ? 0.0 : v;  // NaN passes through
  return t.record(std::move(out), {x}, [x](Tape& tp, Var self) {
    auto g = tp.grad(self).data();
    auto xv = tp.value(x).data();
    auto d = tp.grad_ref(x).data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (xv[i] > 0.0) d[i] += g[i];
    }
  });
}

Var softmax_vector(Tape& t, Var logits) {
  const DenseMat& lv = t.value(logits);
  if (lv.rows() != 1 || lv.cols() == 0) {
    throw ShapeError("softmax_vector: expected a non-empty row vector, got " + lv.shape_str());
  }
  DenseMat out = DenseMat::row_vector(softmax(lv.data()));
  return t.record(std::move(out), {logits}, [logits](Tape& tp, Var self) {
    auto g = tp.grad(self).data();
    auto y = tp.value(self).data();
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
    auto d = tp.grad_ref(logits).data();
    for (std::size_t i = 0; i < y.size(); ++i) d[i] += y[i] * (g[i] - dot);
  });
}

Var pick(Tape& t, Var x, std::size_t index) {
  const DenseMat& xv = t.value(x);
  if (index >= xv.size()) {
    throw ShapeError("pick: index " + std::to_string(index) + " outside " + xv.shape_str());
  }
  return t.record(DenseMat::scalar(xv[index]), {x}, [x, index](Tape& tp, Var self) {
    tp.grad_ref(x)[index] += tp.grad(self)(0, 0);
  });
}

Var mask_gradient(Tape& t, Var x, std::vector<bool> pass) {
  const DenseMat& xv = t.value(x);
  if (pass.size() != xv.size()) {
    throw ShapeError("mask_gradient: mask length " + std::to_string(pass.size()) + " for " + xv.shape_str());
  }
  return t.record(DenseMat(xv), {x}, [x, pass = std::move(pass)](Tape& tp, Var self) {
    auto g = tp.grad(self).data();
    auto d = tp.grad_ref(x).data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (pass[i]) d[i] += g[i];
    }
  });
}

Var row_gather(Tape& t, Var x, std::vector<std::size_t> rows) {
  const DenseMat& xv = t.value(x);
  DenseMat out(rows.size(), xv.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= xv.rows()) {
      throw ShapeError("row_gather: row " + std::to_string(rows[k]) + " outside " + xv.shape_str());
    }
    std::copy(xv.row(rows[k]).begin(), xv.row(rows[k]).end(), out.row(k).begin());
  }
  return t.record(std::move(out), {x}, [x, rows = std::move(rows)](Tape& tp, Var self) {
    const DenseMat& g = tp.grad(self);
    DenseMat& d = tp.grad_ref(x);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto gr = g.row(k);
      auto dr = d.row(rows[k]);
      for (std::size_t j = 0; j < gr.size(); ++j) dr[j] += gr[j];
    }
  });
}

Var vstack(Tape& t, std::span<const Var> blocks) {
  if (blocks.empty()) throw ShapeError("vstack: no blocks");
  const std::size_t cols = t.value(blocks[0]).cols();
  std::size_t rows = 0;
  for (Var b : blocks) {
    const DenseMat& bv = t.value(b);
    if (bv.cols() != cols) shape_fail("vstack", t.value(blocks[0]), bv);
    rows += bv.rows();
  }
  DenseMat out(rows, cols);
  std::size_t off = 0;
  for (Var b : blocks) {
    auto src = t.value(b).data();
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(off * cols));
    off += t.value(b).rows();
  }
  std::vector<Var> ins(blocks.begin(), blocks.end());
  return t.record(std::move(out), blocks, [ins](Tape& tp, Var self) {
    auto g = tp.grad(self).data();
    std::size_t off2 = 0;
    for (Var b : ins) {
      const std::size_t n = tp.value(b).size();
      if (tp.requires_grad(b)) {
        auto d = tp.grad_ref(b).data();
        for (std::size_t i = 0; i < n; ++i) d[i] += g[off2 + i];
      }
      off2 += n;
    }
  });
}

Var add_bias(Tape& t, Var x, Var bias) {
  const DenseMat& xv = t.value(x);
  const DenseMat& bv = t.value(bias);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) shape_fail("add_bias", xv, bv);
  DenseMat out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bv(0, j);
  }
  return t.record(std::move(out), {x, bias}, [x, bias](Tape& tp, Var self) {
    const DenseMat& g = tp.grad(self);
    if (tp.requires_grad(x)) accumulate(tp.grad_ref(x), g);
    if (tp.requires_grad(bias)) {
      DenseMat& d = tp.grad_ref(bias);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto gr = g.row(r);
        for (std::size_t j = 0; j < gr.size(); ++j) d(0, j) += gr[j];
      }
    }
  });
}

Var rowwise_dot(Tape& t, Var a, Var b) {
  const DenseMat& av = t.value(a);
  const DenseMat& bv = t.value(b);
  if (!av.same_shape(bv)) shape_fail("rowwise_dot", av, bv);
  DenseMat out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto ar = av.row(r);
    auto br = bv.row(r);
    double s = 0.0;
    for (std::size_t j = 0; j < ar.size(); ++j) s += ar[j] * br[j];
    out(r, 0) = s;
  }
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
    const DenseMat& g = tp.grad(self);
    const DenseMat& av2 = tp.value(a);
    const DenseMat& bv2 = tp.value(b);
    const bool ga = tp.requires_grad(a);
    const bool gb = tp.requires_grad(b);
    for (std::size_t r = 0; r < av2.rows(); ++r) {
      const double gr = g(r, 0);
      for (std::size_t j = 0; j < av2.cols(); ++j) {
        if (ga) tp.grad_ref(a)(r, j) += gr * bv2(r, j);
        if (gb) tp.grad_ref(b)(r, j) += gr * av2(r, j);
      }
    }
  });
}

Var sum(Tape& t, Var x) {
  return t.record(DenseMat::scalar(t.value(x).sum()), {x}, [x](Tape& tp, Var self) {
    const double g = tp.grad(self)(0, 0);
    for (double& d : tp.grad_ref(x).data()) d += g;
  });
}

Var cross_entropy(Tape& t, Var logits, std::vector<int> classes) {
  const DenseMat& lv = t.value(logits);
  if (classes.size() != lv.rows() || lv.rows() == 0) {
    throw ShapeError("cross_entropy: " + std::to_string(classes.size()) + " labels for logits " + lv.shape_str());
  }
  DenseMat probs(lv.rows(), lv.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    const int c = classes[r];
    if (c < 0 || static_cast<std::size_t>(c) >= lv.cols()) {
      throw ShapeError("cross_entropy: class " + std::to_string(c) + " outside " + lv.shape_str());
    }
    auto p = softmax(lv.row(r));
    std::copy(p.begin(), p.end(), probs.row(r).begin());
    // log-sum-exp form keeps the value finite for saturated logits.
    auto row = lv.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    loss += (mx + std::log(z)) - row[static_cast<std::size_t>(c)];
  }
  const double n = static_cast<double>(lv.rows());
  return t.record(DenseMat::scalar(loss / n), {logits},
                  [logits, probs = std::move(probs), classes = std::move(classes), n](Tape& tp, Var self) {
                    const double g = tp.grad(self)(0, 0);
                    DenseMat& d = tp.grad_ref(logits);
                    for (std::size_t r = 0; r < probs.rows(); ++r) {
                      for (std::size_t j = 0; j < probs.cols(); ++j) {
                        const double onehot = static_cast<int>(j) == classes[r] ? 1.0 : 0.0;
                        d(r, j) += g * (probs(r, j) - onehot) / n;
                      }
                    }
                  });
}

Var bce_logits(Tape& t, Var scores, std::vector<double> labels) {
  const DenseMat& sv = t.value(scores);
  if (sv.cols() != 1 || labels.size() != sv.rows() || sv.rows() == 0) {
    throw ShapeError("bce_logits: " + std::to_string(labels.size()) + " labels for scores " + sv.shape_str());
  }
  double loss = 0.0;
  for (std::size_t r = 0; r < sv.rows(); ++r) {
    const double s = sv(r, 0);
    const double y = labels[r];
    if (y != 0.0 && y != 1.0) throw std::invalid_argument("bce_logits: labels must be 0 or 1");
    loss += std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
  }
  const double n = static_cast<double>(sv.rows());
  return t.record(DenseMat::scalar(loss / n), {scores},
                  [scores, labels = std::move(labels), n](Tape& tp, Var self) {
                    const double g = tp.grad(self)(0, 0);
                    const DenseMat& s = tp.value(scores);
                    DenseMat& d = tp.grad_ref(scores);
                    for (std::size_t r = 0; r < s.rows(); ++r) {
                      const double sig = 1.0 / (1.0 + std::exp(-s(r, 0)));
                      d(r, 0) += g * (sig - labels[r]) / n;
                    }
                  });
}

}  // namespace ops
}  // namespace pmmm
