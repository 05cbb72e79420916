#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "pmmm/matrix.hpp"

namespace pmmm {

// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const noexcept { return id != kInvalid; }
};

// Linear recording of primitive applications. Node ids are assigned in
// recording order, so inputs always precede outputs and backward() simply
// walks ids in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var self)>;

  Var constant(DenseMat value);
  Var parameter(DenseMat value);

  const DenseMat& value(Var v) const;
  // Gradient from the last backward(); zeros for nodes the loss does not reach.
  const DenseMat& grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Throws ShapeError unless `loss` is 1x1.
  void backward(Var loss);

  // Primitive authoring interface.
  Var record(DenseMat value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(DenseMat value, std::span<const Var> inputs, BackwardFn fn);
  DenseMat& grad_ref(Var v);

 private:
  struct Node {
    DenseMat value;
    DenseMat grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  const Node& node(Var v) const;
  std::vector<Node> nodes_;
};

// Differentiable primitives. Every op checks shapes and throws ShapeError
// naming the op and the offending shapes.
namespace ops {

Var matmul(Tape& t, Var a, Var b);
// `a` must outlive the tape's backward pass.
Var spmm(Tape& t, const SparseMat& a, Var x);
Var add(Tape& t, Var a, Var b);
// Left-to-right sum of equally shaped terms.
Var add_n(Tape& t, std::span<const Var> terms);
Var scale(Tape& t, Var x, double c);
// s must be 1x1.
Var scale_by(Tape& t, Var s, Var x);
Var relu(Tape& t, Var x);
// Softmax over a 1xK row vector.
Var softmax_vector(Tape& t, Var logits);
// Entry `index` of x (row-major) as a 1x1 value.
Var pick(Tape& t, Var x, std::size_t index);
// Identity in value; gradient flows only to entries with pass[i] true.
Var mask_gradient(Tape& t, Var x, std::vector<bool> pass);
Var row_gather(Tape& t, Var x, std::vector<std::size_t> rows);
Var vstack(Tape& t, std::span<const Var> blocks);
// Adds a 1xC bias row to every row of x.
Var add_bias(Tape& t, Var x, Var bias);
// Per-row inner product, n x 1.
Var rowwise_dot(Tape& t, Var a, Var b);
Var sum(Tape& t, Var x);
// Mean softmax cross-entropy of logits (n x C) against class ids.
Var cross_entropy(Tape& t, Var logits, std::vector<int> classes);
// Mean binary cross-entropy on raw scores (n x 1), labels in {0,1}.
Var bce_logits(Tape& t, Var scores, std::vector<double> labels);

}  // namespace ops

// Plain (untaped) numerically stable softmax of a vector.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace pmmm
