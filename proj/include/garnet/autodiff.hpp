#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace garnet {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Handle to a node in a Graph.
struct Var {
  std::size_t index = 0;
};

// Tape-based reverse-mode differentiation over dense matrices.
//
// Nodes are appended in evaluation order, so the tape is already a
// topological order and backward() is a single reverse sweep. Gradients of a
// node used several times accumulate. A Graph is built for one loss
// evaluation and thrown away.
class Graph {
 public:
  Var constant(Matrix value);
  // Leaf whose gradient is collected by backward().
  Var parameter(Matrix value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  // Elementwise product.
  Var mul(Var a, Var b);
  Var add_scalar(Var a, double c);

  // x (rows x in) * weight^T (out x in) + bias (1 x out) broadcast over rows.
  Var linear(Var x, Var weight, Var bias);
  // max(x, 0) + slope * min(x, 0) with a single learnable 1x1 slope.
  Var prelu(Var x, Var slope);
  Var relu(Var x);
  // Euclidean norm of each row, giving a column vector. The subgradient at a
  // zero row is taken as 0.
  Var row_norm(Var x);
  // Mean of all entries, giving a 1x1 node.
  Var mean(Var x);

  const Matrix& value(Var v) const { return nodes_[v.index].value; }
  const Matrix& grad(Var v) const { return nodes_[v.index].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every node. loss must be 1x1.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    // Reads this node's grad and accumulates into its inputs' grads.
    std::function<void(Graph&, std::size_t)> propagate;
  };

  Var push(Matrix value, std::function<void(Graph&, std::size_t)> propagate);
  Node& node(std::size_t i) { return nodes_[i]; }

  std::vector<Node> nodes_;
};

}  // namespace garnet
