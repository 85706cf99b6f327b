#include "garnet/autodiff.hpp"

#include <utility>

#include "garnet/errors.hpp"

namespace garnet {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError(std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

Var Graph::push(Matrix value, std::function<void(Graph&, std::size_t)> propagate) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(propagate)});
  return Var{nodes_.size() - 1};
}

Var Graph::constant(Matrix value) { return push(std::move(value), nullptr); }

Var Graph::parameter(Matrix value) { return push(std::move(value), nullptr); }

Var Graph::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), [a, b](Graph& g, std::size_t self) {
    g.node(a.index).grad += g.node(self).grad;
    g.node(b.index).grad += g.node(self).grad;
  });
}

Var Graph::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), [a, b](Graph& g, std::size_t self) {
    g.node(a.index).grad += g.node(self).grad;
    g.node(b.index).grad -= g.node(self).grad;
  });
}

Var Graph::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  return push(value(a).cwiseProduct(value(b)), [a, b](Graph& g, std::size_t self) {
    const Matrix& up = g.node(self).grad;
    // Both reads happen before either write, so mul(w, w) is handled.
    Matrix da = up.cwiseProduct(g.node(b.index).value);
    Matrix db = up.cwiseProduct(g.node(a.index).value);
    g.node(a.index).grad += da;
    g.node(b.index).grad += db;
  });
}

Var Graph::add_scalar(Var a, double c) {
  return push(value(a).array() + c, [a](Graph& g, std::size_t self) {
    g.node(a.index).grad += g.node(self).grad;
  });
}

Var Graph::linear(Var x, Var weight, Var bias) {
  const Matrix& xv = value(x);
  const Matrix& w = value(weight);
  const Matrix& b = value(bias);
  if (xv.cols() != w.cols()) throw InputError("linear: input width does not match weight columns");
  if (b.rows() != 1 || b.cols() != w.rows()) throw InputError("linear: bias shape does not match weight rows");

  Matrix out = xv * w.transpose();
  out.rowwise() += b.row(0);
  return push(std::move(out), [x, weight, bias](Graph& g, std::size_t self) {
    const Matrix& up = g.node(self).grad;
    g.node(x.index).grad.noalias() += up * g.node(weight.index).value;
    g.node(weight.index).grad.noalias() += up.transpose() * g.node(x.index).value;
    g.node(bias.index).grad += up.colwise().sum();
  });
}

Var Graph::prelu(Var x, Var slope) {
  if (value(slope).size() != 1) throw InputError("prelu: slope must be 1x1");
  const double a = value(slope)(0, 0);
  Matrix out = value(x).unaryExpr([a](double v) { return v > 0.0 ? v : a * v; });
  return push(std::move(out), [x, slope](Graph& g, std::size_t self) {
    const Matrix& up = g.node(self).grad;
    const Matrix& in = g.node(x.index).value;
    const double a = g.node(slope.index).value(0, 0);
    double dslope = 0.0;
    Matrix& dx = g.node(x.index).grad;
    for (Eigen::Index i = 0; i < in.size(); ++i) {
      const double v = in.data()[i];
      if (v > 0.0) {
        dx.data()[i] += up.data()[i];
      } else {
        dx.data()[i] += a * up.data()[i];
        dslope += v * up.data()[i];
      }
    }
    g.node(slope.index).grad(0, 0) += dslope;
  });
}

Var Graph::relu(Var x) {
  Matrix out = value(x).cwiseMax(0.0);
  return push(std::move(out), [x](Graph& g, std::size_t self) {
    const Matrix& up = g.node(self).grad;
    const Matrix& in = g.node(x.index).value;
    Matrix& dx = g.node(x.index).grad;
    for (Eigen::Index i = 0; i < in.size(); ++i) {
      if (in.data()[i] > 0.0) dx.data()[i] += up.data()[i];
    }
  });
}

Var Graph::row_norm(Var x) {
  Matrix out = value(x).rowwise().norm();
  return push(std::move(out), [x](Graph& g, std::size_t self) {
    const Matrix& up = g.node(self).grad;
    const Matrix& norms = g.node(self).value;
    const Matrix& in = g.node(x.index).value;
    Matrix& dx = g.node(x.index).grad;
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      const double n = norms(r, 0);
      if (n > 0.0) dx.row(r) += (up(r, 0) / n) * in.row(r);
    }
  });
}

Var Graph::mean(Var x) {
  const double count = static_cast<double>(value(x).size());
  Matrix out(1, 1);
  out(0, 0) = value(x).mean();
  return push(std::move(out), [x, count](Graph& g, std::size_t self) {
    g.node(x.index).grad.array() += g.node(self).grad(0, 0) / count;
  });
}

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) throw InputError("backward: loss must be a 1x1 node");
  for (Node& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_[loss.index].grad(0, 0) = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (nodes_[i].propagate) nodes_[i].propagate(*this, i);
  }
}

}  // namespace garnet
