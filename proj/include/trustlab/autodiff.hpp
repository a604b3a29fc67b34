#pragma once

#include <Eigen/Core>

#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace trustlab::ad {

// Handle into a Tape. Scalars are stored as 1x1 matrices.
struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Reverse-mode tape over Eigen matrices. Build the computation through the
// op methods, call backward() on a 1x1 loss node, then read adjoints of the
// leaves. The tape owns all intermediate values; it is single-threaded.
class Tape {
 public:
  Var constant(Eigen::MatrixXd v);
  Var scalar(double v);

  const Eigen::MatrixXd& value(Var v) const { return nodes_[v.idx].val; }
  double scalar_value(Var v) const;
  const Eigen::MatrixXd& adjoint(Var v) const { return nodes_[v.idx].adj; }

  void backward(Var loss);
  std::size_t size() const { return nodes_.size(); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var hadamard(Var a, Var b);
  // scalar (1x1) times matrix
  Var smul(Var s, Var m);
  // elementwise division by a scalar (1x1)
  Var sdiv(Var m, Var s);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var square(Var a);
  Var softplus(Var a);
  // standard normal CDF, elementwise
  Var norm_cdf(Var a);
  // log of the standard normal CDF, stable for large negative arguments
  Var log_norm_cdf(Var a);
  // inverse Mills ratio phi(z)/Phi(z), elementwise
  Var probit_ratio(Var a);
  Var sum(Var a);
  Var dot(Var a, Var b);
  Var vcat(const std::vector<Var>& parts);
  // append zero rows up to n rows total
  Var pad_rows(Var a, int n);
  // zero-pad bottom/right up to rows x cols
  Var pad_to(Var a, int rows, int cols);
  Var rows(Var a, int start, int n);
  // max(value, lo) with zero gradient where clamped
  Var clamp_min(Var a, double lo);
  Var clamp(Var a, double lo, double hi);

 private:
  struct Node {
    Eigen::MatrixXd val;
    Eigen::MatrixXd adj;
    std::function<void()> back;
  };

  Var push(Eigen::MatrixXd v, std::function<void()> back = nullptr);
  Eigen::MatrixXd& adj(int i) { return nodes_[i].adj; }
  const Eigen::MatrixXd& val(int i) const { return nodes_[i].val; }

  std::vector<Node> nodes_;
};

// Stable phi(z)/Phi(z) for a plain double; shared with the tape op.
double probit_ratio_value(double z);
double norm_cdf_value(double z);
double norm_pdf_value(double z);
double log_norm_cdf_value(double z);

}  // namespace trustlab::ad
