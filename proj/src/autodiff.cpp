#include "trustlab/autodiff.hpp"

#include <cmath>

namespace trustlab::ad {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kLogSqrt2Pi = 0.9189385332046727;
}  // namespace

double norm_pdf_value(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double norm_cdf_value(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double probit_ratio_value(double z) {
  if (z < -20.0) {
    // Mills-ratio asymptotic series; the direct ratio underflows to 0/0.
    const double iz2 = 1.0 / (z * z);
    return -z / (1.0 - iz2 * (1.0 - 3.0 * iz2 * (1.0 - 5.0 * iz2)));
  }
  return norm_pdf_value(z) / norm_cdf_value(z);
}

double log_norm_cdf_value(double z) {
  if (z < -20.0) {
    const double iz2 = 1.0 / (z * z);
    return -0.5 * z * z - kLogSqrt2Pi - std::log(-z) +
           std::log1p(-iz2 * (1.0 - 3.0 * iz2 * (1.0 - 5.0 * iz2)));
  }
  return std::log(norm_cdf_value(z));
}

Var Tape::push(Eigen::MatrixXd v, std::function<void()> back) {
  Node n;
  n.val = std::move(v);
  n.adj = Eigen::MatrixXd::Zero(n.val.rows(), n.val.cols());
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Eigen::MatrixXd v) { return push(std::move(v)); }

Var Tape::scalar(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return push(std::move(m));
}

double Tape::scalar_value(Var v) const {
  const auto& m = nodes_[v.idx].val;
  if (m.size() != 1) throw std::logic_error("scalar_value on non-scalar node");
  return m(0, 0);
}

void Tape::backward(Var loss) {
  if (nodes_[loss.idx].val.size() != 1)
    throw std::logic_error("backward requires a scalar loss");
  for (auto& n : nodes_) n.adj.setZero();
  nodes_[loss.idx].adj(0, 0) = 1.0;
  for (int i = loss.idx; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back();
}

Var Tape::add(Var a, Var b) {
  Var out = push(val(a.idx) + val(b.idx));
  nodes_[out.idx].back = [this, a, b, out] {
    adj(a.idx) += adj(out.idx);
    adj(b.idx) += adj(out.idx);
  };
  return out;
}

Var Tape::sub(Var a, Var b) {
  Var out = push(val(a.idx) - val(b.idx));
  nodes_[out.idx].back = [this, a, b, out] {
    adj(a.idx) += adj(out.idx);
    adj(b.idx) -= adj(out.idx);
  };
  return out;
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::matmul(Var a, Var b) {
  Var out = push(val(a.idx) * val(b.idx));
  nodes_[out.idx].back = [this, a, b, out] {
    adj(a.idx) += adj(out.idx) * val(b.idx).transpose();
    adj(b.idx) += val(a.idx).transpose() * adj(out.idx);
  };
  return out;
}

Var Tape::transpose(Var a) {
  Var out = push(val(a.idx).transpose());
  nodes_[out.idx].back = [this, a, out] { adj(a.idx) += adj(out.idx).transpose(); };
  return out;
}

Var Tape::hadamard(Var a, Var b) {
  Var out = push(val(a.idx).cwiseProduct(val(b.idx)));
  nodes_[out.idx].back = [this, a, b, out] {
    adj(a.idx) += adj(out.idx).cwiseProduct(val(b.idx));
    adj(b.idx) += adj(out.idx).cwiseProduct(val(a.idx));
  };
  return out;
}

Var Tape::smul(Var s, Var m) {
  Var out = push(val(s.idx)(0, 0) * val(m.idx));
  nodes_[out.idx].back = [this, s, m, out] {
    adj(s.idx)(0, 0) += (adj(out.idx).cwiseProduct(val(m.idx))).sum();
    adj(m.idx) += val(s.idx)(0, 0) * adj(out.idx);
  };
  return out;
}

Var Tape::sdiv(Var m, Var s) {
  const double sv = val(s.idx)(0, 0);
  Var out = push(val(m.idx) / sv);
  nodes_[out.idx].back = [this, m, s, out, sv] {
    adj(m.idx) += adj(out.idx) / sv;
    adj(s.idx)(0, 0) -= (adj(out.idx).cwiseProduct(val(out.idx))).sum() / sv;
  };
  return out;
}

Var Tape::scale(Var a, double c) {
  Var out = push(c * val(a.idx));
  nodes_[out.idx].back = [this, a, out, c] { adj(a.idx) += c * adj(out.idx); };
  return out;
}

Var Tape::add_const(Var a, double c) {
  Var out = push(val(a.idx).array() + c);
  nodes_[out.idx].back = [this, a, out] { adj(a.idx) += adj(out.idx); };
  return out;
}

Var Tape::tanh(Var a) {
  Var out = push(val(a.idx).array().tanh());
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx).array() += adj(out.idx).array() * (1.0 - val(out.idx).array().square());
  };
  return out;
}

Var Tape::sigmoid(Var a) {
  Var out = push((1.0 / (1.0 + (-val(a.idx).array()).exp())).matrix());
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx).array() +=
        adj(out.idx).array() * val(out.idx).array() * (1.0 - val(out.idx).array());
  };
  return out;
}

Var Tape::exp(Var a) {
  Var out = push(val(a.idx).array().exp());
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx).array() += adj(out.idx).array() * val(out.idx).array();
  };
  return out;
}

Var Tape::log(Var a) {
  Var out = push(val(a.idx).array().log());
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx).array() += adj(out.idx).array() / val(a.idx).array();
  };
  return out;
}

Var Tape::sqrt(Var a) {
  Var out = push(val(a.idx).array().sqrt());
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx).array() += adj(out.idx).array() * 0.5 / val(out.idx).array();
  };
  return out;
}

Var Tape::square(Var a) {
  Var out = push(val(a.idx).array().square());
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx).array() += adj(out.idx).array() * 2.0 * val(a.idx).array();
  };
  return out;
}

Var Tape::softplus(Var a) {
  // log(1 + exp(x)) = max(x, 0) + log1p(exp(-|x|))
  Eigen::MatrixXd v = val(a.idx).unaryExpr(
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
  Var out = push(std::move(v));
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx).array() += adj(out.idx).array() / (1.0 + (-val(a.idx).array()).exp());
  };
  return out;
}

Var Tape::norm_cdf(Var a) {
  Var out = push(val(a.idx).unaryExpr([](double z) { return norm_cdf_value(z); }));
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx) += adj(out.idx).cwiseProduct(
        val(a.idx).unaryExpr([](double z) { return norm_pdf_value(z); }));
  };
  return out;
}

Var Tape::log_norm_cdf(Var a) {
  Var out = push(val(a.idx).unaryExpr([](double z) { return log_norm_cdf_value(z); }));
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx) += adj(out.idx).cwiseProduct(
        val(a.idx).unaryExpr([](double z) { return probit_ratio_value(z); }));
  };
  return out;
}

Var Tape::probit_ratio(Var a) {
  Var out = push(val(a.idx).unaryExpr([](double z) { return probit_ratio_value(z); }));
  nodes_[out.idx].back = [this, a, out] {
    // r'(z) = -z r - r^2
    adj(a.idx).array() += adj(out.idx).array() *
                          (-val(a.idx).array() * val(out.idx).array() -
                           val(out.idx).array().square());
  };
  return out;
}

Var Tape::sum(Var a) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = val(a.idx).sum();
  Var out = push(std::move(m));
  nodes_[out.idx].back = [this, a, out] {
    adj(a.idx).array() += adj(out.idx)(0, 0);
  };
  return out;
}

Var Tape::dot(Var a, Var b) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = val(a.idx).cwiseProduct(val(b.idx)).sum();
  Var out = push(std::move(m));
  nodes_[out.idx].back = [this, a, b, out] {
    adj(a.idx) += adj(out.idx)(0, 0) * val(b.idx);
    adj(b.idx) += adj(out.idx)(0, 0) * val(a.idx);
  };
  return out;
}

Var Tape::vcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::logic_error("vcat of zero parts");
  Eigen::Index rows = 0;
  const Eigen::Index cols = val(parts[0].idx).cols();
  for (Var p : parts) rows += val(p.idx).rows();
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    m.middleRows(at, val(p.idx).rows()) = val(p.idx);
    at += val(p.idx).rows();
  }
  Var out = push(std::move(m));
  std::vector<Var> ps(parts);
  nodes_[out.idx].back = [this, ps, out] {
    Eigen::Index at2 = 0;
    for (Var p : ps) {
      adj(p.idx) += adj(out.idx).middleRows(at2, val(p.idx).rows());
      at2 += val(p.idx).rows();
    }
  };
  return out;
}

Var Tape::pad_rows(Var a, int n) {
  const Eigen::Index r = val(a.idx).rows();
  if (r > n) throw std::invalid_argument("pad_rows: input has more rows than target");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, val(a.idx).cols());
  m.topRows(r) = val(a.idx);
  Var out = push(std::move(m));
  nodes_[out.idx].back = [this, a, out, r] {
    adj(a.idx) += adj(out.idx).topRows(r);
  };
  return out;
}

Var Tape::pad_to(Var a, int rows, int cols) {
  const Eigen::Index r = val(a.idx).rows(), c = val(a.idx).cols();
  if (r > rows || c > cols) throw std::invalid_argument("pad_to: shrinking");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  m.topLeftCorner(r, c) = val(a.idx);
  Var out = push(std::move(m));
  nodes_[out.idx].back = [this, a, out, r, c] {
    adj(a.idx) += adj(out.idx).topLeftCorner(r, c);
  };
  return out;
}

Var Tape::rows(Var a, int start, int n) {
  Var out = push(val(a.idx).middleRows(start, n));
  nodes_[out.idx].back = [this, a, out, start, n] {
    adj(a.idx).middleRows(start, n) += adj(out.idx);
  };
  return out;
}

Var Tape::clamp_min(Var a, double lo) {
  Var out = push(val(a.idx).cwiseMax(lo));
  nodes_[out.idx].back = [this, a, out, lo] {
    adj(a.idx).array() +=
        adj(out.idx).array() * (val(a.idx).array() > lo).cast<double>();
  };
  return out;
}

Var Tape::clamp(Var a, double lo, double hi) {
  Var out = push(val(a.idx).cwiseMax(lo).cwiseMin(hi));
  nodes_[out.idx].back = [this, a, out, lo, hi] {
    adj(a.idx).array() += adj(out.idx).array() *
                          ((val(a.idx).array() > lo) && (val(a.idx).array() < hi))
                              .cast<double>();
  };
  return out;
}

}  // namespace trustlab::ad
