#include "lilt/autograd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "lilt/errors.hpp"

namespace lilt {

// --------------------------------------------------------------------------
// ParamStore / GradStore
// --------------------------------------------------------------------------

int ParamStore::add(const std::string& name, int rows, int cols, bool weight_decay) {
  if (find(name) >= 0) throw ConfigError("duplicate parameter name: " + name);
  if (rows <= 0 || cols <= 0) throw ShapeError("parameter " + name + " has empty shape");
  infos_.push_back({name, rows, cols, weight_decay});
  values_.emplace_back(Mat::Zero(rows, cols));
  return static_cast<int>(values_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (infos_[i].name == name) return i;
  }
  return -1;
}

long ParamStore::total_scalars() const {
  long n = 0;
  for (const auto& v : values_) n += static_cast<long>(v.size());
  return n;
}

Mat& GradStore::accum(int id) {
  Mat& g = grads_[id];
  if (g.size() == 0) {
    g = Mat::Zero(params_->info(id).rows, params_->info(id).cols);
  }
  return g;
}

void GradStore::clear() {
  for (auto& g : grads_) g.resize(0, 0);
}

void GradStore::add_into(GradStore& dst) const {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (grads_[i].size() > 0) dst.accum(static_cast<int>(i)) += grads_[i];
  }
}

double GradStore::squared_norm() const {
  double s = 0;
  for (const auto& g : grads_) {
    if (g.size() > 0) s += g.squaredNorm();
  }
  return s;
}

void GradStore::scale(double s) {
  for (auto& g : grads_) {
    if (g.size() > 0) g *= s;
  }
}

// --------------------------------------------------------------------------
// Tape
// --------------------------------------------------------------------------

Tape::Tape(const ParamStore& params, GradStore* grads) : params_(params), grads_(grads) {
  nodes_.reserve(512);
}

Var Tape::make(Mat value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad && recording();
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::make_alias(Var src, bool needs_grad) {
  Node n;
  n.alias_of = nodes_[src.id].alias_of >= 0 ? nodes_[src.id].alias_of : src.id;
  n.needs_grad = needs_grad && recording();
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Mat& Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(val(v).rows(), val(v).cols());
  return n.grad;
}

void Tape::accum_node(Var v, const Mat& g) {
  if (nodes_[v.id].needs_grad) grad(v) += g;
}

Mat& Tape::param_grad(int id) { return grads_->accum(id); }

Var Tape::constant(Mat value) { return make(std::move(value), false); }

Var Tape::scalar(double value) { return make(Mat::Constant(1, 1, value), false); }

Var Tape::lookup(int table, const std::vector<int>& ids) {
  const Mat& tab = params_.value(table);
  Mat out(static_cast<int>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tab.rows()) {
      throw IndexError("lookup: id " + std::to_string(ids[i]) + " out of range for " +
                       params_.info(table).name);
    }
    out.row(static_cast<int>(i)) = tab.row(ids[i]);
  }
  Var v = make(std::move(out), true);
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, table, ids] {
      Mat& gt = param_grad(table);
      const Mat& g = nodes_[v.id].grad;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        gt.row(ids[i]) += g.row(static_cast<int>(i));
      }
    };
  }
  return v;
}

Var Tape::linear(Var x, int weight, int bias) {
  const Mat& W = params_.value(weight);
  if (cols(x) != W.rows()) {
    throw ShapeError("linear: input width " + std::to_string(cols(x)) + " vs weight " +
                     params_.info(weight).name);
  }
  Mat out = val(x) * W;
  if (bias >= 0) out.rowwise() += params_.value(bias).row(0);
  Var v = make(std::move(out), true);
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, x, weight, bias] {
      const Mat& g = nodes_[v.id].grad;
      param_grad(weight).noalias() += val(x).transpose() * g;
      if (bias >= 0) param_grad(bias).row(0) += g.colwise().sum();
      if (nodes_[x.id].needs_grad) grad(x).noalias() += g * params_.value(weight).transpose();
    };
  }
  return v;
}

Var Tape::matmul(Var a, Var b) {
  if (cols(a) != rows(b)) throw ShapeError("matmul: inner dimensions differ");
  Var v = make(val(a) * val(b), needs_grad(a) || needs_grad(b));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, a, b] {
      const Mat& g = nodes_[v.id].grad;
      if (nodes_[a.id].needs_grad) grad(a).noalias() += g * val(b).transpose();
      if (nodes_[b.id].needs_grad) grad(b).noalias() += val(a).transpose() * g;
    };
  }
  return v;
}

Var Tape::matmul_nt(Var a, Var b) { return matmul_nt_scaled(a, b, 1.0); }

Var Tape::matmul_nt_scaled(Var a, Var b, double s) {
  if (cols(a) != cols(b)) throw ShapeError("matmul_nt: widths differ");
  Var v = make(s * (val(a) * val(b).transpose()), needs_grad(a) || needs_grad(b));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, a, b, s] {
      const Mat& g = nodes_[v.id].grad;
      if (nodes_[a.id].needs_grad) grad(a).noalias() += s * (g * val(b));
      if (nodes_[b.id].needs_grad) grad(b).noalias() += s * (g.transpose() * val(a));
    };
  }
  return v;
}

Var Tape::add(Var a, Var b) {
  if (rows(a) != rows(b) || cols(a) != cols(b)) throw ShapeError("add: shapes differ");
  Var v = make(val(a) + val(b), needs_grad(a) || needs_grad(b));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, a, b] {
      accum_node(a, nodes_[v.id].grad);
      accum_node(b, nodes_[v.id].grad);
    };
  }
  return v;
}

Var Tape::add_detached_rhs(Var a, Var b) {
  if (rows(a) != rows(b) || cols(a) != cols(b)) throw ShapeError("add: shapes differ");
  Var v = make(val(a) + val(b), needs_grad(a));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, a] { accum_node(a, nodes_[v.id].grad); };
  }
  return v;
}

Var Tape::scale(Var a, double s) {
  Var v = make(val(a) * s, needs_grad(a));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, a, s] { accum_node(a, nodes_[v.id].grad * s); };
  }
  return v;
}

Var Tape::add_constant(Var a, const Mat& c) {
  if (rows(a) != c.rows() || cols(a) != c.cols()) throw ShapeError("add_constant: shapes differ");
  Var v = make(val(a) + c, needs_grad(a));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, a] { accum_node(a, nodes_[v.id].grad); };
  }
  return v;
}

Var Tape::slice_cols(Var x, int start, int n) {
  if (start < 0 || start + n > cols(x)) throw ShapeError("slice_cols: range out of bounds");
  Var v = make(val(x).middleCols(start, n), needs_grad(x));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, x, start, n] {
      if (nodes_[x.id].needs_grad) grad(x).middleCols(start, n) += nodes_[v.id].grad;
    };
  }
  return v;
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  int total = 0;
  bool ng = false;
  for (Var x : xs) {
    if (rows(x) != rows(xs[0])) throw ShapeError("concat_cols: row counts differ");
    total += cols(x);
    ng = ng || needs_grad(x);
  }
  Mat out(rows(xs[0]), total);
  int at = 0;
  for (Var x : xs) {
    out.middleCols(at, cols(x)) = val(x);
    at += cols(x);
  }
  Var v = make(std::move(out), ng);
  if (nodes_[v.id].needs_grad) {
    std::vector<Var> parts = xs;
    nodes_[v.id].back = [this, v, parts] {
      const Mat& g = nodes_[v.id].grad;
      int at = 0;
      for (Var x : parts) {
        const int w = cols(x);
        if (nodes_[x.id].needs_grad) grad(x) += g.middleCols(at, w);
        at += w;
      }
    };
  }
  return v;
}

Var Tape::gather_rows(Var x, const std::vector<int>& rows_idx) {
  Mat out(static_cast<int>(rows_idx.size()), cols(x));
  for (std::size_t i = 0; i < rows_idx.size(); ++i) {
    if (rows_idx[i] < 0 || rows_idx[i] >= rows(x)) throw IndexError("gather_rows: out of range");
    out.row(static_cast<int>(i)) = val(x).row(rows_idx[i]);
  }
  Var v = make(std::move(out), needs_grad(x));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, x, rows_idx] {
      Mat& gx = grad(x);
      const Mat& g = nodes_[v.id].grad;
      for (std::size_t i = 0; i < rows_idx.size(); ++i) {
        gx.row(rows_idx[i]) += g.row(static_cast<int>(i));
      }
    };
  }
  return v;
}

Var Tape::rowwise_dot(Var a, Var b) {
  if (rows(a) != rows(b) || cols(a) != cols(b)) throw ShapeError("rowwise_dot: shapes differ");
  Mat out = (val(a).array() * val(b).array()).rowwise().sum().matrix();
  Var v = make(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, a, b] {
      const Mat& g = nodes_[v.id].grad;  // n x 1
      if (nodes_[a.id].needs_grad) grad(a).array() += val(b).array().colwise() * g.col(0).array();
      if (nodes_[b.id].needs_grad) grad(b).array() += val(a).array().colwise() * g.col(0).array();
    };
  }
  return v;
}

Var Tape::layer_norm(Var x, int gain, int shift, double eps) {
  const int d = cols(x);
  if (params_.value(gain).cols() != d || params_.value(shift).cols() != d) {
    throw ShapeError("layer_norm: parameter width mismatch");
  }
  const Mat& xv = val(x);
  Eigen::VectorXd mean = xv.rowwise().mean();
  Mat xhat = xv.colwise() - mean;
  Eigen::VectorXd inv_std =
      ((xhat.array().square().rowwise().sum() / d) + eps).sqrt().inverse().matrix();
  xhat.array().colwise() *= inv_std.array();
  Mat out = xhat;
  out.array().rowwise() *= params_.value(gain).row(0).array();
  out.array().rowwise() += params_.value(shift).row(0).array();
  Var v = make(std::move(out), true);
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, x, gain, shift, xhat = std::move(xhat),
                         inv_std = std::move(inv_std)] {
      const Mat& g = nodes_[v.id].grad;
      param_grad(gain).row(0) += (g.array() * xhat.array()).colwise().sum().matrix();
      param_grad(shift).row(0) += g.colwise().sum();
      if (nodes_[x.id].needs_grad) {
        const int d = static_cast<int>(xhat.cols());
        Mat gy = g;
        gy.array().rowwise() *= params_.value(gain).row(0).array();
        Eigen::VectorXd m1 = gy.rowwise().mean();
        Eigen::VectorXd m2 = ((gy.array() * xhat.array()).rowwise().sum() / d).matrix();
        Mat gx = gy;
        gx.colwise() -= m1;
        gx.array() -= xhat.array().colwise() * m2.array();
        gx.array().colwise() *= inv_std.array();
        grad(x) += gx;
      }
    };
  }
  return v;
}

Var Tape::gelu(Var x) {
  // Exact erf form: x * Phi(x).
  Mat out = val(x).unaryExpr(
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)); });
  Var v = make(std::move(out), needs_grad(x));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, x] {
      const Mat deriv = val(x).unaryExpr([](double t) {
        const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
        const double Phi = 0.5 * (1.0 + std::erf(t * M_SQRT1_2));
        return Phi + t * phi;
      });
      accum_node(x, (nodes_[v.id].grad.array() * deriv.array()).matrix());
    };
  }
  return v;
}

Mat softmax_rows_value(const Mat& x) {
  const Eigen::VectorXd row_max = x.rowwise().maxCoeff();
  Mat out = x;
  out.colwise() -= row_max;
  out = out.array().exp().matrix();
  const Eigen::VectorXd sums = out.rowwise().sum();
  out.array().colwise() /= sums.array();
  return out;
}

Var Tape::softmax_rows(Var x) {
  Var v = make(softmax_rows_value(val(x)), needs_grad(x));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, x] {
      const Mat& y = val(v);
      const Mat& g = nodes_[v.id].grad;
      Eigen::VectorXd dot = (g.array() * y.array()).rowwise().sum();
      accum_node(x, (y.array() * (g.array().colwise() - dot.array())).matrix());
    };
  }
  return v;
}

Var Tape::softmax_rows_biased(Var x, const Mat& bias) {
  if (rows(x) != bias.rows() || cols(x) != bias.cols()) {
    throw ShapeError("softmax_rows_biased: bias shape differs");
  }
  Var v = make(softmax_rows_value(val(x) + bias), needs_grad(x));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, x] {
      const Mat& y = val(v);
      const Mat& g = nodes_[v.id].grad;
      Eigen::VectorXd dot = (g.array() * y.array()).rowwise().sum();
      accum_node(x, (y.array() * (g.array().colwise() - dot.array())).matrix());
    };
  }
  return v;
}

Var Tape::dropout(Var x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  const double keep = 1.0 - rate;
  Mat mask(rows(x), cols(x));
  for (int i = 0; i < mask.rows(); ++i) {
    for (int j = 0; j < mask.cols(); ++j) {
      mask(i, j) = rng.uniform() < rate ? 0.0 : 1.0 / keep;
    }
  }
  Var v = make((val(x).array() * mask.array()).matrix(), needs_grad(x));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, x, mask = std::move(mask)] {
      accum_node(x, (nodes_[v.id].grad.array() * mask.array()).matrix());
    };
  }
  return v;
}

Var Tape::detach(Var x) { return make_alias(x, false); }

Var Tape::sum_scalars(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("sum_scalars: empty");
  double total = 0;
  bool ng = false;
  for (Var x : xs) {
    if (rows(x) != 1 || cols(x) != 1) throw ShapeError("sum_scalars: non-scalar input");
    total += val(x)(0, 0);
    ng = ng || needs_grad(x);
  }
  Var v = make(Mat::Constant(1, 1, total), ng);
  if (nodes_[v.id].needs_grad) {
    std::vector<Var> parts = xs;
    nodes_[v.id].back = [this, v, parts] {
      for (Var x : parts) accum_node(x, nodes_[v.id].grad);
    };
  }
  return v;
}

Var Tape::mean_cross_entropy(Var logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != rows(logits)) {
    throw ShapeError("mean_cross_entropy: one label per row required");
  }
  const Mat& z = val(logits);
  int count = 0;
  double loss = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    if (labels[i] >= z.cols()) throw IndexError("mean_cross_entropy: label out of range");
    const auto row = z.row(static_cast<int>(i));
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    loss += lse - row(labels[i]);
    ++count;
  }
  if (count == 0) return scalar(0.0);
  Var v = make(Mat::Constant(1, 1, loss / count), needs_grad(logits));
  if (nodes_[v.id].needs_grad) {
    nodes_[v.id].back = [this, v, logits, labels, count] {
      const double g = nodes_[v.id].grad(0, 0) / count;
      Mat& gz = grad(logits);
      const Mat& z = val(logits);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) continue;
        const int r = static_cast<int>(i);
        const double m = z.row(r).maxCoeff();
        Eigen::RowVectorXd p = (z.row(r).array() - m).exp().matrix();
        p /= p.sum();
        gz.row(r) += g * p;
        gz(r, labels[i]) -= g;
      }
    };
  }
  return v;
}

void Tape::backward(Var root, double seed) {
  if (!recording()) throw ConfigError("backward on a forward-only tape");
  if (rows(root) != 1 || cols(root) != 1) throw ShapeError("backward root must be scalar");
  grad(root)(0, 0) += seed;
  std::map<int,double> slot_ms;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && n.grad.size() > 0) {
      auto t0 = std::chrono::steady_clock::now();
      n.back();
      auto t1 = std::chrono::steady_clock::now();
      slot_ms[i] += std::chrono::duration<double,std::milli>(t1-t0).count();
    }
  }
  if (getenv("LILT_PROF")) {
    std::vector<std::pair<double,int>> v;
    for (auto& [k,ms] : slot_ms) v.push_back({ms,k});
    std::sort(v.rbegin(), v.rend());
    for (int k = 0; k < 15 && k < (int)v.size(); ++k)
      fprintf(stderr, "node %d: %.2f ms  (%ldx%ld)\n", v[k].second, v[k].first,
              (long)val(Var{v[k].second}).rows(), (long)val(Var{v[k].second}).cols());
  }
}

}  // namespace lilt
