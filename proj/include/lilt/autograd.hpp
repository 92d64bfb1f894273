#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lilt/rng.hpp"

namespace lilt {

using Mat = Eigen::MatrixXd;

struct ParamInfo {
  std::string name;
  int rows = 0, cols = 0;
  bool weight_decay = false;  // LN scales/shifts and biases opt out
};

// Named parameter tensors. Registration order is the canonical order used by
// initialization, checkpoints, and optimizer state.
class ParamStore {
 public:
  int add(const std::string& name, int rows, int cols, bool weight_decay);
  int size() const { return static_cast<int>(values_.size()); }
  Mat& value(int id) { return values_[id]; }
  const Mat& value(int id) const { return values_[id]; }
  const ParamInfo& info(int id) const { return infos_[id]; }
  int find(const std::string& name) const;  // -1 when absent
  long total_scalars() const;

 private:
  std::vector<ParamInfo> infos_;
  std::vector<Mat> values_;
};

// Per-parameter gradient buffers, allocated on first touch so parameters a
// loss never reaches keep an exactly-zero (absent) gradient.
class GradStore {
 public:
  explicit GradStore(const ParamStore& params) : params_(&params), grads_(params.size()) {}

  Mat& accum(int id);
  const Mat* get(int id) const {
    return grads_[id].size() > 0 ? &grads_[id] : nullptr;
  }
  bool touched(int id) const { return grads_[id].size() > 0; }
  void clear();
  // dst += this, iterating parameters in id order.
  void add_into(GradStore& dst) const;
  double squared_norm() const;
  void scale(double s);

 private:
  const ParamStore* params_;
  std::vector<Mat> grads_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over Eigen matrices. A tape is built per forward pass;
// parameter gradients accumulate into an external GradStore so repeated
// passes (e.g. batch members) can share or isolate accumulators as needed.
// Constructed without a GradStore the tape is forward-only.
class Tape {
 public:
  Tape(const ParamStore& params, GradStore* grads);

  const Mat& val(Var v) const {
    const Node& n = nodes_[v.id];
    return n.alias_of >= 0 ? nodes_[n.alias_of].value : n.value;
  }
  int rows(Var v) const { return static_cast<int>(val(v).rows()); }
  int cols(Var v) const { return static_cast<int>(val(v).cols()); }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  bool recording() const { return grads_ != nullptr; }

  // --- graph construction -------------------------------------------------
  Var constant(Mat value);
  Var scalar(double value);

  // rows of params[table] selected by ids
  Var lookup(int table, const std::vector<int>& ids);
  // x * W (+ bias broadcast over rows); W is din x dout, bias 1 x dout
  Var linear(Var x, int weight, int bias = -1);
  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);            // a * b^T
  Var matmul_nt_scaled(Var a, Var b, double s);  // s * a * b^T
  Var add(Var a, Var b);
  // value = a + b, but gradient flows into a only; b is treated as detached
  Var add_detached_rhs(Var a, Var b);
  Var scale(Var a, double s);
  Var add_constant(Var a, const Mat& c);
  Var slice_cols(Var x, int start, int n);
  Var concat_cols(const std::vector<Var>& xs);
  Var gather_rows(Var x, const std::vector<int>& rows);
  Var rowwise_dot(Var a, Var b);  // n x 1
  Var layer_norm(Var x, int gain, int shift, double eps);
  Var gelu(Var x);
  Var softmax_rows(Var x);
  // softmax(x + bias) with a constant bias that is not materialized as a node
  Var softmax_rows_biased(Var x, const Mat& bias);
  Var dropout(Var x, double rate, Rng& rng);
  // identity value, no gradient flow into x
  Var detach(Var x);
  Var sum_scalars(const std::vector<Var>& xs);
  // mean cross-entropy over rows with label >= 0; 0 when nothing is labeled
  Var mean_cross_entropy(Var logits, const std::vector<int>& labels);

  // --- execution ----------------------------------------------------------
  void backward(Var root, double seed = 1.0);

  // gradient w.r.t. a node (available after backward); empty if untouched
  const Mat& node_grad(Var v) const { return nodes_[v.id].grad; }

 private:
  struct Node {
    Mat value;
    int alias_of = -1;  // shares the value of another node (detach et al.)
    Mat grad;
    bool needs_grad = false;
    std::function<void()> back;
  };

  Var make(Mat value, bool needs_grad);
  Var make_alias(Var src, bool needs_grad);
  Mat& grad(Var v);
  void accum_node(Var v, const Mat& g);
  Mat& param_grad(int id);

  const ParamStore& params_;
  GradStore* grads_;
  std::vector<Node> nodes_;
};

// Softmax over each row, in place semantics on a copy.
Mat softmax_rows_value(const Mat& x);

}  // namespace lilt
