// sotkit/graph.h

// Copyright 2026  The sotkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SOTKIT_GRAPH_H_
#define SOTKIT_GRAPH_H_

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

namespace sotkit {

using Mat = Eigen::MatrixXd;

// Reverse-mode autodiff tape over dense double matrices. Nodes are appended
// in topological order; Backward() runs the recorded closures in reverse.
// All computation is 64-bit; analytic gradients are validated against central
// finite differences in the test suite.
class Graph {
 public:
  // Constant input; never receives a gradient.
  int Input(Mat value);
  int Zeros(int rows, int cols) { return Input(Mat::Zero(rows, cols)); }

  // Leaf bound to external parameter storage. The value is not copied; the
  // caller keeps it alive and unchanged for the graph's lifetime. Backward()
  // accumulates into *grad.
  int Param(const Mat* value, Mat* grad);

  // Param with per-graph memoization keyed on the value pointer, so repeated
  // uses of one tensor share a single leaf (and one gradient buffer).
  int ParamCached(const Mat* value, Mat* grad);

  int MatMul(int a, int b);
  int Add(int a, int b);
  int AddN(const std::vector<int>& xs);
  // a: R x C plus row vector b: 1 x C broadcast over rows.
  int AddRowBroadcast(int a, int b);
  int Scale(int a, double s);
  int EltMul(int a, int b);
  int Sigmoid(int a);
  int Tanh(int a);
  int ConcatCols(const std::vector<int>& xs);
  int SliceCols(int a, int begin, int len);
  int Transpose(int a);
  // Single row as 1 x C (embedding lookup).
  int Row(int a, int r);
  int RowSoftmax(int a);
  int RowLogSoftmax(int a);
  // Per-row layer normalization with learnable gain/bias (1 x C each).
  int LayerNormRows(int a, int gamma, int beta, double eps = 1e-5);

  // Fused LSTM cell. x: B x Din, state: B x 2H as [h | c], wx: Din x 4H,
  // wh: H x 4H, b: 1 x 4H with gate order (input, forget, cell, output).
  // Rows with mask == 0 carry the previous state through unchanged and
  // contribute no gradient to x or the weights.
  int LstmCell(int x, int state, int wx, int wh, int b,
               std::shared_ptr<Eigen::VectorXd> mask = nullptr);

  // 1-D convolution of attention weights: alpha 1 x T, kernels K x W,
  // zero padded, output T x K.
  int LocationConv(int alpha, int kernels);

  // Gathers one row from each step node (all B x C) into a T x C matrix.
  int StackStepRows(const std::vector<int>& steps, int row);

  // out(n, 0) = a(n, targets[n]).
  int PickRows(int a, std::vector<int> targets);

  int SumAll(int a);

  const Mat& Value(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.ext_value ? *n.ext_value : n.value;
  }

  bool NeedsGrad(int id) const {
    return nodes_[static_cast<size_t>(id)].needs_grad;
  }

  // Runs reverse accumulation from a 1 x 1 loss node. Call at most once.
  void Backward(int loss);

  size_t NumNodes() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* ext_value = nullptr;
    Mat* ext_grad = nullptr;
    Mat grad;  // lazily allocated during Backward
    bool needs_grad = false;
    std::function<void(Graph&)> backward;
  };

  int AddNode(Mat value, bool needs_grad, std::function<void(Graph&)> back);
  // Gradient buffer for id, allocated as zeros on first use.
  Mat& Grad(int id);
  bool HasGrad(int id) const {
    return nodes_[static_cast<size_t>(id)].grad.size() > 0;
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Mat*, int> param_cache_;
  bool backward_done_ = false;
};

}  // namespace sotkit

#endif  // SOTKIT_GRAPH_H_
