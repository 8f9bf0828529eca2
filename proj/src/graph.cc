// sotkit/graph.cc

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

#include "sotkit/graph.h"

#include <cmath>
#include <utility>

#include "sotkit/common.h"

namespace sotkit {

int Graph::AddNode(Mat value, bool needs_grad, std::function<void(Graph&)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.backward = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Mat& Graph::Grad(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.size() == 0) {
    const Mat& v = Value(id);
    n.grad = Mat::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

int Graph::Input(Mat value) { return AddNode(std::move(value), false, nullptr); }

int Graph::Param(const Mat* value, Mat* grad) {
  Node n;
  n.ext_value = value;
  n.ext_grad = grad;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::ParamCached(const Mat* value, Mat* grad) {
  auto it = param_cache_.find(value);
  if (it != param_cache_.end()) return it->second;
  const int id = Param(value, grad);
  param_cache_.emplace(value, id);
  return id;
}

int Graph::MatMul(int a, int b) {
  const Mat& av = Value(a);
  const Mat& bv = Value(b);
  if (av.cols() != bv.rows()) throw ContractError("MatMul: shape mismatch");
  Mat out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, b, id](Graph& g) {
      const Mat& go = g.Grad(id);
      if (g.NeedsGrad(a)) g.Grad(a).noalias() += go * g.Value(b).transpose();
      if (g.NeedsGrad(b)) g.Grad(b).noalias() += g.Value(a).transpose() * go;
    };
  }
  return id;
}

int Graph::Add(int a, int b) {
  const Mat& av = Value(a);
  const Mat& bv = Value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw ContractError("Add: shape mismatch");
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int id = AddNode(av + bv, ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, b, id](Graph& g) {
      const Mat& go = g.Grad(id);
      if (g.NeedsGrad(a)) g.Grad(a) += go;
      if (g.NeedsGrad(b)) g.Grad(b) += go;
    };
  }
  return id;
}

int Graph::AddN(const std::vector<int>& xs) {
  if (xs.empty()) throw ContractError("AddN: empty input list");
  Mat sum = Value(xs[0]);
  bool ng = NeedsGrad(xs[0]);
  for (size_t i = 1; i < xs.size(); ++i) {
    const Mat& v = Value(xs[i]);
    if (v.rows() != sum.rows() || v.cols() != sum.cols())
      throw ContractError("AddN: shape mismatch");
    sum += v;
    ng = ng || NeedsGrad(xs[i]);
  }
  int id = AddNode(std::move(sum), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [xs, id](Graph& g) {
      const Mat& go = g.Grad(id);
      for (int x : xs)
        if (g.NeedsGrad(x)) g.Grad(x) += go;
    };
  }
  return id;
}

int Graph::AddRowBroadcast(int a, int b) {
  const Mat& av = Value(a);
  const Mat& bv = Value(b);
  if (bv.rows() != 1 || bv.cols() != av.cols())
    throw ContractError("AddRowBroadcast: b must be 1 x cols(a)");
  Mat out = av;
  out.rowwise() += bv.row(0);
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, b, id](Graph& g) {
      const Mat& go = g.Grad(id);
      if (g.NeedsGrad(a)) g.Grad(a) += go;
      if (g.NeedsGrad(b)) g.Grad(b) += go.colwise().sum();
    };
  }
  return id;
}

int Graph::Scale(int a, double s) {
  const bool ng = NeedsGrad(a);
  int id = AddNode(Value(a) * s, ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, s, id](Graph& g) { g.Grad(a) += g.Grad(id) * s; };
  }
  return id;
}

int Graph::EltMul(int a, int b) {
  const Mat& av = Value(a);
  const Mat& bv = Value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw ContractError("EltMul: shape mismatch");
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int id = AddNode(av.cwiseProduct(bv), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, b, id](Graph& g) {
      const Mat& go = g.Grad(id);
      if (g.NeedsGrad(a)) g.Grad(a) += go.cwiseProduct(g.Value(b));
      if (g.NeedsGrad(b)) g.Grad(b) += go.cwiseProduct(g.Value(a));
    };
  }
  return id;
}

int Graph::Sigmoid(int a) {
  Mat out = (1.0 + (-Value(a).array()).exp()).inverse().matrix();
  const bool ng = NeedsGrad(a);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, id](Graph& g) {
      const Mat& y = g.Value(id);
      g.Grad(a).array() += g.Grad(id).array() * y.array() * (1.0 - y.array());
    };
  }
  return id;
}

int Graph::Tanh(int a) {
  Mat out = Value(a).array().tanh().matrix();
  const bool ng = NeedsGrad(a);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, id](Graph& g) {
      const Mat& y = g.Value(id);
      g.Grad(a).array() += g.Grad(id).array() * (1.0 - y.array().square());
    };
  }
  return id;
}

int Graph::ConcatCols(const std::vector<int>& xs) {
  if (xs.empty()) throw ContractError("ConcatCols: empty input list");
  const long rows = Value(xs[0]).rows();
  long cols = 0;
  bool ng = false;
  for (int x : xs) {
    if (Value(x).rows() != rows) throw ContractError("ConcatCols: row mismatch");
    cols += Value(x).cols();
    ng = ng || NeedsGrad(x);
  }
  Mat out(rows, cols);
  long at = 0;
  for (int x : xs) {
    out.middleCols(at, Value(x).cols()) = Value(x);
    at += Value(x).cols();
  }
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [xs, id](Graph& g) {
      const Mat& go = g.Grad(id);
      long at2 = 0;
      for (int x : xs) {
        const long c = g.Value(x).cols();
        if (g.NeedsGrad(x)) g.Grad(x) += go.middleCols(at2, c);
        at2 += c;
      }
    };
  }
  return id;
}

int Graph::SliceCols(int a, int begin, int len) {
  const Mat& av = Value(a);
  if (begin < 0 || len < 0 || begin + len > av.cols())
    throw ContractError("SliceCols: range out of bounds");
  const bool ng = NeedsGrad(a);
  int id = AddNode(av.middleCols(begin, len), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, begin, len, id](Graph& g) {
      g.Grad(a).middleCols(begin, len) += g.Grad(id);
    };
  }
  return id;
}

int Graph::Transpose(int a) {
  const bool ng = NeedsGrad(a);
  int id = AddNode(Value(a).transpose(), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, id](Graph& g) {
      g.Grad(a) += g.Grad(id).transpose();
    };
  }
  return id;
}

int Graph::Row(int a, int r) {
  const Mat& av = Value(a);
  if (r < 0 || r >= av.rows()) throw ContractError("Row: index out of bounds");
  const bool ng = NeedsGrad(a);
  int id = AddNode(av.row(r), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, r, id](Graph& g) {
      g.Grad(a).row(r) += g.Grad(id).row(0);
    };
  }
  return id;
}

int Graph::RowSoftmax(int a) {
  Mat out = Value(a);
  for (long r = 0; r < out.rows(); ++r) {
    Eigen::ArrayXd row = out.row(r).array();
    row -= row.maxCoeff();
    row = row.exp();
    out.row(r) = (row / row.sum()).matrix();
  }
  const bool ng = NeedsGrad(a);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, id](Graph& g) {
      const Mat& y = g.Value(id);
      const Mat& go = g.Grad(id);
      Mat& ga = g.Grad(a);
      for (long r = 0; r < y.rows(); ++r) {
        const double dot = go.row(r).dot(y.row(r));
        ga.row(r).array() +=
            y.row(r).array() * (go.row(r).array() - dot);
      }
    };
  }
  return id;
}

int Graph::RowLogSoftmax(int a) {
  Mat out = Value(a);
  for (long r = 0; r < out.rows(); ++r) {
    Eigen::ArrayXd row = out.row(r).array();
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row - mx).exp().sum());
    out.row(r) = (row - lse).matrix();
  }
  const bool ng = NeedsGrad(a);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, id](Graph& g) {
      const Mat& y = g.Value(id);
      const Mat& go = g.Grad(id);
      Mat& ga = g.Grad(a);
      for (long r = 0; r < y.rows(); ++r) {
        const double sum = go.row(r).sum();
        ga.row(r).array() +=
            go.row(r).array() - y.row(r).array().exp() * sum;
      }
    };
  }
  return id;
}

int Graph::LayerNormRows(int a, int gamma, int beta, double eps) {
  const Mat& av = Value(a);
  const Mat& gv = Value(gamma);
  const Mat& bv = Value(beta);
  const long c = av.cols();
  if (gv.rows() != 1 || gv.cols() != c || bv.rows() != 1 || bv.cols() != c)
    throw ContractError("LayerNormRows: gamma/beta must be 1 x cols(a)");
  Mat out(av.rows(), c);
  for (long r = 0; r < av.rows(); ++r) {
    const double mu = av.row(r).mean();
    const double var = (av.row(r).array() - mu).square().mean();
    out.row(r) = (((av.row(r).array() - mu) / std::sqrt(var + eps)) *
                      gv.row(0).array() +
                  bv.row(0).array())
                     .matrix();
  }
  const bool ng = NeedsGrad(a) || NeedsGrad(gamma) || NeedsGrad(beta);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, gamma, beta, eps, id](Graph& g) {
      const Mat& x = g.Value(a);
      const Mat& gam = g.Value(gamma);
      const Mat& go = g.Grad(id);
      const long cols = x.cols();
      for (long r = 0; r < x.rows(); ++r) {
        const double mu = x.row(r).mean();
        const double var = (x.row(r).array() - mu).square().mean();
        const double inv = 1.0 / std::sqrt(var + eps);
        Eigen::ArrayXd xhat = (x.row(r).array() - mu) * inv;
        if (g.NeedsGrad(beta)) g.Grad(beta).row(0) += go.row(r);
        if (g.NeedsGrad(gamma))
          g.Grad(gamma).row(0).array() += go.row(r).array() * xhat;
        if (g.NeedsGrad(a)) {
          Eigen::ArrayXd dxhat = go.row(r).array() * gam.row(0).array();
          const double m_dxhat = dxhat.mean();
          const double m_dxhat_xhat = (dxhat * xhat).mean();
          g.Grad(a).row(r).array() +=
              inv * (dxhat - m_dxhat - xhat * m_dxhat_xhat);
          (void)cols;
        }
      }
    };
  }
  return id;
}

int Graph::LstmCell(int x, int state, int wx, int wh, int b,
                    std::shared_ptr<Eigen::VectorXd> mask) {
  const Mat& xv = Value(x);
  const Mat& sv = Value(state);
  const Mat& wxv = Value(wx);
  const Mat& whv = Value(wh);
  const Mat& bv = Value(b);
  const long batch = xv.rows();
  const long hidden = whv.rows();
  if (sv.rows() != batch || sv.cols() != 2 * hidden)
    throw ContractError("LstmCell: state must be B x 2H");
  if (wxv.rows() != xv.cols() || wxv.cols() != 4 * hidden ||
      whv.cols() != 4 * hidden || bv.rows() != 1 || bv.cols() != 4 * hidden)
    throw ContractError("LstmCell: weight shape mismatch");
  if (mask && mask->size() != batch)
    throw ContractError("LstmCell: mask length mismatch");

  auto z = std::make_shared<Mat>(batch, 4 * hidden);
  z->noalias() = xv * wxv;
  z->noalias() += sv.leftCols(hidden) * whv;
  z->rowwise() += bv.row(0);

  Mat out(batch, 2 * hidden);
  for (long r = 0; r < batch; ++r) {
    if (mask && (*mask)(r) == 0.0) {
      out.row(r) = sv.row(r);
      continue;
    }
    for (long j = 0; j < hidden; ++j) {
      const double i_g = 1.0 / (1.0 + std::exp(-(*z)(r, j)));
      const double f_g = 1.0 / (1.0 + std::exp(-(*z)(r, hidden + j)));
      const double g_g = std::tanh((*z)(r, 2 * hidden + j));
      const double o_g = 1.0 / (1.0 + std::exp(-(*z)(r, 3 * hidden + j)));
      const double c_new = f_g * sv(r, hidden + j) + i_g * g_g;
      out(r, j) = o_g * std::tanh(c_new);
      out(r, hidden + j) = c_new;
    }
  }

  const bool ng = NeedsGrad(x) || NeedsGrad(state) || NeedsGrad(wx) ||
                  NeedsGrad(wh) || NeedsGrad(b);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [x, state, wx, wh, b, mask, z, hidden, id](Graph& g) {
      const Mat& xv2 = g.Value(x);
      const Mat& sv2 = g.Value(state);
      const Mat& yv = g.Value(id);
      const Mat& go = g.Grad(id);
      const long batch2 = xv2.rows();
      Mat dz = Mat::Zero(batch2, 4 * hidden);
      Mat ds_direct = Mat::Zero(batch2, 2 * hidden);
      for (long r = 0; r < batch2; ++r) {
        if (mask && (*mask)(r) == 0.0) {
          ds_direct.row(r) = go.row(r);
          continue;
        }
        for (long j = 0; j < hidden; ++j) {
          const double i_g = 1.0 / (1.0 + std::exp(-(*z)(r, j)));
          const double f_g = 1.0 / (1.0 + std::exp(-(*z)(r, hidden + j)));
          const double g_g = std::tanh((*z)(r, 2 * hidden + j));
          const double o_g = 1.0 / (1.0 + std::exp(-(*z)(r, 3 * hidden + j)));
          const double c_new = yv(r, hidden + j);
          const double tc = std::tanh(c_new);
          const double dh = go(r, j);
          const double dc = go(r, hidden + j) + dh * o_g * (1.0 - tc * tc);
          dz(r, j) = dc * g_g * i_g * (1.0 - i_g);
          dz(r, hidden + j) = dc * sv2(r, hidden + j) * f_g * (1.0 - f_g);
          dz(r, 2 * hidden + j) = dc * i_g * (1.0 - g_g * g_g);
          dz(r, 3 * hidden + j) = dh * tc * o_g * (1.0 - o_g);
          ds_direct(r, hidden + j) = dc * f_g;
        }
      }
      if (g.NeedsGrad(x)) g.Grad(x).noalias() += dz * g.Value(wx).transpose();
      if (g.NeedsGrad(state)) {
        Mat& gs = g.Grad(state);
        gs += ds_direct;
        gs.leftCols(hidden).noalias() += dz * g.Value(wh).transpose();
      }
      if (g.NeedsGrad(wx)) g.Grad(wx).noalias() += xv2.transpose() * dz;
      if (g.NeedsGrad(wh))
        g.Grad(wh).noalias() += sv2.leftCols(hidden).transpose() * dz;
      if (g.NeedsGrad(b)) g.Grad(b) += dz.colwise().sum();
    };
  }
  return id;
}

int Graph::LocationConv(int alpha, int kernels) {
  const Mat& av = Value(alpha);
  const Mat& kv = Value(kernels);
  if (av.rows() != 1) throw ContractError("LocationConv: alpha must be 1 x T");
  const long t_len = av.cols();
  const long k = kv.rows();
  const long w = kv.cols();
  const long center = w / 2;
  Mat out = Mat::Zero(t_len, k);
  for (long t = 0; t < t_len; ++t) {
    for (long f = 0; f < k; ++f) {
      double acc = 0.0;
      for (long j = 0; j < w; ++j) {
        const long src = t + j - center;
        if (src >= 0 && src < t_len) acc += kv(f, j) * av(0, src);
      }
      out(t, f) = acc;
    }
  }
  const bool ng = NeedsGrad(alpha) || NeedsGrad(kernels);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [alpha, kernels, id](Graph& g) {
      const Mat& av2 = g.Value(alpha);
      const Mat& kv2 = g.Value(kernels);
      const Mat& go = g.Grad(id);
      const long t_len2 = av2.cols();
      const long k2 = kv2.rows();
      const long w2 = kv2.cols();
      const long center2 = w2 / 2;
      for (long t = 0; t < t_len2; ++t) {
        for (long f = 0; f < k2; ++f) {
          const double gv = go(t, f);
          if (gv == 0.0) continue;
          for (long j = 0; j < w2; ++j) {
            const long src = t + j - center2;
            if (src < 0 || src >= t_len2) continue;
            if (g.NeedsGrad(alpha)) g.Grad(alpha)(0, src) += gv * kv2(f, j);
            if (g.NeedsGrad(kernels)) g.Grad(kernels)(f, j) += gv * av2(0, src);
          }
        }
      }
    };
  }
  return id;
}

int Graph::StackStepRows(const std::vector<int>& steps, int row) {
  if (steps.empty()) throw ContractError("StackStepRows: no steps");
  const long cols = Value(steps[0]).cols();
  Mat out(static_cast<long>(steps.size()), cols);
  bool ng = false;
  for (size_t t = 0; t < steps.size(); ++t) {
    const Mat& v = Value(steps[t]);
    if (row < 0 || row >= v.rows() || v.cols() != cols)
      throw ContractError("StackStepRows: shape mismatch");
    out.row(static_cast<long>(t)) = v.row(row);
    ng = ng || NeedsGrad(steps[t]);
  }
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [steps, row, id](Graph& g) {
      const Mat& go = g.Grad(id);
      for (size_t t = 0; t < steps.size(); ++t) {
        if (g.NeedsGrad(steps[t]))
          g.Grad(steps[t]).row(row) += go.row(static_cast<long>(t));
      }
    };
  }
  return id;
}

int Graph::PickRows(int a, std::vector<int> targets) {
  const Mat& av = Value(a);
  if (static_cast<long>(targets.size()) != av.rows())
    throw ContractError("PickRows: one target per row required");
  Mat out(av.rows(), 1);
  for (long r = 0; r < av.rows(); ++r) {
    const int c = targets[static_cast<size_t>(r)];
    if (c < 0 || c >= av.cols()) throw ContractError("PickRows: target out of range");
    out(r, 0) = av(r, c);
  }
  const bool ng = NeedsGrad(a);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, targets = std::move(targets), id](Graph& g) {
      const Mat& go = g.Grad(id);
      Mat& ga = g.Grad(a);
      for (long r = 0; r < go.rows(); ++r)
        ga(r, targets[static_cast<size_t>(r)]) += go(r, 0);
    };
  }
  return id;
}

int Graph::SumAll(int a) {
  Mat out(1, 1);
  out(0, 0) = Value(a).sum();
  const bool ng = NeedsGrad(a);
  int id = AddNode(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[id].backward = [a, id](Graph& g) {
      g.Grad(a).array() += g.Grad(id)(0, 0);
    };
  }
  return id;
}

void Graph::Backward(int loss) {
  if (backward_done_) throw ContractError("Graph::Backward: called twice");
  backward_done_ = true;
  const Mat& lv = Value(loss);
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ContractError("Graph::Backward: loss must be 1x1");
  Grad(loss)(0, 0) = 1.0;
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this);
    if (n.ext_grad) *n.ext_grad += n.grad;
  }
}

}  // namespace sotkit
