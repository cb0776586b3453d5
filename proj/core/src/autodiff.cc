// Copyright (c) 2026 The wst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wst/autodiff.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wst {

namespace {

const Mat& V(Graph& g, int id) { return g.Value(Var{&g, id}); }

void CheckSameShape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

Var Unary(Var a, Mat out, std::function<Mat(const Mat& x, const Mat& y,
                                            const Mat& go)> dfn) {
  Graph& g = *a.graph;
  return g.AddNode(std::move(out), {a.id},
                   [dfn = std::move(dfn)](Graph& g, int self) {
                     int in = g.input(self, 0);
                     g.Accumulate(in, dfn(V(g, in), V(g, self), g.Grad(self)));
                   });
}

double StableSoftplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Graph::Constant(Mat value) {
  auto n = std::make_unique<Node>();
  n->value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::Param(const Parameter& p, bool trainable) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{this, it->second};
  auto n = std::make_unique<Node>();
  n->external = &p.value;
  const bool learn = trainable && p.trainable;
  n->needs_grad = record_ && learn;
  n->param = learn ? &p : nullptr;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return Var{this, id};
}

const Mat& Graph::Value(Var v) const { return node(v.id).val(); }

Var Graph::AddNode(Mat value, std::vector<int> inputs, BackwardFn backward) {
  auto n = std::make_unique<Node>();
  n->value = std::move(value);
  bool needs = false;
  if (record_) {
    for (int in : inputs) needs = needs || node(in).needs_grad;
  }
  n->needs_grad = needs;
  if (needs) {
    n->inputs = std::move(inputs);
    n->backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::Backward(Var loss) {
  if (!record_) throw std::logic_error("Backward on a non-recording graph");
  Node& root = node(loss.id);
  if (root.val().size() != 1) {
    throw std::invalid_argument("Backward requires a scalar loss");
  }
  if (!root.needs_grad) return;
  root.grad = Mat::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = node(id);
    if (n.backward && n.grad.size() != 0) n.backward(*this, id);
  }
}

std::unordered_map<const Parameter*, Mat> Graph::ParamGrads() const {
  std::unordered_map<const Parameter*, Mat> out;
  for (const auto& n : nodes_) {
    if (n->param != nullptr && n->grad.size() != 0) out.emplace(n->param, n->grad);
  }
  return out;
}

Var MatMul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("MatMul: inner dims");
  Graph& g = *a.graph;
  Mat out = a.value() * b.value();
  return g.AddNode(std::move(out), {a.id, b.id}, [](Graph& g, int self) {
    int ia = g.input(self, 0), ib = g.input(self, 1);
    const Mat& go = g.Grad(self);
    if (g.WantsGrad(ia)) g.Accumulate(ia, go * V(g, ib).transpose());
    if (g.WantsGrad(ib)) g.Accumulate(ib, V(g, ia).transpose() * go);
  });
}

Var MatMulTransB(Var a, Var b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("MatMulTransB: dims");
  Graph& g = *a.graph;
  Mat out = a.value() * b.value().transpose();
  return g.AddNode(std::move(out), {a.id, b.id}, [](Graph& g, int self) {
    int ia = g.input(self, 0), ib = g.input(self, 1);
    const Mat& go = g.Grad(self);
    if (g.WantsGrad(ia)) g.Accumulate(ia, go * V(g, ib));
    if (g.WantsGrad(ib)) g.Accumulate(ib, go.transpose() * V(g, ia));
  });
}

Var Add(Var a, Var b) {
  CheckSameShape(a, b, "Add");
  Graph& g = *a.graph;
  return g.AddNode(a.value() + b.value(), {a.id, b.id}, [](Graph& g, int self) {
    g.Accumulate(g.input(self, 0), g.Grad(self));
    g.Accumulate(g.input(self, 1), g.Grad(self));
  });
}

Var Sub(Var a, Var b) {
  CheckSameShape(a, b, "Sub");
  Graph& g = *a.graph;
  return g.AddNode(a.value() - b.value(), {a.id, b.id}, [](Graph& g, int self) {
    g.Accumulate(g.input(self, 0), g.Grad(self));
    g.Accumulate(g.input(self, 1), -g.Grad(self));
  });
}

Var Mul(Var a, Var b) {
  CheckSameShape(a, b, "Mul");
  Graph& g = *a.graph;
  Mat out = a.value().cwiseProduct(b.value());
  return g.AddNode(std::move(out), {a.id, b.id}, [](Graph& g, int self) {
    int ia = g.input(self, 0), ib = g.input(self, 1);
    const Mat& go = g.Grad(self);
    if (g.WantsGrad(ia)) g.Accumulate(ia, go.cwiseProduct(V(g, ib)));
    if (g.WantsGrad(ib)) g.Accumulate(ib, go.cwiseProduct(V(g, ia)));
  });
}

Var Scale(Var a, double s) {
  return Unary(a, a.value() * s,
               [s](const Mat&, const Mat&, const Mat& go) -> Mat { return go * s; });
}

Var AddScalar(Var a, double s) {
  return Unary(a, (a.value().array() + s).matrix(),
               [](const Mat&, const Mat&, const Mat& go) -> Mat { return go; });
}

Var AddBias(Var a, Var bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw std::invalid_argument("AddBias: bias must be 1 x cols");
  }
  Graph& g = *a.graph;
  Mat out = a.value().rowwise() + bias.value().row(0);
  return g.AddNode(std::move(out), {a.id, bias.id}, [](Graph& g, int self) {
    const Mat& go = g.Grad(self);
    g.Accumulate(g.input(self, 0), go);
    int ib = g.input(self, 1);
    if (g.WantsGrad(ib)) g.Accumulate(ib, go.colwise().sum());
  });
}

Var Sigmoid(Var a) {
  Mat out = a.value().unaryExpr([](double x) { return StableSigmoid(x); });
  return Unary(a, std::move(out),
               [](const Mat&, const Mat& y, const Mat& go) -> Mat {
                 return go.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
               });
}

Var Tanh(Var a) {
  Mat out = a.value().array().tanh().matrix();
  return Unary(a, std::move(out),
               [](const Mat&, const Mat& y, const Mat& go) -> Mat {
                 return (go.array() * (1.0 - y.array().square())).matrix();
               });
}

Var Relu(Var a) {
  Mat out = a.value().cwiseMax(0.0);
  return Unary(a, std::move(out),
               [](const Mat& x, const Mat&, const Mat& go) -> Mat {
                 return (go.array() * (x.array() > 0.0).cast<double>()).matrix();
               });
}

Var Softplus(Var a) {
  Mat out = a.value().unaryExpr([](double x) { return StableSoftplus(x); });
  return Unary(a, std::move(out),
               [](const Mat& x, const Mat&, const Mat& go) -> Mat {
                 return go.cwiseProduct(
                     x.unaryExpr([](double v) { return StableSigmoid(v); }));
               });
}

Var Exp(Var a) {
  Mat out = a.value().array().exp().matrix();
  return Unary(a, std::move(out),
               [](const Mat&, const Mat& y, const Mat& go) -> Mat {
                 return go.cwiseProduct(y);
               });
}

Var Square(Var a) {
  Mat out = a.value().array().square().matrix();
  return Unary(a, std::move(out),
               [](const Mat& x, const Mat&, const Mat& go) -> Mat {
                 return 2.0 * go.cwiseProduct(x);
               });
}

Var Abs(Var a) {
  Mat out = a.value().cwiseAbs();
  return Unary(a, std::move(out),
               [](const Mat& x, const Mat&, const Mat& go) -> Mat {
                 return go.cwiseProduct(x.unaryExpr([](double v) {
                   return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                 }));
               });
}

Var SoftmaxRows(Var a) {
  const Mat& x = a.value();
  Mat out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return Unary(a, std::move(out),
               [](const Mat&, const Mat& y, const Mat& go) -> Mat {
                 Mat gi = y.cwiseProduct(go);
                 Eigen::VectorXd dot = gi.rowwise().sum();
                 gi -= (y.array().colwise() * dot.array()).matrix();
                 return gi;
               });
}

Var Sum(Var a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return Unary(a, std::move(out),
               [](const Mat& x, const Mat&, const Mat& go) -> Mat {
                 return Mat::Constant(x.rows(), x.cols(), go(0, 0));
               });
}

Var Mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("Mean of an empty matrix");
  Mat out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return Unary(a, std::move(out),
               [n](const Mat& x, const Mat&, const Mat& go) -> Mat {
                 return Mat::Constant(x.rows(), x.cols(), go(0, 0) / n);
               });
}

Var StopGradient(Var a) { return a.graph->Constant(a.value()); }

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no inputs");
  Graph& g = *parts[0].graph;
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("ConcatCols: row mismatch");
    cols += p.cols();
  }
  Mat out(rows, cols);
  std::vector<int> ids, offsets;
  int c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    ids.push_back(p.id);
    offsets.push_back(c);
    c += p.cols();
  }
  return g.AddNode(std::move(out), ids, [offsets](Graph& g, int self) {
    const Mat& go = g.Grad(self);
    for (size_t k = 0; k < offsets.size(); ++k) {
      int in = g.input(self, static_cast<int>(k));
      if (!g.WantsGrad(in)) continue;
      g.Accumulate(in, go.middleCols(offsets[k], V(g, in).cols()));
    }
  });
}

Var SliceCols(Var a, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw std::invalid_argument("SliceCols: out of range");
  }
  return Unary(a, a.value().middleCols(begin, count),
               [begin, count](const Mat& x, const Mat&, const Mat& go) -> Mat {
                 Mat gi = Mat::Zero(x.rows(), x.cols());
                 gi.middleCols(begin, count) = go;
                 return gi;
               });
}

Var GatherRows(Var a, const std::vector<int>& index) {
  const Mat& x = a.value();
  Mat out = Mat::Zero(static_cast<Eigen::Index>(index.size()), x.cols());
  for (size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= x.rows()) throw std::invalid_argument("GatherRows: index");
    if (index[r] >= 0) out.row(static_cast<Eigen::Index>(r)) = x.row(index[r]);
  }
  return Unary(a, std::move(out),
               [index](const Mat& x, const Mat&, const Mat& go) -> Mat {
                 Mat gi = Mat::Zero(x.rows(), x.cols());
                 for (size_t r = 0; r < index.size(); ++r) {
                   if (index[r] >= 0) gi.row(index[r]) += go.row(static_cast<Eigen::Index>(r));
                 }
                 return gi;
               });
}

Var SegmentMean(Var a, const std::vector<int>& segment, int n_segments) {
  const Mat& x = a.value();
  if (static_cast<Eigen::Index>(segment.size()) != x.rows()) {
    throw std::invalid_argument("SegmentMean: segment ids must cover every row");
  }
  std::vector<double> count(n_segments, 0.0);
  Mat out = Mat::Zero(n_segments, x.cols());
  for (size_t r = 0; r < segment.size(); ++r) {
    int s = segment[r];
    if (s < 0 || s >= n_segments) throw std::invalid_argument("SegmentMean: id");
    out.row(s) += x.row(static_cast<Eigen::Index>(r));
    count[s] += 1.0;
  }
  for (int s = 0; s < n_segments; ++s) {
    if (count[s] == 0.0) throw std::invalid_argument("SegmentMean: empty segment");
    out.row(s) /= count[s];
  }
  return Unary(a, std::move(out),
               [segment, count](const Mat& x, const Mat&, const Mat& go) -> Mat {
                 Mat gi(x.rows(), x.cols());
                 for (size_t r = 0; r < segment.size(); ++r) {
                   gi.row(static_cast<Eigen::Index>(r)) =
                       go.row(segment[r]) / count[segment[r]];
                 }
                 return gi;
               });
}

// ---- GRU --------------------------------------------------------------------

Mat GruCellStep(const Mat& input_proj, const Mat& h_prev, const Mat& w_hidden,
                const RowVec& b_hidden) {
  const Eigen::Index h = h_prev.cols();
  Mat hh = h_prev * w_hidden;
  hh.rowwise() += b_hidden;
  Mat r = (input_proj.leftCols(h) + hh.leftCols(h))
              .unaryExpr([](double v) { return StableSigmoid(v); });
  Mat z = (input_proj.middleCols(h, h) + hh.middleCols(h, h))
              .unaryExpr([](double v) { return StableSigmoid(v); });
  Mat n = (input_proj.rightCols(h) + r.cwiseProduct(hh.rightCols(h)))
              .array()
              .tanh()
              .matrix();
  return ((1.0 - z.array()) * n.array() + z.array() * h_prev.array()).matrix();
}

namespace {

struct GruStep {
  std::vector<int> rows;  // output row per active sequence
  Mat h_prev, r, z, n, hh_n;
};

struct GruTape {
  std::vector<GruStep> steps;
};

}  // namespace

Var GruSequence(Var input_proj, Var w_hidden, Var b_hidden,
                const std::vector<Sequence>& sequences) {
  Graph& g = *input_proj.graph;
  const Mat& xp = input_proj.value();
  const Mat& wh = w_hidden.value();
  const Eigen::Index hdim = wh.rows();
  if (wh.cols() != 3 * hdim || xp.cols() != 3 * hdim ||
      b_hidden.value().rows() != 1 || b_hidden.value().cols() != 3 * hdim) {
    throw std::invalid_argument("GruSequence: inconsistent dimensions");
  }
  const RowVec bh = b_hidden.value().row(0);

  // Longest first so the active set at every step is a prefix.
  std::vector<int> order(sequences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sequences[a].length > sequences[b].length;
  });
  int max_len = 0;
  for (const Sequence& s : sequences) {
    if (s.length < 0 || s.begin < 0 || s.begin + s.length > xp.rows()) {
      throw std::invalid_argument("GruSequence: sequence out of range");
    }
    max_len = std::max(max_len, s.length);
  }

  auto tape = std::make_shared<GruTape>();
  tape->steps.resize(max_len);
  Mat out = Mat::Zero(xp.rows(), hdim);
  Mat h_state;
  for (int t = 0; t < max_len; ++t) {
    GruStep& st = tape->steps[t];
    for (int j : order) {
      const Sequence& s = sequences[j];
      if (s.length <= t) break;
      st.rows.push_back(s.reverse ? s.begin + s.length - 1 - t : s.begin + t);
    }
    const Eigen::Index active = static_cast<Eigen::Index>(st.rows.size());
    if (t == 0) {
      st.h_prev = Mat::Zero(active, hdim);
    } else {
      st.h_prev = h_state.topRows(active);
    }
    Mat x(active, 3 * hdim);
    for (Eigen::Index a = 0; a < active; ++a) x.row(a) = xp.row(st.rows[a]);
    Mat hh = st.h_prev * wh;
    hh.rowwise() += bh;
    st.r = (x.leftCols(hdim) + hh.leftCols(hdim))
               .unaryExpr([](double v) { return StableSigmoid(v); });
    st.z = (x.middleCols(hdim, hdim) + hh.middleCols(hdim, hdim))
               .unaryExpr([](double v) { return StableSigmoid(v); });
    st.hh_n = hh.rightCols(hdim);
    st.n = (x.rightCols(hdim) + st.r.cwiseProduct(st.hh_n)).array().tanh().matrix();
    h_state = ((1.0 - st.z.array()) * st.n.array() + st.z.array() * st.h_prev.array())
                  .matrix();
    for (Eigen::Index a = 0; a < active; ++a) out.row(st.rows[a]) = h_state.row(a);
  }
  if (!g.recording()) tape.reset();

  return g.AddNode(
      std::move(out), {input_proj.id, w_hidden.id, b_hidden.id},
      [tape, hdim](Graph& g, int self) {
        const int ix = g.input(self, 0), iw = g.input(self, 1), ib = g.input(self, 2);
        const Mat& go = g.Grad(self);
        const Mat& wh = V(g, iw);
        Mat dx = Mat::Zero(go.rows(), 3 * hdim);
        Mat dwh = Mat::Zero(hdim, 3 * hdim);
        RowVec dbh = RowVec::Zero(3 * hdim);
        Mat carry;
        for (int t = static_cast<int>(tape->steps.size()) - 1; t >= 0; --t) {
          const GruStep& st = tape->steps[t];
          const Eigen::Index active = static_cast<Eigen::Index>(st.rows.size());
          Mat dh(active, hdim);
          for (Eigen::Index a = 0; a < active; ++a) dh.row(a) = go.row(st.rows[a]);
          if (carry.rows() > 0) dh.topRows(carry.rows()) += carry;
          Mat dz = dh.cwiseProduct(st.h_prev - st.n);
          Mat dn = dh.cwiseProduct((1.0 - st.z.array()).matrix());
          Mat dh_prev = dh.cwiseProduct(st.z);
          Mat dn_pre = (dn.array() * (1.0 - st.n.array().square())).matrix();
          Mat dr = dn_pre.cwiseProduct(st.hh_n);
          Mat dhh(active, 3 * hdim);
          dhh.leftCols(hdim) = (dr.array() * st.r.array() * (1.0 - st.r.array())).matrix();
          dhh.middleCols(hdim, hdim) =
              (dz.array() * st.z.array() * (1.0 - st.z.array())).matrix();
          dhh.rightCols(hdim) = dn_pre.cwiseProduct(st.r);
          for (Eigen::Index a = 0; a < active; ++a) {
            dx.row(st.rows[a]).leftCols(2 * hdim) = dhh.row(a).leftCols(2 * hdim);
            dx.row(st.rows[a]).rightCols(hdim) = dn_pre.row(a);
          }
          dwh.noalias() += st.h_prev.transpose() * dhh;
          dbh += dhh.colwise().sum();
          dh_prev.noalias() += dhh * wh.transpose();
          carry = std::move(dh_prev);
        }
        g.Accumulate(ix, dx);
        if (g.WantsGrad(iw)) g.Accumulate(iw, dwh);
        if (g.WantsGrad(ib)) g.Accumulate(ib, dbh);
      });
}

}  // namespace wst
