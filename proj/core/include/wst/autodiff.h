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

#ifndef WST_AUTODIFF_H_
#define WST_AUTODIFF_H_

// Minimal reverse-mode automatic differentiation over row-major Eigen
// matrices. A Graph records one forward evaluation; Backward() replays it in
// reverse. Parameters are leaves that reference externally owned storage.

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace wst {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Half-open row range [begin, begin + length).
struct Span {
  int begin = 0;
  int length = 0;
  int end() const { return begin + length; }
};

struct Parameter {
  std::string name;
  Mat value;
  bool trainable = true;
};

class Graph;

// Lightweight handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Mat& value() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  // With record == false no backward closures are kept (inference mode).
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Constant(Mat value);
  // Leaf bound to the parameter's storage. The same parameter always maps to
  // the same leaf within one graph. `trainable == false` makes it a constant.
  Var Param(const Parameter& p, bool trainable = true);

  const Mat& Value(Var v) const;
  bool NeedsGrad(Var v) const { return node(v.id).needs_grad; }
  bool recording() const { return record_; }

  // Creates an op node. `backward` runs only when some input needs a grad.
  Var AddNode(Mat value, std::vector<int> inputs, BackwardFn backward);

  // `loss` must be 1 x 1.
  void Backward(Var loss);

  // Gradient accumulated at node `id`; empty if none reached it.
  const Mat& Grad(int id) const { return node(id).grad; }
  const Mat& Grad(Var v) const { return Grad(v.id); }
  // Adds `g` into the gradient buffer of `id` if that node needs a gradient.
  template <typename Derived>
  void Accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = node(id);
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }
  bool WantsGrad(int id) const { return node(id).needs_grad; }
  int input(int id, int k) const { return node(id).inputs[k]; }

  // Gradient of each trainable parameter reached by Backward(). Parameters
  // that no gradient reached are absent.
  std::unordered_map<const Parameter*, Mat> ParamGrads() const;

 private:
  struct Node {
    Mat value;
    const Mat* external = nullptr;
    Mat grad;
    std::vector<int> inputs;
    BackwardFn backward;
    bool needs_grad = false;
    const Parameter* param = nullptr;

    const Mat& val() const { return external ? *external : value; }
  };

  Node& node(int id) { return *nodes_[id]; }
  const Node& node(int id) const { return *nodes_[id]; }

  bool record_;
  std::vector<std::unique_ptr<Node>> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

inline const Mat& Var::value() const { return graph->Value(*this); }

// ---- Elementwise and linear algebra ops -----------------------------------

Var MatMul(Var a, Var b);
// a * b^T
Var MatMulTransB(Var a, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double s);
Var AddScalar(Var a, double s);
// Adds a 1 x m row to every row of a.
Var AddBias(Var a, Var bias);
Var Sigmoid(Var a);
Var Tanh(Var a);
Var Relu(Var a);
Var Softplus(Var a);
Var Exp(Var a);
Var Square(Var a);
Var Abs(Var a);
Var SoftmaxRows(Var a);
Var Sum(Var a);
Var Mean(Var a);
// Output equals input; no gradient flows back to the input's producers.
Var StopGradient(Var a);

// ---- Shape ops --------------------------------------------------------------

Var ConcatCols(const std::vector<Var>& parts);
Var SliceCols(Var a, int begin, int count);
// Row r of the output is row index[r] of a, or zeros when index[r] < 0.
Var GatherRows(Var a, const std::vector<int>& index);
// Row s of the output is the mean of the rows of a with segment[r] == s.
Var SegmentMean(Var a, const std::vector<int>& segment, int n_segments);

// ---- Sequence ops -----------------------------------------------------------

struct Sequence {
  int begin = 0;
  int length = 0;
  bool reverse = false;
};

// Gated recurrent unit over several independent sequences stored as rows of
// `input_proj` (already multiplied by the input weights, with input bias,
// laid out as [reset | update | candidate]). Each sequence starts from a
// zero state. Output row r holds the hidden state after consuming input row r;
// rows outside every sequence are zero.
Var GruSequence(Var input_proj, Var w_hidden, Var b_hidden,
                const std::vector<Sequence>& sequences);

// One GRU step for a block of rows; shared by GruSequence and by the
// step-by-step inference loops. Returns the new hidden state.
Mat GruCellStep(const Mat& input_proj, const Mat& h_prev, const Mat& w_hidden,
                const RowVec& b_hidden);

}  // namespace wst

#endif  // WST_AUTODIFF_H_
