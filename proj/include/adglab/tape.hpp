#pragma once

#include <cstddef>
#include <vector>

#include "adglab/tensor.hpp"

namespace adglab {

// Reverse-mode automatic differentiation over an append-only record of
// primitive operations (a Wengert list). Nodes are referenced by index, so a
// Ref is only valid for the tape that produced it and until clear().
//
// The primitive set is closed: add/sub/mul (with row and scalar broadcast),
// matmul, scale, neg, log, exp, sigmoid, logsigmoid, relu, softmax and
// log-softmax over rows, sum/mean reductions, column concatenation and
// row/column gathers (gather_rows doubles as embedding lookup).
//
// Every forward result is checked for finiteness; a non-finite value raises
// NumericError naming the primitive instead of propagating NaN/Inf.
class Tape {
public:
    struct Ref {
        int i = -1;
        bool valid() const { return i >= 0; }
    };

    // Leaf with no gradient tracking.
    Ref constant(Tensor t);
    // Differentiable leaf; grad readable after backward().
    Ref leaf(Tensor t);

    Ref add(Ref a, Ref b);
    Ref sub(Ref a, Ref b);
    Ref mul(Ref a, Ref b);
    Ref matmul(Ref a, Ref b);
    Ref scale(Ref a, double c);
    Ref neg(Ref a);
    Ref log(Ref a);
    Ref exp(Ref a);
    Ref sigmoid(Ref a);
    Ref logsigmoid(Ref a);
    Ref relu(Ref a);
    Ref softmax_rows(Ref a);
    Ref log_softmax_rows(Ref a);
    Ref sum_all(Ref a);
    Ref mean_all(Ref a);
    Ref concat_cols(const std::vector<Ref>& parts);
    Ref gather_rows(Ref a, std::vector<int> row_ids);
    Ref gather_cols(Ref a, std::vector<int> col_per_row);

    // Accumulates d(loss)/d(node) for every differentiable node reachable
    // from `loss`, visiting each recorded node exactly once in reverse
    // order. `loss` must be scalar (1x1).
    void backward(Ref loss);

    const Tensor& value(Ref r) const { return node(r.i).value; }
    // Gradient of the last backward() w.r.t. this node. Zero tensor if the
    // node did not participate.
    Tensor grad(Ref r) const;

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    enum class Op {
        Constant, Leaf, Add, Sub, Mul, MatMul, Scale, Neg, Log, Exp,
        Sigmoid, LogSigmoid, Relu, SoftmaxRows, LogSoftmaxRows,
        SumAll, MeanAll, ConcatCols, GatherRows, GatherCols,
    };

    struct Node {
        Op op;
        Tensor value;
        Tensor grad;  // empty until touched by backward
        std::vector<int> parents;
        std::vector<int> idx;  // gather indices / concat column offsets
        double c = 0.0;
        bool requires_grad = false;
    };

    const Node& node(int i) const;
    Node& node(int i);
    Ref push(Node n, const char* opname);
    Ref unary(Op op, Ref a, const char* opname);
    Ref binary_ew(Op op, Ref a, Ref b, const char* opname);
    void accumulate(int i, int r, int c, double g);
    Tensor& grad_buffer(int i);
    void backprop_node(int i);

    std::vector<Node> nodes_;
};

using Ref = Tape::Ref;

}  // namespace adglab
