#include "adglab/tape.hpp"

#include <algorithm>
#include <cmath>

namespace adglab {

namespace {

// Broadcast categories for elementwise binary ops: equal shapes, row vector
// against matrix, or 1x1 scalar against anything.
enum class Bcast { Same, RowB, ScalarB, RowA, ScalarA, Invalid };

Bcast classify(const Tensor& a, const Tensor& b) {
    if (a.same_shape(b)) return Bcast::Same;
    if (b.rows == 1 && b.cols == 1) return Bcast::ScalarB;
    if (a.rows == 1 && a.cols == 1) return Bcast::ScalarA;
    if (b.rows == 1 && b.cols == a.cols) return Bcast::RowB;
    if (a.rows == 1 && a.cols == b.cols) return Bcast::RowA;
    return Bcast::Invalid;
}

double bval(const Tensor& t, Bcast cat, bool is_a, int r, int c) {
    switch (cat) {
        case Bcast::Same: return t.at(r, c);
        case Bcast::ScalarB: return is_a ? t.at(r, c) : t.v[0];
        case Bcast::ScalarA: return is_a ? t.v[0] : t.at(r, c);
        case Bcast::RowB: return is_a ? t.at(r, c) : t.at(0, c);
        case Bcast::RowA: return is_a ? t.at(0, c) : t.at(r, c);
        default: return 0.0;
    }
}

double stable_logsigmoid(double x) {
    // log(1/(1+e^-x)) without overflow on either tail.
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

const Tape::Node& Tape::node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
Tape::Node& Tape::node(int i) { return nodes_[static_cast<std::size_t>(i)]; }

Tape::Ref Tape::push(Node n, const char* opname) {
    if (!n.value.all_finite())
        throw NumericError(std::string(opname) + ": non-finite value produced");
    nodes_.push_back(std::move(n));
    return Ref{static_cast<int>(nodes_.size()) - 1};
}

Tape::Ref Tape::constant(Tensor t) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(t);
    n.requires_grad = false;
    return push(std::move(n), "constant");
}

Tape::Ref Tape::leaf(Tensor t) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(t);
    n.requires_grad = true;
    return push(std::move(n), "leaf");
}

Tape::Ref Tape::binary_ew(Op op, Ref a, Ref b, const char* opname) {
    const Tensor& ta = node(a.i).value;
    const Tensor& tb = node(b.i).value;
    const Bcast cat = classify(ta, tb);
    if (cat == Bcast::Invalid)
        throw ValidationError(std::string(opname) + ": shape mismatch " + ta.shape_str() +
                              " vs " + tb.shape_str());
    const Tensor& big = (cat == Bcast::ScalarA || cat == Bcast::RowA) ? tb : ta;
    Node n;
    n.op = op;
    n.parents = {a.i, b.i};
    n.requires_grad = node(a.i).requires_grad || node(b.i).requires_grad;
    n.value = Tensor(big.rows, big.cols);
    for (int r = 0; r < big.rows; ++r) {
        for (int c = 0; c < big.cols; ++c) {
            const double x = bval(ta, cat, true, r, c);
            const double y = bval(tb, cat, false, r, c);
            double out = 0.0;
            switch (op) {
                case Op::Add: out = x + y; break;
                case Op::Sub: out = x - y; break;
                case Op::Mul: out = x * y; break;
                default: break;
            }
            n.value.at(r, c) = out;
        }
    }
    return push(std::move(n), opname);
}

Tape::Ref Tape::add(Ref a, Ref b) { return binary_ew(Op::Add, a, b, "add"); }
Tape::Ref Tape::sub(Ref a, Ref b) { return binary_ew(Op::Sub, a, b, "sub"); }
Tape::Ref Tape::mul(Ref a, Ref b) { return binary_ew(Op::Mul, a, b, "mul"); }

Tape::Ref Tape::matmul(Ref a, Ref b) {
    const Tensor& ta = node(a.i).value;
    const Tensor& tb = node(b.i).value;
    if (ta.cols != tb.rows)
        throw ValidationError("matmul: shape mismatch " + ta.shape_str() + " x " + tb.shape_str());
    Node n;
    n.op = Op::MatMul;
    n.parents = {a.i, b.i};
    n.requires_grad = node(a.i).requires_grad || node(b.i).requires_grad;
    n.value = Tensor(ta.rows, tb.cols);
    for (int r = 0; r < ta.rows; ++r) {
        for (int k = 0; k < ta.cols; ++k) {
            const double x = ta.at(r, k);
            if (x == 0.0) continue;
            for (int c = 0; c < tb.cols; ++c) n.value.at(r, c) += x * tb.at(k, c);
        }
    }
    return push(std::move(n), "matmul");
}

Tape::Ref Tape::scale(Ref a, double c) {
    Node n;
    n.op = Op::Scale;
    n.parents = {a.i};
    n.c = c;
    n.requires_grad = node(a.i).requires_grad;
    n.value = node(a.i).value;
    for (double& e : n.value.v) e *= c;
    return push(std::move(n), "scale");
}

Tape::Ref Tape::unary(Op op, Ref a, const char* opname) {
    Node n;
    n.op = op;
    n.parents = {a.i};
    n.requires_grad = node(a.i).requires_grad;
    n.value = node(a.i).value;
    for (double& e : n.value.v) {
        switch (op) {
            case Op::Neg: e = -e; break;
            case Op::Log: e = std::log(e); break;
            case Op::Exp: e = std::exp(e); break;
            case Op::Sigmoid: e = 1.0 / (1.0 + std::exp(-e)); break;
            case Op::LogSigmoid: e = stable_logsigmoid(e); break;
            case Op::Relu: e = e > 0.0 ? e : 0.0; break;
            default: break;
        }
    }
    return push(std::move(n), opname);
}

Tape::Ref Tape::neg(Ref a) { return unary(Op::Neg, a, "neg"); }
Tape::Ref Tape::log(Ref a) { return unary(Op::Log, a, "log"); }
Tape::Ref Tape::exp(Ref a) { return unary(Op::Exp, a, "exp"); }
Tape::Ref Tape::sigmoid(Ref a) { return unary(Op::Sigmoid, a, "sigmoid"); }
Tape::Ref Tape::logsigmoid(Ref a) { return unary(Op::LogSigmoid, a, "logsigmoid"); }
Tape::Ref Tape::relu(Ref a) { return unary(Op::Relu, a, "relu"); }

Tape::Ref Tape::softmax_rows(Ref a) {
    const Tensor& ta = node(a.i).value;
    Node n;
    n.op = Op::SoftmaxRows;
    n.parents = {a.i};
    n.requires_grad = node(a.i).requires_grad;
    n.value = Tensor(ta.rows, ta.cols);
    for (int r = 0; r < ta.rows; ++r) {
        double mx = ta.at(r, 0);
        for (int c = 1; c < ta.cols; ++c) mx = std::max(mx, ta.at(r, c));
        double z = 0.0;
        for (int c = 0; c < ta.cols; ++c) z += std::exp(ta.at(r, c) - mx);
        for (int c = 0; c < ta.cols; ++c) n.value.at(r, c) = std::exp(ta.at(r, c) - mx) / z;
    }
    return push(std::move(n), "softmax_rows");
}

Tape::Ref Tape::log_softmax_rows(Ref a) {
    const Tensor& ta = node(a.i).value;
    Node n;
    n.op = Op::LogSoftmaxRows;
    n.parents = {a.i};
    n.requires_grad = node(a.i).requires_grad;
    n.value = Tensor(ta.rows, ta.cols);
    for (int r = 0; r < ta.rows; ++r) {
        double mx = ta.at(r, 0);
        for (int c = 1; c < ta.cols; ++c) mx = std::max(mx, ta.at(r, c));
        double z = 0.0;
        for (int c = 0; c < ta.cols; ++c) z += std::exp(ta.at(r, c) - mx);
        const double lz = mx + std::log(z);
        for (int c = 0; c < ta.cols; ++c) n.value.at(r, c) = ta.at(r, c) - lz;
    }
    return push(std::move(n), "log_softmax_rows");
}

Tape::Ref Tape::sum_all(Ref a) {
    Node n;
    n.op = Op::SumAll;
    n.parents = {a.i};
    n.requires_grad = node(a.i).requires_grad;
    double s = 0.0;
    for (double e : node(a.i).value.v) s += e;
    n.value = Tensor::scalar(s);
    return push(std::move(n), "sum_all");
}

Tape::Ref Tape::mean_all(Ref a) {
    Node n;
    n.op = Op::MeanAll;
    n.parents = {a.i};
    n.requires_grad = node(a.i).requires_grad;
    const Tensor& ta = node(a.i).value;
    if (ta.size() == 0) throw ValidationError("mean_all: empty tensor");
    double s = 0.0;
    for (double e : ta.v) s += e;
    n.value = Tensor::scalar(s / static_cast<double>(ta.size()));
    return push(std::move(n), "mean_all");
}

Tape::Ref Tape::concat_cols(const std::vector<Ref>& parts) {
    if (parts.empty()) throw ValidationError("concat_cols: no inputs");
    const int rows = node(parts[0].i).value.rows;
    int total = 0;
    Node n;
    n.op = Op::ConcatCols;
    for (Ref p : parts) {
        const Tensor& t = node(p.i).value;
        if (t.rows != rows)
            throw ValidationError("concat_cols: shape mismatch, row counts differ");
        n.parents.push_back(p.i);
        n.idx.push_back(total);  // column offset of this part
        total += t.cols;
        n.requires_grad = n.requires_grad || node(p.i).requires_grad;
    }
    n.value = Tensor(rows, total);
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        const Tensor& t = node(parts[pi].i).value;
        const int off = n.idx[pi];
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < t.cols; ++c) n.value.at(r, off + c) = t.at(r, c);
    }
    return push(std::move(n), "concat_cols");
}

Tape::Ref Tape::gather_rows(Ref a, std::vector<int> row_ids) {
    const Tensor& ta = node(a.i).value;
    for (int r : row_ids)
        if (r < 0 || r >= ta.rows)
            throw ValidationError("gather_rows: row index out of range");
    Node n;
    n.op = Op::GatherRows;
    n.parents = {a.i};
    n.requires_grad = node(a.i).requires_grad;
    n.value = Tensor(static_cast<int>(row_ids.size()), ta.cols);
    for (std::size_t r = 0; r < row_ids.size(); ++r)
        for (int c = 0; c < ta.cols; ++c)
            n.value.at(static_cast<int>(r), c) = ta.at(row_ids[r], c);
    n.idx = std::move(row_ids);
    return push(std::move(n), "gather_rows");
}

Tape::Ref Tape::gather_cols(Ref a, std::vector<int> col_per_row) {
    const Tensor& ta = node(a.i).value;
    if (static_cast<int>(col_per_row.size()) != ta.rows)
        throw ValidationError("gather_cols: need one column index per row");
    for (int c : col_per_row)
        if (c < 0 || c >= ta.cols)
            throw ValidationError("gather_cols: column index out of range");
    Node n;
    n.op = Op::GatherCols;
    n.parents = {a.i};
    n.requires_grad = node(a.i).requires_grad;
    n.value = Tensor(ta.rows, 1);
    for (int r = 0; r < ta.rows; ++r) n.value.at(r, 0) = ta.at(r, col_per_row[r]);
    n.idx = std::move(col_per_row);
    return push(std::move(n), "gather_cols");
}

Tensor& Tape::grad_buffer(int i) {
    Node& n = node(i);
    if (n.grad.size() == 0) n.grad = Tensor(n.value.rows, n.value.cols);
    return n.grad;
}

void Tape::accumulate(int i, int r, int c, double g) {
    grad_buffer(i).at(r, c) += g;
}

void Tape::backward(Ref loss) {
    if (nodes_.empty()) throw ValidationError("backward: tape is empty");
    if (!loss.valid() || loss.i >= static_cast<int>(nodes_.size()))
        throw ValidationError("backward: invalid loss reference");
    const Tensor& lv = node(loss.i).value;
    if (lv.rows != 1 || lv.cols != 1)
        throw ValidationError("backward: loss must be scalar, got " + lv.shape_str());
    for (Node& n : nodes_) n.grad = Tensor();
    grad_buffer(loss.i).v[0] = 1.0;
    for (int i = loss.i; i >= 0; --i) {
        const Node& n = node(i);
        if (!n.requires_grad || n.grad.size() == 0) continue;
        backprop_node(i);
    }
}

void Tape::backprop_node(int i) {
    Node& n = node(i);
    const Tensor& g = n.grad;
    auto wants = [&](int p) { return node(p).requires_grad; };

    switch (n.op) {
        case Op::Constant:
        case Op::Leaf:
            return;
        case Op::Add:
        case Op::Sub:
        case Op::Mul: {
            const int pa = n.parents[0], pb = n.parents[1];
            const Tensor& ta = node(pa).value;
            const Tensor& tb = node(pb).value;
            const Bcast cat = classify(ta, tb);
            for (int r = 0; r < g.rows; ++r) {
                for (int c = 0; c < g.cols; ++c) {
                    const double gv = g.at(r, c);
                    if (gv == 0.0) continue;
                    double da = 0.0, db = 0.0;
                    if (n.op == Op::Add) {
                        da = gv;
                        db = gv;
                    } else if (n.op == Op::Sub) {
                        da = gv;
                        db = -gv;
                    } else {
                        da = gv * bval(tb, cat, false, r, c);
                        db = gv * bval(ta, cat, true, r, c);
                    }
                    if (wants(pa)) {
                        if (cat == Bcast::ScalarA) accumulate(pa, 0, 0, da);
                        else if (cat == Bcast::RowA) accumulate(pa, 0, c, da);
                        else accumulate(pa, r, c, da);
                    }
                    if (wants(pb)) {
                        if (cat == Bcast::ScalarB) accumulate(pb, 0, 0, db);
                        else if (cat == Bcast::RowB) accumulate(pb, 0, c, db);
                        else accumulate(pb, r, c, db);
                    }
                }
            }
            return;
        }
        case Op::MatMul: {
            const int pa = n.parents[0], pb = n.parents[1];
            const Tensor& ta = node(pa).value;
            const Tensor& tb = node(pb).value;
            if (wants(pa)) {
                Tensor& da = grad_buffer(pa);  // G * B^T
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < g.cols; ++c) {
                        const double gv = g.at(r, c);
                        if (gv == 0.0) continue;
                        for (int k = 0; k < ta.cols; ++k) da.at(r, k) += gv * tb.at(k, c);
                    }
            }
            if (wants(pb)) {
                Tensor& db = grad_buffer(pb);  // A^T * G
                for (int r = 0; r < g.rows; ++r)
                    for (int k = 0; k < ta.cols; ++k) {
                        const double av = ta.at(r, k);
                        if (av == 0.0) continue;
                        for (int c = 0; c < g.cols; ++c) db.at(k, c) += av * g.at(r, c);
                    }
            }
            return;
        }
        case Op::Scale: {
            const int p = n.parents[0];
            if (!wants(p)) return;
            Tensor& d = grad_buffer(p);
            for (std::size_t e = 0; e < g.v.size(); ++e) d.v[e] += n.c * g.v[e];
            return;
        }
        case Op::Neg:
        case Op::Log:
        case Op::Exp:
        case Op::Sigmoid:
        case Op::LogSigmoid:
        case Op::Relu: {
            const int p = n.parents[0];
            if (!wants(p)) return;
            const Tensor& x = node(p).value;
            Tensor& d = grad_buffer(p);
            for (std::size_t e = 0; e < g.v.size(); ++e) {
                double dd = 0.0;
                switch (n.op) {
                    case Op::Neg: dd = -g.v[e]; break;
                    case Op::Log: dd = g.v[e] / x.v[e]; break;
                    case Op::Exp: dd = g.v[e] * n.value.v[e]; break;
                    case Op::Sigmoid: dd = g.v[e] * n.value.v[e] * (1.0 - n.value.v[e]); break;
                    case Op::LogSigmoid: dd = g.v[e] * (1.0 / (1.0 + std::exp(x.v[e]))); break;
                    case Op::Relu: dd = x.v[e] > 0.0 ? g.v[e] : 0.0; break;
                    default: break;
                }
                d.v[e] += dd;
            }
            return;
        }
        case Op::SoftmaxRows: {
            const int p = n.parents[0];
            if (!wants(p)) return;
            Tensor& d = grad_buffer(p);
            const Tensor& y = n.value;
            for (int r = 0; r < y.rows; ++r) {
                double dot = 0.0;
                for (int c = 0; c < y.cols; ++c) dot += g.at(r, c) * y.at(r, c);
                for (int c = 0; c < y.cols; ++c)
                    d.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
            }
            return;
        }
        case Op::LogSoftmaxRows: {
            const int p = n.parents[0];
            if (!wants(p)) return;
            Tensor& d = grad_buffer(p);
            const Tensor& y = n.value;
            for (int r = 0; r < y.rows; ++r) {
                double gs = 0.0;
                for (int c = 0; c < y.cols; ++c) gs += g.at(r, c);
                for (int c = 0; c < y.cols; ++c)
                    d.at(r, c) += g.at(r, c) - std::exp(y.at(r, c)) * gs;
            }
            return;
        }
        case Op::SumAll: {
            const int p = n.parents[0];
            if (!wants(p)) return;
            Tensor& d = grad_buffer(p);
            const double gv = g.v[0];
            for (double& e : d.v) e += gv;
            return;
        }
        case Op::MeanAll: {
            const int p = n.parents[0];
            if (!wants(p)) return;
            Tensor& d = grad_buffer(p);
            const double gv = g.v[0] / static_cast<double>(d.v.size());
            for (double& e : d.v) e += gv;
            return;
        }
        case Op::ConcatCols: {
            for (std::size_t pi = 0; pi < n.parents.size(); ++pi) {
                const int p = n.parents[pi];
                if (!wants(p)) continue;
                Tensor& d = grad_buffer(p);
                const int off = n.idx[pi];
                for (int r = 0; r < d.rows; ++r)
                    for (int c = 0; c < d.cols; ++c) d.at(r, c) += g.at(r, off + c);
            }
            return;
        }
        case Op::GatherRows: {
            const int p = n.parents[0];
            if (!wants(p)) return;
            Tensor& d = grad_buffer(p);
            for (std::size_t r = 0; r < n.idx.size(); ++r)
                for (int c = 0; c < d.cols; ++c)
                    d.at(n.idx[r], c) += g.at(static_cast<int>(r), c);
            return;
        }
        case Op::GatherCols: {
            const int p = n.parents[0];
            if (!wants(p)) return;
            Tensor& d = grad_buffer(p);
            for (int r = 0; r < g.rows; ++r) d.at(r, n.idx[r]) += g.at(r, 0);
            return;
        }
    }
}

Tensor Tape::grad(Ref r) const {
    const Node& n = node(r.i);
    if (n.grad.size() == 0) return Tensor(n.value.rows, n.value.cols);
    return n.grad;
}

}  // namespace adglab
