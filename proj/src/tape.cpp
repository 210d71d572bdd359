#include "arac/tape.hpp"

#include <cmath>
#include <string>

#include "arac/errors.hpp"

namespace arac {

namespace {
constexpr double kLayerNormEps = 1e-5;
}

Tape::Node& Tape::alloc(Op op) {
    if (live_ == nodes_.size()) nodes_.emplace_back();
    Node& n = nodes_[live_++];
    n.op = op;
    n.a = n.b = n.c = -1;
    n.scalar = 0.0;
    n.i0 = n.i1 = 0;
    n.ta = n.tb = false;
    n.mask = nullptr;
    n.list.clear();
    return n;
}

Ref Tape::input(const Mat& value) {
    if (!all_finite(value)) throw InvalidValue("tensor creation rejects NaN/Inf entries");
    Node& n = alloc(Op::Leaf);
    n.val.resize(value.rows, value.cols);
    n.val.v = value.v;
    return tail();
}

Ref Tape::matmul(Ref a, Ref b, bool ta, bool tb) {
    if (ta && tb) throw ShapeMismatch("matmul: both transposes unsupported");
    Node& n = alloc(Op::MatMul);
    n.a = a.id;
    n.b = b.id;
    n.ta = ta;
    n.tb = tb;
    matmul_into(n.val, nodes_[a.id].val, nodes_[b.id].val, ta, tb);
    return tail();
}

Ref Tape::add(Ref a, Ref b) {
    if (!nodes_[a.id].val.same_shape(nodes_[b.id].val))
        throw ShapeMismatch("add: shapes disagree");
    Node& n = alloc(Op::Add);
    n.a = a.id;
    n.b = b.id;
    const Mat& av = nodes_[a.id].val;
    const Mat& bv = nodes_[b.id].val;
    n.val.resize(av.rows, av.cols);
    for (size_t i = 0; i < av.size(); ++i) n.val.v[i] = av.v[i] + bv.v[i];
    return tail();
}

Ref Tape::add_row(Ref a, Ref row) {
    if (nodes_[row.id].val.rows != 1 || nodes_[row.id].val.cols != nodes_[a.id].val.cols)
        throw ShapeMismatch("add_row: need 1xC row");
    Node& n = alloc(Op::AddRow);
    n.a = a.id;
    n.b = row.id;
    const Mat& av = nodes_[a.id].val;
    const Mat& rv = nodes_[row.id].val;
    n.val.resize(av.rows, av.cols);
    for (int i = 0; i < av.rows; ++i) {
        const double* ai = av.ptr(i);
        double* oi = n.val.ptr(i);
        for (int j = 0; j < av.cols; ++j) oi[j] = ai[j] + rv.v[j];
    }
    return tail();
}

Ref Tape::mul(Ref a, Ref b) {
    if (!nodes_[a.id].val.same_shape(nodes_[b.id].val))
        throw ShapeMismatch("mul: shapes disagree");
    Node& n = alloc(Op::Mul);
    n.a = a.id;
    n.b = b.id;
    const Mat& av = nodes_[a.id].val;
    const Mat& bv = nodes_[b.id].val;
    n.val.resize(av.rows, av.cols);
    for (size_t i = 0; i < av.size(); ++i) n.val.v[i] = av.v[i] * bv.v[i];
    return tail();
}

Ref Tape::scale(Ref a, double c) {
    Node& n = alloc(Op::Scale);
    n.a = a.id;
    n.scalar = c;
    const Mat& av = nodes_[a.id].val;
    n.val.resize(av.rows, av.cols);
    for (size_t i = 0; i < av.size(); ++i) n.val.v[i] = c * av.v[i];
    return tail();
}

Ref Tape::relu(Ref a) {
    Node& n = alloc(Op::Relu);
    n.a = a.id;
    const Mat& av = nodes_[a.id].val;
    n.val.resize(av.rows, av.cols);
    for (size_t i = 0; i < av.size(); ++i) n.val.v[i] = av.v[i] > 0.0 ? av.v[i] : 0.0;
    return tail();
}

Ref Tape::log(Ref a) {
    Node& n = alloc(Op::Log);
    n.a = a.id;
    const Mat& av = nodes_[a.id].val;
    n.val.resize(av.rows, av.cols);
    for (size_t i = 0; i < av.size(); ++i) n.val.v[i] = std::log(av.v[i]);
    return tail();
}

Ref Tape::exp(Ref a) {
    Node& n = alloc(Op::Exp);
    n.a = a.id;
    const Mat& av = nodes_[a.id].val;
    n.val.resize(av.rows, av.cols);
    for (size_t i = 0; i < av.size(); ++i) n.val.v[i] = std::exp(av.v[i]);
    return tail();
}

Ref Tape::masked_softmax_rows(Ref a, const BoolMat* mask) {
    if (mask && (mask->rows != nodes_[a.id].val.rows || mask->cols != nodes_[a.id].val.cols))
        throw ShapeMismatch("masked softmax: mask shape disagrees");
    Node& n = alloc(Op::MaskedSoftmaxRows);
    n.a = a.id;
    n.mask = mask;
    const Mat& av = nodes_[a.id].val;
    n.val.resize(av.rows, av.cols);
    for (int i = 0; i < av.rows; ++i) {
        const double* ai = av.ptr(i);
        double* oi = n.val.ptr(i);
        double mx = -HUGE_VAL;
        for (int j = 0; j < av.cols; ++j)
            if (!mask || mask->at(i, j))
                if (ai[j] > mx) mx = ai[j];
        if (mx == -HUGE_VAL)
            throw FullyMaskedRow("softmax row " + std::to_string(i) + " fully masked");
        double sum = 0.0;
        for (int j = 0; j < av.cols; ++j) {
            if (!mask || mask->at(i, j)) {
                oi[j] = std::exp(ai[j] - mx);
                sum += oi[j];
            } else {
                oi[j] = 0.0;
            }
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < av.cols; ++j) oi[j] *= inv;
    }
    return tail();
}

Ref Tape::layer_norm_rows(Ref a, Ref gain, Ref bias) {
    {
        const Mat& av0 = nodes_[a.id].val;
        const Mat& gv0 = nodes_[gain.id].val;
        const Mat& bv0 = nodes_[bias.id].val;
        if (gv0.rows != 1 || gv0.cols != av0.cols || bv0.rows != 1 || bv0.cols != av0.cols)
            throw ShapeMismatch("layer norm: gain/bias must be 1xC");
    }
    Node& n = alloc(Op::LayerNormRows);
    n.a = a.id;
    n.b = gain.id;
    n.c = bias.id;
    const Mat& av = nodes_[a.id].val;
    const Mat& gv = nodes_[gain.id].val;
    const Mat& bv = nodes_[bias.id].val;
    n.val.resize(av.rows, av.cols);
    n.aux.resize(av.rows, 2);
    const double invc = 1.0 / av.cols;
    for (int i = 0; i < av.rows; ++i) {
        const double* ai = av.ptr(i);
        double mu = 0.0;
        for (int j = 0; j < av.cols; ++j) mu += ai[j];
        mu *= invc;
        double var = 0.0;
        for (int j = 0; j < av.cols; ++j) {
            const double d = ai[j] - mu;
            var += d * d;
        }
        var *= invc;
        const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
        n.aux.at(i, 0) = mu;
        n.aux.at(i, 1) = inv_std;
        double* oi = n.val.ptr(i);
        for (int j = 0; j < av.cols; ++j) oi[j] = gv.v[j] * (ai[j] - mu) * inv_std + bv.v[j];
    }
    return tail();
}

Ref Tape::concat_cols(const std::vector<Ref>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat: no parts");
    const int rows = nodes_[parts[0].id].val.rows;
    int cols = 0;
    for (Ref p : parts) {
        if (nodes_[p.id].val.rows != rows) throw ShapeMismatch("concat: row counts disagree");
        cols += nodes_[p.id].val.cols;
    }
    Node& n = alloc(Op::ConcatCols);
    for (Ref p : parts) n.list.push_back(p.id);
    n.val.resize(rows, cols);
    for (int i = 0; i < rows; ++i) {
        double* oi = n.val.ptr(i);
        int off = 0;
        for (Ref p : parts) {
            const Mat& pv = nodes_[p.id].val;
            const double* pi = pv.ptr(i);
            for (int j = 0; j < pv.cols; ++j) oi[off + j] = pi[j];
            off += pv.cols;
        }
    }
    return tail();
}

Ref Tape::gather_rows(Ref a, const std::vector<int>& idx) {
    for (int i : idx)
        if (i < 0 || i >= nodes_[a.id].val.rows)
            throw ShapeMismatch("gather: row index out of range");
    Node& n = alloc(Op::GatherRows);
    n.a = a.id;
    n.list = idx;
    const Mat& av = nodes_[a.id].val;
    n.val.resize(static_cast<int>(idx.size()), av.cols);
    for (size_t i = 0; i < idx.size(); ++i) {
        const double* src = av.ptr(idx[i]);
        double* dst = n.val.ptr(static_cast<int>(i));
        for (int j = 0; j < av.cols; ++j) dst[j] = src[j];
    }
    return tail();
}

Ref Tape::mean_rows(Ref a) {
    if (nodes_[a.id].val.rows < 1) throw ShapeMismatch("mean_rows: empty input");
    Node& n = alloc(Op::MeanRows);
    n.a = a.id;
    const Mat& av = nodes_[a.id].val;
    n.val.resize(1, av.cols);
    n.val.zero();
    for (int i = 0; i < av.rows; ++i) {
        const double* ai = av.ptr(i);
        for (int j = 0; j < av.cols; ++j) n.val.v[j] += ai[j];
    }
    const double inv = 1.0 / av.rows;
    for (int j = 0; j < av.cols; ++j) n.val.v[j] *= inv;
    return tail();
}

Ref Tape::slice_cols(Ref a, int c0, int c1) {
    if (c0 < 0 || c1 > nodes_[a.id].val.cols || c0 >= c1)
        throw ShapeMismatch("slice: bad column range");
    Node& n = alloc(Op::SliceCols);
    n.a = a.id;
    n.i0 = c0;
    n.i1 = c1;
    const Mat& av = nodes_[a.id].val;
    n.val.resize(av.rows, c1 - c0);
    for (int i = 0; i < av.rows; ++i) {
        const double* ai = av.ptr(i);
        double* oi = n.val.ptr(i);
        for (int j = c0; j < c1; ++j) oi[j - c0] = ai[j];
    }
    return tail();
}

Ref Tape::sum_all(Ref a) {
    Node& n = alloc(Op::SumAll);
    n.a = a.id;
    const Mat& av = nodes_[a.id].val;
    double s = 0.0;
    for (double x : av.v) s += x;
    n.val.resize(1, 1);
    n.val.v[0] = s;
    return tail();
}

Ref Tape::mean_all(Ref a) {
    if (nodes_[a.id].val.size() == 0) throw ShapeMismatch("mean_all: empty input");
    Node& n = alloc(Op::MeanAll);
    n.a = a.id;
    const Mat& av = nodes_[a.id].val;
    double s = 0.0;
    for (double x : av.v) s += x;
    n.val.resize(1, 1);
    n.val.v[0] = s / static_cast<double>(av.size());
    return tail();
}

void Tape::backward(Ref output) {
    if (!output.valid() || static_cast<size_t>(output.id) >= live_)
        throw OutputNotScalar("backward: invalid output ref");
    Node& out = nodes_[output.id];
    if (out.val.rows != 1 || out.val.cols != 1)
        throw OutputNotScalar("backward: output is not scalar");
    for (size_t i = 0; i < live_; ++i) {
        Node& n = nodes_[i];
        n.grad.resize(n.val.rows, n.val.cols);
        n.grad.zero();
    }
    out.grad.v[0] = 1.0;
    for (size_t i = live_; i-- > 0;) backward_node(nodes_[i]);
}

void Tape::backward_node(Node& n) {
    switch (n.op) {
        case Op::Leaf:
            return;
        case Op::MatMul: {
            Mat& ga = nodes_[n.a].grad;
            Mat& gb = nodes_[n.b].grad;
            const Mat& av = nodes_[n.a].val;
            const Mat& bv = nodes_[n.b].val;
            if (!n.ta && !n.tb) {
                matmul_into(ga, n.grad, bv, false, true, true);
                matmul_into(gb, av, n.grad, true, false, true);
            } else if (!n.ta && n.tb) {
                matmul_into(ga, n.grad, bv, false, false, true);
                matmul_into(gb, n.grad, av, true, false, true);
            } else {  // ta && !tb
                matmul_into(ga, bv, n.grad, false, true, true);
                matmul_into(gb, av, n.grad, false, false, true);
            }
            return;
        }
        case Op::Add: {
            Mat& ga = nodes_[n.a].grad;
            Mat& gb = nodes_[n.b].grad;
            for (size_t i = 0; i < n.grad.size(); ++i) {
                ga.v[i] += n.grad.v[i];
                gb.v[i] += n.grad.v[i];
            }
            return;
        }
        case Op::AddRow: {
            Mat& ga = nodes_[n.a].grad;
            Mat& gr = nodes_[n.b].grad;
            for (int i = 0; i < n.grad.rows; ++i) {
                const double* gi = n.grad.ptr(i);
                double* gai = ga.ptr(i);
                for (int j = 0; j < n.grad.cols; ++j) {
                    gai[j] += gi[j];
                    gr.v[j] += gi[j];
                }
            }
            return;
        }
        case Op::Mul: {
            Mat& ga = nodes_[n.a].grad;
            Mat& gb = nodes_[n.b].grad;
            const Mat& av = nodes_[n.a].val;
            const Mat& bv = nodes_[n.b].val;
            for (size_t i = 0; i < n.grad.size(); ++i) {
                ga.v[i] += n.grad.v[i] * bv.v[i];
                gb.v[i] += n.grad.v[i] * av.v[i];
            }
            return;
        }
        case Op::Scale: {
            Mat& ga = nodes_[n.a].grad;
            for (size_t i = 0; i < n.grad.size(); ++i) ga.v[i] += n.scalar * n.grad.v[i];
            return;
        }
        case Op::Relu: {
            Mat& ga = nodes_[n.a].grad;
            const Mat& av = nodes_[n.a].val;
            for (size_t i = 0; i < n.grad.size(); ++i)
                if (av.v[i] > 0.0) ga.v[i] += n.grad.v[i];
            return;
        }
        case Op::Log: {
            Mat& ga = nodes_[n.a].grad;
            const Mat& av = nodes_[n.a].val;
            for (size_t i = 0; i < n.grad.size(); ++i) ga.v[i] += n.grad.v[i] / av.v[i];
            return;
        }
        case Op::Exp: {
            Mat& ga = nodes_[n.a].grad;
            for (size_t i = 0; i < n.grad.size(); ++i) ga.v[i] += n.grad.v[i] * n.val.v[i];
            return;
        }
        case Op::MaskedSoftmaxRows: {
            Mat& ga = nodes_[n.a].grad;
            for (int i = 0; i < n.val.rows; ++i) {
                const double* wi = n.val.ptr(i);
                const double* gi = n.grad.ptr(i);
                double dot = 0.0;
                for (int j = 0; j < n.val.cols; ++j) dot += gi[j] * wi[j];
                double* gai = ga.ptr(i);
                for (int j = 0; j < n.val.cols; ++j) {
                    if (!n.mask || n.mask->at(i, j)) gai[j] += wi[j] * (gi[j] - dot);
                }
            }
            return;
        }
        case Op::LayerNormRows: {
            Mat& ga = nodes_[n.a].grad;
            Mat& gg = nodes_[n.b].grad;
            Mat& gb = nodes_[n.c].grad;
            const Mat& av = nodes_[n.a].val;
            const Mat& gv = nodes_[n.b].val;
            const int c = n.val.cols;
            const double invc = 1.0 / c;
            for (int i = 0; i < n.val.rows; ++i) {
                const double mu = n.aux.at(i, 0);
                const double inv_std = n.aux.at(i, 1);
                const double* ai = av.ptr(i);
                const double* gi = n.grad.ptr(i);
                double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                for (int j = 0; j < c; ++j) {
                    const double xh = (ai[j] - mu) * inv_std;
                    const double dxh = gi[j] * gv.v[j];
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xh;
                    gg.v[j] += gi[j] * xh;
                    gb.v[j] += gi[j];
                }
                double* gai = ga.ptr(i);
                for (int j = 0; j < c; ++j) {
                    const double xh = (ai[j] - mu) * inv_std;
                    const double dxh = gi[j] * gv.v[j];
                    gai[j] += inv_std * (dxh - invc * sum_dxh - xh * invc * sum_dxh_xh);
                }
            }
            return;
        }
        case Op::ConcatCols: {
            int off = 0;
            for (int pid : n.list) {
                Mat& gp = nodes_[pid].grad;
                for (int i = 0; i < n.grad.rows; ++i) {
                    const double* gi = n.grad.ptr(i) + off;
                    double* gpi = gp.ptr(i);
                    for (int j = 0; j < gp.cols; ++j) gpi[j] += gi[j];
                }
                off += gp.cols;
            }
            return;
        }
        case Op::GatherRows: {
            Mat& ga = nodes_[n.a].grad;
            for (size_t i = 0; i < n.list.size(); ++i) {
                const double* gi = n.grad.ptr(static_cast<int>(i));
                double* gai = ga.ptr(n.list[i]);
                for (int j = 0; j < n.grad.cols; ++j) gai[j] += gi[j];
            }
            return;
        }
        case Op::MeanRows: {
            Mat& ga = nodes_[n.a].grad;
            const double inv = 1.0 / ga.rows;
            for (int i = 0; i < ga.rows; ++i) {
                double* gai = ga.ptr(i);
                for (int j = 0; j < ga.cols; ++j) gai[j] += inv * n.grad.v[j];
            }
            return;
        }
        case Op::SliceCols: {
            Mat& ga = nodes_[n.a].grad;
            for (int i = 0; i < n.grad.rows; ++i) {
                const double* gi = n.grad.ptr(i);
                double* gai = ga.ptr(i);
                for (int j = 0; j < n.grad.cols; ++j) gai[n.i0 + j] += gi[j];
            }
            return;
        }
        case Op::SumAll: {
            Mat& ga = nodes_[n.a].grad;
            const double g = n.grad.v[0];
            for (size_t i = 0; i < ga.size(); ++i) ga.v[i] += g;
            return;
        }
        case Op::MeanAll: {
            Mat& ga = nodes_[n.a].grad;
            const double g = n.grad.v[0] / static_cast<double>(ga.size());
            for (size_t i = 0; i < ga.size(); ++i) ga.v[i] += g;
            return;
        }
    }
}

AttentionRefs masked_attention(Tape& t, Ref q, Ref k, Ref v, const BoolMat* mask) {
    const Mat& qv = t.value(q);
    const Mat& kv = t.value(k);
    const Mat& vv = t.value(v);
    if (qv.cols != kv.cols) throw ShapeMismatch("attention: Q/K widths disagree");
    if (kv.rows != vv.rows) throw ShapeMismatch("attention: K/V row counts disagree");
    if (mask && (mask->rows != qv.rows || mask->cols != kv.rows))
        throw ShapeMismatch("attention: mask shape disagrees");
    Ref scores = t.scale(t.matmul(q, k, false, true), 1.0 / std::sqrt(static_cast<double>(qv.cols)));
    Ref weights = t.masked_softmax_rows(scores, mask);
    Ref out = t.matmul(weights, v);
    return {out, weights};
}

double grad_check(const std::function<Ref(Tape&, Ref)>& f, const Mat& x, double eps) {
    Tape t;
    Ref xr = t.input(x);
    Ref y = f(t, xr);
    if (t.value(y).rows != 1 || t.value(y).cols != 1)
        throw OutputNotScalar("grad_check: f is not scalar-valued");
    t.backward(y);
    const Mat analytic = t.grad(xr);

    Mat xp = x;
    double worst = 0.0;
    Tape ft;
    for (size_t i = 0; i < x.size(); ++i) {
        const double orig = xp.v[i];
        xp.v[i] = orig + eps;
        ft.reset();
        const double up = ft.scalar_value(f(ft, ft.input(xp)));
        xp.v[i] = orig - eps;
        ft.reset();
        const double dn = ft.scalar_value(f(ft, ft.input(xp)));
        xp.v[i] = orig;
        const double fd = (up - dn) / (2.0 * eps);
        const double ga = analytic.v[i];
        const double err = std::abs(ga - fd) / std::max({1.0, std::abs(ga), std::abs(fd)});
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace arac
