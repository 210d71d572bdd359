#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "arac/mat.hpp"

namespace arac {

struct BoolMat {
    int rows = 0, cols = 0;
    std::vector<uint8_t> v;

    BoolMat() = default;
    BoolMat(int r, int c, bool fill = false)
        : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill ? 1 : 0) {}

    uint8_t at(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
    void set(int i, int j, bool x) { v[static_cast<size_t>(i) * cols + j] = x ? 1 : 0; }
};

// Handle into a Tape's node list.
struct Ref {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense 2-D tensors (scalars are 1x1).
//
// Nodes are kept in creation order, which is a topological order, so one
// reverse sweep computes all gradients. reset() keeps node storage so a
// tape reused with the same network allocates nothing in steady state.
// Masks passed to masked_softmax_rows are borrowed; the caller keeps them
// alive until the tape is reset.
class Tape {
  public:
    Ref input(const Mat& value);

    Ref matmul(Ref a, Ref b, bool ta = false, bool tb = false);
    Ref add(Ref a, Ref b);
    Ref add_row(Ref a, Ref row);  // row (1xC) broadcast over rows of a
    Ref mul(Ref a, Ref b);        // elementwise
    Ref scale(Ref a, double c);
    Ref relu(Ref a);
    Ref log(Ref a);
    Ref exp(Ref a);
    Ref masked_softmax_rows(Ref a, const BoolMat* mask);  // nullptr = unmasked
    Ref layer_norm_rows(Ref a, Ref gain, Ref bias);       // eps 1e-5
    Ref concat_cols(const std::vector<Ref>& parts);
    Ref gather_rows(Ref a, const std::vector<int>& idx);
    Ref mean_rows(Ref a);  // column means -> 1xC
    Ref slice_cols(Ref a, int c0, int c1);
    Ref sum_all(Ref a);
    Ref mean_all(Ref a);

    const Mat& value(Ref r) const { return nodes_[r.id].val; }
    double scalar_value(Ref r) const { return nodes_[r.id].val.v[0]; }
    const Mat& grad(Ref r) const { return nodes_[r.id].grad; }

    // Reverse sweep from a scalar output. Gradients accumulate into every
    // node reachable from it; other nodes get zeros.
    void backward(Ref output);

    void reset() { live_ = 0; }
    size_t size() const { return live_; }

  private:
    enum class Op : uint8_t {
        Leaf,
        MatMul,
        Add,
        AddRow,
        Mul,
        Scale,
        Relu,
        Log,
        Exp,
        MaskedSoftmaxRows,
        LayerNormRows,
        ConcatCols,
        GatherRows,
        MeanRows,
        SliceCols,
        SumAll,
        MeanAll,
    };

    struct Node {
        Op op = Op::Leaf;
        int a = -1, b = -1, c = -1;
        double scalar = 0.0;
        int i0 = 0, i1 = 0;
        bool ta = false, tb = false;
        const BoolMat* mask = nullptr;
        std::vector<int> list;
        Mat val;
        Mat grad;
        Mat aux;  // layer norm keeps (mu, inv_std) per row
    };

    std::vector<Node> nodes_;
    size_t live_ = 0;

    Node& alloc(Op op);
    Ref tail() const { return Ref{static_cast<int>(live_) - 1}; }
    const Mat& val_of(Ref r) const { return nodes_[r.id].val; }
    void backward_node(Node& n);
};

struct AttentionRefs {
    Ref output;
    Ref weights;
};

// Scaled dot-product attention with a boolean mask in the row softmax.
// Q: mxd, K: nxd, V: nxd, mask: mxn (nullptr = all true). Scale is 1/sqrt(d).
AttentionRefs masked_attention(Tape& t, Ref q, Ref k, Ref v, const BoolMat* mask);

// Max over coordinates of |analytic - central FD| / max(1, |analytic|, |FD|).
// f must build a scalar from the given leaf.
double grad_check(const std::function<Ref(Tape&, Ref)>& f, const Mat& x, double eps);

}  // namespace arac
