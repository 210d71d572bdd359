#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "arac/errors.hpp"

namespace arac {

// Dense row-major matrix of doubles. Scalars are 1x1.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    static Mat scalar(double x) {
        Mat m(1, 1);
        m.v[0] = x;
        return m;
    }
    static Mat row(std::vector<double> vals) {
        Mat m;
        m.rows = 1;
        m.cols = static_cast<int>(vals.size());
        m.v = std::move(vals);
        return m;
    }

    double& at(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
    double* ptr(int i) { return v.data() + static_cast<size_t>(i) * cols; }
    const double* ptr(int i) const { return v.data() + static_cast<size_t>(i) * cols; }
    size_t size() const { return v.size(); }

    void resize(int r, int c) {
        rows = r;
        cols = c;
        v.resize(static_cast<size_t>(r) * c);
    }
    void zero() { std::memset(v.data(), 0, v.size() * sizeof(double)); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline bool all_finite(const Mat& m) {
    for (double x : m.v)
        if (!std::isfinite(x)) return false;
    return true;
}

// c = a * b (or c += a * b with acc), optionally transposing either operand.
inline void matmul_into(Mat& c, const Mat& a, const Mat& b, bool ta = false, bool tb = false,
                        bool acc = false) {
    const int m = ta ? a.cols : a.rows;
    const int k = ta ? a.rows : a.cols;
    const int kb = tb ? b.cols : b.rows;
    const int n = tb ? b.rows : b.cols;
    if (k != kb) throw ShapeMismatch("matmul: inner dimensions disagree");
    if (!acc) {
        c.resize(m, n);
        c.zero();
    } else if (c.rows != m || c.cols != n) {
        throw ShapeMismatch("matmul: accumulate target shape disagrees");
    }
    if (!ta && !tb) {
        for (int i = 0; i < m; ++i) {
            double* ci = c.ptr(i);
            const double* ai = a.ptr(i);
            for (int p = 0; p < k; ++p) {
                const double aip = ai[p];
                const double* bp = b.ptr(p);
                for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
            }
        }
    } else if (!ta && tb) {
        for (int i = 0; i < m; ++i) {
            double* ci = c.ptr(i);
            const double* ai = a.ptr(i);
            for (int j = 0; j < n; ++j) {
                const double* bj = b.ptr(j);
                double s = 0.0;
                for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
                ci[j] += s;
            }
        }
    } else if (ta && !tb) {
        for (int p = 0; p < k; ++p) {
            const double* ap = a.ptr(p);
            const double* bp = b.ptr(p);
            for (int i = 0; i < m; ++i) {
                const double api = ap[i];
                double* ci = c.ptr(i);
                for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
            }
        }
    } else {
        for (int i = 0; i < m; ++i) {
            double* ci = c.ptr(i);
            for (int j = 0; j < n; ++j) {
                const double* bj = b.ptr(j);
                double s = 0.0;
                for (int p = 0; p < k; ++p) s += a.at(p, i) * bj[p];
                ci[j] += s;
            }
        }
    }
}

}  // namespace arac
