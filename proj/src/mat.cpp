#include "smot/mat.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "smot/errors.hpp"

namespace smot {

Vec matvec(const Mat& m, const Vec& x) {
    assert(static_cast<int>(x.size()) == m.cols);
    Vec y(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* row = &m.a[static_cast<std::size_t>(r) * m.cols];
        for (int c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

Vec mat_tvec(const Mat& m, const Vec& x) {
    assert(static_cast<int>(x.size()) == m.rows);
    Vec y(m.cols, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = &m.a[static_cast<std::size_t>(r) * m.cols];
        const double xr = x[r];
        for (int c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
    }
    return y;
}

Mat matmul(const Mat& a, const Mat& b) {
    assert(a.cols == b.rows);
    Mat out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Mat transpose(const Mat& m) {
    Mat out(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) out(c, r) = m(r, c);
    return out;
}

void add_outer(Mat& m, const Vec& u, const Vec& v) {
    assert(static_cast<int>(u.size()) == m.rows && static_cast<int>(v.size()) == m.cols);
    for (int r = 0; r < m.rows; ++r) {
        double* row = &m.a[static_cast<std::size_t>(r) * m.cols];
        const double ur = u[r];
        for (int c = 0; c < m.cols; ++c) row[c] += ur * v[c];
    }
}

void axpy(double s, const Vec& x, Vec& y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

Vec vadd(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vec vsub(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vec vscale(double s, const Vec& a) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
    return out;
}

double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double vsum(const Vec& a) {
    double acc = 0.0;
    for (double x : a) acc += x;
    return acc;
}

Vec concat(const Vec& a, const Vec& b) {
    Vec out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

Vec softmax(const Vec& z) {
    assert(!z.empty());
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    Vec out(z.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - mx);
        denom += out[i];
    }
    for (double& v : out) v /= denom;
    return out;
}

Mat solve(Mat a, Mat b) {
    assert(a.rows == a.cols && a.rows == b.rows);
    const int n = a.rows;
    std::vector<int> piv(n);
    for (int i = 0; i < n; ++i) piv[i] = i;

    for (int col = 0; col < n; ++col) {
        int best = col;
        double best_abs = std::fabs(a(col, col));
        for (int r = col + 1; r < n; ++r) {
            const double v = std::fabs(a(r, col));
            if (v > best_abs) {
                best_abs = v;
                best = r;
            }
        }
        if (best_abs == 0.0) throw NumericError("singular matrix in solve");
        if (best != col) {
            for (int c = 0; c < n; ++c) std::swap(a(col, c), a(best, c));
            for (int c = 0; c < b.cols; ++c) std::swap(b(col, c), b(best, c));
        }
        const double pivot = a(col, col);
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / pivot;
            if (f == 0.0) continue;
            a(r, col) = 0.0;
            for (int c = col + 1; c < n; ++c) a(r, c) -= f * a(col, c);
            for (int c = 0; c < b.cols; ++c) b(r, c) -= f * b(col, c);
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        for (int c = 0; c < b.cols; ++c) {
            double acc = b(col, c);
            for (int k = col + 1; k < n; ++k) acc -= a(col, k) * b(k, c);
            b(col, c) = acc / a(col, col);
        }
    }
    return b;
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Mat& m) { return all_finite(m.a); }

TensorRef tensor_ref(const std::string& name, Mat& m) {
    return TensorRef{name,
                     {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)},
                     m.a.data(),
                     m.a.size()};
}

TensorRef tensor_ref(const std::string& name, Vec& v) {
    return TensorRef{name, {static_cast<std::uint32_t>(v.size())}, v.data(), v.size()};
}

}  // namespace smot
