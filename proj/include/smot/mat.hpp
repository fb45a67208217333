#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace smot {

using Vec = std::vector<double>;

// Dense row-major f64 matrix. All model math in this project runs on f64 so
// that finite-difference gradient checks and byte-stable checkpoints work.
struct Mat {
    int rows = 0;
    int cols = 0;
    Vec a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return a.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// y = M x
Vec matvec(const Mat& m, const Vec& x);
// y = M^T x
Vec mat_tvec(const Mat& m, const Vec& x);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);
// m += u v^T
void add_outer(Mat& m, const Vec& u, const Vec& v);
// y += s * x
void axpy(double s, const Vec& x, Vec& y);
Vec vadd(const Vec& a, const Vec& b);
Vec vsub(const Vec& a, const Vec& b);
Vec vscale(double s, const Vec& a);
double dot(const Vec& a, const Vec& b);
double vsum(const Vec& a);
Vec concat(const Vec& a, const Vec& b);

// Numerically safe softmax (max-subtracted, 64-bit accumulation).
Vec softmax(const Vec& z);

// Solve A X = B by LU with partial pivoting. A is n×n, B is n×m.
Mat solve(Mat a, Mat b);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

// Uniform flat view over a named parameter tensor; the unit through which
// checkpointing, SGD, freezing, and finite-difference tests touch parameters.
struct TensorRef {
    std::string name;
    std::vector<std::uint32_t> shape;
    double* data = nullptr;
    std::size_t size = 0;
};

TensorRef tensor_ref(const std::string& name, Mat& m);
TensorRef tensor_ref(const std::string& name, Vec& v);

}  // namespace smot
