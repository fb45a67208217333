#include "smot/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smot/errors.hpp"

namespace smot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path assignment on an n×m matrix with n <= m.
// Every row gets a distinct column; returns the minimal total cost.
double jv_solve(const std::vector<double>& cost, int n, int m,
                std::vector<int>* rowsol = nullptr) {
    if (n == 0) return 0.0;
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    if (rowsol) rowsol->assign(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j]) {
            total += cost[static_cast<std::size_t>(p[j] - 1) * m + (j - 1)];
            if (rowsol) (*rowsol)[p[j] - 1] = j - 1;
        }
    }
    return total;
}

// Optimal cost of assigning min(|rows|,|cols|) pairs within the sub-matrix
// spanned by the given row/col indices of `cost`.
double sub_optimum(const Mat& cost, const std::vector<int>& rows, const std::vector<int>& cols) {
    const int n = static_cast<int>(rows.size());
    const int m = static_cast<int>(cols.size());
    if (n == 0 || m == 0) return 0.0;
    std::vector<double> sub;
    sub.reserve(static_cast<std::size_t>(n) * m);
    if (n <= m) {
        for (int r : rows)
            for (int c : cols) sub.push_back(cost(r, c));
        return jv_solve(sub, n, m);
    }
    for (int c : cols)
        for (int r : rows) sub.push_back(cost(r, c));
    return jv_solve(sub, m, n);
}

}  // namespace

Assignment hungarian(const Mat& cost) {
    const int n = cost.rows;
    const int m = cost.cols;
    for (double v : cost.a)
        if (std::isnan(v)) throw NumericError("hungarian: NaN cost entry");

    Assignment out;
    if (n == 0 || m == 0) return out;

    std::vector<int> all_rows(n), all_cols(m);
    for (int r = 0; r < n; ++r) all_rows[r] = r;
    for (int c = 0; c < m; ++c) all_cols[c] = c;
    const double best = sub_optimum(cost, all_rows, all_cols);
    const double tol = 1e-9 * (1.0 + std::fabs(best));

    // Fix rows in order, each to its smallest column that still reaches the
    // optimum, so ties resolve to the lexicographically smallest pair list.
    const int want = std::min(n, m);
    std::vector<char> col_used(m, 0);
    double fixed_cost = 0.0;
    int matched = 0;
    for (int r = 0; r < n && matched < want; ++r) {
        std::vector<int> rest_rows;
        for (int rr = r + 1; rr < n; ++rr) rest_rows.push_back(rr);

        const bool may_skip = static_cast<int>(rest_rows.size()) >= want - matched;
        bool fixed = false;
        for (int c = 0; c < m; ++c) {
            if (col_used[c]) continue;
            std::vector<int> rest_cols;
            for (int cc = 0; cc < m; ++cc)
                if (!col_used[cc] && cc != c) rest_cols.push_back(cc);
            const double t = fixed_cost + cost(r, c) + sub_optimum(cost, rest_rows, rest_cols);
            if (t <= best + tol) {
                out.pairs.emplace_back(r, c);
                col_used[c] = 1;
                fixed_cost += cost(r, c);
                ++matched;
                fixed = true;
                break;
            }
        }
        if (!fixed) {
            if (!may_skip) throw NumericError("hungarian: failed to extend optimal assignment");
            // row r stays unmatched; remaining rows carry the assignment
        }
    }
    out.total_cost = fixed_cost;
    return out;
}

}  // namespace smot
