#pragma once

#include <utility>
#include <vector>

#include "smot/mat.hpp"

namespace smot {

struct Assignment {
    // Matched (row, col) pairs, sorted by row; exactly min(n, m) of them as
    // long as every real entry stays below the padding constant.
    std::vector<std::pair<int, int>> pairs;
    double total_cost = 0.0;
};

// Padding used to square up rectangular problems. Exceeds any 1-IoU cost, so
// a padded cell can never win over a real pair in the matching use cases.
inline constexpr double kHungarianPad = 1e6;

// Minimum-cost one-to-one assignment (Jonker-Volgenant style shortest
// augmenting paths). Ties between optimal assignments break to the
// lexicographically smallest (row, col) pair list; NaN entries are an error.
Assignment hungarian(const Mat& cost);

}  // namespace smot
