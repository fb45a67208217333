#include "smot/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "smot/hungarian.hpp"

namespace smot::tracker {

double iou(const BoundedBox& a, const BoundedBox& b) {
    const double x1 = std::max(a.x, b.x);
    const double y1 = std::max(a.y, b.y);
    const double x2 = std::min(a.x + a.w, b.x + b.w);
    const double y2 = std::min(a.y + a.h, b.y + b.h);
    const double iw = x2 - x1;
    const double ih = y2 - y1;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

namespace {

constexpr int kDim = 8;
constexpr int kMeas = 4;

Vec measurement(const BoundedBox& z) { return {z.cx(), z.cy(), z.w, z.h}; }

void symmetrize(Mat& p) {
    for (int r = 0; r < p.rows; ++r)
        for (int c = r + 1; c < p.cols; ++c) {
            const double v = 0.5 * (p(r, c) + p(c, r));
            p(r, c) = v;
            p(c, r) = v;
        }
}

}  // namespace

KalmanState kalman_init(const BoundedBox& z) {
    KalmanState s;
    s.mean = measurement(z);
    s.mean.resize(kDim, 0.0);
    s.cov = Mat(kDim, kDim);
    for (int i = 0; i < kMeas; ++i) s.cov(i, i) = 10.0;
    for (int i = kMeas; i < kDim; ++i) s.cov(i, i) = 1000.0;
    return s;
}

void kalman_predict(KalmanState& s) {
    // x <- F x with F = [[I, I], [0, I]] (dt = 1)
    for (int i = 0; i < kMeas; ++i) s.mean[i] += s.mean[i + kMeas];

    // P <- F P F^T + Q, written out block-wise (A=pos/pos, B=pos/vel, D=vel/vel)
    Mat p = s.cov;
    for (int i = 0; i < kMeas; ++i)
        for (int j = 0; j < kMeas; ++j) {
            s.cov(i, j) = p(i, j) + p(i + kMeas, j) + p(i, j + kMeas) + p(i + kMeas, j + kMeas);
            s.cov(i, j + kMeas) = p(i, j + kMeas) + p(i + kMeas, j + kMeas);
            s.cov(i + kMeas, j) = p(i + kMeas, j) + p(i + kMeas, j + kMeas);
        }
    for (int i = 0; i < kMeas; ++i) s.cov(i, i) += 1.0;
    for (int i = kMeas; i < kDim; ++i) s.cov(i, i) += 0.01;
    symmetrize(s.cov);
}

void kalman_update(KalmanState& s, const BoundedBox& z) {
    const Vec zv = measurement(z);
    Vec innov(kMeas);
    for (int i = 0; i < kMeas; ++i) innov[i] = zv[i] - s.mean[i];

    // S = H P H^T + R is the top-left 4×4 block of P plus R
    Mat sm(kMeas, kMeas);
    for (int i = 0; i < kMeas; ++i)
        for (int j = 0; j < kMeas; ++j) sm(i, j) = s.cov(i, j);
    for (int i = 0; i < kMeas; ++i) sm(i, i) += 1.0;

    // K = P H^T S^{-1}; P H^T is the left 8×4 block of P
    Mat pht(kDim, kMeas);
    for (int i = 0; i < kDim; ++i)
        for (int j = 0; j < kMeas; ++j) pht(i, j) = s.cov(i, j);
    const Mat kt = solve(sm, transpose(pht));  // 4×8, K = kt^T

    for (int i = 0; i < kDim; ++i) {
        double acc = 0.0;
        for (int j = 0; j < kMeas; ++j) acc += kt(j, i) * innov[j];
        s.mean[i] += acc;
    }
    // P <- (I - K H) P ; K H only touches the first 4 columns of the factor
    Mat p = s.cov;
    for (int i = 0; i < kDim; ++i)
        for (int j = 0; j < kDim; ++j) {
            double acc = 0.0;
            for (int k = 0; k < kMeas; ++k) acc += kt(k, i) * p(k, j);
            s.cov(i, j) = p(i, j) - acc;
        }
    symmetrize(s.cov);
}

BoundedBox kalman_box(const KalmanState& s, int frame, double conf) {
    BoundedBox b;
    b.frame = frame;
    b.w = std::max(s.mean[2], 1e-6);
    b.h = std::max(s.mean[3], 1e-6);
    b.x = s.mean[0] - 0.5 * b.w;
    b.y = s.mean[1] - 0.5 * b.h;
    b.conf = conf;
    return b;
}

std::vector<std::pair<int, BoundedBox>> track_step(TrackerState& state,
                                                   const DetectionFrame& frame,
                                                   const RunConfig& cfg) {
    for (Tracklet& t : state.tracklets) {
        kalman_predict(t.filter);
        ++t.age;
        ++t.time_since_update;
    }

    const int nt = static_cast<int>(state.tracklets.size());
    const int nd = static_cast<int>(frame.detections.size());
    std::vector<int> det_to_track(nd, -1);

    if (nt > 0 && nd > 0) {
        Mat cost(nt, nd);
        Mat ious(nt, nd);
        for (int i = 0; i < nt; ++i) {
            const BoundedBox pred = kalman_box(state.tracklets[i].filter, frame.frame, 1.0);
            for (int j = 0; j < nd; ++j) {
                const double v = iou(pred, frame.detections[j].first);
                ious(i, j) = v;
                cost(i, j) = v >= cfg.iou_threshold ? 1.0 - v : kHungarianPad;
            }
        }
        for (const auto& [i, j] : hungarian(cost).pairs)
            if (ious(i, j) >= cfg.iou_threshold) det_to_track[j] = i;
    }

    for (int j = 0; j < nd; ++j) {
        const auto& [box, ignored_id] = frame.detections[j];
        if (det_to_track[j] >= 0) {
            Tracklet& t = state.tracklets[det_to_track[j]];
            kalman_update(t.filter, box);
            ++t.hits;
            t.time_since_update = 0;
            t.last_conf = box.conf;
        } else {
            Tracklet t;
            t.track_id = state.next_id++;
            t.filter = kalman_init(box);
            t.age = 0;
            t.hits = 1;
            t.time_since_update = 0;
            t.last_conf = box.conf;
            state.tracklets.push_back(std::move(t));
        }
    }

    state.tracklets.erase(
        std::remove_if(state.tracklets.begin(), state.tracklets.end(),
                       [&](const Tracklet& t) { return t.time_since_update > cfg.max_age; }),
        state.tracklets.end());

    std::vector<std::pair<int, BoundedBox>> out;
    for (const Tracklet& t : state.tracklets) {
        if (t.time_since_update == 0 && t.hits >= cfg.min_hits)
            out.emplace_back(t.track_id, kalman_box(t.filter, frame.frame, t.last_conf));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

std::vector<Track> run_tracker(const std::vector<DetectionFrame>& frames, const RunConfig& cfg) {
    TrackerState state;
    std::map<int, Track> by_id;
    for (const DetectionFrame& f : frames) {
        for (const auto& [id, box] : track_step(state, f, cfg)) {
            Track& t = by_id[id];
            t.track_id = id;
            t.boxes.push_back(box);
        }
    }
    std::vector<Track> out;
    out.reserve(by_id.size());
    for (auto& [id, t] : by_id) out.push_back(std::move(t));
    return out;
}

}  // namespace smot::tracker
