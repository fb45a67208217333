#pragma once

#include <vector>

#include "smot/config.hpp"
#include "smot/mat.hpp"
#include "smot/types.hpp"

namespace smot::tracker {

// Intersection-over-union of two boxes; 0 when disjoint, 1 for identical.
double iou(const BoundedBox& a, const BoundedBox& b);

// Constant-velocity filter state over [cx, cy, w, h, vcx, vcy, vw, vh].
struct KalmanState {
    Vec mean;  // 8
    Mat cov;   // 8×8, symmetric PSD
};

// Noise defaults: P0 = diag(10,10,10,10,1000,1000,1000,1000),
// Q = diag(1,1,1,1,.01,.01,.01,.01), R = diag(1,1,1,1), dt = 1.
KalmanState kalman_init(const BoundedBox& z);
void kalman_predict(KalmanState& s);
void kalman_update(KalmanState& s, const BoundedBox& z);
BoundedBox kalman_box(const KalmanState& s, int frame, double conf);

struct Tracklet {
    int track_id = 0;
    KalmanState filter;
    int age = 0;                // frames since creation
    int hits = 0;               // matched updates
    int time_since_update = 0;  // frames since last match
    double last_conf = 1.0;
};

struct TrackerState {
    std::vector<Tracklet> tracklets;
    int next_id = 1;  // strictly greater than any issued id; never reused
};

// One association step: predict, match by 1-IoU cost (gated at
// iou_threshold), update matched, spawn tentative tracklets for unmatched
// detections, retire tracklets older than max_age. Returns the boxes of
// tracklets matched this frame with hits >= min_hits.
std::vector<std::pair<int, BoundedBox>> track_step(TrackerState& state,
                                                   const DetectionFrame& frame,
                                                   const RunConfig& cfg);

// Runs track_step over all frames and groups the output into Tracks.
std::vector<Track> run_tracker(const std::vector<DetectionFrame>& frames, const RunConfig& cfg);

}  // namespace smot::tracker
