#pragma once

#include <map>
#include <vector>

#include "smot/config.hpp"
#include "smot/types.hpp"

namespace smot::metrics {

struct VideoTracks {
    std::vector<Track> gt;
    std::vector<Track> pred;
};

// CLEAR counts pooled over videos. MOTA is undefined (mota_valid == false,
// value NaN) when there are no GT boxes; FP is still counted.
struct ClearScores {
    long long fn = 0;
    long long fp = 0;
    long long ids = 0;
    long long gt_total = 0;
    double mota = 0.0;
    bool mota_valid = true;
};

// Per-frame matching on cost 1-IoU gated at iou_thr, carrying the last known
// (gt, pred) pairing forward when it is still valid; identity switches count
// a gt whose matched prediction id changes between matched frames.
ClearScores clear_metrics(const std::vector<VideoTracks>& videos, double iou_thr = 0.5);

struct IdScores {
    long long idtp = 0;
    long long idfp = 0;
    long long idfn = 0;
    double idp = 0.0;
    double idr = 0.0;
    double idf1 = 0.0;
};

// Global truth-to-result trajectory matching maximizing matched frames.
IdScores id_metrics(const std::vector<VideoTracks>& videos, double iou_thr = 0.5);

// pred_id -> gt_id map from the IDF1 matching of one video (pairs that share
// at least one valid frame).
std::map<int, int> id_alignment(const VideoTracks& video, double iou_thr = 0.5);

struct HotaScores {
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
    double loca = 0.0;
};

// Alpha-averaged detection/association decomposition:
// per alpha, per frame: match maximizing count then total IoU;
// DetA = TP/(TP+FN+FP); AssA = mean over TPs of TPA/(TPA+FNA+FPA);
// HOTA(alpha) = sqrt(DetA*AssA); LocA = mean IoU over TPs; scores are the
// mean over the alpha grid, x100.
HotaScores hota(const std::vector<VideoTracks>& videos, const std::vector<double>& alphas);

// Table-1 row: all tracking numbers in one struct.
struct TrackingScores {
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
    double loca = 0.0;
    long long fn = 0;
    long long fp = 0;
    long long ids = 0;
    double mota = 0.0;
    bool mota_valid = true;
    double idr = 0.0;
    double idp = 0.0;
    double idf1 = 0.0;
};

TrackingScores evaluate_tracking(const std::vector<VideoTracks>& videos, const RunConfig& cfg);

}  // namespace smot::metrics
