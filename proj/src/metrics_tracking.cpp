#include "smot/metrics_tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "smot/hungarian.hpp"
#include "smot/tracker.hpp"

namespace smot::metrics {

namespace {

struct FrameView {
    // (track_id, box) per frame, sorted by id
    std::map<int, std::vector<std::pair<int, const BoundedBox*>>> by_frame;
    std::map<int, long long> track_len;
    long long total = 0;
};

FrameView index_tracks(const std::vector<Track>& tracks) {
    FrameView v;
    for (const Track& t : tracks) {
        for (const BoundedBox& b : t.boxes) {
            v.by_frame[b.frame].push_back({t.track_id, &b});
            v.track_len[t.track_id] += 1;
            v.total += 1;
        }
    }
    for (auto& [frame, entries] : v.by_frame)
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    return v;
}

std::vector<int> frame_union(const FrameView& a, const FrameView& b) {
    std::set<int> frames;
    for (const auto& [f, unused] : a.by_frame) frames.insert(f);
    for (const auto& [f, unused] : b.by_frame) frames.insert(f);
    return {frames.begin(), frames.end()};
}

struct FrameMatch {
    int gt_id;
    int pred_id;
    double iou;
};

// Matches maximizing count first, then total IoU: invalid pairs cost the
// padding sentinel, valid pairs 1-IoU, so the minimal total is lexicographic
// in (misses, -sum IoU).
std::vector<FrameMatch> match_frame(const std::vector<std::pair<int, const BoundedBox*>>& gts,
                                    const std::vector<std::pair<int, const BoundedBox*>>& preds,
                                    double thr) {
    std::vector<FrameMatch> out;
    if (gts.empty() || preds.empty()) return out;
    Mat cost(static_cast<int>(gts.size()), static_cast<int>(preds.size()));
    Mat ious(cost.rows, cost.cols);
    for (int i = 0; i < cost.rows; ++i)
        for (int j = 0; j < cost.cols; ++j) {
            const double v = tracker::iou(*gts[i].second, *preds[j].second);
            ious(i, j) = v;
            cost(i, j) = v >= thr ? 1.0 - v : kHungarianPad;
        }
    for (const auto& [i, j] : hungarian(cost).pairs)
        if (ious(i, j) >= thr) out.push_back({gts[i].first, preds[j].first, ious(i, j)});
    return out;
}

double ratio(double num, double den, double when_vacuous) {
    if (den == 0.0) return when_vacuous;
    return num / den;
}

}  // namespace

ClearScores clear_metrics(const std::vector<VideoTracks>& videos, double iou_thr) {
    ClearScores out;
    for (const VideoTracks& video : videos) {
        const FrameView gt = index_tracks(video.gt);
        const FrameView pred = index_tracks(video.pred);
        out.gt_total += gt.total;

        std::map<int, int> last_match;  // gt_id -> pred_id, persists across gaps
        for (int frame : frame_union(gt, pred)) {
            auto git = gt.by_frame.find(frame);
            auto pit = pred.by_frame.find(frame);
            std::vector<std::pair<int, const BoundedBox*>> gts =
                git == gt.by_frame.end() ? std::vector<std::pair<int, const BoundedBox*>>{}
                                         : git->second;
            std::vector<std::pair<int, const BoundedBox*>> preds =
                pit == pred.by_frame.end() ? std::vector<std::pair<int, const BoundedBox*>>{}
                                           : pit->second;

            std::vector<FrameMatch> matches;
            // continuity: keep the previous pairing when it is still valid
            for (auto g = gts.begin(); g != gts.end();) {
                const auto lm = last_match.find(g->first);
                bool kept = false;
                if (lm != last_match.end()) {
                    const auto p = std::find_if(preds.begin(), preds.end(), [&](const auto& e) {
                        return e.first == lm->second;
                    });
                    if (p != preds.end()) {
                        const double v = tracker::iou(*g->second, *p->second);
                        if (v >= iou_thr) {
                            matches.push_back({g->first, p->first, v});
                            preds.erase(p);
                            g = gts.erase(g);
                            kept = true;
                        }
                    }
                }
                if (!kept) ++g;
            }
            for (const FrameMatch& m : match_frame(gts, preds, iou_thr)) matches.push_back(m);

            std::set<int> matched_gt, matched_pred;
            for (const FrameMatch& m : matches) {
                matched_gt.insert(m.gt_id);
                matched_pred.insert(m.pred_id);
                const auto lm = last_match.find(m.gt_id);
                if (lm != last_match.end() && lm->second != m.pred_id) out.ids += 1;
                last_match[m.gt_id] = m.pred_id;
            }
            if (git != gt.by_frame.end())
                for (const auto& [id, unused] : git->second)
                    if (!matched_gt.count(id)) out.fn += 1;
            if (pit != pred.by_frame.end())
                for (const auto& [id, unused] : pit->second)
                    if (!matched_pred.count(id)) out.fp += 1;
        }
    }
    if (out.gt_total == 0) {
        out.mota_valid = false;
        out.mota = std::numeric_limits<double>::quiet_NaN();
    } else {
        out.mota =
            100.0 * (1.0 - static_cast<double>(out.fn + out.fp + out.ids) / out.gt_total);
    }
    return out;
}

namespace {

struct IdMatchResult {
    long long idtp = 0;
    std::vector<std::pair<int, int>> aligned;  // (gt_id, pred_id) with idtp > 0
};

IdMatchResult id_match_video(const VideoTracks& video, double iou_thr) {
    IdMatchResult res;
    const int ng = static_cast<int>(video.gt.size());
    const int np = static_cast<int>(video.pred.size());
    if (ng == 0 || np == 0) return res;

    // overlap frames per (gt, pred) pair
    Mat idtp(ng, np);
    for (int i = 0; i < ng; ++i) {
        std::map<int, const BoundedBox*> gt_frames;
        for (const BoundedBox& b : video.gt[i].boxes) gt_frames[b.frame] = &b;
        for (int j = 0; j < np; ++j) {
            long long count = 0;
            for (const BoundedBox& b : video.pred[j].boxes) {
                const auto it = gt_frames.find(b.frame);
                if (it != gt_frames.end() && tracker::iou(*it->second, b) >= iou_thr) ++count;
            }
            idtp(i, j) = static_cast<double>(count);
        }
    }
    Mat cost(ng, np);
    for (int i = 0; i < ng; ++i)
        for (int j = 0; j < np; ++j) cost(i, j) = -idtp(i, j);

    for (const auto& [i, j] : hungarian(cost).pairs) {
        const long long c = static_cast<long long>(idtp(i, j));
        res.idtp += c;
        if (c > 0) res.aligned.push_back({video.gt[i].track_id, video.pred[j].track_id});
    }
    return res;
}

}  // namespace

IdScores id_metrics(const std::vector<VideoTracks>& videos, double iou_thr) {
    IdScores out;
    long long gt_total = 0, pred_total = 0;
    for (const VideoTracks& video : videos) {
        for (const Track& t : video.gt) gt_total += static_cast<long long>(t.boxes.size());
        for (const Track& t : video.pred) pred_total += static_cast<long long>(t.boxes.size());
        out.idtp += id_match_video(video, iou_thr).idtp;
    }
    out.idfn = gt_total - out.idtp;
    out.idfp = pred_total - out.idtp;
    const bool vacuous = gt_total == 0 && pred_total == 0;
    out.idp = 100.0 * ratio(static_cast<double>(out.idtp),
                            static_cast<double>(out.idtp + out.idfp), vacuous ? 1.0 : 0.0);
    out.idr = 100.0 * ratio(static_cast<double>(out.idtp),
                            static_cast<double>(out.idtp + out.idfn), vacuous ? 1.0 : 0.0);
    out.idf1 = 100.0 * ratio(2.0 * static_cast<double>(out.idtp),
                             static_cast<double>(2 * out.idtp + out.idfp + out.idfn),
                             vacuous ? 1.0 : 0.0);
    return out;
}

std::map<int, int> id_alignment(const VideoTracks& video, double iou_thr) {
    std::map<int, int> out;
    for (const auto& [gt_id, pred_id] : id_match_video(video, iou_thr).aligned)
        out[pred_id] = gt_id;
    return out;
}

HotaScores hota(const std::vector<VideoTracks>& videos, const std::vector<double>& alphas) {
    HotaScores out;
    double sum_hota = 0.0, sum_deta = 0.0, sum_assa = 0.0, sum_loca = 0.0;

    for (double alpha : alphas) {
        long long tp = 0, fn = 0, fp = 0;
        double iou_sum = 0.0;
        double weighted_assoc = 0.0;  // sum over TPs of TPA/(TPA+FNA+FPA)

        for (const VideoTracks& video : videos) {
            const FrameView gt = index_tracks(video.gt);
            const FrameView pred = index_tracks(video.pred);
            std::map<std::pair<int, int>, long long> pair_count;

            for (int frame : frame_union(gt, pred)) {
                const auto git = gt.by_frame.find(frame);
                const auto pit = pred.by_frame.find(frame);
                const auto& gts = git == gt.by_frame.end()
                                      ? std::vector<std::pair<int, const BoundedBox*>>{}
                                      : git->second;
                const auto& preds = pit == pred.by_frame.end()
                                        ? std::vector<std::pair<int, const BoundedBox*>>{}
                                        : pit->second;
                const auto matches = match_frame(gts, preds, alpha);
                tp += static_cast<long long>(matches.size());
                fn += static_cast<long long>(gts.size()) - static_cast<long long>(matches.size());
                fp += static_cast<long long>(preds.size()) -
                      static_cast<long long>(matches.size());
                for (const FrameMatch& m : matches) {
                    iou_sum += m.iou;
                    pair_count[{m.gt_id, m.pred_id}] += 1;
                }
            }
            for (const auto& [pair, count] : pair_count) {
                const long long tpa = count;
                const long long fna = gt.track_len.at(pair.first) - tpa;
                const long long fpa = pred.track_len.at(pair.second) - tpa;
                weighted_assoc +=
                    static_cast<double>(tpa) * (static_cast<double>(tpa) / (tpa + fna + fpa));
            }
        }

        const double deta = ratio(static_cast<double>(tp), static_cast<double>(tp + fn + fp), 1.0);
        const double assa =
            tp > 0 ? weighted_assoc / tp : (fn + fp == 0 ? 1.0 : 0.0);
        const double loca = tp > 0 ? iou_sum / tp : 1.0;
        sum_deta += deta;
        sum_assa += assa;
        sum_loca += loca;
        sum_hota += std::sqrt(deta * assa);
    }

    const double inv = 1.0 / static_cast<double>(alphas.size());
    out.hota = 100.0 * sum_hota * inv;
    out.deta = 100.0 * sum_deta * inv;
    out.assa = 100.0 * sum_assa * inv;
    out.loca = 100.0 * sum_loca * inv;
    return out;
}

TrackingScores evaluate_tracking(const std::vector<VideoTracks>& videos, const RunConfig& cfg) {
    TrackingScores s;
    const ClearScores c = clear_metrics(videos, cfg.clear_iou);
    const IdScores id = id_metrics(videos, cfg.clear_iou);
    const HotaScores h = hota(videos, cfg.hota_alphas);
    s.hota = h.hota;
    s.deta = h.deta;
    s.assa = h.assa;
    s.loca = h.loca;
    s.fn = c.fn;
    s.fp = c.fp;
    s.ids = c.ids;
    s.mota = c.mota;
    s.mota_valid = c.mota_valid;
    s.idr = id.idr;
    s.idp = id.idp;
    s.idf1 = id.idf1;
    return s;
}

}  // namespace smot::metrics
