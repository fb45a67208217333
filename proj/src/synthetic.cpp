#include "smot/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "smot/errors.hpp"
#include "smot/ingest.hpp"
#include "smot/rng.hpp"

namespace smot::synth {

namespace {

struct P2 {
    double x = 0.0, y = 0.0;
};

P2 operator+(P2 a, P2 b) { return {a.x + b.x, a.y + b.y}; }
P2 operator-(P2 a, P2 b) { return {a.x - b.x, a.y - b.y}; }
P2 operator*(double s, P2 a) { return {s * a.x, s * a.y}; }
double norm(P2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }

P2 clamp_arena(P2 p) {
    p.x = std::min(std::max(p.x, kMargin), kArena - kMargin);
    p.y = std::min(std::max(p.y, kMargin), kArena - kMargin);
    return p;
}

P2 step_towards(P2 from, P2 to, double speed) {
    const P2 d = to - from;
    const double n = norm(d);
    if (n <= speed) return to;
    return from + (speed / n) * d;
}

// Waypoint walker: constant speed along a random polyline, holds at the end.
std::vector<P2> base_walk(Rng& rng, int n_frames) {
    const int n_way = 2 + static_cast<int>(rng.next_below(2));
    std::vector<P2> way;
    for (int i = 0; i <= n_way; ++i)
        way.push_back({rng.uniform(kMargin, kArena - kMargin), rng.uniform(kMargin, kArena - kMargin)});
    const double speed = rng.uniform(3.0, 7.0);

    std::vector<P2> pos(n_frames);
    P2 cur = way[0];
    std::size_t target = 1;
    for (int t = 0; t < n_frames; ++t) {
        pos[t] = cur;
        if (target < way.size()) {
            cur = step_towards(cur, way[target], speed);
            if (norm(cur - way[target]) < 1e-9 && target + 1 < way.size()) ++target;
        }
    }
    return pos;
}

}  // namespace

int motion_class(const Track& t) {
    if (t.boxes.size() < 2) return 0;
    const double dx = t.boxes.back().cx() - t.boxes.front().cx();
    const double dy = t.boxes.back().cy() - t.boxes.front().cy();
    if (std::sqrt(dx * dx + dy * dy) < 30.0) return 0;
    // octants counted clockwise from "right"; screen y grows downward
    const double ang = std::atan2(dy, dx);
    int oct = static_cast<int>(std::floor((ang + 3.14159265358979323846 / 8.0) /
                                          (3.14159265358979323846 / 4.0)));
    oct = ((oct % 8) + 8) % 8;
    return 1 + oct;
}

namespace {

const char* kDirWords[8] = {
    "right", "bottom right", "bottom", "bottom left", "left", "top left", "top", "top right",
};

double mean_speed(const Track& t) {
    if (t.boxes.size() < 2) return 0.0;
    double total = 0.0;
    for (std::size_t i = 1; i < t.boxes.size(); ++i) {
        const double dx = t.boxes[i].cx() - t.boxes[i - 1].cx();
        const double dy = t.boxes[i].cy() - t.boxes[i - 1].cy();
        const int df = std::max(1, t.boxes[i].frame - t.boxes[i - 1].frame);
        total += std::sqrt(dx * dx + dy * dy) / df;
    }
    return total / static_cast<double>(t.boxes.size() - 1);
}

}  // namespace

std::string motion_phrase(const Track& t) {
    const int cls = motion_class(t);
    if (cls == 0) return "stays in place";
    const char* adv = mean_speed(t) >= 4.5 ? "quickly" : "slowly";
    return std::string("walks ") + adv + " toward the " + kDirWords[cls - 1];
}

std::string interaction_verb_phrase(const std::string& label) {
    if (label == "follow") return "follows";
    if (label == "approach") return "approaches";
    if (label == "pass_by") return "passes by";
    if (label == "talk_to") return "talks to";
    throw DataError("no verb phrase for label: " + label);
}

std::string instance_caption(const Track& t, const std::vector<ScriptedInteraction>& scripts) {
    std::string out = "person " + std::to_string(t.track_id) + " " + motion_phrase(t);
    for (const ScriptedInteraction& s : scripts) {
        if (s.subject == t.track_id)
            out += " and " + interaction_verb_phrase(s.label) + " person " + std::to_string(s.object);
    }
    return out;
}

std::string scene_summary(int n_tracks, const std::vector<ScriptedInteraction>& scripts) {
    std::string out = "the scene shows " + std::to_string(n_tracks) + " people";
    std::vector<ScriptedInteraction> sorted = scripts;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return std::tie(a.subject, a.object, a.label) < std::tie(b.subject, b.object, b.label);
    });
    for (const ScriptedInteraction& s : sorted)
        out += " person " + std::to_string(s.subject) + " " + interaction_verb_phrase(s.label) +
               " person " + std::to_string(s.object);
    return out;
}

Dataset gen_synthetic(std::uint64_t seed, const SceneSpec& spec, const RunConfig& cfg) {
    if (spec.n_tracks < 1 || spec.n_tracks > 9)
        throw DataError("gen_synthetic: n_tracks must be in [1,9]");
    if (spec.n_frames < 2) throw DataError("gen_synthetic: n_frames must be >= 2");
    std::set<int> subjects;
    for (const ScriptedInteraction& s : spec.interactions) {
        if (s.subject < 1 || s.subject > spec.n_tracks || s.object < 1 || s.object > spec.n_tracks)
            throw DataError("gen_synthetic: interaction references missing track");
        if (s.subject == s.object) throw DataError("gen_synthetic: subject == object");
        if (s.first_frame < 1 || s.last_frame > spec.n_frames || s.first_frame > s.last_frame)
            throw DataError("gen_synthetic: interaction span outside video");
        if (std::find(cfg.labels.begin(), cfg.labels.end(), s.label) == cfg.labels.end())
            throw DataError("gen_synthetic: unknown label: " + s.label);
        if (!subjects.insert(s.subject).second)
            throw DataError("gen_synthetic: track is subject of two scripts");
    }

    Rng rng(seed);
    const int T = spec.n_frames;

    // base trajectories, one seeded walker per track
    std::vector<std::vector<P2>> pos(spec.n_tracks);
    for (int i = 0; i < spec.n_tracks; ++i) pos[i] = base_walk(rng, T);

    // scripted interactions steer the subject (talk_to steers both)
    for (const ScriptedInteraction& s : spec.interactions) {
        std::vector<P2>& subj = pos[s.subject - 1];
        std::vector<P2>& obj = pos[s.object - 1];
        const int a = s.first_frame - 1;
        const int b = s.last_frame - 1;
        const double speed = 5.0;
        if (s.label == "follow") {
            const int lag = 4;
            const P2 gap = {0.0, 1.4 * kBoxH};  // tail below, boxes stay disjoint
            for (int t = a; t < T; ++t) {
                const int src = std::max(0, std::min(b, t) - lag);
                const P2 target = clamp_arena(obj[src] + gap);
                subj[t] = t == 0 ? target : step_towards(subj[t - 1], target, speed);
            }
        } else if (s.label == "approach") {
            for (int t = a; t <= b; ++t) {
                const P2 target = obj[t] + P2{1.5 * kBoxW, 0.0};
                subj[t] = t == 0 ? subj[t] : step_towards(subj[t - 1], target, speed);
            }
            for (int t = b + 1; t < T; ++t) subj[t] = subj[b];
        } else if (s.label == "talk_to") {
            const P2 meet = clamp_arena(0.5 * (subj[a] + obj[a]));
            const P2 ssubj = clamp_arena(meet + P2{-0.9 * kBoxW, 0.0});
            const P2 sobj = clamp_arena(meet + P2{0.9 * kBoxW, 0.0});
            for (int t = a; t < T; ++t) {
                subj[t] = t == 0 ? ssubj : step_towards(subj[t - 1], ssubj, speed);
                obj[t] = t == 0 ? sobj : step_towards(obj[t - 1], sobj, speed);
            }
        } else if (s.label == "pass_by") {
            const int mid = (a + b) / 2;
            const P2 near_pt = clamp_arena(obj[mid] + P2{1.6 * kBoxW, 0.0});
            // aim through the near point with a constant heading
            P2 dir = near_pt - subj[std::max(0, a - 1)];
            const double n = norm(dir);
            if (n > 1e-9) dir = (1.0 / n) * dir;
            for (int t = a; t < T; ++t)
                subj[t] = clamp_arena(subj[std::max(0, t - 1)] + speed * dir);
        }
    }

    Dataset ds;
    ds.semantics.video_id = spec.video_id;

    // boxes; per-track size jitter keeps tracks visually distinct
    std::vector<double> bw(spec.n_tracks), bh(spec.n_tracks);
    for (int i = 0; i < spec.n_tracks; ++i) {
        bw[i] = kBoxW * rng.uniform(0.9, 1.1);
        bh[i] = kBoxH * rng.uniform(0.9, 1.1);
    }
    for (int i = 0; i < spec.n_tracks; ++i) {
        Track tr;
        tr.track_id = i + 1;
        for (int t = 0; t < T; ++t) {
            BoundedBox box;
            box.frame = t + 1;
            box.w = bw[i];
            box.h = bh[i];
            box.x = pos[i][t].x - 0.5 * bw[i];
            box.y = pos[i][t].y - 0.5 * bh[i];
            box.conf = 1.0;
            tr.boxes.push_back(box);
        }
        ds.gt.push_back(std::move(tr));
    }

    // detections: jittered GT with scripted drop-outs
    for (int t = 0; t < T; ++t) {
        DetectionFrame df;
        df.frame = t + 1;
        for (int i = 0; i < spec.n_tracks; ++i) {
            const double drop = rng.next_double();
            const double jx = spec.noise_pos > 0.0 ? rng.normal(0.0, spec.noise_pos) : 0.0;
            const double jy = spec.noise_pos > 0.0 ? rng.normal(0.0, spec.noise_pos) : 0.0;
            if (drop < spec.dropout) continue;
            BoundedBox box = ds.gt[i].boxes[t];
            box.x += jx;
            box.y += jy;
            box.conf = 1.0 - 0.05 * rng.next_double();
            df.detections.emplace_back(box, -1);
        }
        ds.detections.push_back(std::move(df));
    }

    ds.features = compute_features_noisy(ds.gt, cfg.feat_dim, spec.feat_noise, seed ^ 0xFEA7);

    for (const Track& tr : ds.gt)
        ds.semantics.instance_captions[tr.track_id] = instance_caption(tr, spec.interactions);
    ds.semantics.summary = scene_summary(spec.n_tracks, spec.interactions);
    for (const ScriptedInteraction& s : spec.interactions)
        ds.semantics.interactions.insert({s.subject, s.object, s.label});
    return ds;
}

void write_dataset(const std::string& dir, const Dataset& ds, const RunConfig& cfg) {
    std::filesystem::create_directories(dir);
    ingest::write_file(dir + "/detections.csv", ingest::write_detections(ds.detections));
    ingest::write_file(dir + "/gt.csv", ingest::write_tracks(ds.gt));
    ingest::write_file(dir + "/features.csv", ingest::write_features(ds.features));
    ingest::write_file(dir + "/semantics.json", ingest::write_semantics(ds.semantics));
    ingest::write_file(dir + "/config.json", write_config(cfg));
}

std::vector<FeatureSequence> compute_features(const std::vector<Track>& tracks, int d) {
    return compute_features_noisy(tracks, d, 0.0, 0);
}

std::vector<FeatureSequence> compute_features_noisy(const std::vector<Track>& tracks, int d,
                                                    double sigma, std::uint64_t seed) {
    if (d < 6) throw DataError("feature recipe needs d >= 6");
    Rng rng(seed);

    // frame -> (track index, center) for the distance/bearing channels
    std::map<int, std::vector<std::pair<std::size_t, P2>>> present;
    for (std::size_t i = 0; i < tracks.size(); ++i)
        for (const BoundedBox& b : tracks[i].boxes)
            present[b.frame].push_back({i, {b.cx(), b.cy()}});

    std::vector<FeatureSequence> out;
    std::vector<const Track*> sorted;
    for (const Track& t : tracks) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(),
              [](const Track* a, const Track* b) { return a->track_id < b->track_id; });

    for (const Track* tp : sorted) {
        const Track& t = *tp;
        if (t.boxes.empty()) continue;
        FeatureSequence seq;
        seq.track_id = t.track_id;
        seq.feats = Mat(static_cast<int>(t.boxes.size()), d);
        for (std::size_t k = 0; k < t.boxes.size(); ++k) {
            const BoundedBox& b = t.boxes[k];
            seq.frames.push_back(b.frame);

            double vx = 0.0, vy = 0.0;
            if (t.boxes.size() >= 2) {
                const std::size_t j = k > 0 ? k : 1;
                const int df = std::max(1, t.boxes[j].frame - t.boxes[j - 1].frame);
                vx = (t.boxes[j].cx() - t.boxes[j - 1].cx()) / df;
                vy = (t.boxes[j].cy() - t.boxes[j - 1].cy()) / df;
            }

            double min_dist = kArena;
            double bearing = 0.0;
            for (const auto& [other_idx, center] : present[b.frame]) {
                if (&tracks[other_idx] == &t) continue;
                const double dx = center.x - b.cx();
                const double dy = center.y - b.cy();
                const double dist = std::sqrt(dx * dx + dy * dy);
                if (dist < min_dist) {
                    min_dist = dist;
                    bearing = std::atan2(dy, dx);
                }
            }

            const int r = static_cast<int>(k);
            seq.feats(r, 0) = b.cx() / (0.5 * kArena) - 1.0;
            seq.feats(r, 1) = b.cy() / (0.5 * kArena) - 1.0;
            seq.feats(r, 2) = std::clamp(vx / 8.0, -1.0, 1.0);
            seq.feats(r, 3) = std::clamp(vy / 8.0, -1.0, 1.0);
            seq.feats(r, 4) = 2.0 * std::min(min_dist / (0.5 * kArena), 1.0) - 1.0;
            seq.feats(r, 5) = bearing / 3.14159265358979323846;
            if (sigma > 0.0)
                for (int c = 0; c < d; ++c) seq.feats(r, c) += rng.normal(0.0, sigma);
        }
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<int> frame_union(const std::vector<FeatureSequence>& seqs) {
    std::set<int> frames;
    for (const FeatureSequence& s : seqs) frames.insert(s.frames.begin(), s.frames.end());
    return {frames.begin(), frames.end()};
}

std::vector<std::vector<Vec>> frame_feature_rows(const std::vector<FeatureSequence>& seqs) {
    std::vector<const FeatureSequence*> sorted;
    for (const FeatureSequence& s : seqs) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](const FeatureSequence* a, const FeatureSequence* b) {
        return a->track_id < b->track_id;
    });

    std::vector<std::vector<Vec>> rows;
    for (int frame : frame_union(seqs)) {
        std::vector<Vec> frame_rows;
        for (const FeatureSequence* s : sorted) {
            const auto it = std::lower_bound(s->frames.begin(), s->frames.end(), frame);
            if (it == s->frames.end() || *it != frame) continue;
            const int r = static_cast<int>(it - s->frames.begin());
            Vec row(s->feats.cols);
            for (int c = 0; c < s->feats.cols; ++c) row[c] = s->feats(r, c);
            frame_rows.push_back(std::move(row));
        }
        if (!frame_rows.empty()) rows.push_back(std::move(frame_rows));
    }
    return rows;
}

}  // namespace smot::synth
