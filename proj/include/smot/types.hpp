#pragma once

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "smot/mat.hpp"

namespace smot {

// Frame-indexed detection box. Frames are 1-based to match the ingest format.
struct BoundedBox {
    int frame = 1;
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    double conf = 1.0;

    double cx() const { return x + 0.5 * w; }
    double cy() const { return y + 0.5 * h; }
    double area() const { return w * h; }
};

// Geometric side of a semantic trajectory: one identity, frame-sorted boxes.
struct Track {
    int track_id = 0;
    std::vector<BoundedBox> boxes;
};

// Per-track matrix of per-frame feature vectors; row k belongs to frames[k].
struct FeatureSequence {
    int track_id = 0;
    std::vector<int> frames;
    Mat feats;  // N × d
};

// Directed interaction tuple. "a follows b" and "b follows a" are distinct.
struct Interaction {
    int subject_id = 0;
    int object_id = 0;
    std::string label;

    bool operator<(const Interaction& o) const {
        return std::tie(subject_id, object_id, label) <
               std::tie(o.subject_id, o.object_id, o.label);
    }
    bool operator==(const Interaction& o) const {
        return subject_id == o.subject_id && object_id == o.object_id && label == o.label;
    }
};

// Semantic side of a trajectory set: captions, interactions, video summary.
struct SemanticRecord {
    std::string video_id;
    std::string summary;
    std::map<int, std::string> instance_captions;
    std::set<Interaction> interactions;
};

// One frame of raw detections; id == -1 means no identity assigned yet.
struct DetectionFrame {
    int frame = 1;
    std::vector<std::pair<BoundedBox, int>> detections;
};

struct TrackViolation {
    int track_id = 0;
    int frame = 0;
    std::string what;
};

// Collects every invariant violation (unsorted frames, duplicate frames,
// degenerate extent, bad confidence). Violations are data, not failures.
std::vector<TrackViolation> validate_tracks(const std::vector<Track>& tracks);

}  // namespace smot
