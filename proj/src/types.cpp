#include "smot/types.hpp"

namespace smot {

std::vector<TrackViolation> validate_tracks(const std::vector<Track>& tracks) {
    std::vector<TrackViolation> out;
    for (const Track& t : tracks) {
        if (t.track_id < 1) out.push_back({t.track_id, 0, "non-positive track id"});
        if (t.boxes.empty()) {
            out.push_back({t.track_id, 0, "empty track"});
            continue;
        }
        int prev_frame = 0;
        for (const BoundedBox& b : t.boxes) {
            if (b.frame < 1) out.push_back({t.track_id, b.frame, "frame < 1"});
            if (b.frame == prev_frame) out.push_back({t.track_id, b.frame, "duplicate frame"});
            else if (b.frame < prev_frame) out.push_back({t.track_id, b.frame, "unsorted"});
            if (b.w <= 0.0 || b.h <= 0.0)
                out.push_back({t.track_id, b.frame, "degenerate extent"});
            if (b.conf < 0.0 || b.conf > 1.0)
                out.push_back({t.track_id, b.frame, "confidence outside [0,1]"});
            prev_frame = b.frame;
        }
    }
    return out;
}

}  // namespace smot
