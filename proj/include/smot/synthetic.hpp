#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smot/config.hpp"
#include "smot/types.hpp"

namespace smot::synth {

// Scene geometry constants: square arena, person-shaped boxes.
inline constexpr double kArena = 1000.0;
inline constexpr double kBoxW = 40.0;
inline constexpr double kBoxH = 80.0;
inline constexpr double kMargin = 60.0;

struct ScriptedInteraction {
    int subject = 0;
    int object = 0;
    std::string label;  // follow | approach | pass_by | talk_to
    int first_frame = 1;
    int last_frame = 1;
};

struct SceneSpec {
    std::string video_id = "v1";
    int n_tracks = 3;
    int n_frames = 40;
    double noise_pos = 0.0;   // detection jitter sigma (pixels)
    double dropout = 0.0;     // detection drop probability
    double feat_noise = 0.0;  // feature channel jitter sigma
    std::vector<ScriptedInteraction> interactions;
};

struct Dataset {
    std::vector<Track> gt;
    std::vector<DetectionFrame> detections;
    std::vector<FeatureSequence> features;
    SemanticRecord semantics;
};

// Fully seed-deterministic scene synthesis: waypoint walkers, pursuit
// controllers for scripted interactions, template semantics.
Dataset gen_synthetic(std::uint64_t seed, const SceneSpec& spec, const RunConfig& cfg);

// Writes detections.csv, gt.csv, features.csv, semantics.json and the
// dataset's config.json into dir (created if missing).
void write_dataset(const std::string& dir, const Dataset& ds, const RunConfig& cfg);

// Feature recipe: [cx, cy, vx, vy, min-distance-to-others,
// bearing-to-nearest] normalized to [-1,1], zero-padded to d channels.
// Pure function of the track set, so it applies to predicted tracks too.
std::vector<FeatureSequence> compute_features(const std::vector<Track>& tracks, int d);
std::vector<FeatureSequence> compute_features_noisy(const std::vector<Track>& tracks, int d,
                                                    double sigma, std::uint64_t seed);

// Sorted union of frames, and per-frame feature rows (tracks present at the
// frame, ordered by track id) for the video stream.
std::vector<int> frame_union(const std::vector<FeatureSequence>& seqs);
std::vector<std::vector<Vec>> frame_feature_rows(const std::vector<FeatureSequence>& seqs);

// Net-displacement motion class: 0 = stays in place, 1..8 = direction octant.
int motion_class(const Track& t);
// "stays in place" or "walks quickly/slowly toward the <dir>"
std::string motion_phrase(const Track& t);

std::string interaction_verb_phrase(const std::string& label);

// GT caption/summary templates used by the generator.
std::string instance_caption(const Track& t, const std::vector<ScriptedInteraction>& scripts);
std::string scene_summary(int n_tracks, const std::vector<ScriptedInteraction>& scripts);

}  // namespace smot::synth
