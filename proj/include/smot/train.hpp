#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "smot/bundle.hpp"
#include "smot/config.hpp"
#include "smot/reasoner.hpp"
#include "smot/types.hpp"

namespace smot::train {

// Progressive schedule:
//   stage 1 (alignment)   trains projector + fusion;    freezes toylm_base, lora
//   stage 2 (temporal)    trains fusion only;           freezes projector, toylm_base, lora
//   stage 3 (injection)   trains lora + projector;      freezes fusion, toylm_base
struct StagePlan {
    int stage = 1;
    std::set<std::string> frozen_groups;
    int steps = 100;
    double learning_rate = 0.05;
    std::uint64_t seed = 42;

    static StagePlan make(int stage, int steps, double lr, std::uint64_t seed);
    std::vector<std::string> trainable_groups() const;  // excludes prototypes
};

// Stage datasets. Kind must match the plan's stage.
struct Stage1Sample {
    FeatureSequence seq;
    Vec target_vec;  // lm_embed_dim alignment target
};

struct Stage2Scene {
    std::vector<FeatureSequence> seqs;          // sorted by track_id
    std::vector<std::vector<Vec>> frame_rows;   // per frame, rows of present tracks
    struct Pair {
        int subject_idx = 0;  // indices into seqs
        int object_idx = 0;
        bool interacting = false;
    };
    std::vector<Pair> pairs;
};

struct Stage3Sample {
    std::vector<std::pair<reasoner::PrefixKind, Vec>> prefix_sources;
    std::vector<int> targets;  // caption ids + end token
};

struct StageData {
    int kind = 0;
    std::vector<Stage1Sample> s1;
    std::vector<Stage2Scene> s2;
    std::vector<Stage3Sample> s3;
};

// p <- p - lr * g elementwise; throws NumericError on a non-finite gradient.
void sgd_step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
              double lr);

struct StageResult {
    // curve[i] is the full-batch loss before update i; the last entry is the
    // loss after the final update (steps+1 entries).
    std::vector<double> curve;
};

StageResult run_stage(const StagePlan& plan, ModelBundle& bundle, const StageData& data,
                      const RunConfig& cfg);

// Dataset-directory loaders. A directory is one video when it contains
// detections.csv, otherwise every subdirectory with detections.csv is a video.
std::vector<std::string> discover_videos(const std::string& dir);
StageData load_stage_data(int stage, const std::string& dir, const RunConfig& cfg,
                          const ModelBundle* bundle_for_stage3);

std::string curve_to_csv(const StageResult& r);

}  // namespace smot::train
