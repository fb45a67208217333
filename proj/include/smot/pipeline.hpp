#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smot/bundle.hpp"
#include "smot/config.hpp"
#include "smot/metrics_tracking.hpp"
#include "smot/report.hpp"
#include "smot/types.hpp"

namespace smot::pipeline {

// Ablation toggles: None mean-pools instead of temporal attention and zeroes
// the video context; the other variants enable one or both streams.
enum class FusionVariant { None, InstanceOnly, VideoOnly, Both };

struct FusedScene {
    std::vector<int> track_ids;  // sorted ascending
    std::map<int, Vec> aggregates;
    std::map<int, Vec> alphas;
    std::vector<fusion::RelationQuery> relations;  // ordered pairs, sorted
    Vec video_context;
    int frames_consumed = 0;
};

FusedScene fuse_scene(const std::vector<FeatureSequence>& seqs, const ModelBundle& bundle,
                      const RunConfig& cfg, FusionVariant variant = FusionVariant::Both);

// use_lm == true generates captions with the toy LM; otherwise canned
// geometric templates. Interactions always come from the template decoder
// over the bundle's prototypes.
SemanticRecord describe_scene(const FusedScene& fused, const std::vector<Track>& tracks,
                              const ModelBundle& bundle, bool use_lm, const RunConfig& cfg,
                              const std::string& video_id);

// Semantic scoring needs predicted ids mapped onto GT ids first; the IDF1
// global matching provides the alignment.
struct VideoEval {
    std::vector<Track> gt_tracks;
    std::vector<Track> pred_tracks;
    SemanticRecord gt;
    SemanticRecord pred;
};

metrics::SemanticScores evaluate_semantics(const std::vector<VideoEval>& videos,
                                           const RunConfig& cfg);

struct PipelineResult {
    std::vector<std::string> video_dirs;
    std::vector<std::vector<Track>> tracks;    // per video
    std::vector<SemanticRecord> predictions;   // per video
    metrics::TrackingScores tracking;
    metrics::SemanticScores semantic;
    std::string report_md;
    std::string report_csv;
};

// tracker -> features -> fusion -> reasoner -> metrics, over every video in
// the dataset directory. bundle == nullptr falls back to the seeded default
// bundle with template decoding.
PipelineResult run_pipeline(const RunConfig& cfg, const std::string& data_dir,
                            const ModelBundle* bundle, bool use_gt_tracks = false,
                            FusionVariant variant = FusionVariant::Both);

void write_pipeline_outputs(const PipelineResult& result, const std::string& out_dir);

// Class-mean prototypes over a dataset's GT interactions, respecting the
// fusion variant so each ablation row is calibrated fairly.
void fit_prototypes(ModelBundle& bundle, const std::string& data_dir, const RunConfig& cfg,
                    FusionVariant variant = FusionVariant::Both);

// Four-variant grid {none, +ins, +vid, both}; tracking columns shared.
std::vector<metrics::AblationRow> run_ablation(const RunConfig& cfg, const std::string& eval_dir,
                                               const std::string& train_dir,
                                               const ModelBundle& bundle, bool use_lm);

}  // namespace smot::pipeline
