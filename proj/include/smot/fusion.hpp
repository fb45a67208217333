#pragma once

#include <vector>

#include "smot/config.hpp"
#include "smot/mat.hpp"
#include "smot/rng.hpp"
#include "smot/types.hpp"

namespace smot::fusion {

// Parameters of the instance stream: the temporal attention scorer
// (w1, b1, w2) and the pairwise relation MLP (wf1, bf1, wf2, bf2).
struct InstanceFusionParams {
    Mat w1;   // hidden × d
    Vec b1;   // hidden
    Mat w2;   // 1 × hidden
    Mat wf1;  // hidden × 2d
    Vec bf1;  // hidden
    Mat wf2;  // relation_dim × hidden
    Vec bf2;  // relation_dim

    std::vector<TensorRef> tensors();
    static InstanceFusionParams shaped(const RunConfig& cfg);
    static InstanceFusionParams init(const RunConfig& cfg, Rng& rng);
};

// Parameters of the video stream: the frame-token projection and the
// recursive multi-head attention cell with its post-residual norm.
struct VideoFusionParams {
    Mat wtok;  // context × d
    Vec btok;  // context
    Mat wq;    // context × context
    Mat wk;    // context × context
    Mat wv;    // context × context
    Mat wo;    // context × context
    Vec gamma;  // context (norm gain, init 1)
    Vec beta;   // context (norm bias, init 0)
    Vec f0;     // context (learned initial state, init 0)
    int heads = 1;

    std::vector<TensorRef> tensors();
    static VideoFusionParams shaped(const RunConfig& cfg);
    static VideoFusionParams init(const RunConfig& cfg, Rng& rng);
};

struct RelationQuery {
    int subject_id = 0;
    int object_id = 0;
    Vec h;  // relation_dim
};

struct VideoContextState {
    Vec f;
    int frames_consumed = 0;
};

// --- instance stream ---

struct TemporalAttention {
    Vec alpha;      // N, sums to 1, strictly positive
    Vec aggregate;  // d, convex combination of the rows
    // forward cache for the backward pass
    Mat tanh_u;  // N × hidden
    Vec scores;  // N
};

// Attention weight per frame: alpha_k = softmax_k(w2 · tanh(w1 f_k + b1)),
// aggregate = sum_k alpha_k f_k.
TemporalAttention temporal_attention(const FeatureSequence& seq, const InstanceFusionParams& p);

// Reverse-mode gradients. d_aggregate is required; d_alpha may be empty.
// Parameter gradients accumulate into gp; returns d(seq.feats).
Mat temporal_attention_backward(const FeatureSequence& seq, const InstanceFusionParams& p,
                                const TemporalAttention& cache, const Vec& d_aggregate,
                                const Vec& d_alpha, InstanceFusionParams& gp);

struct RelationResult {
    Vec h;    // relation_dim
    Vec z;    // hidden, pre-activation
    Vec act;  // hidden, post-activation
};

// h = wf2 · act(wf1 [fi; fj] + bf1) + bf2. Concatenation order is
// (subject, object); the map is direction-sensitive on purpose.
RelationResult relation_query(const Vec& fi, const Vec& fj, const InstanceFusionParams& p,
                              RelationActivation act = RelationActivation::Sigmoid);

void relation_query_backward(const Vec& fi, const Vec& fj, const InstanceFusionParams& p,
                             const RelationResult& cache, const Vec& dh,
                             InstanceFusionParams& gp, Vec& dfi, Vec& dfj,
                             RelationActivation act = RelationActivation::Sigmoid);

// --- video stream ---

// (x - mean) / sqrt(pop_var + 1e-5) * gamma + beta
Vec layer_norm(const Vec& x, const Vec& gamma, const Vec& beta);

struct VideoStepCache {
    Vec f_prev;
    Mat tokens;  // m × context
    Vec q;
    Mat keys;    // m × context
    Mat values;  // m × context
    Mat attn;    // heads × m, rows sum to 1
    Vec head_out;
    Vec mha;
    Vec resid;
    double mean = 0.0;
    double inv_std = 0.0;
    Vec xhat;
    Vec f_next;
};

// F_i = Norm(F_{i-1} + MHA(Q = wq F_{i-1}, K = wk tokens, V = wv tokens))
VideoStepCache video_context_step(const Vec& f_prev, const Mat& tokens,
                                  const VideoFusionParams& p);

void video_context_step_backward(const VideoStepCache& cache, const VideoFusionParams& p,
                                 const Vec& df_next, VideoFusionParams& gp, Vec& df_prev,
                                 Mat& dtokens);

struct VideoRun {
    VideoContextState state;
    std::vector<VideoStepCache> steps;
};

// Left fold of video_context_step over per-frame token matrices, starting at
// the learned F0. Empty input is an error.
VideoRun video_context_run(const std::vector<Mat>& frames, const VideoFusionParams& p);

// dframes may be null when input gradients are not needed. F0's gradient
// accumulates into gp.f0.
void video_context_run_backward(const VideoRun& run, const VideoFusionParams& p,
                                const Vec& df_final, VideoFusionParams& gp,
                                std::vector<Mat>* dframes);

// Frame tokens: one token per feature row, token = wtok f + btok.
Mat assemble_frame_tokens(const std::vector<Vec>& feat_rows, const VideoFusionParams& p);
void assemble_frame_tokens_backward(const std::vector<Vec>& feat_rows,
                                    const VideoFusionParams& p, const Mat& dtokens,
                                    VideoFusionParams& gp, std::vector<Vec>* dfeat_rows);

}  // namespace smot::fusion
