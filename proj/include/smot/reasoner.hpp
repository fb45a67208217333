#pragma once

#include <map>
#include <string>
#include <vector>

#include "smot/config.hpp"
#include "smot/fusion.hpp"
#include "smot/mat.hpp"
#include "smot/rng.hpp"

namespace smot::reasoner {

// One trainable linear map per prefix source so fused features land in the
// LM token space.
struct ProjectorParams {
    Mat inst_w;   // e × d
    Vec inst_b;   // e
    Mat rel_w;    // e × relation_dim
    Vec rel_b;    // e
    Mat video_w;  // e × context_dim
    Vec video_b;  // e

    std::vector<TensorRef> tensors();
    static ProjectorParams shaped(const RunConfig& cfg);
    static ProjectorParams init(const RunConfig& cfg, Rng& rng);
};

enum class PrefixKind { Instance, Relation, Video };

Vec project_prefix(const ProjectorParams& p, PrefixKind kind, const Vec& x);
// Accumulates parameter gradients into gp, returns d(x).
Vec project_prefix_backward(const ProjectorParams& p, PrefixKind kind, const Vec& x,
                            const Vec& dy, ProjectorParams& gp);

// Low-rank additive adaptation of a frozen m×n linear map:
// y = w x + scale * b (a x), scale = alpha / rank, b zero-initialized so a
// fresh adapter is an exact no-op.
struct LoraAdapter {
    Mat a;  // rank × n
    Mat b;  // m × rank
    double scale = 1.0;
    std::string target;

    static LoraAdapter create(int m, int n, int rank, double alpha, const std::string& target,
                              Rng& rng);
};

Vec lora_apply(const LoraAdapter& ad, const Mat& w, const Vec& x);
Mat lora_merge(const LoraAdapter& ad, const Mat& w);

struct LoraSet {
    LoraAdapter q, k, v, o;
    std::vector<TensorRef> tensors();
    static LoraSet create(const RunConfig& cfg, Rng& rng);
};

// Minimal causal LM: token + position embeddings, one single-head
// self-attention block with residual, linear output head. LoRA attaches to
// the four attention projections.
struct ToyLMParams {
    Mat embed;   // V × e
    Mat pos;     // max_len × e
    Mat wq;      // e × e
    Mat wk;      // e × e
    Mat wv;      // e × e
    Mat wo;      // e × e
    Mat head_w;  // V × e
    Vec head_b;  // V

    std::vector<TensorRef> tensors();
    static ToyLMParams shaped(const RunConfig& cfg);
    static ToyLMParams init(const RunConfig& cfg, Rng& rng);
};

// Prefix vectors in LM space, already projected and ordered
// [video context, per-track embeddings, per-pair relation queries].
struct ReasonerInput {
    std::vector<Vec> prefix;
};

struct LMForward {
    Mat logits;  // (len(tokens)+1) × V; row r is the distribution over the
                 // token following prefix + tokens[0..r)
    // caches for the backward pass
    int prefix_len = 0;
    std::vector<int> tokens;
    Mat wq_eff, wk_eff, wv_eff, wo_eff;
    std::vector<Vec> x;         // per-position block input
    std::vector<Vec> q, k, v;   // per-position projections
    std::vector<Vec> attn;      // attn[i] has i+1 weights (causal)
    std::vector<Vec> attn_out;  // pre-wo attention readout
    std::vector<Vec> hidden;    // x + wo * attn_out
};

// lora == nullptr runs the unadapted base model.
LMForward lm_forward(const ToyLMParams& lm, const LoraSet* lora, const ReasonerInput& input,
                     const std::vector<int>& tokens);

// Mean over rows of -log softmax(logits_r)[target_r].
double clm_loss(const Mat& logits, const std::vector<int>& targets);
Mat clm_loss_backward(const Mat& logits, const std::vector<int>& targets);

// Full reverse pass of lm_forward. Parameter gradients accumulate into
// gbase/glora (glora may be null alongside a null lora); returns gradients
// for the prefix vectors.
std::vector<Vec> lm_backward(const ToyLMParams& lm, const LoraSet* lora, const LMForward& fwd,
                             const Mat& dlogits, ToyLMParams& gbase, LoraSet* glora);

// Greedy decoding: argmax with ties to the lowest token id; stops at the end
// token or once max_len tokens are emitted. Returns ids without the end token.
std::vector<int> generate(const ToyLMParams& lm, const LoraSet* lora, const ReasonerInput& input,
                          int max_len, int end_token_id);

// Deterministic interaction fallback: nearest prototype by Euclidean
// distance, ties to the lexicographically smallest label, "none" suppressed.
std::vector<std::pair<std::pair<int, int>, std::string>> template_decode(
    const std::vector<fusion::RelationQuery>& queries,
    const std::map<std::string, Vec>& prototypes);

// Caption <-> token id helpers over the configured closed vocabulary.
std::vector<int> caption_to_ids(const std::string& caption, const RunConfig& cfg);
std::string ids_to_caption(const std::vector<int>& ids, const RunConfig& cfg);
int end_token_id(const RunConfig& cfg);

}  // namespace smot::reasoner
