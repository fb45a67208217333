#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace smot {

enum class RelationActivation { Sigmoid, Relu, Gelu };

// Every field has a documented default; config.json may override any subset.
// Unknown keys are ignored.
struct RunConfig {
    int feat_dim = 32;       // d, per-frame feature width
    int hidden_dim = 32;     // hidden width of the attention-score MLP and the relation MLP
    int relation_dim = 64;   // width of relation queries h_rel
    int context_dim = 64;    // width of the video context state F
    int mha_heads = 4;
    int lora_rank = 64;
    double lora_alpha = 64.0;
    int lm_embed_dim = 32;
    int lm_max_len = 64;

    std::vector<std::string> vocab;   // ordered; must contain the end token
    std::vector<std::string> labels;  // closed interaction vocabulary, includes "none"

    std::uint64_t seed = 42;

    // Tracker.
    double iou_threshold = 0.3;
    int max_age = 30;
    int min_hits = 3;

    // Metrics.
    double clear_iou = 0.5;
    std::vector<double> hota_alphas;  // strictly increasing within (0,1)

    // Training.
    double learning_rate = 0.05;

    RelationActivation relation_activation = RelationActivation::Sigmoid;

    static const char* end_token() { return "<end>"; }

    // Throws DataError when an invariant is violated.
    void validate() const;
};

std::vector<std::string> default_vocab();
std::vector<std::string> default_labels();
std::vector<double> default_hota_alphas();

// Build a config with all defaults filled in.
RunConfig make_default_config();

// Parse config JSON text over defaults; unknown keys ignored; validates.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);
std::string write_config(const RunConfig& cfg);

}  // namespace smot
