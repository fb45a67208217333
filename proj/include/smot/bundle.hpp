#pragma once

#include <map>
#include <string>
#include <vector>

#include "smot/config.hpp"
#include "smot/fusion.hpp"
#include "smot/reasoner.hpp"

namespace smot {

// Every trainable tensor in the system, organized into the named groups the
// staged training schedule freezes and thaws:
//   projector, fusion_instance, fusion_video, toylm_base, lora, prototypes.
struct ModelBundle {
    fusion::InstanceFusionParams inst;
    fusion::VideoFusionParams vid;
    reasoner::ProjectorParams proj;
    reasoner::ToyLMParams lm;
    reasoner::LoraSet lora;
    std::map<std::string, Vec> prototypes;  // label -> relation_dim vector

    // Seeded initialization; group k draws from Rng(seed ^ k) so groups stay
    // independent of one another.
    static ModelBundle init(const RunConfig& cfg);
    static ModelBundle shaped(const RunConfig& cfg);

    std::vector<TensorRef> tensors();
    std::vector<TensorRef> group_tensors(const std::string& group);
    std::string serialize_group(const std::string& group);

    void save(const std::string& path);
    void save_adapter(const std::string& path);  // lora group only
    static ModelBundle load(const std::string& path, const RunConfig& cfg);
    void load_adapter(const std::string& path);
};

// Seeded unit-norm prototype per configured label; the template decoder's
// fallback when no fitted prototypes exist.
std::map<std::string, Vec> make_default_prototypes(const RunConfig& cfg);

const std::vector<std::string>& bundle_group_names();

}  // namespace smot
