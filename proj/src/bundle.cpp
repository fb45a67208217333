#include "smot/bundle.hpp"

#include <cmath>

#include "smot/checkpoint.hpp"
#include "smot/errors.hpp"
#include "smot/rng.hpp"

namespace smot {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

const std::vector<std::string>& bundle_group_names() {
    static const std::vector<std::string> names = {
        "projector", "fusion_instance", "fusion_video", "toylm_base", "lora", "prototypes",
    };
    return names;
}

std::map<std::string, Vec> make_default_prototypes(const RunConfig& cfg) {
    std::map<std::string, Vec> out;
    for (const std::string& label : cfg.labels) {
        Rng rng(cfg.seed ^ 6 ^ fnv1a(label));
        Vec v(cfg.relation_dim);
        double norm2 = 0.0;
        for (double& x : v) {
            x = rng.normal();
            norm2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= inv;
        out[label] = v;
    }
    return out;
}

ModelBundle ModelBundle::shaped(const RunConfig& cfg) {
    ModelBundle b;
    b.inst = fusion::InstanceFusionParams::shaped(cfg);
    b.vid = fusion::VideoFusionParams::shaped(cfg);
    b.proj = reasoner::ProjectorParams::shaped(cfg);
    b.lm = reasoner::ToyLMParams::shaped(cfg);
    Rng lora_rng(cfg.seed ^ 5);
    b.lora = reasoner::LoraSet::create(cfg, lora_rng);
    for (const std::string& label : cfg.labels) b.prototypes[label] = Vec(cfg.relation_dim, 0.0);
    return b;
}

ModelBundle ModelBundle::init(const RunConfig& cfg) {
    ModelBundle b;
    Rng r1(cfg.seed ^ 1), r2(cfg.seed ^ 2), r3(cfg.seed ^ 3), r4(cfg.seed ^ 4), r5(cfg.seed ^ 5);
    b.inst = fusion::InstanceFusionParams::init(cfg, r1);
    b.vid = fusion::VideoFusionParams::init(cfg, r2);
    b.proj = reasoner::ProjectorParams::init(cfg, r3);
    b.lm = reasoner::ToyLMParams::init(cfg, r4);
    b.lora = reasoner::LoraSet::create(cfg, r5);
    b.prototypes = make_default_prototypes(cfg);
    return b;
}

std::vector<TensorRef> ModelBundle::tensors() {
    std::vector<TensorRef> out;
    for (TensorRef& t : proj.tensors()) out.push_back(t);
    for (TensorRef& t : inst.tensors()) out.push_back(t);
    for (TensorRef& t : vid.tensors()) out.push_back(t);
    for (TensorRef& t : lm.tensors()) out.push_back(t);
    for (TensorRef& t : lora.tensors()) out.push_back(t);
    for (auto& [label, v] : prototypes) out.push_back(tensor_ref("prototypes." + label, v));
    return out;
}

std::vector<TensorRef> ModelBundle::group_tensors(const std::string& group) {
    if (group == "projector") return proj.tensors();
    if (group == "fusion_instance") return inst.tensors();
    if (group == "fusion_video") return vid.tensors();
    if (group == "toylm_base") return lm.tensors();
    if (group == "lora") return lora.tensors();
    if (group == "prototypes") {
        std::vector<TensorRef> out;
        for (auto& [label, v] : prototypes) out.push_back(tensor_ref("prototypes." + label, v));
        return out;
    }
    throw DataError("unknown parameter group: " + group);
}

std::string ModelBundle::serialize_group(const std::string& group) {
    return ckpt::serialize(group_tensors(group));
}

void ModelBundle::save(const std::string& path) { ckpt::save_file(path, tensors()); }

void ModelBundle::save_adapter(const std::string& path) {
    ckpt::save_file(path, lora.tensors());
}

ModelBundle ModelBundle::load(const std::string& path, const RunConfig& cfg) {
    ModelBundle b = shaped(cfg);
    ckpt::load_into(ckpt::load_file(path), b.tensors());
    return b;
}

void ModelBundle::load_adapter(const std::string& path) {
    ckpt::load_into(ckpt::load_file(path), lora.tensors());
}

}  // namespace smot
