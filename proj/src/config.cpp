#include "smot/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "smot/errors.hpp"

namespace smot {

std::vector<std::string> default_vocab() {
    // Closed word-level vocabulary covering the synthetic caption templates
    // plus single-digit identities and the end token.
    std::vector<std::string> v = {
        "<end>",   "person", "walks",   "moves",  "toward", "the",    "left",
        "right",   "top",    "bottom",  "stays",  "in",     "place",  "and",
        "follows", "approaches", "passes", "by",  "talks",  "to",     "scene",
        "shows",   "people", "quickly", "slowly", "then",   "stops",  "near",
        "across",  "around", "middle",  "still",  "together",
    };
    for (int i = 1; i <= 9; ++i) v.push_back(std::to_string(i));
    return v;
}

std::vector<std::string> default_labels() {
    return {"follow", "approach", "pass_by", "talk_to", "none"};
}

std::vector<double> default_hota_alphas() {
    std::vector<double> a;
    for (int i = 1; i <= 19; ++i) a.push_back(0.05 * i);
    return a;
}

RunConfig make_default_config() {
    RunConfig cfg;
    cfg.vocab = default_vocab();
    cfg.labels = default_labels();
    cfg.hota_alphas = default_hota_alphas();
    return cfg;
}

void RunConfig::validate() const {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw DataError(std::string("config: ") + msg);
    };
    require(feat_dim >= 1, "feat_dim must be >= 1");
    require(hidden_dim >= 1, "hidden_dim must be >= 1");
    require(relation_dim >= 1, "relation_dim must be >= 1");
    require(context_dim >= 1, "context_dim must be >= 1");
    require(mha_heads >= 1, "mha_heads must be >= 1");
    require(lora_rank >= 1, "lora_rank must be >= 1");
    require(lm_embed_dim >= 1, "lm_embed_dim must be >= 1");
    require(lm_max_len >= 2, "lm_max_len must be >= 2");
    require(context_dim % mha_heads == 0, "context_dim must be divisible by mha_heads");
    require(!vocab.empty(), "vocab must be non-empty");
    require(std::find(vocab.begin(), vocab.end(), end_token()) != vocab.end(),
            "vocab must contain the end token <end>");
    require(!labels.empty(), "labels must be non-empty");
    require(std::find(labels.begin(), labels.end(), "none") != labels.end(),
            "labels must contain \"none\"");
    require(!hota_alphas.empty(), "hota_alphas must be non-empty");
    for (std::size_t i = 0; i < hota_alphas.size(); ++i) {
        require(hota_alphas[i] > 0.0 && hota_alphas[i] < 1.0, "hota_alphas must lie in (0,1)");
        if (i > 0) require(hota_alphas[i] > hota_alphas[i - 1], "hota_alphas must be strictly increasing");
    }
    require(iou_threshold > 0.0 && iou_threshold < 1.0, "iou_threshold must lie in (0,1)");
    require(clear_iou > 0.0 && clear_iou < 1.0, "clear_iou must lie in (0,1)");
    require(max_age >= 1, "max_age must be >= 1");
    require(min_hits >= 1, "min_hits must be >= 1");
    require(learning_rate > 0.0, "learning_rate must be positive");
}

static RelationActivation parse_activation(const std::string& s) {
    if (s == "sigmoid") return RelationActivation::Sigmoid;
    if (s == "relu") return RelationActivation::Relu;
    if (s == "gelu") return RelationActivation::Gelu;
    throw DataError("config: unknown relation_activation: " + s);
}

static const char* activation_name(RelationActivation a) {
    switch (a) {
        case RelationActivation::Sigmoid: return "sigmoid";
        case RelationActivation::Relu: return "relu";
        case RelationActivation::Gelu: return "gelu";
    }
    return "sigmoid";
}

RunConfig parse_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("config JSON: top level must be an object");

    RunConfig cfg = make_default_config();
    auto get_int = [&](const char* key, int& dst) {
        if (j.contains(key)) dst = j.at(key).get<int>();
    };
    auto get_double = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = j.at(key).get<double>();
    };
    try {
        get_int("feat_dim", cfg.feat_dim);
        get_int("hidden_dim", cfg.hidden_dim);
        get_int("relation_dim", cfg.relation_dim);
        get_int("context_dim", cfg.context_dim);
        get_int("mha_heads", cfg.mha_heads);
        get_int("lora_rank", cfg.lora_rank);
        get_double("lora_alpha", cfg.lora_alpha);
        get_int("lm_embed_dim", cfg.lm_embed_dim);
        get_int("lm_max_len", cfg.lm_max_len);
        get_int("max_age", cfg.max_age);
        get_int("min_hits", cfg.min_hits);
        get_double("iou_threshold", cfg.iou_threshold);
        get_double("clear_iou", cfg.clear_iou);
        get_double("learning_rate", cfg.learning_rate);
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("vocab")) cfg.vocab = j.at("vocab").get<std::vector<std::string>>();
        if (j.contains("labels")) cfg.labels = j.at("labels").get<std::vector<std::string>>();
        if (j.contains("hota_alphas"))
            cfg.hota_alphas = j.at("hota_alphas").get<std::vector<double>>();
        if (j.contains("relation_activation"))
            cfg.relation_activation = parse_activation(j.at("relation_activation").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string write_config(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["feat_dim"] = cfg.feat_dim;
    j["hidden_dim"] = cfg.hidden_dim;
    j["relation_dim"] = cfg.relation_dim;
    j["context_dim"] = cfg.context_dim;
    j["mha_heads"] = cfg.mha_heads;
    j["lora_rank"] = cfg.lora_rank;
    j["lora_alpha"] = cfg.lora_alpha;
    j["lm_embed_dim"] = cfg.lm_embed_dim;
    j["lm_max_len"] = cfg.lm_max_len;
    j["vocab"] = cfg.vocab;
    j["labels"] = cfg.labels;
    j["seed"] = cfg.seed;
    j["iou_threshold"] = cfg.iou_threshold;
    j["max_age"] = cfg.max_age;
    j["min_hits"] = cfg.min_hits;
    j["clear_iou"] = cfg.clear_iou;
    j["hota_alphas"] = cfg.hota_alphas;
    j["learning_rate"] = cfg.learning_rate;
    j["relation_activation"] = activation_name(cfg.relation_activation);
    return j.dump(2) + "\n";
}

}  // namespace smot
