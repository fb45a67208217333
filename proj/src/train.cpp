#include "smot/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "smot/errors.hpp"
#include "smot/ingest.hpp"
#include "smot/rng.hpp"
#include "smot/synthetic.hpp"

namespace smot::train {

namespace {

namespace fs = std::filesystem;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Fixed concept vector per motion class, seeded from the run seed.
Vec concept_vector(int cls, const RunConfig& cfg) {
    Rng rng(cfg.seed ^ 0xC0DE ^ static_cast<std::uint64_t>(cls));
    Vec v(cfg.lm_embed_dim);
    double norm2 = 0.0;
    for (double& x : v) {
        x = rng.normal();
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

struct SceneFiles {
    std::vector<Track> gt;
    std::vector<FeatureSequence> features;
    SemanticRecord semantics;
};

SceneFiles load_scene(const std::string& dir, const RunConfig& cfg) {
    SceneFiles s;
    s.gt = ingest::parse_gt_tracks(ingest::read_file(dir + "/gt.csv"));
    s.features = ingest::parse_features(ingest::read_file(dir + "/features.csv"), cfg.feat_dim);
    s.semantics = ingest::parse_semantics(ingest::read_file(dir + "/semantics.json"), cfg);
    return s;
}

// Stage-3 prefix construction mirrors the inference pipeline: instance
// samples use [video, instance], the summary sample uses the full ordering
// [video, every track, every ordered pair].
void build_stage3_samples(const SceneFiles& scene, const RunConfig& cfg,
                          const ModelBundle& bundle, std::vector<Stage3Sample>& out) {
    std::vector<const FeatureSequence*> seqs;
    for (const FeatureSequence& s : scene.features) seqs.push_back(&s);
    std::sort(seqs.begin(), seqs.end(), [](const FeatureSequence* a, const FeatureSequence* b) {
        return a->track_id < b->track_id;
    });

    std::map<int, Vec> agg;
    for (const FeatureSequence* s : seqs)
        agg[s->track_id] = fusion::temporal_attention(*s, bundle.inst).aggregate;

    const auto rows = synth::frame_feature_rows(scene.features);
    std::vector<Mat> tokens;
    for (const auto& r : rows) tokens.push_back(fusion::assemble_frame_tokens(r, bundle.vid));
    const Vec video_f = tokens.empty() ? bundle.vid.f0
                                       : fusion::video_context_run(tokens, bundle.vid).state.f;

    for (const FeatureSequence* s : seqs) {
        const auto cap = scene.semantics.instance_captions.find(s->track_id);
        if (cap == scene.semantics.instance_captions.end()) continue;
        Stage3Sample sample;
        sample.prefix_sources.push_back({reasoner::PrefixKind::Video, video_f});
        sample.prefix_sources.push_back({reasoner::PrefixKind::Instance, agg[s->track_id]});
        sample.targets = reasoner::caption_to_ids(cap->second, cfg);
        sample.targets.push_back(reasoner::end_token_id(cfg));
        out.push_back(std::move(sample));
    }

    Stage3Sample summary;
    summary.prefix_sources.push_back({reasoner::PrefixKind::Video, video_f});
    for (const FeatureSequence* s : seqs)
        summary.prefix_sources.push_back({reasoner::PrefixKind::Instance, agg[s->track_id]});
    for (const FeatureSequence* a : seqs)
        for (const FeatureSequence* b : seqs) {
            if (a->track_id == b->track_id) continue;
            const Vec h = fusion::relation_query(agg[a->track_id], agg[b->track_id], bundle.inst,
                                                 cfg.relation_activation)
                              .h;
            summary.prefix_sources.push_back({reasoner::PrefixKind::Relation, h});
        }
    summary.targets = reasoner::caption_to_ids(scene.semantics.summary, cfg);
    summary.targets.push_back(reasoner::end_token_id(cfg));
    out.push_back(std::move(summary));
}

}  // namespace

StagePlan StagePlan::make(int stage, int steps, double lr, std::uint64_t seed) {
    if (stage < 1 || stage > 3) throw DataError("stage must be 1, 2 or 3");
    StagePlan p;
    p.stage = stage;
    p.steps = steps;
    p.learning_rate = lr;
    p.seed = seed;
    switch (stage) {
        case 1: p.frozen_groups = {"toylm_base", "lora"}; break;
        case 2: p.frozen_groups = {"projector", "toylm_base", "lora"}; break;
        case 3: p.frozen_groups = {"fusion_instance", "fusion_video", "toylm_base"}; break;
    }
    return p;
}

std::vector<std::string> StagePlan::trainable_groups() const {
    std::vector<std::string> out;
    for (const std::string& g : bundle_group_names()) {
        if (g == "prototypes") continue;  // fitted, never gradient-trained
        if (!frozen_groups.count(g)) out.push_back(g);
    }
    return out;
}

void sgd_step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
              double lr) {
    if (params.size() != grads.size()) throw DataError("sgd_step: tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size != grads[i].size) throw DataError("sgd_step: shape mismatch");
        for (std::size_t k = 0; k < grads[i].size; ++k)
            if (!std::isfinite(grads[i].data[k]))
                throw NumericError("non-finite gradient in " + grads[i].name);
        for (std::size_t k = 0; k < params[i].size; ++k)
            params[i].data[k] -= lr * grads[i].data[k];
    }
}

namespace {

struct Grads {
    ModelBundle g;
    // throwaway stage-2 head
    Vec head_w;
    double head_b = 0.0;
};

double stage1_pass(const StageData& data, ModelBundle& bundle, ModelBundle& grads) {
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(data.s1.size());
    for (const Stage1Sample& sample : data.s1) {
        const auto att = fusion::temporal_attention(sample.seq, bundle.inst);
        const Vec y = reasoner::project_prefix(bundle.proj, reasoner::PrefixKind::Instance,
                                               att.aggregate);
        const double inv_e = 1.0 / static_cast<double>(y.size());
        Vec dy(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double r = y[i] - sample.target_vec[i];
            total += r * r * inv_e * inv_n;
            dy[i] = 2.0 * r * inv_e * inv_n;
        }
        const Vec dagg = reasoner::project_prefix_backward(
            bundle.proj, reasoner::PrefixKind::Instance, att.aggregate, dy, grads.proj);
        fusion::temporal_attention_backward(sample.seq, bundle.inst, att, dagg, {}, grads.inst);
    }
    return total;
}

double stage2_pass(const StageData& data, ModelBundle& bundle, ModelBundle& grads, Vec& head_w,
                   double& head_b, Vec& ghead_w, double& ghead_b, const RunConfig& cfg) {
    double total = 0.0;
    std::size_t n_pairs = 0;
    for (const Stage2Scene& scene : data.s2) n_pairs += scene.pairs.size();
    if (n_pairs == 0) throw DataError("stage 2 dataset has no pairs");
    const double inv_n = 1.0 / static_cast<double>(n_pairs);

    for (const Stage2Scene& scene : data.s2) {
        std::vector<fusion::TemporalAttention> atts;
        for (const FeatureSequence& s : scene.seqs)
            atts.push_back(fusion::temporal_attention(s, bundle.inst));

        std::vector<Mat> tokens;
        for (const auto& rows : scene.frame_rows)
            tokens.push_back(fusion::assemble_frame_tokens(rows, bundle.vid));
        const auto run = fusion::video_context_run(tokens, bundle.vid);
        const Vec& f_video = run.state.f;

        const int d = cfg.feat_dim;
        const int c = cfg.context_dim;
        std::vector<Vec> dagg(scene.seqs.size(), Vec(d, 0.0));
        Vec df_video(c, 0.0);

        for (const Stage2Scene::Pair& pair : scene.pairs) {
            const Vec& fi = atts[pair.subject_idx].aggregate;
            const Vec& fj = atts[pair.object_idx].aggregate;
            double logit = head_b;
            for (int i = 0; i < d; ++i) logit += head_w[i] * fi[i];
            for (int i = 0; i < d; ++i) logit += head_w[d + i] * fj[i];
            for (int i = 0; i < c; ++i) logit += head_w[2 * d + i] * f_video[i];

            const double y = pair.interacting ? 1.0 : -1.0;
            // log(1 + exp(-y*logit)) via the stable softplus form
            const double m = -y * logit;
            total += (m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m))) * inv_n;
            const double dlogit = -y * sigmoid(-y * logit) * inv_n;

            ghead_b += dlogit;
            for (int i = 0; i < d; ++i) {
                ghead_w[i] += dlogit * fi[i];
                ghead_w[d + i] += dlogit * fj[i];
                dagg[pair.subject_idx][i] += dlogit * head_w[i];
                dagg[pair.object_idx][i] += dlogit * head_w[d + i];
            }
            for (int i = 0; i < c; ++i) {
                ghead_w[2 * d + i] += dlogit * f_video[i];
                df_video[i] += dlogit * head_w[2 * d + i];
            }
        }

        for (std::size_t i = 0; i < scene.seqs.size(); ++i)
            fusion::temporal_attention_backward(scene.seqs[i], bundle.inst, atts[i], dagg[i], {},
                                                grads.inst);
        std::vector<Mat> dframes;
        fusion::video_context_run_backward(run, bundle.vid, df_video, grads.vid, &dframes);
        for (std::size_t f = 0; f < scene.frame_rows.size(); ++f)
            fusion::assemble_frame_tokens_backward(scene.frame_rows[f], bundle.vid, dframes[f],
                                                   grads.vid, nullptr);
    }
    return total;
}

double stage3_pass(const StageData& data, ModelBundle& bundle, ModelBundle& grads) {
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(data.s3.size());
    for (const Stage3Sample& sample : data.s3) {
        reasoner::ReasonerInput input;
        for (const auto& [kind, src] : sample.prefix_sources)
            input.prefix.push_back(reasoner::project_prefix(bundle.proj, kind, src));
        std::vector<int> in_tokens(sample.targets.begin(), sample.targets.end() - 1);
        const auto fwd = reasoner::lm_forward(bundle.lm, &bundle.lora, input, in_tokens);
        total += reasoner::clm_loss(fwd.logits, sample.targets) * inv_n;

        Mat dlogits = reasoner::clm_loss_backward(fwd.logits, sample.targets);
        for (double& v : dlogits.a) v *= inv_n;
        const auto dprefix =
            reasoner::lm_backward(bundle.lm, &bundle.lora, fwd, dlogits, grads.lm, &grads.lora);
        for (std::size_t i = 0; i < dprefix.size(); ++i)
            reasoner::project_prefix_backward(bundle.proj, sample.prefix_sources[i].first,
                                              sample.prefix_sources[i].second, dprefix[i],
                                              grads.proj);
    }
    return total;
}

}  // namespace

StageResult run_stage(const StagePlan& plan, ModelBundle& bundle, const StageData& data,
                      const RunConfig& cfg) {
    if (plan.stage != data.kind)
        throw DataError("run_stage: plan stage " + std::to_string(plan.stage) +
                        " does not match dataset kind " + std::to_string(data.kind));
    if ((plan.stage == 1 && data.s1.empty()) || (plan.stage == 2 && data.s2.empty()) ||
        (plan.stage == 3 && data.s3.empty()))
        throw DataError("run_stage: empty dataset");

    // throwaway stage-2 head, seeded by the plan
    Vec head_w;
    double head_b = 0.0;
    if (plan.stage == 2) {
        Rng rng(plan.seed ^ 0x51EAD);
        head_w.resize(2 * cfg.feat_dim + cfg.context_dim);
        const double bound = 1.0 / std::sqrt(static_cast<double>(head_w.size()));
        for (double& v : head_w) v = rng.uniform(-bound, bound);
    }

    const std::vector<std::string> trainable = plan.trainable_groups();
    StageResult result;
    for (int step = 0; step <= plan.steps; ++step) {
        ModelBundle grads = ModelBundle::shaped(cfg);
        // grad buffers must start at zero; shaped() zeroes all but the
        // norm gain and lora A, which init non-zero
        for (TensorRef& t : grads.tensors())
            for (std::size_t i = 0; i < t.size; ++i) t.data[i] = 0.0;

        Vec ghead_w(head_w.size(), 0.0);
        double ghead_b = 0.0;

        double loss = 0.0;
        switch (plan.stage) {
            case 1: loss = stage1_pass(data, bundle, grads); break;
            case 2:
                loss = stage2_pass(data, bundle, grads, head_w, head_b, ghead_w, ghead_b, cfg);
                break;
            case 3: loss = stage3_pass(data, bundle, grads); break;
        }
        result.curve.push_back(loss);
        if (step == plan.steps) break;

        for (const std::string& group : trainable)
            sgd_step(bundle.group_tensors(group), grads.group_tensors(group), plan.learning_rate);
        if (plan.stage == 2) {
            for (std::size_t i = 0; i < head_w.size(); ++i)
                head_w[i] -= plan.learning_rate * ghead_w[i];
            head_b -= plan.learning_rate * ghead_b;
        }
    }
    return result;
}

std::vector<std::string> discover_videos(const std::string& dir) {
    if (fs::exists(fs::path(dir) / "detections.csv")) return {dir};
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) throw DataError("dataset directory missing: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "detections.csv"))
            out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw DataError("no videos found under: " + dir);
    return out;
}

StageData load_stage_data(int stage, const std::string& dir, const RunConfig& cfg,
                          const ModelBundle* bundle_for_stage3) {
    StageData data;
    data.kind = stage;
    for (const std::string& video_dir : discover_videos(dir)) {
        const SceneFiles scene = load_scene(video_dir, cfg);
        if (stage == 1) {
            std::map<int, const Track*> by_id;
            for (const Track& t : scene.gt) by_id[t.track_id] = &t;
            for (const FeatureSequence& s : scene.features) {
                const auto it = by_id.find(s.track_id);
                if (it == by_id.end()) continue;
                Stage1Sample sample;
                sample.seq = s;
                sample.target_vec = concept_vector(synth::motion_class(*it->second), cfg);
                data.s1.push_back(std::move(sample));
            }
        } else if (stage == 2) {
            Stage2Scene sc;
            sc.seqs = scene.features;
            std::sort(sc.seqs.begin(), sc.seqs.end(),
                      [](const FeatureSequence& a, const FeatureSequence& b) {
                          return a.track_id < b.track_id;
                      });
            sc.frame_rows = synth::frame_feature_rows(sc.seqs);
            for (std::size_t i = 0; i < sc.seqs.size(); ++i)
                for (std::size_t j = 0; j < sc.seqs.size(); ++j) {
                    if (i == j) continue;
                    Stage2Scene::Pair p;
                    p.subject_idx = static_cast<int>(i);
                    p.object_idx = static_cast<int>(j);
                    p.interacting = false;
                    for (const Interaction& x : scene.semantics.interactions)
                        if (x.subject_id == sc.seqs[i].track_id &&
                            x.object_id == sc.seqs[j].track_id)
                            p.interacting = true;
                    sc.pairs.push_back(p);
                }
            if (!sc.pairs.empty() && !sc.frame_rows.empty()) data.s2.push_back(std::move(sc));
        } else if (stage == 3) {
            if (!bundle_for_stage3)
                throw DataError("stage-3 data needs the model bundle (fusion is frozen input)");
            build_stage3_samples(scene, cfg, *bundle_for_stage3, data.s3);
        } else {
            throw DataError("unknown stage: " + std::to_string(stage));
        }
    }
    return data;
}

std::string curve_to_csv(const StageResult& r) {
    std::string out = "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < r.curve.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.9f\n", i, r.curve[i]);
        out += buf;
    }
    return out;
}

}  // namespace smot::train
