#include "smot/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "smot/errors.hpp"
#include "smot/ingest.hpp"
#include "smot/metrics_text.hpp"
#include "smot/reasoner.hpp"
#include "smot/synthetic.hpp"
#include "smot/tracker.hpp"
#include "smot/train.hpp"

namespace smot::pipeline {

namespace {

namespace fs = std::filesystem;

Vec mean_pool(const FeatureSequence& seq) {
    Vec out(seq.feats.cols, 0.0);
    for (int r = 0; r < seq.feats.rows; ++r)
        for (int c = 0; c < seq.feats.cols; ++c) out[c] += seq.feats(r, c);
    for (double& v : out) v /= static_cast<double>(seq.feats.rows);
    return out;
}

std::vector<const FeatureSequence*> sorted_seqs(const std::vector<FeatureSequence>& seqs) {
    std::vector<const FeatureSequence*> out;
    for (const FeatureSequence& s : seqs) out.push_back(&s);
    std::sort(out.begin(), out.end(), [](const FeatureSequence* a, const FeatureSequence* b) {
        return a->track_id < b->track_id;
    });
    return out;
}

}  // namespace

FusedScene fuse_scene(const std::vector<FeatureSequence>& seqs, const ModelBundle& bundle,
                      const RunConfig& cfg, FusionVariant variant) {
    const bool use_instance =
        variant == FusionVariant::InstanceOnly || variant == FusionVariant::Both;
    const bool use_video = variant == FusionVariant::VideoOnly || variant == FusionVariant::Both;

    FusedScene out;
    for (const FeatureSequence* s : sorted_seqs(seqs)) {
        out.track_ids.push_back(s->track_id);
        if (use_instance) {
            auto att = fusion::temporal_attention(*s, bundle.inst);
            out.aggregates[s->track_id] = std::move(att.aggregate);
            out.alphas[s->track_id] = std::move(att.alpha);
        } else {
            out.aggregates[s->track_id] = mean_pool(*s);
            out.alphas[s->track_id] =
                Vec(s->feats.rows, 1.0 / static_cast<double>(s->feats.rows));
        }
    }

    for (int a : out.track_ids)
        for (int b : out.track_ids) {
            if (a == b) continue;
            fusion::RelationQuery q;
            q.subject_id = a;
            q.object_id = b;
            q.h = fusion::relation_query(out.aggregates[a], out.aggregates[b], bundle.inst,
                                         cfg.relation_activation)
                      .h;
            out.relations.push_back(std::move(q));
        }

    out.video_context = Vec(cfg.context_dim, 0.0);
    if (use_video && !seqs.empty()) {
        const auto rows = synth::frame_feature_rows(seqs);
        if (!rows.empty()) {
            std::vector<Mat> tokens;
            for (const auto& r : rows)
                tokens.push_back(fusion::assemble_frame_tokens(r, bundle.vid));
            const auto run = fusion::video_context_run(tokens, bundle.vid);
            out.video_context = run.state.f;
            out.frames_consumed = run.state.frames_consumed;
        }
    }
    return out;
}

SemanticRecord describe_scene(const FusedScene& fused, const std::vector<Track>& tracks,
                              const ModelBundle& bundle, bool use_lm, const RunConfig& cfg,
                              const std::string& video_id) {
    SemanticRecord rec;
    rec.video_id = video_id;

    std::map<int, const Track*> by_id;
    for (const Track& t : tracks) by_id[t.track_id] = &t;

    const int end_id = reasoner::end_token_id(cfg);
    constexpr int kMaxCaption = 16;
    constexpr int kMaxSummary = 48;

    const Vec video_prefix =
        reasoner::project_prefix(bundle.proj, reasoner::PrefixKind::Video, fused.video_context);

    if (use_lm) {
        for (int id : fused.track_ids) {
            reasoner::ReasonerInput input;
            input.prefix.push_back(video_prefix);
            input.prefix.push_back(reasoner::project_prefix(
                bundle.proj, reasoner::PrefixKind::Instance, fused.aggregates.at(id)));
            const auto ids = reasoner::generate(bundle.lm, &bundle.lora, input, kMaxCaption, end_id);
            rec.instance_captions[id] = reasoner::ids_to_caption(ids, cfg);
        }
        reasoner::ReasonerInput input;
        input.prefix.push_back(video_prefix);
        for (int id : fused.track_ids)
            input.prefix.push_back(reasoner::project_prefix(
                bundle.proj, reasoner::PrefixKind::Instance, fused.aggregates.at(id)));
        for (const fusion::RelationQuery& q : fused.relations)
            input.prefix.push_back(
                reasoner::project_prefix(bundle.proj, reasoner::PrefixKind::Relation, q.h));
        const auto ids = reasoner::generate(bundle.lm, &bundle.lora, input, kMaxSummary, end_id);
        rec.summary = reasoner::ids_to_caption(ids, cfg);
    }

    const auto decoded = reasoner::template_decode(fused.relations, bundle.prototypes);
    for (const auto& [pair, label] : decoded)
        rec.interactions.insert({pair.first, pair.second, label});

    if (!use_lm) {
        for (int id : fused.track_ids) {
            const auto it = by_id.find(id);
            rec.instance_captions[id] =
                "person " + std::to_string(id) +
                (it != by_id.end() ? " " + synth::motion_phrase(*it->second) : "");
        }
        std::string summary =
            "the scene shows " + std::to_string(fused.track_ids.size()) + " people";
        for (const Interaction& x : rec.interactions)
            summary += " person " + std::to_string(x.subject_id) + " " +
                       synth::interaction_verb_phrase(x.label) + " person " +
                       std::to_string(x.object_id);
        rec.summary = summary;
    }
    return rec;
}

metrics::SemanticScores evaluate_semantics(const std::vector<VideoEval>& videos,
                                           const RunConfig& cfg) {
    using metrics::tokenize;
    metrics::SemanticScores out;

    std::vector<std::vector<std::string>> summary_cands;
    std::vector<std::vector<std::vector<std::string>>> summary_refs;
    std::vector<std::vector<std::string>> inst_cands;
    std::vector<std::vector<std::vector<std::string>>> inst_refs;
    std::vector<std::pair<std::set<Interaction>, std::set<Interaction>>> tuples;

    double s_b4 = 0.0, s_rl = 0.0, s_m = 0.0;
    double i_b4 = 0.0, i_rl = 0.0, i_m = 0.0;
    std::size_t n_inst = 0;

    for (const VideoEval& v : videos) {
        metrics::VideoTracks vt{v.gt_tracks, v.pred_tracks};
        const std::map<int, int> pred_to_gt = metrics::id_alignment(vt, cfg.clear_iou);
        std::map<int, int> gt_to_pred;
        for (const auto& [p, g] : pred_to_gt) gt_to_pred[g] = p;

        const auto sc = tokenize(v.pred.summary);
        const auto sr = tokenize(v.gt.summary);
        s_b4 += metrics::bleu4(sc, {sr});
        s_rl += metrics::rouge_l(sc, sr);
        s_m += metrics::meteor_lite(sc, sr);
        summary_cands.push_back(sc);
        summary_refs.push_back({sr});

        for (const auto& [gt_id, gt_caption] : v.gt.instance_captions) {
            std::string cand;
            const auto pit = gt_to_pred.find(gt_id);
            if (pit != gt_to_pred.end()) {
                const auto cit = v.pred.instance_captions.find(pit->second);
                if (cit != v.pred.instance_captions.end()) cand = cit->second;
            }
            const auto ct = tokenize(cand);
            const auto rt = tokenize(gt_caption);
            i_b4 += metrics::bleu4(ct, {rt});
            i_rl += metrics::rouge_l(ct, rt);
            i_m += metrics::meteor_lite(ct, rt);
            inst_cands.push_back(ct);
            inst_refs.push_back({rt});
            ++n_inst;
        }

        // predicted tuples mapped into GT id space; unmatched ids flip sign
        // so they can never collide with a GT tuple
        std::set<Interaction> mapped;
        for (const Interaction& x : v.pred.interactions) {
            Interaction y = x;
            const auto s = pred_to_gt.find(x.subject_id);
            const auto o = pred_to_gt.find(x.object_id);
            y.subject_id = s != pred_to_gt.end() ? s->second : -x.subject_id;
            y.object_id = o != pred_to_gt.end() ? o->second : -x.object_id;
            mapped.insert(y);
        }
        tuples.push_back({v.gt.interactions, mapped});
    }

    const double inv_v = videos.empty() ? 0.0 : 1.0 / static_cast<double>(videos.size());
    out.summary_b4 = s_b4 * inv_v;
    out.summary_rl = s_rl * inv_v;
    out.summary_m = s_m * inv_v;
    out.summary_c = metrics::cider(summary_cands, summary_refs);
    const double inv_i = n_inst == 0 ? 0.0 : 1.0 / static_cast<double>(n_inst);
    out.instance_b4 = i_b4 * inv_i;
    out.instance_rl = i_rl * inv_i;
    out.instance_m = i_m * inv_i;
    out.instance_c = metrics::cider(inst_cands, inst_refs);

    const metrics::Prf prf = metrics::interaction_prf(tuples);
    out.prec = prf.precision;
    out.rec = prf.recall;
    out.f1 = prf.f1;
    out.macro_f1 = prf.macro_f1;
    return out;
}

PipelineResult run_pipeline(const RunConfig& cfg, const std::string& data_dir,
                            const ModelBundle* bundle, bool use_gt_tracks,
                            FusionVariant variant) {
    const ModelBundle fallback = bundle ? ModelBundle() : ModelBundle::init(cfg);
    const ModelBundle& model = bundle ? *bundle : fallback;
    const bool use_lm = bundle != nullptr;

    PipelineResult result;
    std::vector<metrics::VideoTracks> track_pairs;
    std::vector<VideoEval> evals;

    for (const std::string& video_dir : train::discover_videos(data_dir)) {
        const auto detections =
            ingest::parse_detections(ingest::read_file(video_dir + "/detections.csv"));
        const auto gt = ingest::parse_gt_tracks(ingest::read_file(video_dir + "/gt.csv"));
        const auto gt_sem =
            ingest::parse_semantics(ingest::read_file(video_dir + "/semantics.json"), cfg);

        const std::vector<Track> tracks =
            use_gt_tracks ? gt : tracker::run_tracker(detections, cfg);
        const auto feats = synth::compute_features(tracks, cfg.feat_dim);
        const FusedScene fused = fuse_scene(feats, model, cfg, variant);
        const SemanticRecord pred =
            describe_scene(fused, tracks, model, use_lm, cfg, gt_sem.video_id);

        track_pairs.push_back({gt, tracks});
        evals.push_back({gt, tracks, gt_sem, pred});
        result.video_dirs.push_back(video_dir);
        result.tracks.push_back(tracks);
        result.predictions.push_back(pred);
    }

    result.tracking = metrics::evaluate_tracking(track_pairs, cfg);
    result.semantic = evaluate_semantics(evals, cfg);
    result.report_md =
        metrics::render_report(result.tracking, result.semantic, metrics::ReportFormat::Markdown);
    result.report_csv =
        metrics::render_report(result.tracking, result.semantic, metrics::ReportFormat::Csv);
    return result;
}

void write_pipeline_outputs(const PipelineResult& result, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const bool single = result.video_dirs.size() == 1;
    for (std::size_t i = 0; i < result.video_dirs.size(); ++i) {
        std::string dir = out_dir;
        if (!single) {
            dir = out_dir + "/" + fs::path(result.video_dirs[i]).filename().string();
            fs::create_directories(dir);
        }
        ingest::write_file(dir + "/tracks.csv", ingest::write_tracks(result.tracks[i]));
        ingest::write_file(dir + "/semantics_pred.json",
                           ingest::write_semantics(result.predictions[i]));
    }
    ingest::write_file(out_dir + "/report.md", result.report_md);
    ingest::write_file(out_dir + "/report.csv", result.report_csv);
}

void fit_prototypes(ModelBundle& bundle, const std::string& data_dir, const RunConfig& cfg,
                    FusionVariant variant) {
    std::map<std::string, Vec> sums;
    std::map<std::string, int> counts;
    for (const std::string& label : cfg.labels) {
        sums[label] = Vec(cfg.relation_dim, 0.0);
        counts[label] = 0;
    }

    for (const std::string& video_dir : train::discover_videos(data_dir)) {
        const auto feats =
            ingest::parse_features(ingest::read_file(video_dir + "/features.csv"), cfg.feat_dim);
        const auto sem =
            ingest::parse_semantics(ingest::read_file(video_dir + "/semantics.json"), cfg);
        const FusedScene fused = fuse_scene(feats, bundle, cfg, variant);
        for (const fusion::RelationQuery& q : fused.relations) {
            std::string label = "none";
            for (const Interaction& x : sem.interactions)
                if (x.subject_id == q.subject_id && x.object_id == q.object_id) label = x.label;
            axpy(1.0, q.h, sums[label]);
            counts[label] += 1;
        }
    }
    for (const std::string& label : cfg.labels) {
        if (counts[label] == 0) continue;  // seeded default stays
        bundle.prototypes[label] = vscale(1.0 / counts[label], sums[label]);
    }
}

std::vector<metrics::AblationRow> run_ablation(const RunConfig& cfg, const std::string& eval_dir,
                                               const std::string& train_dir,
                                               const ModelBundle& bundle, bool use_lm) {
    const FusionVariant variants[] = {FusionVariant::None, FusionVariant::InstanceOnly,
                                      FusionVariant::VideoOnly, FusionVariant::Both};

    // tracking is upstream of fusion: run the tracker once, reuse per row
    std::vector<metrics::VideoTracks> track_pairs;
    std::vector<std::string> video_dirs = train::discover_videos(eval_dir);
    std::vector<std::vector<Track>> all_tracks;
    std::vector<SemanticRecord> gt_sems;
    for (const std::string& video_dir : video_dirs) {
        const auto detections =
            ingest::parse_detections(ingest::read_file(video_dir + "/detections.csv"));
        const auto gt = ingest::parse_gt_tracks(ingest::read_file(video_dir + "/gt.csv"));
        gt_sems.push_back(
            ingest::parse_semantics(ingest::read_file(video_dir + "/semantics.json"), cfg));
        all_tracks.push_back(tracker::run_tracker(detections, cfg));
        track_pairs.push_back({gt, all_tracks.back()});
    }
    const metrics::TrackingScores tracking = metrics::evaluate_tracking(track_pairs, cfg);

    std::vector<metrics::AblationRow> rows;
    for (FusionVariant variant : variants) {
        ModelBundle variant_bundle = bundle;
        fit_prototypes(variant_bundle, train_dir, cfg, variant);

        std::vector<VideoEval> evals;
        for (std::size_t i = 0; i < video_dirs.size(); ++i) {
            const auto feats = synth::compute_features(all_tracks[i], cfg.feat_dim);
            const FusedScene fused = fuse_scene(feats, variant_bundle, cfg, variant);
            const SemanticRecord pred = describe_scene(fused, all_tracks[i], variant_bundle,
                                                       use_lm, cfg, gt_sems[i].video_id);
            evals.push_back({track_pairs[i].gt, all_tracks[i], gt_sems[i], pred});
        }
        const metrics::SemanticScores sem = evaluate_semantics(evals, cfg);

        metrics::AblationRow row;
        row.vid_fus =
            variant == FusionVariant::VideoOnly || variant == FusionVariant::Both;
        row.ins_fus =
            variant == FusionVariant::InstanceOnly || variant == FusionVariant::Both;
        row.hota = tracking.hota;
        row.idf1 = tracking.idf1;
        row.summary_m = sem.summary_m;
        row.summary_c = sem.summary_c;
        row.mf1 = sem.macro_f1;
        row.rec = sem.rec;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace smot::pipeline
