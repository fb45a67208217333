#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smot/bundle.hpp"
#include "smot/config.hpp"
#include "smot/errors.hpp"
#include "smot/ingest.hpp"
#include "smot/pipeline.hpp"
#include "smot/synthetic.hpp"
#include "smot/tracker.hpp"
#include "smot/train.hpp"

#include <json.hpp>

namespace fs = std::filesystem;
using namespace smot;

namespace {

RunConfig load_cfg(const std::string& config_path, std::optional<std::uint64_t> seed) {
    RunConfig cfg = config_path.empty() ? make_default_config() : load_config_file(config_path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
}

synth::ScriptedInteraction parse_script(const std::string& text, int n_frames) {
    // subject:object:label[:first:last]
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    if (parts.size() != 3 && parts.size() != 5)
        throw DataError("script must be subject:object:label[:first:last], got: " + text);
    synth::ScriptedInteraction s;
    s.subject = std::stoi(parts[0]);
    s.object = std::stoi(parts[1]);
    s.label = parts[2];
    s.first_frame = parts.size() == 5 ? std::stoi(parts[3]) : 1;
    s.last_frame = parts.size() == 5 ? std::stoi(parts[4]) : n_frames;
    return s;
}

nlohmann::ordered_json vec_json(const Vec& v) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (double x : v) arr.push_back(std::round(x * 1e6) / 1e6);
    return arr;
}

int run(int argc, char** argv) {
    CLI::App app{"semantic multi-object tracking toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "config JSON path")->expected(1);
    app.add_option("--seed", seed, "override the config seed");

    // gen-synthetic
    auto* gen = app.add_subcommand("gen-synthetic", "generate a synthetic dataset");
    std::string gen_out, gen_video_id = "v1";
    int gen_tracks = 3, gen_frames = 40, gen_min_hits = 1;
    double gen_noise = 0.0, gen_dropout = 0.0, gen_feat_noise = 0.0;
    std::vector<std::string> gen_scripts;
    bool gen_no_scripts = false;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--tracks", gen_tracks, "number of tracks (1-9)");
    gen->add_option("--frames", gen_frames, "number of frames");
    gen->add_option("--noise", gen_noise, "detection position jitter sigma");
    gen->add_option("--dropout", gen_dropout, "detection drop probability");
    gen->add_option("--feat-noise", gen_feat_noise, "feature jitter sigma");
    gen->add_option("--video-id", gen_video_id, "video id");
    gen->add_option("--script", gen_scripts, "interaction subject:object:label[:first:last]");
    gen->add_flag("--no-scripts", gen_no_scripts, "generate independent walkers only");
    gen->add_option("--min-hits", gen_min_hits,
                    "min_hits written to the dataset config (short clips default to 1)");

    // track
    auto* track = app.add_subcommand("track", "run the tracker over detections");
    std::string track_data, track_out;
    track->add_option("--data", track_data, "dataset directory (one video)")->required();
    track->add_option("--out", track_out, "output tracks.csv path")->required();

    // fuse
    auto* fuse = app.add_subcommand("fuse", "fuse features into relation/context vectors");
    std::string fuse_data, fuse_out, fuse_model, fuse_tracks;
    fuse->add_option("--data", fuse_data, "dataset directory (one video)")->required();
    fuse->add_option("--tracks", fuse_tracks, "tracks.csv to fuse (defaults to gt.csv)");
    fuse->add_option("--model", fuse_model, "model bundle path");
    fuse->add_option("--out", fuse_out, "output fused.json path")->required();

    // describe
    auto* describe = app.add_subcommand("describe", "produce predicted semantics for tracks");
    std::string desc_data, desc_tracks, desc_model, desc_out;
    describe->add_option("--data", desc_data, "dataset directory (one video)")->required();
    describe->add_option("--tracks", desc_tracks, "tracks.csv (defaults to gt.csv)");
    describe->add_option("--model", desc_model, "model bundle path");
    describe->add_option("--out", desc_out, "output semantics_pred.json")->required();

    // init
    auto* init = app.add_subcommand("init", "create a seeded model bundle");
    std::string init_out;
    init->add_option("--out", init_out, "output model.bin path")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "run one training stage");
    int train_stage = 1, train_steps = 300;
    double train_lr = -1.0;
    std::string train_data, train_in, train_out, train_curve, train_adapter_out;
    std::optional<std::uint64_t> train_seed;
    train_cmd->add_option("--stage", train_stage, "stage 1|2|3")->required();
    train_cmd->add_option("--data", train_data, "dataset directory")->required();
    train_cmd->add_option("--in", train_in, "input model bundle")->required();
    train_cmd->add_option("--out", train_out, "output model bundle")->required();
    train_cmd->add_option("--curve", train_curve, "loss curve CSV path");
    train_cmd->add_option("--steps", train_steps, "gradient steps");
    train_cmd->add_option("--lr", train_lr, "learning rate (defaults to config)");
    train_cmd->add_option("--train-seed", train_seed, "stage seed (defaults to config seed)");
    train_cmd->add_option("--adapter-out", train_adapter_out, "also save the adapter alone");

    // fit-prototypes
    auto* fitp = app.add_subcommand("fit-prototypes", "fit relation prototypes on a dataset");
    std::string fitp_data, fitp_in, fitp_out;
    fitp->add_option("--data", fitp_data, "dataset directory")->required();
    fitp->add_option("--in", fitp_in, "input model bundle")->required();
    fitp->add_option("--out", fitp_out, "output model bundle")->required();

    // export-adapter
    auto* expa = app.add_subcommand("export-adapter", "save the adapter tensors alone");
    std::string expa_in, expa_out;
    expa->add_option("--in", expa_in, "model bundle path")->required();
    expa->add_option("--out", expa_out, "adapter output path")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
    std::string eval_data, eval_pred, eval_out;
    eval_cmd->add_option("--data", eval_data, "GT dataset directory")->required();
    eval_cmd->add_option("--pred", eval_pred, "predictions directory")->required();
    eval_cmd->add_option("--out", eval_out, "report output directory")->required();

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "track, fuse, describe and evaluate");
    std::string pipe_data, pipe_model, pipe_out;
    bool pipe_use_gt = false;
    pipe->add_option("--data", pipe_data, "dataset directory")->required();
    pipe->add_option("--model", pipe_model, "model bundle path");
    pipe->add_option("--out", pipe_out, "output directory")->required();
    pipe->add_flag("--use-gt-tracks", pipe_use_gt, "bypass the tracker with GT tracks");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "fusion-component ablation grid");
    std::string abl_data, abl_train, abl_model, abl_out;
    ablate->add_option("--data", abl_data, "evaluation dataset directory")->required();
    ablate->add_option("--train-data", abl_train, "prototype-fitting dataset (defaults to --data)");
    ablate->add_option("--model", abl_model, "model bundle path");
    ablate->add_option("--out", abl_out, "output markdown path")->required();

    for (CLI::App* sc : app.get_subcommands([](CLI::App*) { return true; }))
        sc->fallthrough();

    CLI11_PARSE(app, argc, argv);

    const RunConfig cfg = load_cfg(config_path, seed);

    if (*gen) {
        synth::SceneSpec spec;
        spec.video_id = gen_video_id;
        spec.n_tracks = gen_tracks;
        spec.n_frames = gen_frames;
        spec.noise_pos = gen_noise;
        spec.dropout = gen_dropout;
        spec.feat_noise = gen_feat_noise;
        if (!gen_scripts.empty()) {
            for (const std::string& s : gen_scripts)
                spec.interactions.push_back(parse_script(s, gen_frames));
        } else if (!gen_no_scripts) {
            if (gen_tracks >= 2) spec.interactions.push_back({2, 1, "follow", 1, gen_frames});
            if (gen_tracks >= 3)
                spec.interactions.push_back(
                    {3, 1, "approach", gen_frames / 4, (3 * gen_frames) / 4});
        }
        RunConfig ds_cfg = cfg;
        ds_cfg.min_hits = gen_min_hits;
        synth::write_dataset(gen_out, synth::gen_synthetic(cfg.seed, spec, cfg), ds_cfg);
        std::cout << "wrote dataset to " << gen_out << "\n";
        return 0;
    }

    if (*track) {
        const auto detections =
            ingest::parse_detections(ingest::read_file(track_data + "/detections.csv"));
        ingest::write_file(track_out, ingest::write_tracks(tracker::run_tracker(detections, cfg)));
        std::cout << "wrote " << track_out << "\n";
        return 0;
    }

    if (*fuse || *describe) {
        const std::string data = *fuse ? fuse_data : desc_data;
        const std::string tracks_path = *fuse ? fuse_tracks : desc_tracks;
        const std::string model_path = *fuse ? fuse_model : desc_model;
        const auto tracks = ingest::parse_gt_tracks(
            ingest::read_file(tracks_path.empty() ? data + "/gt.csv" : tracks_path));
        const ModelBundle bundle = model_path.empty() ? ModelBundle::init(cfg)
                                                      : ModelBundle::load(model_path, cfg);
        const auto feats = synth::compute_features(tracks, cfg.feat_dim);
        const auto fused = pipeline::fuse_scene(feats, bundle, cfg);
        if (*fuse) {
            nlohmann::ordered_json j;
            j["tracks"] = nlohmann::ordered_json::array();
            for (int id : fused.track_ids) {
                nlohmann::ordered_json t;
                t["track_id"] = id;
                t["attention"] = vec_json(fused.alphas.at(id));
                t["aggregate"] = vec_json(fused.aggregates.at(id));
                j["tracks"].push_back(t);
            }
            j["relations"] = nlohmann::ordered_json::array();
            for (const auto& q : fused.relations) {
                nlohmann::ordered_json r;
                r["subject"] = q.subject_id;
                r["object"] = q.object_id;
                r["h"] = vec_json(q.h);
                j["relations"].push_back(r);
            }
            j["video_context"] = vec_json(fused.video_context);
            j["frames_consumed"] = fused.frames_consumed;
            ingest::write_file(fuse_out, j.dump(2) + "\n");
            std::cout << "wrote " << fuse_out << "\n";
        } else {
            const auto sem = ingest::parse_semantics(
                ingest::read_file(data + "/semantics.json"), cfg);
            const SemanticRecord rec = pipeline::describe_scene(
                fused, tracks, bundle, !model_path.empty(), cfg, sem.video_id);
            ingest::write_file(desc_out, ingest::write_semantics(rec));
            std::cout << "wrote " << desc_out << "\n";
        }
        return 0;
    }

    if (*init) {
        ModelBundle::init(cfg).save(init_out);
        std::cout << "wrote " << init_out << "\n";
        return 0;
    }

    if (*train_cmd) {
        ModelBundle bundle = ModelBundle::load(train_in, cfg);
        const double lr = train_lr > 0.0 ? train_lr : cfg.learning_rate;
        const auto plan = train::StagePlan::make(train_stage, train_steps, lr,
                                                 train_seed ? *train_seed : cfg.seed);
        const auto data = train::load_stage_data(train_stage, train_data, cfg,
                                                 train_stage == 3 ? &bundle : nullptr);
        const auto result = train::run_stage(plan, bundle, data, cfg);
        bundle.save(train_out);
        if (!train_curve.empty()) ingest::write_file(train_curve, train::curve_to_csv(result));
        if (!train_adapter_out.empty()) bundle.save_adapter(train_adapter_out);
        std::cout << "stage " << train_stage << ": loss " << result.curve.front() << " -> "
                  << result.curve.back() << "\n";
        return 0;
    }

    if (*fitp) {
        ModelBundle bundle = ModelBundle::load(fitp_in, cfg);
        pipeline::fit_prototypes(bundle, fitp_data, cfg);
        bundle.save(fitp_out);
        std::cout << "wrote " << fitp_out << "\n";
        return 0;
    }

    if (*expa) {
        ModelBundle::load(expa_in, cfg).save_adapter(expa_out);
        std::cout << "wrote " << expa_out << "\n";
        return 0;
    }

    if (*eval_cmd) {
        std::vector<metrics::VideoTracks> track_pairs;
        std::vector<pipeline::VideoEval> evals;
        const auto gt_dirs = train::discover_videos(eval_data);
        for (const std::string& gt_dir : gt_dirs) {
            std::string pred_dir = eval_pred;
            if (gt_dirs.size() > 1)
                pred_dir = eval_pred + "/" + fs::path(gt_dir).filename().string();
            const auto gt = ingest::parse_gt_tracks(ingest::read_file(gt_dir + "/gt.csv"));
            const auto gt_sem =
                ingest::parse_semantics(ingest::read_file(gt_dir + "/semantics.json"), cfg);
            const auto pred =
                ingest::parse_gt_tracks(ingest::read_file(pred_dir + "/tracks.csv"));
            const auto pred_sem = ingest::parse_semantics(
                ingest::read_file(pred_dir + "/semantics_pred.json"), cfg);
            track_pairs.push_back({gt, pred});
            evals.push_back({gt, pred, gt_sem, pred_sem});
        }
        const auto tracking = metrics::evaluate_tracking(track_pairs, cfg);
        const auto semantic = pipeline::evaluate_semantics(evals, cfg);
        fs::create_directories(eval_out);
        ingest::write_file(eval_out + "/report.md",
                           metrics::render_report(tracking, semantic,
                                                  metrics::ReportFormat::Markdown));
        ingest::write_file(eval_out + "/report.csv",
                           metrics::render_report(tracking, semantic,
                                                  metrics::ReportFormat::Csv));
        std::cout << "wrote reports to " << eval_out << "\n";
        return 0;
    }

    if (*pipe) {
        std::optional<ModelBundle> bundle;
        if (!pipe_model.empty()) bundle = ModelBundle::load(pipe_model, cfg);
        const auto result = pipeline::run_pipeline(cfg, pipe_data,
                                                   bundle ? &*bundle : nullptr, pipe_use_gt);
        pipeline::write_pipeline_outputs(result, pipe_out);
        std::cout << result.report_md;
        return 0;
    }

    if (*ablate) {
        const ModelBundle bundle = abl_model.empty() ? ModelBundle::init(cfg)
                                                     : ModelBundle::load(abl_model, cfg);
        const std::string train_dir = abl_train.empty() ? abl_data : abl_train;
        const auto rows =
            pipeline::run_ablation(cfg, abl_data, train_dir, bundle, !abl_model.empty());
        const std::string md = metrics::render_ablation(rows, metrics::ReportFormat::Markdown);
        ingest::write_file(abl_out, md);
        std::cout << md;
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
