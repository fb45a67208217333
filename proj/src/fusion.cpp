#include "smot/fusion.hpp"

#include <cassert>
#include <cmath>

#include "smot/errors.hpp"

namespace smot::fusion {

namespace {

void init_uniform(Mat& m, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols));
    for (double& v : m.a) v = rng.uniform(-bound, bound);
}

double act_forward(double z, RelationActivation act) {
    switch (act) {
        case RelationActivation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case RelationActivation::Relu: return z > 0.0 ? z : 0.0;
        case RelationActivation::Gelu:
            return 0.5 * z * (1.0 + std::erf(z * 0.7071067811865475244));
    }
    return 0.0;
}

double act_backward(double z, double a, RelationActivation act) {
    switch (act) {
        case RelationActivation::Sigmoid: return a * (1.0 - a);
        case RelationActivation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case RelationActivation::Gelu: {
            const double phi = std::exp(-0.5 * z * z) * 0.3989422804014326779;
            return 0.5 * (1.0 + std::erf(z * 0.7071067811865475244)) + z * phi;
        }
    }
    return 0.0;
}

}  // namespace

std::vector<TensorRef> InstanceFusionParams::tensors() {
    return {
        tensor_ref("fusion_instance.w1", w1),   tensor_ref("fusion_instance.b1", b1),
        tensor_ref("fusion_instance.w2", w2),   tensor_ref("fusion_instance.wf1", wf1),
        tensor_ref("fusion_instance.bf1", bf1), tensor_ref("fusion_instance.wf2", wf2),
        tensor_ref("fusion_instance.bf2", bf2),
    };
}

InstanceFusionParams InstanceFusionParams::shaped(const RunConfig& cfg) {
    InstanceFusionParams p;
    p.w1 = Mat(cfg.hidden_dim, cfg.feat_dim);
    p.b1 = Vec(cfg.hidden_dim, 0.0);
    p.w2 = Mat(1, cfg.hidden_dim);
    p.wf1 = Mat(cfg.hidden_dim, 2 * cfg.feat_dim);
    p.bf1 = Vec(cfg.hidden_dim, 0.0);
    p.wf2 = Mat(cfg.relation_dim, cfg.hidden_dim);
    p.bf2 = Vec(cfg.relation_dim, 0.0);
    return p;
}

InstanceFusionParams InstanceFusionParams::init(const RunConfig& cfg, Rng& rng) {
    InstanceFusionParams p = shaped(cfg);
    init_uniform(p.w1, rng);
    init_uniform(p.w2, rng);
    init_uniform(p.wf1, rng);
    init_uniform(p.wf2, rng);
    return p;
}

std::vector<TensorRef> VideoFusionParams::tensors() {
    return {
        tensor_ref("fusion_video.wtok", wtok),   tensor_ref("fusion_video.btok", btok),
        tensor_ref("fusion_video.wq", wq),       tensor_ref("fusion_video.wk", wk),
        tensor_ref("fusion_video.wv", wv),       tensor_ref("fusion_video.wo", wo),
        tensor_ref("fusion_video.gamma", gamma), tensor_ref("fusion_video.beta", beta),
        tensor_ref("fusion_video.f0", f0),
    };
}

VideoFusionParams VideoFusionParams::shaped(const RunConfig& cfg) {
    VideoFusionParams p;
    const int c = cfg.context_dim;
    p.wtok = Mat(c, cfg.feat_dim);
    p.btok = Vec(c, 0.0);
    p.wq = Mat(c, c);
    p.wk = Mat(c, c);
    p.wv = Mat(c, c);
    p.wo = Mat(c, c);
    p.gamma = Vec(c, 1.0);
    p.beta = Vec(c, 0.0);
    p.f0 = Vec(c, 0.0);
    p.heads = cfg.mha_heads;
    return p;
}

VideoFusionParams VideoFusionParams::init(const RunConfig& cfg, Rng& rng) {
    VideoFusionParams p = shaped(cfg);
    init_uniform(p.wtok, rng);
    init_uniform(p.wq, rng);
    init_uniform(p.wk, rng);
    init_uniform(p.wv, rng);
    init_uniform(p.wo, rng);
    return p;
}

TemporalAttention temporal_attention(const FeatureSequence& seq, const InstanceFusionParams& p) {
    const int n = seq.feats.rows;
    const int d = seq.feats.cols;
    const int hidden = p.w1.rows;
    assert(n >= 1);
    assert(d == p.w1.cols);

    TemporalAttention out;
    out.tanh_u = Mat(n, hidden);
    out.scores.resize(n);
    for (int k = 0; k < n; ++k) {
        for (int h = 0; h < hidden; ++h) {
            double u = p.b1[h];
            for (int c = 0; c < d; ++c) u += p.w1(h, c) * seq.feats(k, c);
            out.tanh_u(k, h) = std::tanh(u);
        }
        double s = 0.0;
        for (int h = 0; h < hidden; ++h) s += p.w2(0, h) * out.tanh_u(k, h);
        out.scores[k] = s;
    }
    out.alpha = softmax(out.scores);
    out.aggregate.assign(d, 0.0);
    for (int k = 0; k < n; ++k)
        for (int c = 0; c < d; ++c) out.aggregate[c] += out.alpha[k] * seq.feats(k, c);
    return out;
}

Mat temporal_attention_backward(const FeatureSequence& seq, const InstanceFusionParams& p,
                                const TemporalAttention& cache, const Vec& d_aggregate,
                                const Vec& d_alpha, InstanceFusionParams& gp) {
    const int n = seq.feats.rows;
    const int d = seq.feats.cols;
    const int hidden = p.w1.rows;

    Vec dalpha(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double g = d_alpha.empty() ? 0.0 : d_alpha[k];
        for (int c = 0; c < d; ++c) g += d_aggregate[c] * seq.feats(k, c);
        dalpha[k] = g;
    }
    // softmax backward: ds_k = alpha_k (dalpha_k - sum_j alpha_j dalpha_j)
    double inner = 0.0;
    for (int k = 0; k < n; ++k) inner += cache.alpha[k] * dalpha[k];
    Vec dscores(n);
    for (int k = 0; k < n; ++k) dscores[k] = cache.alpha[k] * (dalpha[k] - inner);

    Mat dfeats(n, d);
    for (int k = 0; k < n; ++k)
        for (int c = 0; c < d; ++c) dfeats(k, c) = cache.alpha[k] * d_aggregate[c];

    for (int k = 0; k < n; ++k) {
        for (int h = 0; h < hidden; ++h) {
            const double t = cache.tanh_u(k, h);
            gp.w2(0, h) += dscores[k] * t;
            const double du = dscores[k] * p.w2(0, h) * (1.0 - t * t);
            gp.b1[h] += du;
            for (int c = 0; c < d; ++c) {
                gp.w1(h, c) += du * seq.feats(k, c);
                dfeats(k, c) += p.w1(h, c) * du;
            }
        }
    }
    return dfeats;
}

RelationResult relation_query(const Vec& fi, const Vec& fj, const InstanceFusionParams& p,
                              RelationActivation act) {
    const Vec cat = concat(fi, fj);
    RelationResult out;
    out.z = matvec(p.wf1, cat);
    for (std::size_t i = 0; i < out.z.size(); ++i) out.z[i] += p.bf1[i];
    out.act.resize(out.z.size());
    for (std::size_t i = 0; i < out.z.size(); ++i) out.act[i] = act_forward(out.z[i], act);
    out.h = matvec(p.wf2, out.act);
    for (std::size_t i = 0; i < out.h.size(); ++i) out.h[i] += p.bf2[i];
    return out;
}

void relation_query_backward(const Vec& fi, const Vec& fj, const InstanceFusionParams& p,
                             const RelationResult& cache, const Vec& dh,
                             InstanceFusionParams& gp, Vec& dfi, Vec& dfj,
                             RelationActivation act) {
    const Vec cat = concat(fi, fj);
    add_outer(gp.wf2, dh, cache.act);
    axpy(1.0, dh, gp.bf2);
    Vec dact = mat_tvec(p.wf2, dh);
    Vec dz(dact.size());
    for (std::size_t i = 0; i < dz.size(); ++i)
        dz[i] = dact[i] * act_backward(cache.z[i], cache.act[i], act);
    add_outer(gp.wf1, dz, cat);
    axpy(1.0, dz, gp.bf1);
    const Vec dcat = mat_tvec(p.wf1, dz);
    const std::size_t d = fi.size();
    dfi.assign(dcat.begin(), dcat.begin() + d);
    dfj.assign(dcat.begin() + d, dcat.end());
}

Vec layer_norm(const Vec& x, const Vec& gamma, const Vec& beta) {
    const std::size_t n = x.size();
    assert(n >= 2);
    double mean = vsum(x) / static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + 1e-5);
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - mean) * inv_std * gamma[i] + beta[i];
    return out;
}

VideoStepCache video_context_step(const Vec& f_prev, const Mat& tokens,
                                  const VideoFusionParams& p) {
    const int c = static_cast<int>(p.f0.size());
    const int m = tokens.rows;
    const int heads = p.heads;
    const int dh = c / heads;
    assert(m >= 1);
    assert(tokens.cols == c);

    VideoStepCache cache;
    cache.f_prev = f_prev;
    cache.tokens = tokens;
    cache.q = matvec(p.wq, f_prev);
    cache.keys = Mat(m, c);
    cache.values = Mat(m, c);
    for (int t = 0; t < m; ++t) {
        Vec row(tokens.a.begin() + static_cast<std::size_t>(t) * c,
                tokens.a.begin() + static_cast<std::size_t>(t + 1) * c);
        const Vec k = matvec(p.wk, row);
        const Vec v = matvec(p.wv, row);
        for (int i = 0; i < c; ++i) {
            cache.keys(t, i) = k[i];
            cache.values(t, i) = v[i];
        }
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    cache.attn = Mat(heads, m);
    cache.head_out.assign(c, 0.0);
    for (int h = 0; h < heads; ++h) {
        Vec scores(m, 0.0);
        for (int t = 0; t < m; ++t) {
            double s = 0.0;
            for (int i = 0; i < dh; ++i) s += cache.q[h * dh + i] * cache.keys(t, h * dh + i);
            scores[t] = s * scale;
        }
        const Vec a = softmax(scores);
        for (int t = 0; t < m; ++t) {
            cache.attn(h, t) = a[t];
            for (int i = 0; i < dh; ++i)
                cache.head_out[h * dh + i] += a[t] * cache.values(t, h * dh + i);
        }
    }

    cache.mha = matvec(p.wo, cache.head_out);
    cache.resid = vadd(f_prev, cache.mha);

    const int n = c;
    cache.mean = vsum(cache.resid) / n;
    double var = 0.0;
    for (double v : cache.resid) var += (v - cache.mean) * (v - cache.mean);
    var /= n;
    cache.inv_std = 1.0 / std::sqrt(var + 1e-5);
    cache.xhat.resize(n);
    cache.f_next.resize(n);
    for (int i = 0; i < n; ++i) {
        cache.xhat[i] = (cache.resid[i] - cache.mean) * cache.inv_std;
        cache.f_next[i] = cache.xhat[i] * p.gamma[i] + p.beta[i];
    }
    return cache;
}

void video_context_step_backward(const VideoStepCache& cache, const VideoFusionParams& p,
                                 const Vec& df_next, VideoFusionParams& gp, Vec& df_prev,
                                 Mat& dtokens) {
    const int c = static_cast<int>(p.f0.size());
    const int m = cache.tokens.rows;
    const int heads = p.heads;
    const int dh = c / heads;

    // layer norm backward (population statistics)
    Vec dxhat(c);
    for (int i = 0; i < c; ++i) {
        gp.beta[i] += df_next[i];
        gp.gamma[i] += df_next[i] * cache.xhat[i];
        dxhat[i] = df_next[i] * p.gamma[i];
    }
    double mean_dxhat = vsum(dxhat) / c;
    double mean_dxhat_xhat = 0.0;
    for (int i = 0; i < c; ++i) mean_dxhat_xhat += dxhat[i] * cache.xhat[i];
    mean_dxhat_xhat /= c;
    Vec dresid(c);
    for (int i = 0; i < c; ++i)
        dresid[i] = cache.inv_std * (dxhat[i] - mean_dxhat - cache.xhat[i] * mean_dxhat_xhat);

    df_prev = dresid;
    const Vec& dmha = dresid;

    add_outer(gp.wo, dmha, cache.head_out);
    const Vec dhead_out = mat_tvec(p.wo, dmha);

    Vec dq(c, 0.0);
    Mat dkeys(m, c), dvalues(m, c);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int h = 0; h < heads; ++h) {
        Vec dattn(m, 0.0);
        for (int t = 0; t < m; ++t) {
            double g = 0.0;
            for (int i = 0; i < dh; ++i) {
                g += dhead_out[h * dh + i] * cache.values(t, h * dh + i);
                dvalues(t, h * dh + i) += cache.attn(h, t) * dhead_out[h * dh + i];
            }
            dattn[t] = g;
        }
        double inner = 0.0;
        for (int t = 0; t < m; ++t) inner += cache.attn(h, t) * dattn[t];
        for (int t = 0; t < m; ++t) {
            const double ds = cache.attn(h, t) * (dattn[t] - inner) * scale;
            for (int i = 0; i < dh; ++i) {
                dq[h * dh + i] += ds * cache.keys(t, h * dh + i);
                dkeys(t, h * dh + i) += ds * cache.q[h * dh + i];
            }
        }
    }

    add_outer(gp.wq, dq, cache.f_prev);
    axpy(1.0, mat_tvec(p.wq, dq), df_prev);

    dtokens = Mat(m, c);
    for (int t = 0; t < m; ++t) {
        Vec token(cache.tokens.a.begin() + static_cast<std::size_t>(t) * c,
                  cache.tokens.a.begin() + static_cast<std::size_t>(t + 1) * c);
        Vec dk(c), dv(c);
        for (int i = 0; i < c; ++i) {
            dk[i] = dkeys(t, i);
            dv[i] = dvalues(t, i);
        }
        add_outer(gp.wk, dk, token);
        add_outer(gp.wv, dv, token);
        const Vec dtok = vadd(mat_tvec(p.wk, dk), mat_tvec(p.wv, dv));
        for (int i = 0; i < c; ++i) dtokens(t, i) = dtok[i];
    }
}

VideoRun video_context_run(const std::vector<Mat>& frames, const VideoFusionParams& p) {
    if (frames.empty()) throw DataError("video_context_run: no frames");
    VideoRun run;
    Vec f = p.f0;
    for (const Mat& tokens : frames) {
        run.steps.push_back(video_context_step(f, tokens, p));
        f = run.steps.back().f_next;
    }
    run.state.f = f;
    run.state.frames_consumed = static_cast<int>(frames.size());
    return run;
}

void video_context_run_backward(const VideoRun& run, const VideoFusionParams& p,
                                const Vec& df_final, VideoFusionParams& gp,
                                std::vector<Mat>* dframes) {
    Vec df = df_final;
    if (dframes) dframes->assign(run.steps.size(), Mat());
    for (int i = static_cast<int>(run.steps.size()) - 1; i >= 0; --i) {
        Vec df_prev;
        Mat dtokens;
        video_context_step_backward(run.steps[i], p, df, gp, df_prev, dtokens);
        if (dframes) (*dframes)[i] = std::move(dtokens);
        df = std::move(df_prev);
    }
    axpy(1.0, df, gp.f0);
}

Mat assemble_frame_tokens(const std::vector<Vec>& feat_rows, const VideoFusionParams& p) {
    const int c = static_cast<int>(p.btok.size());
    Mat tokens(static_cast<int>(feat_rows.size()), c);
    for (std::size_t t = 0; t < feat_rows.size(); ++t) {
        const Vec tok = matvec(p.wtok, feat_rows[t]);
        for (int i = 0; i < c; ++i) tokens(static_cast<int>(t), i) = tok[i] + p.btok[i];
    }
    return tokens;
}

void assemble_frame_tokens_backward(const std::vector<Vec>& feat_rows,
                                    const VideoFusionParams& p, const Mat& dtokens,
                                    VideoFusionParams& gp, std::vector<Vec>* dfeat_rows) {
    const int c = dtokens.cols;
    if (dfeat_rows) dfeat_rows->assign(feat_rows.size(), Vec());
    for (std::size_t t = 0; t < feat_rows.size(); ++t) {
        Vec dtok(c);
        for (int i = 0; i < c; ++i) dtok[i] = dtokens(static_cast<int>(t), i);
        add_outer(gp.wtok, dtok, feat_rows[t]);
        axpy(1.0, dtok, gp.btok);
        if (dfeat_rows) (*dfeat_rows)[t] = mat_tvec(p.wtok, dtok);
    }
}

}  // namespace smot::fusion
