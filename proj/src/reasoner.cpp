#include "smot/reasoner.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

#include "smot/errors.hpp"

namespace smot::reasoner {

namespace {

void init_uniform(Mat& m, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols));
    for (double& v : m.a) v = rng.uniform(-bound, bound);
}

const Mat& pick_w(const ProjectorParams& p, PrefixKind kind) {
    switch (kind) {
        case PrefixKind::Instance: return p.inst_w;
        case PrefixKind::Relation: return p.rel_w;
        case PrefixKind::Video: return p.video_w;
    }
    return p.inst_w;
}

}  // namespace

std::vector<TensorRef> ProjectorParams::tensors() {
    return {
        tensor_ref("projector.inst_w", inst_w),   tensor_ref("projector.inst_b", inst_b),
        tensor_ref("projector.rel_w", rel_w),     tensor_ref("projector.rel_b", rel_b),
        tensor_ref("projector.video_w", video_w), tensor_ref("projector.video_b", video_b),
    };
}

ProjectorParams ProjectorParams::shaped(const RunConfig& cfg) {
    ProjectorParams p;
    p.inst_w = Mat(cfg.lm_embed_dim, cfg.feat_dim);
    p.inst_b = Vec(cfg.lm_embed_dim, 0.0);
    p.rel_w = Mat(cfg.lm_embed_dim, cfg.relation_dim);
    p.rel_b = Vec(cfg.lm_embed_dim, 0.0);
    p.video_w = Mat(cfg.lm_embed_dim, cfg.context_dim);
    p.video_b = Vec(cfg.lm_embed_dim, 0.0);
    return p;
}

ProjectorParams ProjectorParams::init(const RunConfig& cfg, Rng& rng) {
    ProjectorParams p = shaped(cfg);
    init_uniform(p.inst_w, rng);
    init_uniform(p.rel_w, rng);
    init_uniform(p.video_w, rng);
    return p;
}

Vec project_prefix(const ProjectorParams& p, PrefixKind kind, const Vec& x) {
    const Mat& w = pick_w(p, kind);
    if (static_cast<int>(x.size()) != w.cols)
        throw DataError("project_prefix: input dim " + std::to_string(x.size()) +
                        " does not match projection width " + std::to_string(w.cols));
    Vec y = matvec(w, x);
    const Vec& b = kind == PrefixKind::Instance ? p.inst_b
                 : kind == PrefixKind::Relation ? p.rel_b
                                                : p.video_b;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
    return y;
}

Vec project_prefix_backward(const ProjectorParams& p, PrefixKind kind, const Vec& x,
                            const Vec& dy, ProjectorParams& gp) {
    Mat& gw = kind == PrefixKind::Instance ? gp.inst_w
            : kind == PrefixKind::Relation ? gp.rel_w
                                           : gp.video_w;
    Vec& gb = kind == PrefixKind::Instance ? gp.inst_b
            : kind == PrefixKind::Relation ? gp.rel_b
                                           : gp.video_b;
    add_outer(gw, dy, x);
    axpy(1.0, dy, gb);
    return mat_tvec(pick_w(p, kind), dy);
}

LoraAdapter LoraAdapter::create(int m, int n, int rank, double alpha, const std::string& target,
                                Rng& rng) {
    LoraAdapter ad;
    ad.a = Mat(rank, n);
    ad.b = Mat(m, rank);  // zeros: adapter starts as an exact no-op
    ad.scale = alpha / static_cast<double>(rank);
    ad.target = target;
    init_uniform(ad.a, rng);
    return ad;
}

Vec lora_apply(const LoraAdapter& ad, const Mat& w, const Vec& x) {
    if (static_cast<int>(x.size()) != w.cols || ad.a.cols != w.cols || ad.b.rows != w.rows ||
        ad.a.rows != ad.b.cols)
        throw DataError("lora_apply: shape mismatch");
    Vec y = matvec(w, x);
    const Vec ax = matvec(ad.a, x);
    const Vec bax = matvec(ad.b, ax);
    axpy(ad.scale, bax, y);
    return y;
}

Mat lora_merge(const LoraAdapter& ad, const Mat& w) {
    if (ad.a.cols != w.cols || ad.b.rows != w.rows || ad.a.rows != ad.b.cols)
        throw DataError("lora_merge: shape mismatch");
    Mat delta = matmul(ad.b, ad.a);
    Mat out = w;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += ad.scale * delta.a[i];
    return out;
}

std::vector<TensorRef> LoraSet::tensors() {
    return {
        tensor_ref("lora.q_a", q.a), tensor_ref("lora.q_b", q.b),
        tensor_ref("lora.k_a", k.a), tensor_ref("lora.k_b", k.b),
        tensor_ref("lora.v_a", v.a), tensor_ref("lora.v_b", v.b),
        tensor_ref("lora.o_a", o.a), tensor_ref("lora.o_b", o.b),
    };
}

LoraSet LoraSet::create(const RunConfig& cfg, Rng& rng) {
    const int e = cfg.lm_embed_dim;
    LoraSet s;
    s.q = LoraAdapter::create(e, e, cfg.lora_rank, cfg.lora_alpha, "wq", rng);
    s.k = LoraAdapter::create(e, e, cfg.lora_rank, cfg.lora_alpha, "wk", rng);
    s.v = LoraAdapter::create(e, e, cfg.lora_rank, cfg.lora_alpha, "wv", rng);
    s.o = LoraAdapter::create(e, e, cfg.lora_rank, cfg.lora_alpha, "wo", rng);
    return s;
}

std::vector<TensorRef> ToyLMParams::tensors() {
    return {
        tensor_ref("toylm.embed", embed), tensor_ref("toylm.pos", pos),
        tensor_ref("toylm.wq", wq),       tensor_ref("toylm.wk", wk),
        tensor_ref("toylm.wv", wv),       tensor_ref("toylm.wo", wo),
        tensor_ref("toylm.head_w", head_w), tensor_ref("toylm.head_b", head_b),
    };
}

ToyLMParams ToyLMParams::shaped(const RunConfig& cfg) {
    const int v = static_cast<int>(cfg.vocab.size());
    const int e = cfg.lm_embed_dim;
    ToyLMParams p;
    p.embed = Mat(v, e);
    p.pos = Mat(cfg.lm_max_len, e);
    p.wq = Mat(e, e);
    p.wk = Mat(e, e);
    p.wv = Mat(e, e);
    p.wo = Mat(e, e);
    p.head_w = Mat(v, e);
    p.head_b = Vec(v, 0.0);
    return p;
}

ToyLMParams ToyLMParams::init(const RunConfig& cfg, Rng& rng) {
    ToyLMParams p = shaped(cfg);
    init_uniform(p.embed, rng);
    init_uniform(p.pos, rng);
    init_uniform(p.wq, rng);
    init_uniform(p.wk, rng);
    init_uniform(p.wv, rng);
    init_uniform(p.wo, rng);
    init_uniform(p.head_w, rng);
    return p;
}

LMForward lm_forward(const ToyLMParams& lm, const LoraSet* lora, const ReasonerInput& input,
                     const std::vector<int>& tokens) {
    const int e = lm.wq.rows;
    const int vcount = lm.embed.rows;
    const int prefix_len = static_cast<int>(input.prefix.size());
    const int seq_len = prefix_len + static_cast<int>(tokens.size());
    if (prefix_len < 1) throw DataError("lm_forward: empty prefix");
    if (seq_len > lm.pos.rows)
        throw DataError("lm_forward: sequence length " + std::to_string(seq_len) +
                        " exceeds lm_max_len " + std::to_string(lm.pos.rows));
    for (int t : tokens)
        if (t < 0 || t >= vcount) throw DataError("lm_forward: token id out of vocab");

    LMForward f;
    f.prefix_len = prefix_len;
    f.tokens = tokens;
    f.wq_eff = lora ? lora_merge(lora->q, lm.wq) : lm.wq;
    f.wk_eff = lora ? lora_merge(lora->k, lm.wk) : lm.wk;
    f.wv_eff = lora ? lora_merge(lora->v, lm.wv) : lm.wv;
    f.wo_eff = lora ? lora_merge(lora->o, lm.wo) : lm.wo;

    f.x.resize(seq_len);
    for (int j = 0; j < seq_len; ++j) {
        Vec x(e);
        if (j < prefix_len) {
            if (static_cast<int>(input.prefix[j].size()) != e)
                throw DataError("lm_forward: prefix vector dim mismatch");
            x = input.prefix[j];
        } else {
            const int w = tokens[j - prefix_len];
            for (int i = 0; i < e; ++i) x[i] = lm.embed(w, i);
        }
        for (int i = 0; i < e; ++i) x[i] += lm.pos(j, i);
        f.x[j] = std::move(x);
    }

    f.q.resize(seq_len);
    f.k.resize(seq_len);
    f.v.resize(seq_len);
    for (int j = 0; j < seq_len; ++j) {
        f.q[j] = matvec(f.wq_eff, f.x[j]);
        f.k[j] = matvec(f.wk_eff, f.x[j]);
        f.v[j] = matvec(f.wv_eff, f.x[j]);
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(e));
    f.attn.resize(seq_len);
    f.attn_out.resize(seq_len);
    f.hidden.resize(seq_len);
    for (int i = 0; i < seq_len; ++i) {
        Vec scores(i + 1);
        for (int j = 0; j <= i; ++j) scores[j] = dot(f.q[i], f.k[j]) * scale;
        f.attn[i] = softmax(scores);
        Vec ao(e, 0.0);
        for (int j = 0; j <= i; ++j) axpy(f.attn[i][j], f.v[j], ao);
        f.attn_out[i] = std::move(ao);
        f.hidden[i] = vadd(f.x[i], matvec(f.wo_eff, f.attn_out[i]));
    }

    const int n_pred = static_cast<int>(tokens.size()) + 1;
    f.logits = Mat(n_pred, vcount);
    for (int r = 0; r < n_pred; ++r) {
        const Vec& h = f.hidden[prefix_len - 1 + r];
        for (int t = 0; t < vcount; ++t) {
            double acc = lm.head_b[t];
            for (int i = 0; i < e; ++i) acc += lm.head_w(t, i) * h[i];
            f.logits(r, t) = acc;
        }
    }
    return f;
}

double clm_loss(const Mat& logits, const std::vector<int>& targets) {
    assert(static_cast<int>(targets.size()) == logits.rows);
    assert(!targets.empty());
    double total = 0.0;
    for (int r = 0; r < logits.rows; ++r) {
        const int t = targets[r];
        assert(t >= 0 && t < logits.cols);
        double mx = logits(r, 0);
        for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(r, c));
        double denom = 0.0;
        for (int c = 0; c < logits.cols; ++c) denom += std::exp(logits(r, c) - mx);
        total += -(logits(r, t) - mx - std::log(denom));
    }
    return total / static_cast<double>(targets.size());
}

Mat clm_loss_backward(const Mat& logits, const std::vector<int>& targets) {
    Mat dlogits(logits.rows, logits.cols);
    const double inv_l = 1.0 / static_cast<double>(targets.size());
    for (int r = 0; r < logits.rows; ++r) {
        Vec row(logits.cols);
        for (int c = 0; c < logits.cols; ++c) row[c] = logits(r, c);
        const Vec p = softmax(row);
        for (int c = 0; c < logits.cols; ++c) dlogits(r, c) = p[c] * inv_l;
        dlogits(r, targets[r]) -= inv_l;
    }
    return dlogits;
}

std::vector<Vec> lm_backward(const ToyLMParams& lm, const LoraSet* lora, const LMForward& fwd,
                             const Mat& dlogits, ToyLMParams& gbase, LoraSet* glora) {
    const int e = lm.wq.rows;
    const int prefix_len = fwd.prefix_len;
    const int seq_len = prefix_len + static_cast<int>(fwd.tokens.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(e));

    std::vector<Vec> dhidden(seq_len, Vec(e, 0.0));
    for (int r = 0; r < dlogits.rows; ++r) {
        const int pos = prefix_len - 1 + r;
        const Vec& h = fwd.hidden[pos];
        for (int t = 0; t < dlogits.cols; ++t) {
            const double g = dlogits(r, t);
            if (g == 0.0) continue;
            gbase.head_b[t] += g;
            for (int i = 0; i < e; ++i) {
                gbase.head_w(t, i) += g * h[i];
                dhidden[pos][i] += g * lm.head_w(t, i);
            }
        }
    }

    Mat dwq(e, e), dwk(e, e), dwv(e, e), dwo(e, e);
    std::vector<Vec> dx(seq_len, Vec(e, 0.0));
    std::vector<Vec> dq(seq_len, Vec(e, 0.0));
    std::vector<Vec> dk(seq_len, Vec(e, 0.0));
    std::vector<Vec> dv(seq_len, Vec(e, 0.0));

    for (int i = 0; i < seq_len; ++i) {
        axpy(1.0, dhidden[i], dx[i]);
        // hidden_i = x_i + wo_eff attn_out_i
        add_outer(dwo, dhidden[i], fwd.attn_out[i]);
        const Vec dao = mat_tvec(fwd.wo_eff, dhidden[i]);

        Vec dattn(i + 1, 0.0);
        for (int j = 0; j <= i; ++j) {
            dattn[j] = dot(dao, fwd.v[j]);
            axpy(fwd.attn[i][j], dao, dv[j]);
        }
        double inner = 0.0;
        for (int j = 0; j <= i; ++j) inner += fwd.attn[i][j] * dattn[j];
        for (int j = 0; j <= i; ++j) {
            const double ds = fwd.attn[i][j] * (dattn[j] - inner) * scale;
            axpy(ds, fwd.k[j], dq[i]);
            axpy(ds, fwd.q[i], dk[j]);
        }
    }

    for (int j = 0; j < seq_len; ++j) {
        add_outer(dwq, dq[j], fwd.x[j]);
        add_outer(dwk, dk[j], fwd.x[j]);
        add_outer(dwv, dv[j], fwd.x[j]);
        axpy(1.0, mat_tvec(fwd.wq_eff, dq[j]), dx[j]);
        axpy(1.0, mat_tvec(fwd.wk_eff, dk[j]), dx[j]);
        axpy(1.0, mat_tvec(fwd.wv_eff, dv[j]), dx[j]);
    }

    // effective-weight gradients split into base and adapter parts:
    // w_eff = w + scale * b a  =>  db += s * dW a^T, da += s * b^T dW
    auto apply_split = [&](const Mat& dweff, Mat& gw, const LoraAdapter* ad, LoraAdapter* gad) {
        for (std::size_t i = 0; i < dweff.a.size(); ++i) gw.a[i] += dweff.a[i];
        if (ad && gad) {
            const Mat da = matmul(transpose(ad->b), dweff);  // r × n
            const Mat db = matmul(dweff, transpose(ad->a));  // m × r
            for (std::size_t i = 0; i < da.a.size(); ++i) gad->a.a[i] += ad->scale * da.a[i];
            for (std::size_t i = 0; i < db.a.size(); ++i) gad->b.a[i] += ad->scale * db.a[i];
        }
    };
    apply_split(dwq, gbase.wq, lora ? &lora->q : nullptr, glora ? &glora->q : nullptr);
    apply_split(dwk, gbase.wk, lora ? &lora->k : nullptr, glora ? &glora->k : nullptr);
    apply_split(dwv, gbase.wv, lora ? &lora->v : nullptr, glora ? &glora->v : nullptr);
    apply_split(dwo, gbase.wo, lora ? &lora->o : nullptr, glora ? &glora->o : nullptr);

    std::vector<Vec> dprefix(prefix_len);
    for (int j = 0; j < seq_len; ++j) {
        for (int i = 0; i < e; ++i) gbase.pos(j, i) += dx[j][i];
        if (j < prefix_len) {
            dprefix[j] = dx[j];
        } else {
            const int w = fwd.tokens[j - prefix_len];
            for (int i = 0; i < e; ++i) gbase.embed(w, i) += dx[j][i];
        }
    }
    return dprefix;
}

std::vector<int> generate(const ToyLMParams& lm, const LoraSet* lora, const ReasonerInput& input,
                          int max_len, int end_token_id) {
    std::vector<int> tokens;
    const int room = lm.pos.rows - static_cast<int>(input.prefix.size()) - 1;
    const int limit = std::min(max_len, std::max(room, 0));
    for (int step = 0; step < limit; ++step) {
        const LMForward f = lm_forward(lm, lora, input, tokens);
        const int r = f.logits.rows - 1;
        int best = 0;
        double best_v = f.logits(r, 0);
        for (int t = 1; t < f.logits.cols; ++t) {
            if (f.logits(r, t) > best_v) {
                best_v = f.logits(r, t);
                best = t;
            }
        }
        if (best == end_token_id) break;
        tokens.push_back(best);
    }
    return tokens;
}

std::vector<std::pair<std::pair<int, int>, std::string>> template_decode(
    const std::vector<fusion::RelationQuery>& queries,
    const std::map<std::string, Vec>& prototypes) {
    if (prototypes.empty()) throw DataError("template_decode: no prototypes");
    std::vector<std::pair<std::pair<int, int>, std::string>> out;
    for (const fusion::RelationQuery& q : queries) {
        std::string best_label;
        double best_d2 = 0.0;
        bool first = true;
        for (const auto& [label, proto] : prototypes) {
            if (proto.size() != q.h.size())
                throw DataError("template_decode: prototype dim mismatch for " + label);
            double d2 = 0.0;
            for (std::size_t i = 0; i < proto.size(); ++i) {
                const double d = proto[i] - q.h[i];
                d2 += d * d;
            }
            // map iterates labels in sorted order, so strict < keeps the
            // lexicographically smallest label on ties
            if (first || d2 < best_d2) {
                best_d2 = d2;
                best_label = label;
                first = false;
            }
        }
        if (best_label != "none") out.push_back({{q.subject_id, q.object_id}, best_label});
    }
    return out;
}

std::vector<int> caption_to_ids(const std::string& caption, const RunConfig& cfg) {
    std::vector<int> ids;
    std::istringstream ss(caption);
    std::string word;
    while (ss >> word) {
        std::transform(word.begin(), word.end(), word.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        const auto it = std::find(cfg.vocab.begin(), cfg.vocab.end(), word);
        if (it == cfg.vocab.end()) throw DataError("caption word not in vocab: " + word);
        ids.push_back(static_cast<int>(it - cfg.vocab.begin()));
    }
    return ids;
}

std::string ids_to_caption(const std::vector<int>& ids, const RunConfig& cfg) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= static_cast<int>(cfg.vocab.size()))
            throw DataError("token id out of vocab");
        if (i) out += ' ';
        out += cfg.vocab[ids[i]];
    }
    return out;
}

int end_token_id(const RunConfig& cfg) {
    const auto it = std::find(cfg.vocab.begin(), cfg.vocab.end(), RunConfig::end_token());
    if (it == cfg.vocab.end()) throw DataError("vocab missing end token");
    return static_cast<int>(it - cfg.vocab.begin());
}

}  // namespace smot::reasoner
