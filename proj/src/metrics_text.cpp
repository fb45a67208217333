#include "smot/metrics_text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <tuple>

namespace smot::metrics {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string stem(const std::string& word) {
    static const char* kSuffixes[] = {"ing", "ed", "es", "s"};
    for (const char* suf : kSuffixes) {
        const std::size_t n = std::string(suf).size();
        if (word.size() >= n + 2 && word.compare(word.size() - n, n, suf) == 0)
            return word.substr(0, word.size() - n);
    }
    return word;
}

namespace {

std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::string, int> out;
    if (static_cast<int>(tokens.size()) < n) return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int k = 0; k < n; ++k) {
            if (k) key += '\x1f';
            key += tokens[i + k];
        }
        out[key] += 1;
    }
    return out;
}

}  // namespace

double bleu4(const std::vector<std::string>& candidate,
             const std::vector<std::vector<std::string>>& references) {
    if (candidate.empty() || references.empty()) return 0.0;
    constexpr double kEps = 1e-9;

    double log_sum = 0.0;
    for (int n = 1; n <= 4; ++n) {
        const auto cand = ngram_counts(candidate, n);
        std::map<std::string, int> max_ref;
        for (const auto& ref : references)
            for (const auto& [gram, count] : ngram_counts(ref, n))
                max_ref[gram] = std::max(max_ref[gram], count);
        long long total = 0, clipped = 0;
        for (const auto& [gram, count] : cand) {
            total += count;
            const auto it = max_ref.find(gram);
            if (it != max_ref.end()) clipped += std::min(count, it->second);
        }
        const double p = (total > 0 && clipped > 0)
                             ? static_cast<double>(clipped) / static_cast<double>(total)
                             : kEps;
        log_sum += std::log(p);
    }

    // closest reference length, ties to the shorter
    const long long c = static_cast<long long>(candidate.size());
    long long r = static_cast<long long>(references[0].size());
    for (const auto& ref : references) {
        const long long len = static_cast<long long>(ref.size());
        const long long cur = std::llabs(len - c);
        const long long best = std::llabs(r - c);
        if (cur < best || (cur == best && len < r)) r = len;
    }
    const double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / c);
    return bp * std::exp(0.25 * log_sum);
}

double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    const std::size_t n = candidate.size(), m = reference.size();
    std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            dp[i][j] = candidate[i - 1] == reference[j - 1]
                           ? dp[i - 1][j - 1] + 1
                           : std::max(dp[i - 1][j], dp[i][j - 1]);
    const double lcs = dp[n][m];
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(n);
    const double r = lcs / static_cast<double>(m);
    constexpr double kBeta2 = 1.2 * 1.2;
    return (1.0 + kBeta2) * p * r / (r + kBeta2 * p);
}

namespace {

// Exact fewest-chunks search over maximum-cardinality stem alignments.
// Sentences are desk-scale; a node cap keeps pathological inputs bounded, in
// which case the greedy incumbent stands.
struct ChunkSearch {
    const std::vector<std::string>& cand;  // stems
    const std::vector<std::string>& ref;   // stems
    std::map<std::string, int> quota;      // per class, matches still required
    std::vector<char> ref_used;
    std::map<std::string, std::vector<int>> ref_pos;
    std::map<std::string, int> cand_remaining;  // positions i.. of each class
    int best_chunks;
    long long nodes = 0;
    static constexpr long long kMaxNodes = 500000;

    ChunkSearch(const std::vector<std::string>& c, const std::vector<std::string>& r)
        : cand(c), ref(r), ref_used(r.size(), 0), best_chunks(0) {}

    void dfs(std::size_t i, int chunks, int last_ci, int last_rj,
             std::map<std::string, int>& remaining) {
        if (chunks >= best_chunks) return;
        if (++nodes > kMaxNodes) return;
        if (i == cand.size()) {
            best_chunks = chunks;
            return;
        }
        const std::string& cls = cand[i];
        auto q = quota.find(cls);
        const bool can_match = q != quota.end() && q->second > 0;
        const bool must_match = can_match && remaining[cls] - 1 < q->second;

        if (can_match) {
            for (int j : ref_pos[cls]) {
                if (ref_used[j]) continue;
                const bool extends = last_ci == static_cast<int>(i) - 1 && last_rj == j - 1;
                ref_used[j] = 1;
                q->second -= 1;
                remaining[cls] -= 1;
                dfs(i + 1, chunks + (extends ? 0 : 1), static_cast<int>(i), j, remaining);
                remaining[cls] += 1;
                q->second += 1;
                ref_used[j] = 0;
            }
        }
        if (!must_match) {
            if (q != quota.end()) remaining[cls] -= 1;
            dfs(i + 1, chunks, last_ci, last_rj, remaining);
            if (q != quota.end()) remaining[cls] += 1;
        }
    }
};

}  // namespace

double meteor_lite(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    std::vector<std::string> cs(candidate.size()), rs(reference.size());
    for (std::size_t i = 0; i < candidate.size(); ++i) cs[i] = stem(candidate[i]);
    for (std::size_t i = 0; i < reference.size(); ++i) rs[i] = stem(reference[i]);

    std::map<std::string, int> cand_count, ref_count;
    for (const auto& s : cs) cand_count[s] += 1;
    for (const auto& s : rs) ref_count[s] += 1;

    long long matches = 0;
    ChunkSearch search(cs, rs);
    for (const auto& [cls, cnt] : cand_count) {
        const auto it = ref_count.find(cls);
        if (it == ref_count.end()) continue;
        const int q = std::min(cnt, it->second);
        matches += q;
        search.quota[cls] = q;
    }
    if (matches == 0) return 0.0;

    for (std::size_t j = 0; j < rs.size(); ++j) search.ref_pos[rs[j]].push_back(static_cast<int>(j));
    for (const auto& [cls, cnt] : cand_count) search.cand_remaining[cls] = cnt;

    // greedy incumbent: match eagerly whenever quota remains (classes are
    // interchangeable, so this always completes the full quota), preferring
    // the continuation slot, else the smallest free reference position
    {
        std::map<std::string, int> quota = search.quota;
        std::vector<char> used(rs.size(), 0);
        int chunks = 0, last_ci = -10, last_rj = -10;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const std::string& cls = cs[i];
            auto q = quota.find(cls);
            if (q == quota.end() || q->second == 0) continue;
            int pick = -1;
            const int cont = last_ci == static_cast<int>(i) - 1 ? last_rj + 1 : -1;
            if (cont >= 0 && cont < static_cast<int>(rs.size()) && !used[cont] && rs[cont] == cls)
                pick = cont;
            else
                for (int j : search.ref_pos[cls])
                    if (!used[j]) {
                        pick = j;
                        break;
                    }
            chunks += !(last_ci == static_cast<int>(i) - 1 && last_rj == pick - 1);
            used[pick] = 1;
            q->second -= 1;
            last_ci = static_cast<int>(i);
            last_rj = pick;
        }
        search.best_chunks = chunks;
    }

    std::map<std::string, int> remaining = search.cand_remaining;
    search.dfs(0, 0, -10, -10, remaining);
    const int chunks = search.best_chunks;

    const double p = static_cast<double>(matches) / candidate.size();
    const double r = static_cast<double>(matches) / reference.size();
    const double f_mean = 10.0 * p * r / (r + 9.0 * p);
    const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
    const double penalty = 0.5 * frag * frag * frag;
    return f_mean * (1.0 - penalty);
}

double cider(const std::vector<std::vector<std::string>>& candidates,
             const std::vector<std::vector<std::vector<std::string>>>& references) {
    const std::size_t n_videos = candidates.size();
    if (n_videos == 0 || references.size() != n_videos) return 0.0;

    // document frequency over videos, per n
    std::vector<std::map<std::string, int>> df(5);
    for (const auto& refs : references) {
        for (int n = 1; n <= 4; ++n) {
            std::set<std::string> grams;
            for (const auto& ref : refs)
                for (const auto& [gram, unused] : ngram_counts(ref, n)) grams.insert(gram);
            for (const auto& g : grams) df[n][g] += 1;
        }
    }
    const double log_videos = std::log(static_cast<double>(n_videos));

    auto tfidf = [&](const std::vector<std::string>& tokens, int n) {
        std::map<std::string, double> vec;
        for (const auto& [gram, count] : ngram_counts(tokens, n)) {
            const auto it = df[n].find(gram);
            const double idf = log_videos - std::log(std::max(
                                                 it == df[n].end() ? 0.0
                                                                   : static_cast<double>(it->second),
                                                 1.0));
            vec[gram] = count * idf;
        }
        return vec;
    };
    auto cosine = [](const std::map<std::string, double>& a,
                     const std::map<std::string, double>& b) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (const auto& [g, v] : a) {
            na += v * v;
            const auto it = b.find(g);
            if (it != b.end()) dot += v * it->second;
        }
        for (const auto& [g, v] : b) nb += v * v;
        if (na == 0.0 || nb == 0.0) return 0.0;
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };

    double total = 0.0;
    for (std::size_t v = 0; v < n_videos; ++v) {
        double video_score = 0.0;
        for (int n = 1; n <= 4; ++n) {
            const auto cand_vec = tfidf(candidates[v], n);
            double ref_avg = 0.0;
            for (const auto& ref : references[v]) ref_avg += cosine(cand_vec, tfidf(ref, n));
            if (!references[v].empty()) ref_avg /= static_cast<double>(references[v].size());
            video_score += ref_avg;
        }
        total += 10.0 * video_score / 4.0;
    }
    return total / static_cast<double>(n_videos);
}

Prf interaction_prf(
    const std::vector<std::pair<std::set<Interaction>, std::set<Interaction>>>& gt_pred_videos) {
    long long tp = 0, n_gt = 0, n_pred = 0;
    std::map<std::string, std::array<long long, 3>> per_label;  // tp, gt, pred
    for (const auto& [gt, pred] : gt_pred_videos) {
        n_gt += static_cast<long long>(gt.size());
        n_pred += static_cast<long long>(pred.size());
        for (const Interaction& x : pred) {
            per_label[x.label][2] += 1;
            if (gt.count(x)) {
                ++tp;
                per_label[x.label][0] += 1;
            }
        }
        for (const Interaction& x : gt) per_label[x.label][1] += 1;
    }

    Prf out;
    if (n_gt == 0 && n_pred == 0) {
        out.precision = out.recall = out.f1 = out.macro_f1 = 1.0;
        return out;
    }
    out.precision = n_pred > 0 ? static_cast<double>(tp) / n_pred : 0.0;
    out.recall = n_gt > 0 ? static_cast<double>(tp) / n_gt : 0.0;
    out.f1 = (out.precision + out.recall) > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;

    double macro_sum = 0.0;
    int macro_n = 0;
    for (const auto& [label, counts] : per_label) {
        const auto [ltp, lgt, lpred] = std::tuple{counts[0], counts[1], counts[2]};
        if (lgt == 0 && lpred == 0) continue;
        const double p = lpred > 0 ? static_cast<double>(ltp) / lpred : 0.0;
        const double r = lgt > 0 ? static_cast<double>(ltp) / lgt : 0.0;
        macro_sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        ++macro_n;
    }
    out.macro_f1 = macro_n > 0 ? macro_sum / macro_n : 1.0;
    return out;
}

}  // namespace smot::metrics
