#pragma once

#include <set>
#include <string>
#include <vector>

#include "smot/types.hpp"

namespace smot::metrics {

// Shared tokenization for every text metric: lowercase, punctuation to
// spaces, whitespace split. Oracles must tokenize identically.
std::vector<std::string> tokenize(const std::string& text);

// Light suffix stemmer used by meteor_lite: strips the first matching suffix
// of {ing, ed, es, s} when at least two characters remain.
std::string stem(const std::string& word);

// Geometric mean of clipped n-gram precisions (n = 1..4) with epsilon = 1e-9
// substituted for zero counts, times the brevity penalty min(1, e^{1-r/c})
// against the closest reference length (ties to the shorter reference).
double bleu4(const std::vector<std::string>& candidate,
             const std::vector<std::vector<std::string>>& references);

// LCS F-measure with beta^2 = 1.44; empty side scores 0.
double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference);

// Unigram alignment on stem classes maximizing matches then minimizing
// chunks; F_mean = 10PR/(R+9P); penalty = 0.5 (chunks/matches)^3.
double meteor_lite(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference);

// TF-IDF n-gram consensus: per video, cosine similarity against each
// reference averaged, mean over n = 1..4, x10; returns the corpus mean.
// Document frequency counts videos whose reference set contains the n-gram.
double cider(const std::vector<std::vector<std::string>>& candidates,
             const std::vector<std::vector<std::vector<std::string>>>& references);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double macro_f1 = 0.0;  // macro over labels present in gt or pred
};

// Micro-averaged exact directed-tuple matching across videos. Both sides
// empty scores 1.0 everywhere (vacuous truth).
Prf interaction_prf(
    const std::vector<std::pair<std::set<Interaction>, std::set<Interaction>>>& gt_pred_videos);

}  // namespace smot::metrics
