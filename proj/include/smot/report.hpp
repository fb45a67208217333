#pragma once

#include <string>

#include "smot/metrics_tracking.hpp"

namespace smot::metrics {

struct SemanticScores {
    double summary_b4 = 0.0;
    double summary_rl = 0.0;
    double summary_m = 0.0;
    double summary_c = 0.0;
    double instance_b4 = 0.0;
    double instance_rl = 0.0;
    double instance_m = 0.0;
    double instance_c = 0.0;
    double prec = 0.0;
    double rec = 0.0;
    double f1 = 0.0;
    double macro_f1 = 0.0;
};

enum class ReportFormat { Markdown, Csv };

// Byte-deterministic report. Tracking columns in the order
// HOTA, DetA, AssA, LocA, FN, FP, IDs, IDR, IDP, IDF1 (2 decimals,
// counts as integers); semantic columns grouped Summary B-4/R-L/M/C,
// Instance B-4/R-L/M/C, Interaction Prec/Rec/F1 (3 decimals).
std::string render_report(const TrackingScores& t, const SemanticScores& s, ReportFormat fmt);

// Ablation grid shaped like the component study: one row per fusion variant,
// tracking columns repeated verbatim across rows.
struct AblationRow {
    bool vid_fus = false;
    bool ins_fus = false;
    double hota = 0.0;
    double idf1 = 0.0;
    double summary_m = 0.0;
    double summary_c = 0.0;
    double mf1 = 0.0;  // macro interaction F1
    double rec = 0.0;  // micro interaction recall
};

std::string render_ablation(const std::vector<AblationRow>& rows, ReportFormat fmt);

}  // namespace smot::metrics
