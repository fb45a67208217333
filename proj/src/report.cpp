#include "smot/report.hpp"

#include <cmath>
#include <cstdio>

namespace smot::metrics {

namespace {

std::string f2(double v) {
    char buf[64];
    if (std::isnan(v)) return "nan";
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string f3(double v) {
    char buf[64];
    if (std::isnan(v)) return "nan";
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

const char* kTrackingCols[] = {"HOTA", "DetA", "AssA", "LocA", "FN",
                               "FP",   "IDs",  "IDR",  "IDP",  "IDF1"};
const char* kSemanticCols[] = {"Summary B-4",  "Summary R-L",  "Summary M",
                               "Summary C",    "Instance B-4", "Instance R-L",
                               "Instance M",   "Instance C",   "Interaction Prec",
                               "Interaction Rec", "Interaction F1"};

std::vector<std::string> tracking_values(const TrackingScores& t) {
    return {f2(t.hota),
            f2(t.deta),
            f2(t.assa),
            f2(t.loca),
            std::to_string(t.fn),
            std::to_string(t.fp),
            std::to_string(t.ids),
            f2(t.idr),
            f2(t.idp),
            f2(t.idf1)};
}

std::vector<std::string> semantic_values(const SemanticScores& s) {
    return {f3(s.summary_b4), f3(s.summary_rl), f3(s.summary_m),  f3(s.summary_c),
            f3(s.instance_b4), f3(s.instance_rl), f3(s.instance_m), f3(s.instance_c),
            f3(s.prec),        f3(s.rec),         f3(s.f1)};
}

std::string md_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const std::string& c : cells) out += " " + c + " |";
    out += '\n';
    return out;
}

std::string md_rule(std::size_t n) {
    std::string out = "|";
    for (std::size_t i = 0; i < n; ++i) out += "---|";
    out += '\n';
    return out;
}

}  // namespace

std::string render_report(const TrackingScores& t, const SemanticScores& s, ReportFormat fmt) {
    const std::vector<std::string> theader(std::begin(kTrackingCols), std::end(kTrackingCols));
    const std::vector<std::string> sheader(std::begin(kSemanticCols), std::end(kSemanticCols));
    const auto tvals = tracking_values(t);
    const auto svals = semantic_values(s);

    if (fmt == ReportFormat::Csv) {
        std::string out;
        for (std::size_t i = 0; i < theader.size(); ++i) out += (i ? "," : "") + theader[i];
        for (const std::string& h : sheader) out += "," + h;
        out += '\n';
        for (std::size_t i = 0; i < tvals.size(); ++i) out += (i ? "," : "") + tvals[i];
        for (const std::string& v : svals) out += "," + v;
        out += '\n';
        return out;
    }

    std::string out = "# Report\n\n## Tracking\n\n";
    out += md_row(theader);
    out += md_rule(theader.size());
    out += md_row(tvals);
    out += "\n## Semantics\n\n";
    out += md_row(sheader);
    out += md_rule(sheader.size());
    out += md_row(svals);
    out += "\n(Interaction macro-F1: " + f3(s.macro_f1) + ")\n";
    return out;
}

std::string render_ablation(const std::vector<AblationRow>& rows, ReportFormat fmt) {
    const std::vector<std::string> header = {"Vid-Fus", "Ins-Fus", "HOTA",  "IDF1",
                                             "METEOR",  "CIDEr",   "mF1",   "Rec"};
    auto cells = [](const AblationRow& r) {
        return std::vector<std::string>{r.vid_fus ? "x" : "-", r.ins_fus ? "x" : "-",
                                        f2(r.hota),            f2(r.idf1),
                                        f3(r.summary_m),       f3(r.summary_c),
                                        f3(r.mf1),             f3(r.rec)};
    };
    if (fmt == ReportFormat::Csv) {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
        out += '\n';
        for (const AblationRow& r : rows) {
            const auto c = cells(r);
            for (std::size_t i = 0; i < c.size(); ++i) out += (i ? "," : "") + c[i];
            out += '\n';
        }
        return out;
    }
    std::string out = "# Ablation\n\n";
    out += md_row(header);
    out += md_rule(header.size());
    for (const AblationRow& r : rows) out += md_row(cells(r));
    return out;
}

}  // namespace smot::metrics
