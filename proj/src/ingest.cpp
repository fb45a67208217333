#include "smot/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "smot/errors.hpp"

namespace smot::ingest {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        if (cur.back() == '\r') cur.pop_back();
        lines.push_back(cur);
    }
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    for (std::string& f : fields) {
        std::size_t b = f.find_first_not_of(" \t");
        std::size_t e = f.find_last_not_of(" \t");
        f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
    }
    return fields;
}

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t") == std::string::npos;
}

double parse_real(const std::string& s, const char* what, std::size_t line_no) {
    if (s.empty()) throw ParseError(std::string("empty ") + what, line_no);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string("non-numeric ") + what + ": '" + s + "'", line_no);
    }
    if (pos != s.size())
        throw ParseError(std::string("non-numeric ") + what + ": '" + s + "'", line_no);
    if (!std::isfinite(v))
        throw ParseError(std::string("non-finite ") + what + ": '" + s + "'", line_no);
    return v;
}

long parse_int(const std::string& s, const char* what, std::size_t line_no) {
    if (s.empty()) throw ParseError(std::string("empty ") + what, line_no);
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string("non-integer ") + what + ": '" + s + "'", line_no);
    }
    if (pos != s.size())
        throw ParseError(std::string("non-integer ") + what + ": '" + s + "'", line_no);
    return v;
}

struct Row {
    int frame;
    int id;
    BoundedBox box;
};

Row parse_box_row(const std::vector<std::string>& f, std::size_t line_no, bool conf_required) {
    if (f.size() < (conf_required ? 7u : 6u))
        throw ParseError("expected frame,id,x,y,w,h" + std::string(conf_required ? ",conf" : "[,conf]"),
                         line_no);
    Row r;
    r.frame = static_cast<int>(parse_int(f[0], "frame", line_no));
    r.id = static_cast<int>(parse_int(f[1], "id", line_no));
    if (r.frame < 1) throw ParseError("frame must be >= 1", line_no);
    r.box.frame = r.frame;
    r.box.x = parse_real(f[2], "x", line_no);
    r.box.y = parse_real(f[3], "y", line_no);
    r.box.w = parse_real(f[4], "w", line_no);
    r.box.h = parse_real(f[5], "h", line_no);
    if (r.box.w <= 0.0 || r.box.h <= 0.0) throw ParseError("degenerate extent", line_no);
    r.box.conf = f.size() >= 7 && !f[6].empty() ? parse_real(f[6], "conf", line_no) : 1.0;
    if (r.box.conf < 0.0 || r.box.conf > 1.0)
        throw ParseError("confidence outside [0,1]", line_no);
    return r;
}

char* fmt6(char* buf, std::size_t n, double v) {
    std::snprintf(buf, n, "%.6f", v);
    return buf;
}

}  // namespace

std::vector<DetectionFrame> parse_detections(const std::string& text) {
    std::map<int, DetectionFrame> by_frame;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_blank(lines[i])) continue;
        const Row r = parse_box_row(split_csv(lines[i]), i + 1, /*conf_required=*/true);
        if (r.id < -1) throw ParseError("id must be >= -1", i + 1);
        DetectionFrame& df = by_frame[r.frame];
        df.frame = r.frame;
        df.detections.emplace_back(r.box, r.id);
    }
    std::vector<DetectionFrame> out;
    out.reserve(by_frame.size());
    for (auto& [frame, df] : by_frame) out.push_back(std::move(df));
    return out;
}

std::vector<Track> parse_gt_tracks(const std::string& text) {
    std::map<int, Track> by_id;
    std::set<std::pair<int, int>> seen;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_blank(lines[i])) continue;
        const Row r = parse_box_row(split_csv(lines[i]), i + 1, /*conf_required=*/false);
        if (r.id < 1) throw ParseError("track id must be >= 1", i + 1);
        if (!seen.insert({r.id, r.frame}).second)
            throw ParseError("duplicate (id=" + std::to_string(r.id) + ", frame=" +
                                 std::to_string(r.frame) + ")",
                             i + 1);
        Track& t = by_id[r.id];
        t.track_id = r.id;
        t.boxes.push_back(r.box);
    }
    std::vector<Track> out;
    out.reserve(by_id.size());
    for (auto& [id, t] : by_id) {
        std::sort(t.boxes.begin(), t.boxes.end(),
                  [](const BoundedBox& a, const BoundedBox& b) { return a.frame < b.frame; });
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<FeatureSequence> parse_features(const std::string& text, int expected_dim) {
    const auto lines = split_lines(text);
    std::size_t first = 0;
    while (first < lines.size() && is_blank(lines[first])) ++first;
    if (first == lines.size()) return {};

    const auto header = split_csv(lines[first]);
    if (header.size() < 3 || header[0] != "track_id" || header[1] != "frame")
        throw ParseError("feature header must be track_id,frame,f0,...", first + 1);
    const int dim = static_cast<int>(header.size()) - 2;
    for (int k = 0; k < dim; ++k) {
        if (header[2 + k] != "f" + std::to_string(k))
            throw ParseError("feature header column " + std::to_string(k + 2) +
                                 " must be f" + std::to_string(k),
                             first + 1);
    }
    if (expected_dim >= 0 && dim != expected_dim)
        throw ParseError("feature dimension mismatch: file has d=" + std::to_string(dim) +
                             " but config expects d=" + std::to_string(expected_dim),
                         first + 1);

    struct RowF {
        int frame;
        Vec feats;
    };
    std::map<int, std::vector<RowF>> by_id;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (is_blank(lines[i])) continue;
        const auto f = split_csv(lines[i]);
        if (static_cast<int>(f.size()) != dim + 2)
            throw ParseError("inconsistent column count: expected " + std::to_string(dim + 2) +
                                 ", got " + std::to_string(f.size()),
                             i + 1);
        const int id = static_cast<int>(parse_int(f[0], "track_id", i + 1));
        const int frame = static_cast<int>(parse_int(f[1], "frame", i + 1));
        if (id < 1) throw ParseError("track_id must be >= 1", i + 1);
        if (frame < 1) throw ParseError("frame must be >= 1", i + 1);
        RowF row;
        row.frame = frame;
        row.feats.resize(dim);
        for (int k = 0; k < dim; ++k)
            row.feats[k] = parse_real(f[2 + k], "feature", i + 1);
        by_id[id].push_back(std::move(row));
    }

    std::vector<FeatureSequence> out;
    for (auto& [id, rows] : by_id) {
        std::sort(rows.begin(), rows.end(),
                  [](const RowF& a, const RowF& b) { return a.frame < b.frame; });
        FeatureSequence seq;
        seq.track_id = id;
        seq.feats = Mat(static_cast<int>(rows.size()), dim);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r > 0 && rows[r].frame == rows[r - 1].frame)
                throw ParseError("duplicate frame " + std::to_string(rows[r].frame) +
                                 " for track " + std::to_string(id));
            seq.frames.push_back(rows[r].frame);
            for (int k = 0; k < dim; ++k) seq.feats(static_cast<int>(r), k) = rows[r].feats[k];
        }
        out.push_back(std::move(seq));
    }
    return out;
}

SemanticRecord parse_semantics(const std::string& text, const RunConfig& cfg) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("semantics JSON: ") + e.what());
    }
    auto need = [&](const char* key) {
        if (!j.contains(key)) throw ParseError(std::string("semantics JSON: missing key: ") + key);
    };
    need("video_id");
    need("summary");
    need("instances");
    need("interactions");

    SemanticRecord rec;
    try {
        rec.video_id = j.at("video_id").get<std::string>();
        rec.summary = j.at("summary").get<std::string>();
        for (const auto& inst : j.at("instances")) {
            const int id = inst.at("track_id").get<int>();
            if (id < 1) throw ParseError("semantics JSON: track_id must be >= 1");
            rec.instance_captions[id] = inst.at("caption").get<std::string>();
        }
        for (const auto& it : j.at("interactions")) {
            Interaction x;
            x.subject_id = it.at("subject").get<int>();
            x.object_id = it.at("object").get<int>();
            x.label = it.at("label").get<std::string>();
            if (x.subject_id == x.object_id)
                throw ParseError("semantics JSON: interaction subject == object (" +
                                 std::to_string(x.subject_id) + ")");
            if (std::find(cfg.labels.begin(), cfg.labels.end(), x.label) == cfg.labels.end())
                throw ParseError("unknown label: " + x.label);
            rec.interactions.insert(x);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("semantics JSON: ") + e.what());
    }
    return rec;
}

std::string write_tracks(const std::vector<Track>& tracks) {
    struct RowOut {
        int frame, id;
        const BoundedBox* box;
    };
    std::vector<RowOut> rows;
    for (const Track& t : tracks)
        for (const BoundedBox& b : t.boxes) rows.push_back({b.frame, t.track_id, &b});
    std::sort(rows.begin(), rows.end(), [](const RowOut& a, const RowOut& b) {
        return std::tie(a.frame, a.id) < std::tie(b.frame, b.id);
    });
    std::string out;
    char buf[64];
    for (const RowOut& r : rows) {
        out += std::to_string(r.frame);
        out += ',';
        out += std::to_string(r.id);
        for (double v : {r.box->x, r.box->y, r.box->w, r.box->h, r.box->conf}) {
            out += ',';
            out += fmt6(buf, sizeof buf, v);
        }
        out += '\n';
    }
    return out;
}

std::string write_detections(const std::vector<DetectionFrame>& frames) {
    std::string out;
    char buf[64];
    for (const DetectionFrame& df : frames) {
        for (const auto& [box, id] : df.detections) {
            out += std::to_string(df.frame);
            out += ',';
            out += std::to_string(id);
            for (double v : {box.x, box.y, box.w, box.h, box.conf}) {
                out += ',';
                out += fmt6(buf, sizeof buf, v);
            }
            out += '\n';
        }
    }
    return out;
}

std::string write_features(const std::vector<FeatureSequence>& seqs) {
    std::string out;
    char buf[64];
    if (seqs.empty()) return out;
    const int dim = seqs.front().feats.cols;
    out = "track_id,frame";
    for (int k = 0; k < dim; ++k) out += ",f" + std::to_string(k);
    out += '\n';
    for (const FeatureSequence& s : seqs) {
        for (std::size_t r = 0; r < s.frames.size(); ++r) {
            out += std::to_string(s.track_id);
            out += ',';
            out += std::to_string(s.frames[r]);
            for (int k = 0; k < dim; ++k) {
                out += ',';
                out += fmt6(buf, sizeof buf, s.feats(static_cast<int>(r), k));
            }
            out += '\n';
        }
    }
    return out;
}

std::string write_semantics(const SemanticRecord& rec) {
    // Key order is fixed (video_id, summary, instances, interactions) and
    // instances/interactions are sorted, so output bytes are stable.
    nlohmann::ordered_json j;
    j["video_id"] = rec.video_id;
    j["summary"] = rec.summary;
    j["instances"] = nlohmann::ordered_json::array();
    for (const auto& [id, caption] : rec.instance_captions) {
        nlohmann::ordered_json inst;
        inst["track_id"] = id;
        inst["caption"] = caption;
        j["instances"].push_back(inst);
    }
    j["interactions"] = nlohmann::ordered_json::array();
    for (const Interaction& x : rec.interactions) {
        nlohmann::ordered_json it;
        it["subject"] = x.subject_id;
        it["object"] = x.object_id;
        it["label"] = x.label;
        j["interactions"].push_back(it);
    }
    return j.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace smot::ingest
