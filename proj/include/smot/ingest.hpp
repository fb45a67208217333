#pragma once

#include <string>
#include <vector>

#include "smot/config.hpp"
#include "smot/types.hpp"

namespace smot::ingest {

// CSV grammar for detection/track files, 1-based frames:
//   frame,id,x,y,w,h,conf[,...]
// Trailing columns are ignored (MOTChallenge files carry world coordinates).
// LF and CRLF both accepted; blank lines skipped.

// Detections: id == -1 means unassigned; conf column required.
std::vector<DetectionFrame> parse_detections(const std::string& text);

// Ground-truth/predicted tracks: id >= 1 on every row; conf optional
// (defaults to 1.0). Duplicate (id, frame) is an error.
std::vector<Track> parse_gt_tracks(const std::string& text);

// Feature CSV with header: track_id,frame,f0,...,f{d-1}. All rows must share
// the header's column count; NaN/Inf rejected. expected_dim < 0 skips the
// config cross-check.
std::vector<FeatureSequence> parse_features(const std::string& text, int expected_dim = -1);

// Semantic annotation JSON; labels checked against the configured closed
// vocabulary; unknown keys ignored.
SemanticRecord parse_semantics(const std::string& text, const RunConfig& cfg);

// Writers round-trip bit-stably: parse(write(x)) == x, reals at 6 decimals,
// fixed row/key order so two writes of the same value are byte-identical.
std::string write_tracks(const std::vector<Track>& tracks);
std::string write_detections(const std::vector<DetectionFrame>& frames);
std::string write_features(const std::vector<FeatureSequence>& seqs);
std::string write_semantics(const SemanticRecord& rec);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace smot::ingest
