#pragma once

#include <map>
#include <string>
#include <vector>

#include "orspoken/audio.hpp"
#include "orspoken/types.hpp"

namespace orspoken::dataset {

// Loads a JSON-Lines manifest, one ImageRecord per line, in file order.
// Every record is validated against the type invariants; violations raise
// ValidationError naming the line, record and field. Relative feature and
// speech paths are resolved against the manifest's directory.
Manifest load_manifest(const std::string& path);

// Inverse of load_manifest: one JSON object per line, file order = record
// order. load_manifest(save_manifest(m)) is structurally equal to m.
void save_manifest(const Manifest& manifest, const std::string& path);

// Reads a raw little-endian float32 file of exactly expected_dim entries.
// Dimension mismatch or a non-finite entry is an error.
FeatureVector load_feature_vector(const std::string& path, std::size_t expected_dim);

// Loads detection candidates from JSON-Lines
// {image_id, box:[x_min,y_min,x_max,y_max], class_label, det_score, feature_path?}
// grouped per image and stably sorted by det_score descending (file order
// breaks ties). Relative feature paths resolve against the detections file.
std::map<std::string, ProposalSet> load_detections(const std::string& path);

// Cuts the clip starting at round(timestamp_s * rate) with length
// round(duration_s * rate). Windows overrunning the recording wrap around
// to the start (cyclic extension).
audio::Waveform select_noise_window(const audio::Waveform& noise, double timestamp_s,
                                    double duration_s);

}  // namespace orspoken::dataset
