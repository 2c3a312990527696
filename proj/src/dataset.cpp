#include "orspoken/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "orspoken/textmetrics.hpp"

namespace orspoken::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string resolve_path(const std::string& base_dir, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute() || base_dir.empty()) return p;
    return (fs::path(base_dir) / path).lexically_normal().string();
}

BoundingBox parse_box_object(const json& j, const std::string& where) {
    for (const char* key : {"x_min", "y_min", "x_max", "y_max"})
        if (!j.contains(key))
            throw ValidationError(where + ": box is missing field '" + std::string(key) + "'");
    BoundingBox box{j.at("x_min").get<double>(), j.at("y_min").get<double>(),
                    j.at("x_max").get<double>(), j.at("y_max").get<double>()};
    validate_box(box, where);
    return box;
}

BoundingBox parse_box_array(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4)
        throw ValidationError(where + ": box must be [x_min,y_min,x_max,y_max]");
    BoundingBox box{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
                    j.at(3).get<double>()};
    validate_box(box, where);
    return box;
}

ImageRecord parse_image_record(const json& j, const std::string& where,
                               const std::string& base_dir) {
    ImageRecord rec;
    rec.image_id = j.value("image_id", "");
    if (rec.image_id.empty()) throw ValidationError(where + ": missing or empty image_id");
    rec.width = j.value("width", 0);
    rec.height = j.value("height", 0);
    if (rec.width <= 0 || rec.height <= 0)
        throw ValidationError(where + " (image '" + rec.image_id +
                              "'): width and height must be > 0");
    if (!j.contains("feature_path"))
        throw ValidationError(where + " (image '" + rec.image_id + "'): missing feature_path");
    rec.feature_path = resolve_path(base_dir, j.at("feature_path").get<std::string>());

    std::size_t obj_idx = 0;
    for (const auto& jo : j.value("objects", json::array())) {
        const std::string obj_where =
            where + " (image '" + rec.image_id + "'), object " + std::to_string(obj_idx);
        ObjectAnnotation obj;
        if (!jo.contains("box")) throw ValidationError(obj_where + ": missing box");
        obj.box = parse_box_object(jo.at("box"), obj_where);
        obj.class_label = jo.value("class_label", "");
        if (obj.class_label.empty())
            throw ValidationError(obj_where + ": class_label must be nonempty");
        for (const auto& je : jo.value("expressions", json::array())) {
            ReferringExpression expr;
            expr.text = je.value("text", "");
            if (text::tokenize(expr.text).empty())
                throw ValidationError(obj_where +
                                      ": expression text is empty after tokenization");
            if (je.contains("speech_path"))
                expr.speech_path = resolve_path(base_dir, je.at("speech_path").get<std::string>());
            if (je.contains("timestamp_s")) {
                expr.timestamp_s = je.at("timestamp_s").get<double>();
                if (!(*expr.timestamp_s >= 0.0))
                    throw ValidationError(obj_where + ": timestamp_s must be >= 0");
            }
            obj.expressions.push_back(std::move(expr));
        }
        if (obj.expressions.empty())
            throw ValidationError(obj_where + ": at least one expression required");
        rec.objects.push_back(std::move(obj));
        ++obj_idx;
    }
    return rec;
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    const std::string base_dir = fs::path(path).parent_path().string();

    Manifest manifest;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path + " line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": parse error: " + e.what());
        }
        ImageRecord rec = parse_image_record(j, where, base_dir);
        auto [it, inserted] = seen_ids.emplace(rec.image_id, line_no);
        if (!inserted)
            throw ValidationError(where + ": duplicate image_id '" + rec.image_id +
                                  "' (first seen on line " + std::to_string(it->second) + ")");
        manifest.push_back(std::move(rec));
    }
    return manifest;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    for (const auto& rec : manifest) {
        json jo;
        jo["image_id"] = rec.image_id;
        jo["width"] = rec.width;
        jo["height"] = rec.height;
        jo["feature_path"] = rec.feature_path;
        jo["objects"] = json::array();
        for (const auto& obj : rec.objects) {
            json o;
            o["box"] = {{"x_min", obj.box.x_min},
                        {"y_min", obj.box.y_min},
                        {"x_max", obj.box.x_max},
                        {"y_max", obj.box.y_max}};
            o["class_label"] = obj.class_label;
            o["expressions"] = json::array();
            for (const auto& expr : obj.expressions) {
                json e;
                e["text"] = expr.text;
                if (expr.speech_path) e["speech_path"] = *expr.speech_path;
                if (expr.timestamp_s) e["timestamp_s"] = *expr.timestamp_s;
                o["expressions"].push_back(std::move(e));
            }
            jo["objects"].push_back(std::move(o));
        }
        out << jo.dump() << '\n';
    }
    if (!out) throw std::runtime_error("I/O failure writing manifest: " + path);
}

FeatureVector load_feature_vector(const std::string& path, std::size_t expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open feature file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != expected_dim * 4)
        throw ValidationError(path + ": dimension mismatch, expected " +
                              std::to_string(expected_dim) + " float32 values, file holds " +
                              std::to_string(bytes.size() / 4));
    FeatureVector fv;
    fv.values.resize(expected_dim);
    for (std::size_t i = 0; i < expected_dim; ++i) {
        const auto* b = reinterpret_cast<const unsigned char*>(bytes.data()) + i * 4;
        const std::uint32_t bits = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
                                   (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        if (!std::isfinite(v))
            throw ValidationError(path + ": non-finite entry at index " + std::to_string(i));
        fv.values[i] = v;
    }
    return fv;
}

std::map<std::string, ProposalSet> load_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open detections file: " + path);
    const std::string base_dir = fs::path(path).parent_path().string();

    std::map<std::string, ProposalSet> result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path + " line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": parse error: " + e.what());
        }
        const std::string image_id = j.value("image_id", "");
        if (image_id.empty()) throw ValidationError(where + ": missing or empty image_id");
        DetectionCandidate cand;
        if (!j.contains("box")) throw ValidationError(where + ": missing box");
        cand.box = parse_box_array(j.at("box"), where);
        cand.class_label = j.value("class_label", "");
        if (cand.class_label.empty())
            throw ValidationError(where + ": class_label must be nonempty");
        if (!j.contains("det_score")) throw ValidationError(where + ": missing det_score");
        cand.det_score = j.at("det_score").get<double>();
        if (!std::isfinite(cand.det_score) || cand.det_score < 0.0 || cand.det_score > 1.0)
            throw ValidationError(where + ": det_score must be finite and in [0,1]");
        if (j.contains("feature_path"))
            cand.feature_path = resolve_path(base_dir, j.at("feature_path").get<std::string>());

        auto& set = result[image_id];
        set.image_id = image_id;
        for (const auto& existing : set.candidates) {
            if (existing.class_label == cand.class_label && existing.box.x_min == cand.box.x_min &&
                existing.box.y_min == cand.box.y_min && existing.box.x_max == cand.box.x_max &&
                existing.box.y_max == cand.box.y_max)
                throw ValidationError(where + ": duplicate (box, class) candidate for image '" +
                                      image_id + "'");
        }
        set.candidates.push_back(std::move(cand));
    }

    // det_score descending; file order breaks ties.
    for (auto& [id, set] : result)
        std::stable_sort(set.candidates.begin(), set.candidates.end(),
                         [](const DetectionCandidate& a, const DetectionCandidate& b) {
                             return a.det_score > b.det_score;
                         });
    return result;
}

audio::Waveform select_noise_window(const audio::Waveform& noise, double timestamp_s,
                                    double duration_s) {
    if (noise.samples.empty())
        throw ValidationError("select_noise_window: empty noise waveform");
    if (timestamp_s < 0.0)
        throw ValidationError("select_noise_window: timestamp_s must be >= 0");
    if (!(duration_s > 0.0))
        throw ValidationError("select_noise_window: duration_s must be > 0");
    const std::size_t n = noise.samples.size();
    const auto start = std::size_t(std::llround(timestamp_s * noise.rate)) % n;
    const auto len = std::size_t(std::llround(duration_s * noise.rate));
    audio::Waveform out;
    out.rate = noise.rate;
    out.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i) out.samples[i] = noise.samples[(start + i) % n];
    return out;
}

}  // namespace orspoken::dataset
