#include "orspoken/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "orspoken/dataset.hpp"
#include "orspoken/nn.hpp"

namespace orspoken::harness {

namespace fs = std::filesystem;
using nlohmann::json;

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::baseline: return "baseline";
        case Mode::vgsr: return "vgsr";
        case Mode::vgsr_lop: return "vgsr+lop";
        case Mode::text: return "text";
    }
    return "?";
}

Mode mode_from_name(const std::string& name) {
    if (name == "baseline") return Mode::baseline;
    if (name == "vgsr") return Mode::vgsr;
    if (name == "vgsr+lop" || name == "vgsr_lop") return Mode::vgsr_lop;
    if (name == "text") return Mode::text;
    throw ValidationError("unknown mode '" + name + "'");
}

double acc_at_1(const std::vector<std::pair<BoundingBox, BoundingBox>>& selections,
                double threshold) {
    if (selections.empty()) throw ValidationError("acc_at_1: empty selection list");
    std::size_t hits = 0;
    for (const auto& [predicted, truth] : selections)
        if (iou(predicted, truth) > threshold) ++hits;
    return double(hits) / double(selections.size());
}

namespace {

constexpr std::size_t kCurveBudgets[] = {1, 5, 10, 30, 100};
constexpr double kCurveIous[] = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

struct AdapterSpec {
    bool mock = true;
    std::string host;
    int port = 0;
};

AdapterSpec parse_adapter(const std::string& spec) {
    AdapterSpec out;
    if (spec.empty() || spec == "mock") return out;
    if (spec.rfind("http:", 0) == 0) {
        const std::string rest = spec.substr(5);
        const auto colon = rest.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 >= rest.size())
            throw ValidationError("asr adapter must be 'mock' or 'http:<host>:<port>', got '" +
                                  spec + "'");
        out.mock = false;
        out.host = rest.substr(0, colon);
        out.port = std::stoi(rest.substr(colon + 1));
        return out;
    }
    throw ValidationError("asr adapter must be 'mock' or 'http:<host>:<port>', got '" + spec +
                          "'");
}

Eigen::VectorXd to_eigen(const FeatureVector& fv) {
    Eigen::VectorXd v(Eigen::Index(fv.dim()));
    for (std::size_t i = 0; i < fv.dim(); ++i) v[Eigen::Index(i)] = fv.values[i];
    return v;
}

// Transcribes one expression at one noise level through the configured
// adapter.
asr::NBestList obtain_nbest(const ReferringExpression& expr, const std::string& utt, double beta,
                            const PipelineModels& models, const PipelineConfig& config,
                            const AdapterSpec& adapter,
                            const std::optional<audio::Waveform>& noise) {
    const std::uint64_t seed = nn::mix_seed(config.seed, nn::hash64(utt));
    if (adapter.mock)
        return asr::mock_transcribe(expr.text, audio::NoiseLevel(beta), seed, models.lexicon, utt);

    if (!expr.speech_path)
        throw std::runtime_error("utterance '" + utt + "' has no speech_path for the external adapter");
    audio::Waveform speech = audio::resample_to_16k(audio::decode_wav(*expr.speech_path));
    if (beta > 0.0) {
        if (!noise)
            throw std::runtime_error("noise recording required for beta > 0 (config.noise_wav)");
        audio::Waveform clip =
            expr.timestamp_s
                ? dataset::select_noise_window(*noise, *expr.timestamp_s, speech.duration_s())
                : *noise;
        speech = audio::mix_noise(speech, clip, audio::NoiseLevel(beta));
    }
    asr::HttpAsrAdapter client(adapter.host, adapter.port);
    return asr::transcribe_nbest(speech, client, utt);
}

// Proposal stage for one expression: class filtering in vgsr+lop mode,
// plain det_score truncation otherwise.
ProposalSet stage_proposals(const ProposalSet& base, Mode mode, const std::string& transcription,
                            const PipelineModels& models, std::size_t budget) {
    if (mode == Mode::vgsr_lop) {
        if (!models.classifier)
            throw std::runtime_error("vgsr+lop mode requires expression classifier params");
        const lop::ClassPrediction pred =
            lop::predict_class(transcription, *models.classifier, models.vocab, models.embeddings);
        return lop::filter_rank_proposals(base, pred.class_name, pred.relevance, budget);
    }
    ProposalSet out;
    out.image_id = base.image_id;
    const std::size_t top = std::min(budget, base.candidates.size());
    out.candidates.assign(base.candidates.begin(), base.candidates.begin() + std::ptrdiff_t(top));
    return out;
}

std::vector<lid::CandidateFeatures> load_candidate_features(const ProposalSet& proposals,
                                                            const ImageRecord& rec,
                                                            const Eigen::VectorXd& context,
                                                            const PipelineConfig& config) {
    std::vector<lid::CandidateFeatures> feats;
    feats.reserve(proposals.candidates.size());
    for (const auto& cand : proposals.candidates) {
        if (!cand.feature_path)
            throw std::runtime_error("candidate in image '" + rec.image_id +
                                     "' has no feature_path");
        lid::CandidateFeatures cf;
        cf.box_feature =
            to_eigen(dataset::load_feature_vector(*cand.feature_path, config.box_feature_dim));
        cf.spatial = lid::spatial_features(cand.box, rec.width, rec.height);
        cf.context_feature = context;
        feats.push_back(std::move(cf));
    }
    return feats;
}

void score_transcription(ObjectResult& r, const std::string& truth_text,
                         const text::IdfTable& idf) {
    const text::TokenSeq truth = text::tokenize(truth_text);
    const text::TokenSeq cand = text::tokenize(r.transcription);
    if (cand.empty() || truth.empty()) return;  // metrics stay 0
    r.bleu1 = text::bleu1(cand, truth).value;
    r.rouge_l = text::rouge_l(cand, truth).value;
    r.meteor = text::meteor(cand, truth).value;
    r.cider = text::cider(cand, {truth}, idf).value;
}

}  // namespace

std::vector<ObjectResult> run_pipeline(const Manifest& manifest,
                                       const std::map<std::string, ProposalSet>& detections,
                                       const PipelineModels& models, const PipelineConfig& config,
                                       Mode mode) {
    if ((mode == Mode::vgsr || mode == Mode::vgsr_lop) && !models.reranker)
        throw ValidationError(std::string(mode_name(mode)) + " mode requires reranker params");
    if (!models.scorer) throw ValidationError("run_pipeline requires instance scorer params");

    const AdapterSpec adapter = parse_adapter(config.asr_adapter);
    std::optional<audio::Waveform> noise;
    if (config.noise_wav) noise = audio::resample_to_16k(audio::decode_wav(*config.noise_wav));

    std::vector<ObjectResult> results;
    for (double beta : config.beta_levels) {
        for (const auto& rec : manifest) {
            for (std::size_t oi = 0; oi < rec.objects.size(); ++oi) {
                const auto& obj = rec.objects[oi];
                for (std::size_t ei = 0; ei < obj.expressions.size(); ++ei) {
                    const auto& expr = obj.expressions[ei];
                    ObjectResult r;
                    r.utterance_id = utterance_id(rec.image_id, oi, ei);
                    r.mode = mode;
                    r.beta = beta;
                    r.ground_truth = obj.box;
                    try {
                        const Eigen::VectorXd context = to_eigen(dataset::load_feature_vector(
                            rec.feature_path, config.context_feature_dim));

                        if (mode == Mode::text) {
                            // Upper-bound arm: the transcription IS the ground
                            // truth, so every metric sits at its range max.
                            r.transcription = expr.text;
                            r.bleu1 = r.rouge_l = r.meteor = 1.0;
                            r.cider = 10.0;
                        } else {
                            asr::NBestList nbest = obtain_nbest(expr, r.utterance_id, beta,
                                                                models, config, adapter, noise);
                            if (mode == Mode::vgsr || mode == Mode::vgsr_lop)
                                nbest = vgsr::rerank(nbest, context, *models.reranker,
                                                     models.embeddings);
                            r.transcription = nbest.alternatives.at(0).text;
                            score_transcription(r, expr.text, models.idf);
                        }

                        auto det_it = detections.find(rec.image_id);
                        if (det_it == detections.end() || det_it->second.candidates.empty())
                            throw std::runtime_error("no detections for image '" + rec.image_id +
                                                     "'");
                        const ProposalSet proposals =
                            stage_proposals(det_it->second, mode, r.transcription, models,
                                            config.proposal_budget);
                        if (proposals.candidates.empty())
                            throw std::runtime_error("empty proposal set for image '" +
                                                     rec.image_id + "'");
                        const auto feats =
                            load_candidate_features(proposals, rec, context, config);
                        const lid::Selection sel = lid::select_referred(
                            r.transcription, proposals, feats, *models.scorer, models.embeddings);
                        r.predicted = proposals.candidates[sel.index].box;
                        r.iou_value = iou(*r.predicted, r.ground_truth);
                        r.hit = r.iou_value > config.iou_threshold;
                    } catch (const std::exception& e) {
                        r.error = e.what();  // recorded as a miss, run continues
                    }
                    results.push_back(std::move(r));
                }
            }
        }
    }
    return results;
}

EvalReport evaluate(const Manifest& manifest, const std::map<std::string, ProposalSet>& detections,
                    const PipelineModels& models, const PipelineConfig& config,
                    const std::vector<Mode>& modes) {
    EvalReport report;
    for (Mode mode : modes) {
        std::vector<ObjectResult> results = run_pipeline(manifest, detections, models, config, mode);

        for (double beta : config.beta_levels) {
            ReportRow row;
            row.mode = mode_name(mode);
            row.beta = beta;
            std::size_t n = 0, hits = 0;
            for (const auto& r : results) {
                if (r.beta != beta) continue;
                ++n;
                row.meteor += r.meteor;
                row.rouge_l += r.rouge_l;
                row.cider += r.cider;
                row.bleu1 += r.bleu1;
                if (r.hit) ++hits;
            }
            if (n > 0) {
                row.meteor /= double(n);
                row.rouge_l /= double(n);
                row.cider /= double(n);
                row.bleu1 /= double(n);
                row.acc_at_1 = double(hits) / double(n);
            }
            report.rows.push_back(row);

            // Curves: proposals re-staged per expression with a 100-deep
            // budget, then sliced per grid point.
            std::map<std::string, ProposalSet> staged;
            std::map<std::string, const ImageRecord*> rec_of;
            std::vector<std::pair<std::string, BoundingBox>> gts;
            std::map<std::string, std::string> transcription_of;
            for (const auto& r : results) {
                if (r.beta != beta) continue;
                transcription_of[r.utterance_id] = r.transcription;
            }
            for (const auto& rec : manifest) {
                auto det_it = detections.find(rec.image_id);
                for (std::size_t oi = 0; oi < rec.objects.size(); ++oi) {
                    for (std::size_t ei = 0; ei < rec.objects[oi].expressions.size(); ++ei) {
                        const std::string utt = utterance_id(rec.image_id, oi, ei);
                        gts.emplace_back(utt, rec.objects[oi].box);
                        if (det_it == detections.end()) continue;
                        const std::string& transcription = transcription_of[utt];
                        if (transcription.empty()) continue;  // failed upstream: miss
                        try {
                            staged[utt] = stage_proposals(det_it->second, mode, transcription,
                                                          models, 100);
                            staged[utt].image_id = utt;
                            rec_of[utt] = &rec;
                        } catch (const std::exception&) {
                            staged.erase(utt);
                        }
                    }
                }
            }
            if (gts.empty()) continue;
            for (std::size_t k : kCurveBudgets)
                report.recall_vs_k.push_back(
                    {row.mode, beta, double(k),
                     lop::recall_at(staged, gts, config.iou_threshold, k)});
            for (double t : kCurveIous)
                report.recall_vs_iou.push_back(
                    {row.mode, beta, t,
                     lop::recall_at(staged, gts, t, config.proposal_budget)});
            for (std::size_t k : kCurveBudgets) {
                std::size_t k_hits = 0;
                for (const auto& [utt, gt_box] : gts) {
                    auto it = staged.find(utt);
                    if (it == staged.end()) continue;
                    ProposalSet sliced;
                    sliced.image_id = it->second.image_id;
                    const std::size_t top = std::min(k, it->second.candidates.size());
                    sliced.candidates.assign(it->second.candidates.begin(),
                                             it->second.candidates.begin() + std::ptrdiff_t(top));
                    if (sliced.candidates.empty()) continue;
                    try {
                        const auto& rec = *rec_of.at(utt);
                        const Eigen::VectorXd context = to_eigen(dataset::load_feature_vector(
                            rec.feature_path, config.context_feature_dim));
                        const auto feats =
                            load_candidate_features(sliced, rec, context, config);
                        const auto sel =
                            lid::select_referred(transcription_of.at(utt), sliced, feats,
                                                 *models.scorer, models.embeddings);
                        if (iou(sliced.candidates[sel.index].box, gt_box) > config.iou_threshold)
                            ++k_hits;
                    } catch (const std::exception&) {
                        // miss
                    }
                }
                report.acc_vs_k.push_back(
                    {row.mode, beta, double(k), double(k_hits) / double(gts.size())});
            }
        }
        for (auto& r : results) report.results.push_back(std::move(r));
    }

    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const ReportRow& a, const ReportRow& b) { return a.beta < b.beta; });
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

json result_to_json(const ObjectResult& r) {
    json j;
    j["utterance_id"] = r.utterance_id;
    j["mode"] = mode_name(r.mode);
    j["beta"] = r.beta;
    j["transcription"] = r.transcription;
    j["bleu1"] = r.bleu1;
    j["rouge_l"] = r.rouge_l;
    j["meteor"] = r.meteor;
    j["cider"] = r.cider;
    if (r.predicted)
        j["predicted_box"] = {r.predicted->x_min, r.predicted->y_min, r.predicted->x_max,
                              r.predicted->y_max};
    j["ground_truth_box"] = {r.ground_truth.x_min, r.ground_truth.y_min, r.ground_truth.x_max,
                             r.ground_truth.y_max};
    j["iou"] = r.iou_value;
    j["hit"] = r.hit;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

void write_curve_csv(const std::string& path, const char* x_name, const char* value_name,
                     const std::vector<CurvePoint>& points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "mode,beta," << x_name << ',' << value_name << '\n';
    for (const auto& p : points)
        out << p.mode << ',' << fmt(p.beta) << ',' << fmt(p.x) << ',' << fmt(p.value) << '\n';
    if (!out) throw std::runtime_error("I/O failure writing " + path);
}

}  // namespace

void emit_report(const EvalReport& report, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    {
        std::ofstream csv(dir / "report.csv");
        if (!csv) throw std::runtime_error("cannot write report.csv in " + out_dir);
        csv << "mode,beta,meteor,rouge_l,cider,bleu1,acc_at_1\n";
        for (const auto& row : report.rows)
            csv << row.mode << ',' << fmt(row.beta) << ',' << fmt(row.meteor) << ','
                << fmt(row.rouge_l) << ',' << fmt(row.cider) << ',' << fmt(row.bleu1) << ','
                << fmt(row.acc_at_1) << '\n';
        if (!csv) throw std::runtime_error("I/O failure writing report.csv");
    }
    {
        json j;
        j["rows"] = json::array();
        for (const auto& row : report.rows)
            j["rows"].push_back({{"mode", row.mode},
                                 {"beta", row.beta},
                                 {"meteor", row.meteor},
                                 {"rouge_l", row.rouge_l},
                                 {"cider", row.cider},
                                 {"bleu1", row.bleu1},
                                 {"acc_at_1", row.acc_at_1}});
        auto curve_json = [](const std::vector<CurvePoint>& pts, const char* x_name) {
            json arr = json::array();
            for (const auto& p : pts)
                arr.push_back(
                    {{"mode", p.mode}, {"beta", p.beta}, {x_name, p.x}, {"value", p.value}});
            return arr;
        };
        j["curves"]["recall_vs_iou"] = curve_json(report.recall_vs_iou, "iou");
        j["curves"]["recall_vs_k"] = curve_json(report.recall_vs_k, "k");
        j["curves"]["acc_vs_k"] = curve_json(report.acc_vs_k, "k");
        j["results"] = json::array();
        for (const auto& r : report.results) j["results"].push_back(result_to_json(r));
        std::ofstream out(dir / "report.json");
        if (!out) throw std::runtime_error("cannot write report.json in " + out_dir);
        out << j.dump(2) << '\n';
        if (!out) throw std::runtime_error("I/O failure writing report.json");
    }
    if (!report.recall_vs_iou.empty())
        write_curve_csv((dir / "recall_vs_iou.csv").string(), "iou", "recall",
                        report.recall_vs_iou);
    if (!report.recall_vs_k.empty())
        write_curve_csv((dir / "recall_vs_k.csv").string(), "k", "recall", report.recall_vs_k);
    if (!report.acc_vs_k.empty())
        write_curve_csv((dir / "acc_vs_k.csv").string(), "k", "acc_at_1", report.acc_vs_k);
}

}  // namespace orspoken::harness
