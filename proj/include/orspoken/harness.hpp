#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orspoken/asr.hpp"
#include "orspoken/embedding.hpp"
#include "orspoken/lid.hpp"
#include "orspoken/lop.hpp"
#include "orspoken/textmetrics.hpp"
#include "orspoken/types.hpp"
#include "orspoken/vgsr.hpp"

namespace orspoken::harness {

// The three experiment arms plus the clean-text upper bound.
enum class Mode { baseline, vgsr, vgsr_lop, text };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct PipelineConfig {
    std::vector<double> beta_levels{0.0, 0.1, 0.3};
    std::size_t proposal_budget = 10;
    double iou_threshold = 0.5;  // a true detection needs IoU strictly above this
    std::uint64_t seed = 0;
    std::size_t box_feature_dim = 0;
    std::size_t context_feature_dim = 0;
    // "mock" or "http:<host>:<port>"; the ORSPOKEN_ASR_ADAPTER env var
    // overrides it in the CLI.
    std::string asr_adapter = "mock";
    // Noise recording for the real-audio path; expressions with a
    // timestamp take their clip from it via select_noise_window.
    std::optional<std::string> noise_wav;
};

// Everything the pipeline needs beyond the dataset. The IdfTable is built
// over the evaluated manifest's ground-truth expressions.
struct PipelineModels {
    EmbeddingTable embeddings;
    asr::ConfusionLexicon lexicon;
    text::IdfTable idf;
    std::optional<vgsr::FusionScorerParams> reranker;
    std::optional<lop::ExprClassifierParams> classifier;
    lop::ClassVocabulary vocab;
    std::optional<lid::InstanceScorerParams> scorer;
};

struct ObjectResult {
    std::string utterance_id;
    Mode mode = Mode::baseline;
    double beta = 0.0;
    std::string transcription;
    double bleu1 = 0.0;
    double rouge_l = 0.0;
    double meteor = 0.0;
    double cider = 0.0;
    std::optional<BoundingBox> predicted;
    BoundingBox ground_truth;
    double iou_value = 0.0;
    bool hit = false;
    std::string error;  // per-object failures are recorded, never fatal
};

struct ReportRow {
    std::string mode;
    double beta = 0.0;
    double meteor = 0.0;
    double rouge_l = 0.0;
    double cider = 0.0;
    double bleu1 = 0.0;
    double acc_at_1 = 0.0;
};

struct CurvePoint {
    std::string mode;
    double beta = 0.0;
    double x = 0.0;      // budget k or IoU threshold
    double value = 0.0;  // recall or Acc@1
};

struct EvalReport {
    std::vector<ReportRow> rows;  // sorted by beta ascending, then mode
    std::vector<CurvePoint> recall_vs_iou;
    std::vector<CurvePoint> recall_vs_k;
    std::vector<CurvePoint> acc_vs_k;
    std::vector<ObjectResult> results;
};

// Fraction of (predicted, ground-truth) pairs with IoU strictly above the
// threshold ("more than 0.5").
double acc_at_1(const std::vector<std::pair<BoundingBox, BoundingBox>>& selections,
                double threshold = 0.5);

// Runs transcription, reranking, proposal filtering and instance selection
// for every expression and every noise level of the config. Per-object
// failures (missing audio, empty proposals, missing features) are recorded
// in the result and count as misses. Stages are pure per expression, so
// results are in manifest order and deterministic given the seeds.
std::vector<ObjectResult> run_pipeline(const Manifest& manifest,
                                       const std::map<std::string, ProposalSet>& detections,
                                       const PipelineModels& models, const PipelineConfig& config,
                                       Mode mode);

// Runs the requested modes and aggregates rows plus the recall/Acc@1
// curves over k in {1,5,10,30,100} and IoU in {0.5..1.0}.
EvalReport evaluate(const Manifest& manifest,
                    const std::map<std::string, ProposalSet>& detections,
                    const PipelineModels& models, const PipelineConfig& config,
                    const std::vector<Mode>& modes);

// Writes report.csv (columns mode,beta,meteor,rouge_l,cider,bleu1,acc_at_1),
// report.json (full detail) and, when curves are present, recall_vs_iou.csv,
// recall_vs_k.csv and acc_vs_k.csv. Byte-deterministic given the report.
void emit_report(const EvalReport& report, const std::string& out_dir);

}  // namespace orspoken::harness
