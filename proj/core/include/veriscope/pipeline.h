#ifndef VERISCOPE_PIPELINE_H_
#define VERISCOPE_PIPELINE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veriscope/dataset.h"
#include "veriscope/embed.h"
#include "veriscope/features.h"
#include "veriscope/metrics.h"
#include "veriscope/neural.h"
#include "veriscope/querygen.h"
#include "veriscope/retrieve.h"
#include "veriscope/svm.h"

namespace veriscope {

enum class EngineChoice { kGoogle, kBing, kBoth };
enum class SourceChoice { kSnippets, kPages, kBoth };
enum class ModelKind { kNn, kSvm, kSvmNn };
enum class Task { kRumor, kCqa };

std::string_view EngineChoiceName(EngineChoice v);
std::string_view SourceChoiceName(SourceChoice v);
std::string_view ModelKindName(ModelKind v);     // "nn", "svm", "svm+nn"
std::string_view ModelDisplayName(ModelKind v);  // "NN", "SVM", "SVM + NN"
std::string_view TaskName(Task v);
EngineChoice ParseEngineChoice(std::string_view name);
SourceChoice ParseSourceChoice(std::string_view name);
ModelKind ParseModelKind(std::string_view name);
Task ParseTask(std::string_view name);

// Lexical resources shared by every stage.
struct Resources {
  IdfTable idf;
  EmbeddingTable embeddings;
  DomainPolicy unreliable;  // blacklist applied to rumor retrieval
  DomainPolicy whitelist;   // the only sources allowed for cQA

  // idf.tsv, embeddings.txt, unreliable_domains.txt, cqa_whitelist.txt.
  static Resources LoadDir(const std::filesystem::path& dir);
};

struct ExperimentConfig {
  EngineChoice engines = EngineChoice::kBoth;
  SourceChoice sources = SourceChoice::kBoth;
  ModelKind model = ModelKind::kSvmNn;
  Task task = Task::kRumor;
  std::uint64_t seed = 1;
  TrainConfig nn;
  SvmConfig svm;
  SvmGrid grid = SvmGrid::Default();
  std::size_t folds = 5;
  bool grid_search = true;

  // cQA uses snippets only; seeds are copied into the model configs.
  ExperimentConfig Normalized() const;
  EvidenceGate Gate() const;
  const DomainPolicy& Policy(const Resources& resources) const;
  bool WantsPages() const { return Gate().pages; }
  // e.g. "both; pages"
  std::string Describe() const;
};

// Retrieval options for a configuration: its domain policy, and page
// fetching only when pages are used.
CollectOptions collect_options(const ExperimentConfig& config, const Resources& resources);

// Queries every example and collects evidence from the sources. Claims that
// yield no query get a bundle with no searches.
std::vector<EvidenceBundle> gather_evidence(std::span<const Example> examples,
                                            const IdfTable& idf,
                                            std::span<const EngineSource> sources,
                                            const CollectOptions& options);

// Fixture-backed providers for the configured engines.
class FixtureEngines {
 public:
  FixtureEngines(const std::filesystem::path& root, EngineChoice engines);

  std::vector<EngineSource> Sources(bool with_pages);
  std::size_t fetch_count() const;
  std::size_t search_count() const;

 private:
  std::vector<std::unique_ptr<FixtureProvider>> providers_;
};

// Everything the models need about one example after retrieval.
struct PreparedExample {
  std::string id;
  Label label = Label::kFalse;
  Split split = Split::kTrain;
  EvidenceSummary summary;
  std::array<std::string, kBranches> branch_text;    // network branch order
  std::array<std::string, kTextBlocks> block_text;   // feature layout order
  bool missing_bundle = false;
  bool low_evidence = false;  // no allowed hit from any engine
};

class Featurizer {
 public:
  Featurizer(const Resources& resources, const ExperimentConfig& config);

  PreparedExample Prepare(const Example& example, const EvidenceBundle* bundle) const;
  EncodedExample Encode(const PreparedExample& prepared) const;

  FeatureLayout Layout(FeatureMode mode, std::size_t lstm_units = 0) const;
  FeatureVector Averaged(const PreparedExample& prepared) const;
  // Branch encodings in layout order plus the dense-layer activations.
  FeatureVector WithHidden(const PreparedExample& prepared, const NnModel& model) const;
  FeatureVector LstmOnly(const PreparedExample& prepared, const NnModel& model) const;

  std::array<std::string, kBranches> BranchNames() const;

 private:
  const Resources* resources_;
  ExperimentConfig config_;
  SimilarityContext ctx_;
  SequenceEncoder encoder_;
};

struct ExperimentResult {
  ExperimentConfig config;
  MetricsReport report;
  FeatureLayout layout;  // SVM input layout (NN-only runs: averaged layout)
  std::vector<std::string> missing_evidence;
  std::vector<std::string> test_ids;
  std::vector<Label> test_gold;
  std::vector<Label> test_predicted;
  std::vector<double> test_scores;  // probability or squashed margin of "true"
  std::optional<NnModel> nn;
  std::vector<EpochStats> nn_history;
  std::size_t nn_best_epoch = 0;
  std::optional<SvmModel> svm;
  std::optional<GridSearchResult> grid;
  std::map<Split, std::vector<FeatureVector>> features;
};

// Runs several models over one dataset; the network is trained once and
// shared by NN and SVM+NN runs.
class Experiment {
 public:
  Experiment(std::span<const Example> examples, std::span<const EvidenceBundle> bundles,
             const Resources& resources, const ExperimentConfig& config);

  ExperimentResult Run(ModelKind model);
  const TrainResult& Network();
  const std::vector<std::string>& missing_evidence() const { return missing_; }

 private:
  std::vector<const PreparedExample*> Select(Split split) const;
  std::vector<EncodedExample> EncodeSplit(Split split) const;

  const Resources* resources_;
  ExperimentConfig config_;
  Featurizer featurizer_;
  std::vector<PreparedExample> prepared_;
  std::vector<std::string> missing_;
  std::optional<TrainResult> network_;
};

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::span<const Example> examples,
                                std::span<const EvidenceBundle> bundles,
                                const Resources& resources);

// Models, feature files, layout, predictions, grid table and report.
void save_artifacts(const ExperimentResult& result, const std::filesystem::path& dir);

struct TrainedArtifacts {
  ExperimentConfig config;
  std::optional<NnModel> nn;
  std::optional<SvmModel> svm;
  FeatureLayout layout;

  static TrainedArtifacts Load(const std::filesystem::path& dir);
};

struct Prediction {
  Label label = Label::kFalse;
  double score = 0.5;       // probability of "true"; SVM: 1 / (1 + exp(-f)), uncalibrated
  double confidence = 0.5;  // score of the predicted label
  Query query;
  bool low_evidence = false;
  EvidenceSummary summary;
};

// Classifies one example from scratch: query, retrieval, features, model.
// The domain policy and page fetching follow the trained configuration;
// `options` supplies parallelism and retries.
Prediction predict(const Example& example, const TrainedArtifacts& artifacts,
                   const Resources& resources, std::span<const EngineSource> sources,
                   const CollectOptions& options);
Prediction predict(std::string_view claim, const TrainedArtifacts& artifacts,
                   const Resources& resources, std::span<const EngineSource> sources,
                   const CollectOptions& options);

}  // namespace veriscope

#endif  // VERISCOPE_PIPELINE_H_
