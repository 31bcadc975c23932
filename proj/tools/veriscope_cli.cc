#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "veriscope/cache.h"
#include "veriscope/dataset.h"
#include "veriscope/error.h"
#include "veriscope/features.h"
#include "veriscope/metrics.h"
#include "veriscope/pipeline.h"
#include "veriscope/retrieve.h"
#include "veriscope/web.h"

namespace fs = std::filesystem;
using namespace veriscope;

namespace {

struct Options {
  std::string resources = VERISCOPE_DEFAULT_DATA_DIR;
  std::string data;
  std::string engine = "both";
  std::string source = "both";
  std::string model = "svm+nn";
  std::string task = "rumor";
  std::uint64_t seed = 1;
  std::string fixtures;
  std::string evidence;
  std::string out;
  std::string model_dir;
  std::string mode = "avg_embeddings";
  std::string claim;
  std::string question;
  std::string answer;
  std::size_t epochs = 400;
  std::size_t parallelism = 4;
  bool no_grid = false;
  double svm_c = 16.0;
  double svm_gamma = 0.01;
};

ExperimentConfig MakeConfig(const Options& o) {
  ExperimentConfig c;
  c.engines = o.engine == "fixture" ? EngineChoice::kBoth : ParseEngineChoice(o.engine);
  c.sources = ParseSourceChoice(o.source);
  if (o.model != "all") c.model = ParseModelKind(o.model);
  c.task = ParseTask(o.task);
  c.seed = o.seed;
  c.nn.epochs = o.epochs;
  c.svm.c = o.svm_c;
  c.svm.gamma = o.svm_gamma;
  c.grid_search = !o.no_grid;
  return c.Normalized();
}

// Providers for the configured engines: fixtures when a fixture directory is
// given, the live APIs otherwise.
class Engines {
 public:
  Engines(const Options& o, EngineChoice engines) {
    if (!o.fixtures.empty()) {
      fixtures_.emplace(o.fixtures, engines);
      return;
    }
    if (o.engine == "fixture") ThrowInvalid("--engine fixture needs --fixtures DIR");
    const LiveCredentials creds = LiveCredentials::FromEnvironment();
    auto wrap_provider = [&](std::unique_ptr<SearchProvider> p) -> std::unique_ptr<SearchProvider> {
      if (creds.cache_dir.empty()) return p;
      return std::make_unique<CachedProvider>(std::move(p), DiskCache(creds.cache_dir));
    };
    std::unique_ptr<PageFetcher> fetcher = std::make_unique<HttpFetcher>();
    if (!creds.cache_dir.empty()) {
      fetcher = std::make_unique<CachedFetcher>(std::move(fetcher), DiskCache(creds.cache_dir));
    }
    fetcher_ = std::move(fetcher);
    if (engines != EngineChoice::kBing) {
      if (creds.google_key.empty() || creds.google_cx.empty()) {
        ThrowInvalid("live Google search needs VERISCOPE_GOOGLE_KEY and VERISCOPE_GOOGLE_CX");
      }
      live_.push_back(wrap_provider(std::make_unique<GoogleProvider>(creds.google_key, creds.google_cx)));
    }
    if (engines != EngineChoice::kGoogle) {
      if (creds.bing_key.empty()) ThrowInvalid("live Bing search needs VERISCOPE_BING_KEY");
      live_.push_back(wrap_provider(std::make_unique<BingProvider>(creds.bing_key)));
    }
  }

  std::vector<EngineSource> Sources(bool pages) {
    if (fixtures_) return fixtures_->Sources(pages);
    std::vector<EngineSource> out;
    for (auto& p : live_) out.push_back({p.get(), pages ? fetcher_.get() : nullptr});
    return out;
  }

 private:
  std::optional<FixtureEngines> fixtures_;
  std::vector<std::unique_ptr<SearchProvider>> live_;
  std::unique_ptr<PageFetcher> fetcher_;
};

std::vector<Example> LoadData(const Options& o) {
  if (o.data.empty()) ThrowInvalid("--data FILE is required");
  return load_dataset_file(o.data);
}

// Evidence from a saved store when --evidence is given, retrieval otherwise.
std::vector<EvidenceBundle> Evidence(const Options& o, const ExperimentConfig& config,
                                     std::span<const Example> examples,
                                     const Resources& resources) {
  if (!o.evidence.empty()) {
    const EvidenceStore store(o.evidence);
    std::vector<EvidenceBundle> bundles;
    for (const Example& ex : examples) {
      if (auto b = store.Load(ex.id)) bundles.push_back(std::move(*b));
    }
    return bundles;
  }
  Engines engines(o, config.engines);
  CollectOptions options = collect_options(config, resources);
  options.parallelism = o.parallelism;
  auto sources = engines.Sources(options.fetch_pages);
  return gather_evidence(examples, resources.idf, sources, options);
}

void WriteFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
}

int GenQuery(const Options& o) {
  const Resources r = Resources::LoadDir(o.resources);
  if (!o.claim.empty()) {
    std::cout << generate_query(o.claim, r.idf).Text() << '\n';
    return 0;
  }
  for (const Example& ex : LoadData(o)) {
    try {
      std::cout << ex.id << '\t' << generate_query(ex.claim_text, r.idf, ex.id).Text() << '\n';
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyQuery) throw;
      std::cout << ex.id << "\t(empty)\n";
    }
  }
  return 0;
}

int FetchEvidence(const Options& o) {
  if (o.out.empty()) ThrowInvalid("--out DIR is required");
  const Resources r = Resources::LoadDir(o.resources);
  const ExperimentConfig config = MakeConfig(o);
  const auto examples = LoadData(o);
  Options live = o;
  live.evidence.clear();
  const auto bundles = Evidence(live, config, examples, r);
  const EvidenceStore store(o.out);
  std::size_t empty = 0;
  for (const EvidenceBundle& b : bundles) {
    store.Save(b);
    if (b.google.results.empty() && b.bing.results.empty()) ++empty;
  }
  std::cout << "saved " << bundles.size() << " bundles to " << o.out << " (" << empty
            << " without results)\n";
  return 0;
}

int Featurize(const Options& o) {
  if (o.out.empty()) ThrowInvalid("--out DIR is required");
  const Resources r = Resources::LoadDir(o.resources);
  const ExperimentConfig config = MakeConfig(o);
  const auto examples = LoadData(o);
  const auto bundles = Evidence(o, config, examples, r);
  const FeatureMode mode = ParseFeatureMode(o.mode);
  std::optional<NnModel> nn;
  if (mode != FeatureMode::kAvgEmbeddings) {
    if (o.model_dir.empty()) ThrowInvalid("LSTM feature modes need --model-dir with nn.json");
    std::ifstream in(fs::path(o.model_dir) / "nn.json");
    if (!in) throw Error(ErrorCode::kIoError, "cannot read nn.json in " + o.model_dir);
    std::stringstream s;
    s << in.rdbuf();
    nn = LoadNnModel(s.str());
  }
  const Featurizer featurizer(r, config);
  std::map<Split, std::vector<FeatureVector>> rows;
  std::unordered_map<std::string, const EvidenceBundle*> by_id;
  for (const EvidenceBundle& b : bundles) by_id.emplace(b.claim_id, &b);
  for (const Example& ex : examples) {
    const auto it = by_id.find(ex.id);
    const PreparedExample p = featurizer.Prepare(ex, it == by_id.end() ? nullptr : it->second);
    switch (mode) {
      case FeatureMode::kAvgEmbeddings: rows[ex.split].push_back(featurizer.Averaged(p)); break;
      case FeatureMode::kLstmEmbeddings: rows[ex.split].push_back(featurizer.LstmOnly(p, *nn)); break;
      case FeatureMode::kLstmPlusHidden: rows[ex.split].push_back(featurizer.WithHidden(p, *nn)); break;
    }
  }
  FeatureLayout layout = featurizer.Layout(mode, nn ? nn->lstm_units() : 0);
  if (nn && mode == FeatureMode::kLstmPlusHidden) layout.hidden_dim = nn->hidden_units();
  for (const auto& [split, vectors] : rows) {
    std::ostringstream s;
    write_features(s, vectors);
    WriteFile(fs::path(o.out) / ("features_" + std::string(SplitName(split)) + ".tsv"), s.str());
  }
  WriteFile(fs::path(o.out) / "layout.json", layout.ToJson() + "\n");
  std::cout << "wrote " << examples.size() << " feature vectors of length " << layout.size()
            << " to " << o.out << '\n';
  return 0;
}

int Train(const Options& o) {
  if (o.out.empty()) ThrowInvalid("--out DIR is required");
  if (o.model == "all") ThrowInvalid("train needs a single --model");
  const Resources r = Resources::LoadDir(o.resources);
  const ExperimentConfig config = MakeConfig(o);
  const auto examples = LoadData(o);
  const auto bundles = Evidence(o, config, examples, r);
  const ExperimentResult result = run_experiment(config, examples, bundles, r);
  save_artifacts(result, o.out);
  const NamedReport row{std::string(ModelDisplayName(config.model)), result.report};
  print_metrics_table(std::cout, std::span<const NamedReport>(&row, 1));
  if (!result.missing_evidence.empty()) {
    std::cout << result.missing_evidence.size() << " examples had no evidence bundle\n";
  }
  std::cout << "artifacts written to " << o.out << '\n';
  return 0;
}

int Evaluate(const Options& o) {
  const Resources r = Resources::LoadDir(o.resources);
  const ExperimentConfig config = MakeConfig(o);
  const auto examples = LoadData(o);
  const auto bundles = Evidence(o, config, examples, r);

  std::vector<ModelKind> models;
  if (o.model == "all") {
    models = {ModelKind::kSvmNn, ModelKind::kNn, ModelKind::kSvm};
  } else {
    models = {config.model};
  }
  Experiment experiment(examples, bundles, r, config);
  std::vector<NamedReport> rows;
  std::vector<Label> gold;
  for (ModelKind m : models) {
    ExperimentResult result = experiment.Run(m);
    gold = result.test_gold;
    if (!o.out.empty()) save_artifacts(result, fs::path(o.out) / std::string(ModelKindName(m)));
    rows.emplace_back(std::string(ModelDisplayName(m)), result.report);
  }
  rows.emplace_back("all false", compute_metrics(gold, std::vector<Label>(gold.size(), Label::kFalse)));
  rows.emplace_back("all true", compute_metrics(gold, std::vector<Label>(gold.size(), Label::kTrue)));

  std::cout << "Task " << TaskName(config.task) << ", external support: " << config.Describe()
            << ", seed " << config.seed << "\n\n";
  print_metrics_table(std::cout, rows);
  if (!o.out.empty()) {
    std::ostringstream csv;
    write_metrics_csv(csv, rows);
    WriteFile(fs::path(o.out) / "report.csv", csv.str());
    std::cout << "\nreport written to " << (fs::path(o.out) / "report.csv").string() << '\n';
  }
  return 0;
}

int Predict(const Options& o) {
  if (o.model_dir.empty()) ThrowInvalid("--model-dir DIR is required");
  const Resources r = Resources::LoadDir(o.resources);
  const TrainedArtifacts artifacts = TrainedArtifacts::Load(o.model_dir);
  Example ex;
  ex.id = "claim";
  if (!o.question.empty() || !o.answer.empty()) {
    ex.question = o.question;
    ex.answer = o.answer;
    ex.claim_text = cqa_build_claim(o.question, o.answer);
  } else {
    ex.claim_text = o.claim;
  }
  Engines engines(o, artifacts.config.engines);
  CollectOptions options;
  options.parallelism = o.parallelism;
  auto sources = engines.Sources(artifacts.config.WantsPages());
  const Prediction p = predict(ex, artifacts, r, sources, options);

  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", p.confidence);
  std::cout << "label: " << LabelName(p.label) << "\nconfidence: " << buf
            << "\nquery: " << (p.query.empty() ? "(none)" : p.query.Text()) << '\n';
  if (p.low_evidence) std::cout << "low evidence: no search results survived\n";
  const char* engine_names[2] = {"google", "bing"};
  for (int e = 0; e < 2; ++e) {
    if (const auto& m = p.summary.best_snippet[e]) {
      std::cout << engine_names[e] << " snippet (rank " << m->rank << "): " << m->text << '\n';
    }
    if (const auto& m = p.summary.best_triplet[e]) {
      std::cout << engine_names[e] << " page (rank " << m->rank << "): " << m->text << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veriscope: claim verification with web evidence"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--resources", o.resources,
                    "Directory with idf.tsv, embeddings.txt and domain lists");
    cmd->add_option("--data", o.data, "Dataset (JSON lines)");
    cmd->add_option("--engine", o.engine, "google, bing, both or fixture")
        ->check(CLI::IsMember({"google", "bing", "both", "fixture"}));
    cmd->add_option("--source", o.source, "snippets, pages or both")
        ->check(CLI::IsMember({"snippets", "pages", "both"}));
    cmd->add_option("--task", o.task, "rumor or cqa")->check(CLI::IsMember({"rumor", "cqa"}));
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--fixtures", o.fixtures, "Fixture directory (offline search)");
    cmd->add_option("--evidence", o.evidence, "Saved evidence directory");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--parallelism", o.parallelism, "Concurrent page fetches");
  };
  auto add_training = [&](CLI::App* cmd, bool allow_all) {
    std::vector<std::string> models = {"nn", "svm", "svm+nn"};
    if (allow_all) models.push_back("all");
    cmd->add_option("--model", o.model, "nn, svm or svm+nn")->check(CLI::IsMember(models));
    cmd->add_option("--epochs", o.epochs, "Network training epochs");
    cmd->add_flag("--no-grid-search", o.no_grid, "Use --svm-c and --svm-gamma as given");
    cmd->add_option("--svm-c", o.svm_c, "SVM C without grid search");
    cmd->add_option("--svm-gamma", o.svm_gamma, "SVM gamma without grid search");
  };

  auto* gen = app.add_subcommand("gen-query", "Print the search query for claims");
  add_common(gen);
  gen->add_option("--claim", o.claim, "A single claim");

  auto* fetch = app.add_subcommand("fetch-evidence", "Retrieve and store evidence bundles");
  add_common(fetch);

  auto* feat = app.add_subcommand("featurize", "Write feature vectors");
  add_common(feat);
  feat->add_option("--mode", o.mode, "avg_embeddings, lstm_embeddings or lstm_plus_hidden");
  feat->add_option("--model-dir", o.model_dir, "Trained network for LSTM modes");

  auto* train = app.add_subcommand("train", "Train one model and save its artifacts");
  add_common(train);
  add_training(train, false);

  auto* eval = app.add_subcommand("evaluate", "Train and evaluate, print the results table");
  add_common(eval);
  add_training(eval, true);
  o.model = "all";

  auto* pred = app.add_subcommand("predict", "Classify one claim");
  add_common(pred);
  pred->add_option("--claim", o.claim, "Claim text");
  pred->add_option("--question", o.question, "cQA question");
  pred->add_option("--answer", o.answer, "cQA answer");
  pred->add_option("--model-dir", o.model_dir, "Artifacts written by train");

  CLI11_PARSE(app, argc, argv);
  if (train->parsed() && o.model == "all") o.model = "svm+nn";
  try {
    if (gen->parsed()) return GenQuery(o);
    if (fetch->parsed()) return FetchEvidence(o);
    if (feat->parsed()) return Featurize(o);
    if (train->parsed()) return Train(o);
    if (eval->parsed()) return Evaluate(o);
    if (pred->parsed()) return Predict(o);
  } catch (const Error& e) {
    std::cerr << "veriscope: " << ErrorCodeName(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "veriscope: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
