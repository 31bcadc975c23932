#include "veriscope/pipeline.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "veriscope/error.h"

namespace veriscope {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view EngineChoiceName(EngineChoice v) {
  switch (v) {
    case EngineChoice::kGoogle: return "google";
    case EngineChoice::kBing: return "bing";
    case EngineChoice::kBoth: return "both";
  }
  return "both";
}

std::string_view SourceChoiceName(SourceChoice v) {
  switch (v) {
    case SourceChoice::kSnippets: return "snippets";
    case SourceChoice::kPages: return "pages";
    case SourceChoice::kBoth: return "both";
  }
  return "both";
}

std::string_view ModelKindName(ModelKind v) {
  switch (v) {
    case ModelKind::kNn: return "nn";
    case ModelKind::kSvm: return "svm";
    case ModelKind::kSvmNn: return "svm+nn";
  }
  return "svm+nn";
}

std::string_view ModelDisplayName(ModelKind v) {
  switch (v) {
    case ModelKind::kNn: return "NN";
    case ModelKind::kSvm: return "SVM";
    case ModelKind::kSvmNn: return "SVM + NN";
  }
  return "SVM + NN";
}

std::string_view TaskName(Task v) { return v == Task::kCqa ? "cqa" : "rumor"; }

EngineChoice ParseEngineChoice(std::string_view name) {
  if (name == "google") return EngineChoice::kGoogle;
  if (name == "bing") return EngineChoice::kBing;
  if (name == "both") return EngineChoice::kBoth;
  ThrowInvalid("unknown engine choice '" + std::string(name) + "'");
}

SourceChoice ParseSourceChoice(std::string_view name) {
  if (name == "snippets") return SourceChoice::kSnippets;
  if (name == "pages") return SourceChoice::kPages;
  if (name == "both") return SourceChoice::kBoth;
  ThrowInvalid("unknown source choice '" + std::string(name) + "'");
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "nn") return ModelKind::kNn;
  if (name == "svm") return ModelKind::kSvm;
  if (name == "svm+nn") return ModelKind::kSvmNn;
  ThrowInvalid("unknown model '" + std::string(name) + "'");
}

Task ParseTask(std::string_view name) {
  if (name == "rumor") return Task::kRumor;
  if (name == "cqa") return Task::kCqa;
  ThrowInvalid("unknown task '" + std::string(name) + "'");
}

Resources Resources::LoadDir(const fs::path& dir) {
  Resources r;
  r.idf = IdfTable::LoadFile((dir / "idf.tsv").string());
  r.embeddings = load_embeddings_file((dir / "embeddings.txt").string());
  const fs::path blacklist = dir / "unreliable_domains.txt";
  if (fs::exists(blacklist)) {
    r.unreliable = DomainPolicy::LoadFile(DomainPolicy::Mode::kBlacklist, blacklist.string());
  }
  const fs::path whitelist = dir / "cqa_whitelist.txt";
  r.whitelist = fs::exists(whitelist)
                    ? DomainPolicy::LoadFile(DomainPolicy::Mode::kWhitelist, whitelist.string())
                    : DomainPolicy(DomainPolicy::Mode::kWhitelist, {});
  return r;
}

ExperimentConfig ExperimentConfig::Normalized() const {
  ExperimentConfig c = *this;
  if (c.task == Task::kCqa) c.sources = SourceChoice::kSnippets;
  c.nn.seed = seed;
  c.svm.seed = seed;
  return c;
}

EvidenceGate ExperimentConfig::Gate() const {
  const ExperimentConfig c = Normalized();
  EvidenceGate gate;
  gate.google = c.engines != EngineChoice::kBing;
  gate.bing = c.engines != EngineChoice::kGoogle;
  gate.snippets = c.sources != SourceChoice::kPages;
  gate.pages = c.sources != SourceChoice::kSnippets;
  return gate;
}

const DomainPolicy& ExperimentConfig::Policy(const Resources& resources) const {
  return task == Task::kCqa ? resources.whitelist : resources.unreliable;
}

std::string ExperimentConfig::Describe() const {
  const ExperimentConfig c = Normalized();
  return std::string(EngineChoiceName(c.engines)) + "; " + std::string(SourceChoiceName(c.sources));
}

CollectOptions collect_options(const ExperimentConfig& config, const Resources& resources) {
  CollectOptions options;
  options.policy = config.Policy(resources);
  options.fetch_pages = config.WantsPages();
  return options;
}

namespace {

Query QueryOrEmpty(std::string_view claim, const IdfTable& idf, const std::string& id) {
  try {
    return generate_query(claim, idf, id);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyQuery) throw;
    Query q;
    q.origin_claim_id = id;
    return q;
  }
}

EvidenceBundle Collect(const std::string& id, const Query& query,
                       std::span<const EngineSource> sources, const CollectOptions& options) {
  if (query.empty()) {
    EvidenceBundle bundle;
    bundle.claim_id = id;
    bundle.query = query;
    return bundle;
  }
  return collect_evidence(id, query, sources, options);
}

}  // namespace

std::vector<EvidenceBundle> gather_evidence(std::span<const Example> examples,
                                            const IdfTable& idf,
                                            std::span<const EngineSource> sources,
                                            const CollectOptions& options) {
  std::vector<EvidenceBundle> bundles;
  bundles.reserve(examples.size());
  for (const Example& ex : examples) {
    bundles.push_back(Collect(ex.id, QueryOrEmpty(ex.claim_text, idf, ex.id), sources, options));
  }
  return bundles;
}

FixtureEngines::FixtureEngines(const fs::path& root, EngineChoice engines) {
  if (engines != EngineChoice::kBing) {
    providers_.push_back(std::make_unique<FixtureProvider>(root, Engine::kGoogle));
  }
  if (engines != EngineChoice::kGoogle) {
    providers_.push_back(std::make_unique<FixtureProvider>(root, Engine::kBing));
  }
}

std::vector<EngineSource> FixtureEngines::Sources(bool with_pages) {
  std::vector<EngineSource> sources;
  for (auto& p : providers_) sources.push_back({p.get(), with_pages ? p.get() : nullptr});
  return sources;
}

std::size_t FixtureEngines::fetch_count() const {
  std::size_t n = 0;
  for (const auto& p : providers_) n += p->fetch_count();
  return n;
}

std::size_t FixtureEngines::search_count() const {
  std::size_t n = 0;
  for (const auto& p : providers_) n += p->search_count();
  return n;
}

// Layout block k takes network branch kRumorBlockBranch[k].
constexpr std::array<std::size_t, kTextBlocks> kRumorBlockBranch = {0, 2, 1, 4, 3};
constexpr std::array<std::size_t, kTextBlocks> kCqaBlockBranch = {0, 1, 2, 3, 4};

Featurizer::Featurizer(const Resources& resources, const ExperimentConfig& config)
    : resources_(&resources),
      config_(config.Normalized()),
      ctx_{&resources.idf, &resources.embeddings},
      encoder_(resources.embeddings) {}

std::array<std::string, kBranches> Featurizer::BranchNames() const {
  if (config_.task == Task::kCqa) {
    return {"question", "answer", "google_snippet", "bing_snippet", "unused"};
  }
  return NnModel{}.branch_names;
}

PreparedExample Featurizer::Prepare(const Example& example, const EvidenceBundle* bundle) const {
  PreparedExample p;
  p.id = example.id;
  p.label = example.label;
  p.split = example.split;
  p.missing_bundle = bundle == nullptr;
  if (bundle != nullptr) {
    const TextProfile claim = make_profile(example.claim_text, ctx_);
    p.summary = summarize_evidence(claim, *bundle, ctx_, config_.Gate());
  }
  p.low_evidence = p.summary.block.presence == 0;

  auto text = [](const std::optional<BestMatch>& m) { return m ? m->text : std::string(); };
  const std::string g_snippet = text(p.summary.best_snippet[0]);
  const std::string b_snippet = text(p.summary.best_snippet[1]);
  const std::string g_triplet = text(p.summary.best_triplet[0]);
  const std::string b_triplet = text(p.summary.best_triplet[1]);
  p.block_text = {example.claim_text, g_snippet, g_triplet, b_snippet, b_triplet};
  if (config_.task == Task::kCqa) {
    p.branch_text = {example.question.value_or(example.claim_text), example.answer.value_or(""),
                     g_snippet, b_snippet, ""};
  } else {
    p.branch_text = {example.claim_text, g_triplet, g_snippet, b_triplet, b_snippet};
  }
  return p;
}

EncodedExample Featurizer::Encode(const PreparedExample& prepared) const {
  EncodedExample e;
  for (std::size_t b = 0; b < kBranches; ++b) {
    e.branches[b] = encoder_.Encode(prepared.branch_text[b], config_.nn.max_tokens[b]);
  }
  const auto& values = prepared.summary.block.values;
  e.similarities = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                     static_cast<Eigen::Index>(values.size()));
  e.label = prepared.label;
  e.vectors = encoder_.vectors();
  return e;
}

FeatureLayout Featurizer::Layout(FeatureMode mode, std::size_t lstm_units) const {
  FeatureLayout layout = FeatureLayout::Make(mode, resources_->embeddings.dimension(), lstm_units);
  if (mode != FeatureMode::kAvgEmbeddings && config_.task == Task::kCqa) {
    layout.text_blocks = BranchNames();
  }
  if (mode == FeatureMode::kLstmPlusHidden) layout.hidden_dim = config_.nn.hidden_units;
  return layout;
}

FeatureVector Featurizer::Averaged(const PreparedExample& prepared) const {
  FeatureInputs in;
  in.id = prepared.id;
  in.label = prepared.label;
  in.similarities = prepared.summary.block;
  for (std::size_t k = 0; k < kTextBlocks; ++k) {
    if (prepared.block_text[k].empty()) continue;
    in.text[k] = avg_embedding(tokenize(prepared.block_text[k]), resources_->embeddings).vector;
  }
  return assemble_features(in, Layout(FeatureMode::kAvgEmbeddings));
}

namespace {

std::vector<double> ToStd(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

FeatureVector Featurizer::LstmOnly(const PreparedExample& prepared, const NnModel& model) const {
  const EncodedExample e = Encode(prepared);
  const auto encodings = branch_encodings(model, e);
  const auto& order = config_.task == Task::kCqa ? kCqaBlockBranch : kRumorBlockBranch;
  FeatureInputs in;
  in.id = prepared.id;
  in.label = prepared.label;
  in.similarities = prepared.summary.block;
  for (std::size_t k = 0; k < kTextBlocks; ++k) in.text[k] = ToStd(encodings[order[k]]);
  return assemble_features(in, Layout(FeatureMode::kLstmEmbeddings, model.lstm_units()));
}

FeatureVector Featurizer::WithHidden(const PreparedExample& prepared, const NnModel& model) const {
  const EncodedExample e = Encode(prepared);
  const ForwardResult r = nn_forward(model, e, false);
  const auto& order = config_.task == Task::kCqa ? kCqaBlockBranch : kRumorBlockBranch;
  const std::size_t width = 2 * model.lstm_units();
  FeatureInputs in;
  in.id = prepared.id;
  in.label = prepared.label;
  in.similarities = prepared.summary.block;
  for (std::size_t k = 0; k < kTextBlocks; ++k) {
    in.text[k] = ToStd(r.encoding.segment(static_cast<Eigen::Index>(order[k] * width),
                                          static_cast<Eigen::Index>(width)));
  }
  in.hidden = ToStd(r.hidden);
  FeatureLayout layout = Layout(FeatureMode::kLstmPlusHidden, model.lstm_units());
  layout.hidden_dim = model.hidden_units();
  return assemble_features(in, layout);
}

Experiment::Experiment(std::span<const Example> examples, std::span<const EvidenceBundle> bundles,
                       const Resources& resources, const ExperimentConfig& config)
    : resources_(&resources), config_(config.Normalized()), featurizer_(resources, config_) {
  std::unordered_map<std::string, const EvidenceBundle*> by_id;
  for (const EvidenceBundle& b : bundles) by_id.emplace(b.claim_id, &b);
  prepared_.reserve(examples.size());
  for (const Example& ex : examples) {
    const auto it = by_id.find(ex.id);
    const EvidenceBundle* bundle = it == by_id.end() ? nullptr : it->second;
    if (bundle == nullptr) missing_.push_back(ex.id);
    prepared_.push_back(featurizer_.Prepare(ex, bundle));
  }
}

std::vector<const PreparedExample*> Experiment::Select(Split split) const {
  std::vector<const PreparedExample*> out;
  for (const PreparedExample& p : prepared_) {
    if (p.split == split) out.push_back(&p);
  }
  return out;
}

std::vector<EncodedExample> Experiment::EncodeSplit(Split split) const {
  std::vector<EncodedExample> out;
  for (const PreparedExample* p : Select(split)) out.push_back(featurizer_.Encode(*p));
  return out;
}

const TrainResult& Experiment::Network() {
  if (!network_) {
    const auto train = EncodeSplit(Split::kTrain);
    const auto dev = EncodeSplit(Split::kDev);
    network_ = nn_train(train, dev, config_.nn);
    network_->model.branch_names = featurizer_.BranchNames();
  }
  return *network_;
}

ExperimentResult Experiment::Run(ModelKind model) {
  ExperimentResult result;
  result.config = config_;
  result.config.model = model;
  result.missing_evidence = missing_;

  const auto test = Select(Split::kTest);
  if (test.empty()) ThrowInvalid("the dataset has no test examples");
  for (const PreparedExample* p : test) {
    result.test_ids.push_back(p->id);
    result.test_gold.push_back(p->label);
  }

  if (model == ModelKind::kNn || model == ModelKind::kSvmNn) {
    const TrainResult& net = Network();
    result.nn = net.model;
    result.nn_history = net.history;
    result.nn_best_epoch = net.best_epoch;
  }

  if (model == ModelKind::kNn) {
    result.layout = featurizer_.Layout(FeatureMode::kLstmEmbeddings, result.nn->lstm_units());
    for (const PreparedExample* p : test) {
      const ForwardResult r = nn_forward(*result.nn, featurizer_.Encode(*p), false);
      result.test_scores.push_back(r.prob_true);
      result.test_predicted.push_back(r.prob_true > r.prob_false ? Label::kTrue : Label::kFalse);
    }
  } else {
    auto features = [&](const PreparedExample& p) {
      return model == ModelKind::kSvm ? featurizer_.Averaged(p)
                                      : featurizer_.WithHidden(p, *result.nn);
    };
    for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
      auto& rows = result.features[split];
      for (const PreparedExample* p : Select(split)) rows.push_back(features(*p));
    }
    result.layout = model == ModelKind::kSvm
                        ? featurizer_.Layout(FeatureMode::kAvgEmbeddings)
                        : featurizer_.Layout(FeatureMode::kLstmPlusHidden, result.nn->lstm_units());
    if (model == ModelKind::kSvmNn) result.layout.hidden_dim = result.nn->hidden_units();

    std::vector<std::vector<double>> pool;
    std::vector<Label> labels;
    for (Split split : {Split::kTrain, Split::kDev}) {
      for (const FeatureVector& f : result.features[split]) {
        pool.push_back(f.values);
        labels.push_back(f.label);
      }
    }
    SvmConfig svm_config = config_.svm;
    if (config_.grid_search) {
      result.grid = grid_search_cv(pool, labels, config_.grid, config_.folds, config_.seed,
                                   config_.svm);
      svm_config = result.grid->best;
    }
    result.svm = svm_train_smo(pool, labels, svm_config);
    for (const FeatureVector& f : result.features[Split::kTest]) {
      const double d = svm_decision(*result.svm, f.values);
      result.test_scores.push_back(1.0 / (1.0 + std::exp(-d)));
      result.test_predicted.push_back(d > 0.0 ? Label::kTrue : Label::kFalse);
    }
  }
  result.report = compute_metrics(result.test_gold, result.test_predicted);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::span<const Example> examples,
                                std::span<const EvidenceBundle> bundles,
                                const Resources& resources) {
  Experiment experiment(examples, bundles, resources, config);
  return experiment.Run(config.Normalized().model);
}

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string Exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json ConfigJson(const ExperimentConfig& c) {
  return {{"engines", EngineChoiceName(c.engines)},
          {"sources", SourceChoiceName(c.sources)},
          {"model", ModelKindName(c.model)},
          {"task", TaskName(c.task)},
          {"seed", c.seed}};
}

}  // namespace

void save_artifacts(const ExperimentResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest = {{"format", "veriscope.experiment"},
                   {"version", 1},
                   {"config", ConfigJson(result.config)},
                   {"layout", json::parse(result.layout.ToJson())},
                   {"missing_evidence", result.missing_evidence}};
  if (result.nn) manifest["nn_best_epoch"] = result.nn_best_epoch;
  WriteText(dir / "manifest.json", manifest.dump(2) + "\n");
  WriteText(dir / "layout.json", result.layout.ToJson() + "\n");

  if (result.nn) {
    WriteText(dir / "nn.json", SaveNnModel(*result.nn));
    std::ostringstream h;
    h << "epoch,train_loss,train_accuracy,dev_accuracy,dev_loss\n";
    for (const EpochStats& s : result.nn_history) {
      h << s.epoch << ',' << Exact(s.train_loss) << ',' << Exact(s.train_accuracy) << ','
        << Exact(s.dev_accuracy) << ',' << Exact(s.dev_loss) << '\n';
    }
    WriteText(dir / "nn_history.csv", h.str());
  }
  if (result.svm) WriteText(dir / "svm.json", SaveSvmModel(*result.svm));
  if (result.grid) {
    std::ostringstream g;
    write_grid_csv(g, *result.grid);
    WriteText(dir / "grid.csv", g.str());
  }
  for (const auto& [split, rows] : result.features) {
    std::ostringstream f;
    write_features(f, rows);
    WriteText(dir / ("features_" + std::string(SplitName(split)) + ".tsv"), f.str());
  }

  std::ostringstream p;
  p << "id\tgold\tpredicted\tscore\n";
  for (std::size_t i = 0; i < result.test_ids.size(); ++i) {
    p << result.test_ids[i] << '\t' << LabelName(result.test_gold[i]) << '\t'
      << LabelName(result.test_predicted[i]) << '\t' << Exact(result.test_scores[i]) << '\n';
  }
  WriteText(dir / "predictions.tsv", p.str());

  std::ostringstream m;
  for (const std::string& id : result.missing_evidence) m << id << '\n';
  WriteText(dir / "missing_evidence.txt", m.str());

  std::ostringstream r;
  const NamedReport row{std::string(ModelDisplayName(result.config.model)), result.report};
  write_metrics_csv(r, std::span<const NamedReport>(&row, 1));
  WriteText(dir / "report.csv", r.str());
}

TrainedArtifacts TrainedArtifacts::Load(const fs::path& dir) {
  TrainedArtifacts a;
  try {
    const json manifest = json::parse(ReadText(dir / "manifest.json"));
    if (manifest.at("format") != "veriscope.experiment" || manifest.at("version") != 1) {
      throw Error(ErrorCode::kFormatError, "not a version 1 experiment manifest");
    }
    const json& c = manifest.at("config");
    a.config.engines = ParseEngineChoice(c.at("engines").get<std::string>());
    a.config.sources = ParseSourceChoice(c.at("sources").get<std::string>());
    a.config.model = ParseModelKind(c.at("model").get<std::string>());
    a.config.task = ParseTask(c.at("task").get<std::string>());
    a.config.seed = c.at("seed").get<std::uint64_t>();
    a.layout = FeatureLayout::FromJson(manifest.at("layout").dump());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("experiment manifest: ") + e.what());
  }
  if (a.config.model != ModelKind::kSvm) {
    a.nn = LoadNnModel(ReadText(dir / "nn.json"));
    a.config.nn = a.nn->config;
  }
  if (a.config.model != ModelKind::kNn) {
    a.svm = LoadSvmModel(ReadText(dir / "svm.json"));
    a.config.svm = a.svm->config;
  }
  return a;
}

Prediction predict(const Example& example, const TrainedArtifacts& artifacts,
                   const Resources& resources, std::span<const EngineSource> sources,
                   const CollectOptions& options) {
  if (example.claim_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    ThrowInvalid("empty claim");
  }
  const ExperimentConfig config = artifacts.config.Normalized();
  CollectOptions effective = options;
  effective.policy = config.Policy(resources);
  effective.fetch_pages = config.WantsPages();

  Prediction out;
  out.query = QueryOrEmpty(example.claim_text, resources.idf, example.id);
  const EvidenceBundle bundle = Collect(example.id, out.query, sources, effective);
  const Featurizer featurizer(resources, config);
  const PreparedExample prepared = featurizer.Prepare(example, &bundle);
  out.summary = prepared.summary;
  out.low_evidence = prepared.low_evidence;

  switch (config.model) {
    case ModelKind::kNn:
      out.score = nn_forward(*artifacts.nn, featurizer.Encode(prepared), false).prob_true;
      break;
    case ModelKind::kSvm:
      out.score = 1.0 / (1.0 + std::exp(-svm_decision(*artifacts.svm,
                                                      featurizer.Averaged(prepared).values)));
      break;
    case ModelKind::kSvmNn:
      out.score = 1.0 / (1.0 + std::exp(-svm_decision(
                                   *artifacts.svm,
                                   featurizer.WithHidden(prepared, *artifacts.nn).values)));
      break;
  }
  out.label = out.score > 0.5 ? Label::kTrue : Label::kFalse;
  out.confidence = out.label == Label::kTrue ? out.score : 1.0 - out.score;
  return out;
}

Prediction predict(std::string_view claim, const TrainedArtifacts& artifacts,
                   const Resources& resources, std::span<const EngineSource> sources,
                   const CollectOptions& options) {
  Example ex;
  ex.id = "claim";
  ex.claim_text = std::string(claim);
  return predict(ex, artifacts, resources, sources, options);
}

}  // namespace veriscope
