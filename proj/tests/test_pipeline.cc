#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "veriscope/dataset.h"
#include "veriscope/metrics.h"
#include "veriscope/pipeline.h"
#include "veriscope/rng.h"

namespace veriscope {
namespace {

using testing::CodeOf;
using testing::kDataDir;
using testing::TempDir;

std::vector<Label> Repeat(std::size_t n_false, std::size_t n_true) {
  std::vector<Label> out(n_false, Label::kFalse);
  out.insert(out.end(), n_true, Label::kTrue);
  return out;
}

double Round1(double x) { return std::round(x * 10) / 10; }

std::vector<Example> Parse(const std::string& text) {
  std::istringstream in(text);
  return load_dataset(in);
}

// Shared, loaded once: resources, the rumor dataset, and its fixture evidence.
struct World {
  Resources resources = Resources::LoadDir(kDataDir);
  std::vector<Example> rumor = load_dataset_file((kDataDir / "rumor.jsonl").string());
  std::vector<Example> cqa = load_dataset_file((kDataDir / "cqa.jsonl").string());

  std::vector<EvidenceBundle> Gather(const ExperimentConfig& raw,
                                     const std::vector<Example>& examples,
                                     std::size_t* fetches = nullptr) const {
    const ExperimentConfig config = raw.Normalized();
    FixtureEngines engines(kDataDir / "fixtures", config.engines);
    auto sources = engines.Sources(config.WantsPages());
    auto bundles = gather_evidence(examples, resources.idf, sources,
                                   collect_options(config, resources));
    if (fetches != nullptr) *fetches = engines.fetch_count();
    return bundles;
  }

  static const World& Get() {
    static const World world;
    return world;
  }
};

ExperimentConfig Quick(ModelKind model) {
  ExperimentConfig c;
  c.model = model;
  c.nn.epochs = 15;
  c.nn.lstm_units = 6;
  c.nn.hidden_units = 10;
  c.grid_search = false;
  c.svm.c = 4;
  c.svm.gamma = 0.02;
  return c;
}

TEST_CASE("load_dataset") {
  const auto three = Parse(
      R"({"id":"a","claim":"One.","label":"true","split":"train"})"
      "\n"
      R"({"id":"b","claim":"Two.","label":"false","split":"dev"})"
      "\n\n"
      R"({"id":"c","question":"Q  here?","answer":"It is.","label":"false","split":"test"})"
      "\n");
  REQUIRE(three.size() == 3);
  CHECK(three[0].label == Label::kTrue);
  CHECK(three[1].split == Split::kDev);
  CHECK(three[2].is_cqa());
  CHECK(three[2].claim_text == "Q here? It is.");

  try {
    Parse(R"({"id":"a","claim":"x","label":"true","split":"train"})"
          "\n"
          R"({"id":"b","claim":"y","label":"maybe","split":"train"})");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }

  try {
    Parse(R"({"id":"dup","claim":"x","label":"true","split":"train"})"
          "\n"
          R"({"id":"dup","claim":"y","label":"false","split":"train"})");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("'dup'") != std::string::npos);
  }

  CHECK(CodeOf([] { Parse(R"({"id":"a","label":"true","split":"train"})"); }) ==
        ErrorCode::kFormatError);
  CHECK(CodeOf([] { Parse(R"({"id":"a","claim":"x","label":"true","split":"later"})"); }) ==
        ErrorCode::kFormatError);
  CHECK(CodeOf([] { Parse("{not json"); }) == ErrorCode::kFormatError);
  CHECK(CodeOf([] {
          Parse(R"({"id":"a","question":"q?","label":"true","split":"train"})");
        }) == ErrorCode::kFormatError);

  std::ostringstream out;
  write_dataset(out, three);
  CHECK(Parse(out.str()).size() == 3);
}

TEST_CASE("bundled datasets") {
  const World& w = World::Get();
  const DatasetStats rumor = describe_dataset(w.rumor);
  CHECK(w.rumor.size() == 200);
  CHECK(rumor.split_counts[2] == 40);
  const DatasetStats cqa = describe_dataset(w.cqa);
  CHECK(w.cqa.size() == 60);
  for (const Example& ex : w.cqa) CHECK(ex.is_cqa());
  std::ostringstream s;
  print_dataset_stats(s, rumor);
  CHECK(s.str().find("test") != std::string::npos);
}

TEST_CASE("cqa_build_claim") {
  CHECK(cqa_build_claim("Ooredoo customer service number?", "It is 111.") ==
        "Ooredoo customer service number? It is 111.");
  CHECK(cqa_build_claim("Where  is it?", "Near   the  souq.") == "Where is it? Near the souq.");
  CHECK(CodeOf([] { cqa_build_claim("Question?", ""); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([] { cqa_build_claim("  ", "answer"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("metrics reproduce the baseline rows") {
  const auto gold = Repeat(80, 40);
  const auto all_false = compute_metrics(gold, Repeat(120, 0));
  CHECK(Round1(*all_false.per_class[0].precision) == 66.7);
  CHECK(Round1(*all_false.per_class[0].recall) == 100.0);
  CHECK(Round1(all_false.per_class[0].f1) == 80.0);
  CHECK_FALSE(all_false.per_class[1].precision.has_value());
  CHECK(all_false.per_class[1].f1 == 0.0);
  CHECK(Round1(all_false.avg_recall) == 50.0);
  CHECK(Round1(all_false.avg_f1) == 40.0);
  CHECK(Round1(all_false.accuracy) == 66.7);

  const auto all_true = compute_metrics(gold, Repeat(0, 120));
  CHECK(Round1(all_true.per_class[1].f1) == 50.0);
  CHECK(Round1(all_true.avg_f1) == 25.0);
  CHECK(Round1(all_true.accuracy) == 33.3);

  const auto perfect = compute_metrics(gold, gold);
  CHECK(perfect.accuracy == 100.0);
  CHECK(perfect.avg_f1 == 100.0);
  CHECK(perfect.avg_recall == 100.0);
  CHECK(perfect.confusion[0][0] == 80);
  CHECK(perfect.confusion[1][1] == 40);

  // Only false gold examples: the true-class recall is undefined.
  const auto one_class = compute_metrics(Repeat(4, 0), Repeat(3, 1));
  CHECK_FALSE(one_class.per_class[1].recall.has_value());
  CHECK(one_class.avg_recall == doctest::Approx(75.0));

  CHECK(CodeOf([] { compute_metrics(Repeat(2, 0), Repeat(1, 0)); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(CodeOf([] { compute_metrics({}, {}); }) == ErrorCode::kInvalidArgument);

  std::ostringstream csv;
  const std::vector<NamedReport> rows = {{"all false", all_false}};
  write_metrics_csv(csv, rows);
  CHECK(csv.str() ==
        "model,false_p,false_r,false_f1,true_p,true_r,true_f1,avg_r,avg_f1,acc\n"
        "all false,66.7,100.0,80.0,--,0.0,0.0,50.0,40.0,66.7\n");
}

TEST_CASE("macro averages ignore class-preserving permutations") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<Label, Label>> pairs;
    for (int i = 0; i < 30; ++i) {
      pairs.emplace_back(rng.Below(3) ? Label::kFalse : Label::kTrue,
                         rng.Below(2) ? Label::kFalse : Label::kTrue);
    }
    auto split = [](const std::vector<std::pair<Label, Label>>& p) {
      std::vector<Label> g, q;
      for (const auto& [a, b] : p) {
        g.push_back(a);
        q.push_back(b);
      }
      return compute_metrics(g, q);
    };
    const auto before = split(pairs);
    rng.Shuffle(std::span(pairs));
    const auto after = split(pairs);
    CHECK(before.avg_f1 == doctest::Approx(after.avg_f1).epsilon(1e-12));
    CHECK(before.avg_recall == doctest::Approx(after.avg_recall).epsilon(1e-12));
    CHECK(before.accuracy == doctest::Approx(after.accuracy).epsilon(1e-12));
  }
}

TEST_CASE("configuration gating") {
  const World& w = World::Get();
  ExperimentConfig config;
  config.engines = EngineChoice::kGoogle;
  config.sources = SourceChoice::kSnippets;
  std::size_t fetches = 99;
  const auto bundles = w.Gather(config, w.rumor, &fetches);
  CHECK(fetches == 0);

  const Featurizer featurizer(w.resources, config.Normalized());
  int with_google = 0;
  for (std::size_t i = 0; i < w.rumor.size(); ++i) {
    const PreparedExample p = featurizer.Prepare(w.rumor[i], &bundles[i]);
    const SimilarityBlock& block = p.summary.block;
    for (std::size_t slot = 0; slot < kSimilaritySlots; ++slot) {
      const std::string name = SimilarityBlock::SlotName(slot);
      if (name.find("bing") != std::string::npos || name.find("page") != std::string::npos) {
        CHECK(block.values[slot] == 0.0);
      }
    }
    CHECK_FALSE(block.Present(Engine::kBing, EvidenceSource::kSnippet));
    CHECK_FALSE(block.Present(Engine::kGoogle, EvidenceSource::kPage));
    with_google += block.Present(Engine::kGoogle, EvidenceSource::kSnippet);
  }
  CHECK(with_google > 150);

  ExperimentConfig cqa;
  cqa.task = Task::kCqa;
  cqa.sources = SourceChoice::kBoth;
  const ExperimentConfig n = cqa.Normalized();
  CHECK(n.sources == SourceChoice::kSnippets);
  CHECK(&n.Policy(w.resources) == &w.resources.whitelist);
  std::size_t cqa_fetches = 99;
  w.Gather(cqa, w.cqa, &cqa_fetches);
  CHECK(cqa_fetches == 0);
  const auto names = Featurizer(w.resources, n).BranchNames();
  CHECK(names[0] == "question");
  CHECK(names[1] == "answer");
}

TEST_CASE("gathering evidence is reproducible") {
  const World& w = World::Get();
  ExperimentConfig config;
  const std::vector<Example> some(w.rumor.begin(), w.rumor.begin() + 20);
  const auto a = w.Gather(config, some);
  const auto b = w.Gather(config, some);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(BundleToJson(a[i]) == BundleToJson(b[i]));
}

TEST_CASE("experiments are deterministic and report missing evidence") {
  const World& w = World::Get();
  const ExperimentConfig config = Quick(ModelKind::kSvmNn);
  auto bundles = w.Gather(config, w.rumor);
  const std::string dropped = bundles[3].claim_id;
  bundles.erase(bundles.begin() + 3);

  auto csv = [](const ExperimentResult& r) {
    std::ostringstream out;
    const std::vector<NamedReport> rows = {{"m", r.report}};
    write_metrics_csv(out, rows);
    return out.str();
  };
  const ExperimentResult a = run_experiment(config, w.rumor, bundles, w.resources);
  const ExperimentResult b = run_experiment(config, w.rumor, bundles, w.resources);
  CHECK(csv(a) == csv(b));
  CHECK(a.test_scores == b.test_scores);
  CHECK(a.missing_evidence == std::vector<std::string>{dropped});
  CHECK(a.layout.size() == 24 + 5 * 12 + 10);
  CHECK(a.features.at(Split::kTest).size() == 40);
  CHECK(a.report.total == 40);

  TempDir dir("artifacts");
  save_artifacts(a, dir.path());
  for (const char* f : {"manifest.json", "layout.json", "nn.json", "svm.json",
                        "predictions.tsv", "report.csv", "features_train.tsv"}) {
    CHECK(std::filesystem::exists(dir.path() / f));
  }
  const TrainedArtifacts loaded = TrainedArtifacts::Load(dir.path());
  CHECK(loaded.layout == a.layout);
  REQUIRE(loaded.svm.has_value());
  for (const FeatureVector& f : a.features.at(Split::kTest)) {
    CHECK(svm_decision(*loaded.svm, f.values) == svm_decision(*a.svm, f.values));
  }
}

TEST_CASE("predict") {
  const World& w = World::Get();
  const ExperimentConfig config = Quick(ModelKind::kSvm);
  const auto bundles = w.Gather(config, w.rumor);
  Experiment experiment(w.rumor, bundles, w.resources, config);
  const ExperimentResult result = experiment.Run(ModelKind::kSvm);

  TrainedArtifacts artifacts;
  artifacts.config = result.config;
  artifacts.svm = result.svm;
  artifacts.layout = result.layout;

  FixtureEngines engines(kDataDir / "fixtures", EngineChoice::kBoth);
  const auto sources = engines.Sources(true);
  const CollectOptions options = collect_options(result.config, w.resources);

  // A training claim the model places on the true side, asked again from scratch.
  const auto& train = result.features.at(Split::kTrain);
  const FeatureVector* chosen = nullptr;
  for (const FeatureVector& f : train) {
    if (f.label == Label::kTrue && svm_decision(*result.svm, f.values) > 0.5) {
      chosen = &f;
      break;
    }
  }
  REQUIRE(chosen != nullptr);
  const Example* source = nullptr;
  for (const Example& ex : w.rumor) {
    if (ex.id == chosen->id) source = &ex;
  }
  REQUIRE(source != nullptr);
  const Prediction p = predict(source->claim_text, artifacts, w.resources, sources, options);
  CHECK(p.label == Label::kTrue);
  CHECK(p.score == doctest::Approx(1.0 / (1.0 + std::exp(-svm_decision(*result.svm, chosen->values)))));
  CHECK(p.confidence == p.score);
  CHECK_FALSE(p.query.empty());
  CHECK_FALSE(p.low_evidence);

  CHECK(CodeOf([&] { predict("   ", artifacts, w.resources, sources, options); }) ==
        ErrorCode::kInvalidArgument);

  const Prediction lonely = predict("Zorblat quixotic vexillology mumbles", artifacts,
                                    w.resources, sources, options);
  CHECK(lonely.low_evidence);
  CHECK(lonely.confidence >= 0.5);
}

}  // namespace
}  // namespace veriscope
