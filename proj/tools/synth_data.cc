// Writes the bundled synthetic dataset: word vectors, a reference corpus with
// its idf table, rumor and cQA examples, and search fixtures whose evidence
// separates the classes. Output is a deterministic function of the seed.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "veriscope/dataset.h"
#include "veriscope/error.h"
#include "veriscope/querygen.h"
#include "veriscope/retrieve.h"
#include "veriscope/rng.h"
#include "veriscope/text.h"

namespace fs = std::filesystem;
using namespace veriscope;

namespace {

constexpr std::size_t kDim = 8;

const std::vector<std::string> kEntities = {
    "Riverton", "Oakdale",  "Brookfield", "Fairview", "Ashford",  "Kingsley",
    "Norwood",  "Eastbrook", "Westfield", "Crestwood", "Harlow",   "Linden",
    "Marlowe",  "Pinecrest", "Quarry",    "Redcliff",  "Stanmore", "Thornbury",
    "Vantor",   "Wexley",    "Yarrow",    "Zelden",    "Doha",     "Lusail"};

const std::vector<std::string> kSubjects = {
    "council", "mayor",   "governor", "company",  "university", "hospital",
    "police",  "airline", "ministry", "senator",  "court",      "bank",
    "museum",  "zoo",     "factory",  "festival", "club",       "church"};

const std::vector<std::string> kObjects = {
    "bridge",  "clock",   "stadium", "library", "tower",   "highway", "vaccine",
    "school",  "park",    "statue",  "train",   "airport", "market",  "river",
    "dam",     "website", "tax",     "law",     "fountain", "tunnel", "ferry",
    "lottery", "subway",  "harbor",  "mural",   "garden",  "pipeline", "reactor",
    "casino",  "prison",  "beach",   "castle"};

const std::vector<std::string> kVerbs = {
    "banned",   "closed",    "demolished", "bought",   "sold",     "renamed",
    "opened",   "funded",    "relocated",  "seized",   "painted",  "cancelled",
    "rebuilt",  "abandoned", "privatized", "flooded",  "designed", "launched",
    "expanded", "inspected", "evacuated",  "auctioned", "restored", "licensed"};

const std::vector<std::string> kAdjectives = {
    "historic", "famous", "ancient", "giant",    "public",  "private", "abandoned",
    "modern",   "haunted", "golden",  "floating", "secret",  "wooden",  "popular",
    "crowded",  "expensive", "tiny",  "colorful", "vintage", "massive"};

const std::vector<std::string> kTruthCues = {
    "confirmed", "verified",  "authentic", "accurate",   "genuine",
    "corroborated", "acknowledged", "certified", "documented", "validated",
    "statement", "records",   "spokesperson", "evidence", "official"};

const std::vector<std::string> kFalseCues = {
    "hoax",    "fake",     "debunked", "fabricated", "myth",
    "satire",  "misleading", "unfounded", "doctored", "baseless",
    "bogus",   "untrue",   "prank",    "rumor",     "falsely"};

const std::vector<std::string> kNeutral = {
    "story",  "report",   "news",   "article", "claims",   "residents", "week",
    "city",   "online",   "posted", "photo",   "video",    "shared",    "social",
    "media",  "users",    "local",  "sources", "visitors", "weekend",   "morning",
    "traffic", "weather", "budget", "meeting", "project",  "plans",     "crowd"};

const std::vector<std::string> kFunction = {
    "the", "a",    "an",   "of",   "in",   "on",   "at",    "by",   "for",  "with",
    "and", "or",   "but",  "that", "this", "it",   "was",   "were", "is",   "are",
    "not", "did",  "has",  "had",  "to",   "from", "about", "said", "near", "after"};

const std::vector<std::string> kReliable = {
    "dailyherald.example", "citypost.example",  "metrotimes.example",
    "gazette.example",     "newswire.example",  "tribune.example",
    "chronicle.example",   "observer.example",  "ledger.example"};
const std::vector<std::string> kUnreliable = {
    "hoaxwire.example", "viralbuzz.example", "clickfarm.example"};
const std::vector<std::string> kWhitelist = {
    "dohanews.example", "gov.qa.example", "qatarday.example", "iloveqatar.example"};
const std::vector<std::string> kForum = {"forum.example", "chatter.example"};

std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string Capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

class Generator {
 public:
  Generator(fs::path out, std::uint64_t seed) : out_(std::move(out)), rng_(seed) {}

  void Run() {
    fs::create_directories(out_);
    fs::remove_all(out_ / "fixtures");
    WriteEmbeddings();
    WriteCorpus();
    WriteRumor();
    WriteCqa();
  }

 private:
  const std::string& Pick(const std::vector<std::string>& v) { return v[rng_.Below(v.size())]; }
  bool Chance(double p) { return rng_.Uniform() < p; }

  void WriteEmbeddings() {
    std::ofstream out(out_ / "embeddings.txt");
    std::set<std::string> seen;
    // Category centroids; the first coordinate carries the truth signal.
    auto emit = [&](const std::vector<std::string>& words, double truth, std::size_t axis) {
      for (const std::string& w : words) {
        const std::string lw = Lower(w);
        if (!seen.insert(lw).second) continue;
        out << lw;
        for (std::size_t k = 0; k < kDim; ++k) {
          double v = rng_.Uniform(-0.4, 0.4);
          if (k == 0) v += truth;
          if (k == axis) v += 1.0;
          char buf[32];
          std::snprintf(buf, sizeof buf, " %.5f", v);
          out << buf;
        }
        out << '\n';
      }
    };
    emit(kTruthCues, 1.5, 1);
    emit(kFalseCues, -1.5, 1);
    emit(kEntities, 0.0, 2);
    emit(kSubjects, 0.0, 3);
    emit(kObjects, 0.0, 4);
    emit(kVerbs, 0.0, 5);
    emit(kAdjectives, 0.0, 6);
    emit(kNeutral, 0.0, 7);
    emit(kFunction, 0.0, 0);
  }

  std::string NoiseSentence() {
    std::string s = "The " + Pick(kAdjectives) + " " + Pick(kObjects) + " " + Pick(kVerbs) +
                    " by the " + Pick(kSubjects) + " drew " + Pick(kNeutral) + " from " +
                    Pick(kNeutral) + " in " + Pick(kEntities) + ".";
    return s;
  }

  void WriteCorpus() {
    std::vector<std::string> docs;
    std::ofstream out(out_ / "corpus.txt");
    for (int d = 0; d < 1000; ++d) {
      std::string doc;
      const int sentences = 2 + static_cast<int>(rng_.Below(4));
      for (int s = 0; s < sentences; ++s) {
        if (s) doc += ' ';
        switch (rng_.Below(4)) {
          case 0: doc += NoiseSentence(); break;
          case 1:
            doc += Capitalize(Pick(kNeutral)) + " " + Pick(kFunction) + " " + Pick(kSubjects) +
                   " " + Pick(kVerbs) + " " + Pick(kFunction) + " " + Pick(kObjects) + ".";
            break;
          case 2:
            doc += "Officials in " + Pick(kEntities) + " " + Pick(kVerbs) + " the " +
                   Pick(kAdjectives) + " " + Pick(kObjects) + ".";
            break;
          default:
            doc += "The " + Pick(kNeutral) + " was " + Pick(Chance(0.5) ? kTruthCues : kFalseCues) +
                   " by " + Pick(kNeutral) + ".";
        }
      }
      out << doc << '\n';
      docs.push_back(std::move(doc));
    }
    idf_ = build_idf(docs);
    std::ofstream idf(out_ / "idf.tsv");
    idf_.Save(idf);
  }

  struct Facts {
    std::string e1, e2, subject, verb, adjective, object;
  };

  Facts RandomFacts() {
    Facts f;
    f.e1 = Pick(kEntities);
    do {
      f.e2 = Pick(kEntities);
    } while (f.e2 == f.e1);
    f.subject = Pick(kSubjects);
    f.verb = Pick(kVerbs);
    f.adjective = Pick(kAdjectives);
    f.object = Pick(kObjects);
    return f;
  }

  static std::string ClaimText(const Facts& f) {
    return "The " + f.subject + " of " + f.e1 + " " + f.verb + " the " + f.adjective + " " +
           f.object + " in " + f.e2 + ".";
  }

  std::string Supporting(const Facts& f) {
    const std::string cue = Pick(kTruthCues);
    switch (rng_.Below(3)) {
      case 0:
        return "The " + f.subject + " of " + f.e1 + " " + f.verb + " the " + f.adjective + " " +
               f.object + " in " + f.e2 + ", a " + cue + " " + Pick(kTruthCues) + " said.";
      case 1:
        return "Records " + Pick(kTruthCues) + " that the " + f.subject + " of " + f.e1 + " " +
               f.verb + " the " + f.adjective + " " + f.object + " in " + f.e2 + ".";
      default:
        return "In " + f.e2 + " the " + f.adjective + " " + f.object + " was " + f.verb +
               " by the " + f.subject + " of " + f.e1 + ", " + cue + " " + Pick(kTruthCues) +
               " show.";
    }
  }

  std::string Debunking(const Facts& f) {
    const std::string cue = Pick(kFalseCues);
    switch (rng_.Below(3)) {
      case 0:
        return "The " + f.subject + " of " + f.e1 + " did not " + f.verb + " any " + f.object +
               "; the " + Pick(kNeutral) + " is a " + cue + " and " + Pick(kFalseCues) + ".";
      case 1:
        return "Claims about the " + f.adjective + " " + f.object + " in " + f.e2 + " are " +
               Pick(kFalseCues) + ", the " + cue + " " + Pick(kNeutral) + " was shared online.";
      default:
        return "A " + cue + " " + Pick(kNeutral) + " said " + f.e1 + " " + f.verb + " the " +
               f.object + ", but it was " + Pick(kFalseCues) + ".";
    }
  }

  std::string Neutral(const Facts& f) {
    return "Residents of " + f.e1 + " discussed the " + f.object + " in " + f.e2 +
           " at a " + Pick(kNeutral) + " this " + Pick(kNeutral) + ".";
  }

  std::string Page(const std::string& title, const std::vector<std::string>& body) {
    std::string html = "<!DOCTYPE html><html><head><title>" + title +
                       "</title><script>var tracker = \"" + Pick(kNeutral) +
                       "\";</script><style>p { margin: 0 }</style></head><body>\n<h1>" + title +
                       "</h1>\n";
    for (const std::string& p : body) html += "<p>" + p + "</p>\n";
    html += "<footer>&copy; 2017 " + Pick(kNeutral) + " &amp; " + Pick(kNeutral) +
            "</footer></body></html>\n";
    return html;
  }

  std::string Url(const std::string& domain, const std::string& id, const std::string& engine,
                  std::size_t k) {
    return "https://" + domain + "/" + engine + "/" + id + "-" + std::to_string(k);
  }

  // Evidence kinds for one hit.
  enum class Kind { kSignal, kNeutral, kNoise, kPlanted };

  std::vector<FixtureHit> Hits(const Facts& f, Label label, bool hard, const std::string& id,
                               const std::string& engine, bool cqa) {
    std::vector<Kind> kinds;
    const std::size_t signal = hard ? 0 : 2 + rng_.Below(2);
    for (std::size_t i = 0; i < signal; ++i) kinds.push_back(Kind::kSignal);
    const std::size_t neutral = hard ? 2 + rng_.Below(2) : rng_.Below(2);
    for (std::size_t i = 0; i < neutral; ++i) kinds.push_back(Kind::kNeutral);
    const std::size_t noise = 1 + rng_.Below(4);
    for (std::size_t i = 0; i < noise; ++i) kinds.push_back(Kind::kNoise);
    if (Chance(0.4)) kinds.push_back(Kind::kPlanted);
    rng_.Shuffle(std::span<Kind>(kinds));

    std::vector<FixtureHit> hits;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      FixtureHit hit;
      std::string lead;
      std::string domain = Pick(cqa ? kWhitelist : kReliable);
      switch (kinds[k]) {
        case Kind::kSignal:
          lead = label == Label::kTrue ? Supporting(f) : Debunking(f);
          break;
        case Kind::kNeutral:
          lead = Neutral(f);
          break;
        case Kind::kNoise:
          lead = NoiseSentence();
          break;
        case Kind::kPlanted:
          // Opposite evidence from a source the domain policy rejects.
          lead = label == Label::kTrue ? Debunking(f) : Supporting(f);
          domain = Pick(cqa ? kForum : kUnreliable);
          break;
      }
      hit.url = Url(domain, id, engine, k + 1);
      hit.snippet = lead;
      if (!cqa && Chance(0.75)) {
        std::vector<std::string> body;
        const std::size_t before = rng_.Below(4);
        for (std::size_t i = 0; i < before; ++i) body.push_back(NoiseSentence());
        std::string block = lead;
        if (kinds[k] == Kind::kSignal || kinds[k] == Kind::kPlanted) {
          const bool supports = (kinds[k] == Kind::kSignal) == (label == Label::kTrue);
          block += " " + (supports ? Supporting(f) : Debunking(f));
          block += " " + (supports ? Supporting(f) : Debunking(f));
        } else {
          block += " " + NoiseSentence();
        }
        body.push_back(block);
        const std::size_t after = rng_.Below(4);
        for (std::size_t i = 0; i < after; ++i) body.push_back(NoiseSentence());
        hit.page_html = Page(Capitalize(f.object) + " in " + f.e2, body);
      }
      hits.push_back(std::move(hit));
    }
    return hits;
  }

  // Stores the hits under the query, or under a shorter prefix so retrieval
  // has to relax. Returns the number of dropped tokens.
  std::size_t Store(const Query& query, Engine engine, const std::vector<FixtureHit>& hits,
                    bool relax_needed) {
    Query key = query;
    std::size_t dropped = 0;
    if (relax_needed && key.size() > 2) {
      dropped = 1 + rng_.Below(std::min<std::size_t>(2, key.size() - 2));
      key.tokens.resize(key.size() - dropped);
    }
    write_fixture(out_ / "fixtures", engine, key, hits);
    return dropped;
  }

  void Evidence(const std::string& id, const std::string& claim, const Facts& f, Label label,
                bool hard, bool cqa) {
    const Query query = generate_query(claim, idf_, id);
    if (!queries_.insert(NormalizeQuery(query)).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate query for " + id);
    }
    const bool nothing = Chance(0.03);
    const bool no_bing = !nothing && Chance(0.06);
    const bool relax = Chance(0.1);
    if (nothing) return;
    Store(query, Engine::kGoogle, Hits(f, label, hard, id, "google", cqa), relax);
    if (!no_bing) Store(query, Engine::kBing, Hits(f, label, hard, id, "bing", cqa), relax);
  }

  Facts UniqueFacts() {
    for (;;) {
      Facts f = RandomFacts();
      const std::string key = f.e1 + f.e2 + f.subject + f.verb + f.object;
      if (used_.insert(key).second) return f;
    }
  }

  // 2:1 false:true within each split.
  std::vector<std::pair<Split, Label>> Assignments(std::size_t train, std::size_t dev,
                                                   std::size_t test, bool balanced) {
    std::vector<std::pair<Split, Label>> out;
    auto add = [&](Split s, std::size_t n) {
      const std::size_t n_true = balanced ? n / 2 : n / 3;
      for (std::size_t i = 0; i < n; ++i) out.emplace_back(s, i < n_true ? Label::kTrue : Label::kFalse);
    };
    add(Split::kTrain, train);
    add(Split::kDev, dev);
    add(Split::kTest, test);
    rng_.Shuffle(std::span<std::pair<Split, Label>>(out));
    return out;
  }

  void WriteRumor() {
    std::vector<Example> examples;
    const auto plan = Assignments(120, 40, 40, false);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      Example ex;
      char id[32];
      std::snprintf(id, sizeof id, "rumor-%03zu", i + 1);
      ex.id = id;
      ex.split = plan[i].first;
      ex.label = plan[i].second;
      const Facts f = UniqueFacts();
      ex.claim_text = ClaimText(f);
      Evidence(ex.id, ex.claim_text, f, ex.label, Chance(0.1), false);
      examples.push_back(std::move(ex));
    }
    std::ofstream out(out_ / "rumor.jsonl");
    write_dataset(out, examples);
  }

  void WriteCqa() {
    const std::vector<std::string> categories = {"Transport", "Housing", "Services",
                                                 "Shopping", "Leisure"};
    std::vector<Example> examples;
    const auto plan = Assignments(36, 12, 12, true);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      Example ex;
      char id[32];
      std::snprintf(id, sizeof id, "cqa-%03zu", i + 1);
      ex.id = id;
      ex.split = plan[i].first;
      ex.label = plan[i].second;
      const Facts f = UniqueFacts();
      ex.question = "Is it true that the " + f.subject + " of " + f.e1 + " " + f.verb +
                    " the " + f.object + "?";
      ex.answer = "Yes, the " + f.adjective + " " + f.object + " in " + f.e2 + " was " +
                  f.verb + " by the " + f.subject + ".";
      ex.category = Pick(categories);
      ex.claim_text = cqa_build_claim(*ex.question, *ex.answer);
      Evidence(ex.id, ex.claim_text, f, ex.label, Chance(0.1), true);
      examples.push_back(std::move(ex));
    }
    std::ofstream out(out_ / "cqa.jsonl");
    write_dataset(out, examples);
  }

  fs::path out_;
  Rng rng_;
  IdfTable idf_;
  std::set<std::string> queries_;
  std::set<std::string> used_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic fact-checking dataset"};
  std::string out = "data";
  std::uint64_t seed = 2018;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Random seed");
  CLI11_PARSE(app, argc, argv);
  try {
    Generator(out, seed).Run();
  } catch (const std::exception& e) {
    std::cerr << "veriscope-synth: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
