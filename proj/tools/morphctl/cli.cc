// Copyright 2026 The morphdesk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "morph/api.h"
#include "morph/config.h"
#include "morph/error.h"
#include "morph/io_formats.h"
#include "morph/simulate.h"
#include "morph/storage.h"
#include "morph/workflow.h"

namespace morphctl {
namespace {

namespace fs = std::filesystem;
using morph::Error;
using morph::ErrorCode;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot read " + path, path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kStorage, "cannot write " + path.string(), path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kStorage, "short write to " + path.string(), path.string());
}

morph::Id NeedVariety(morph::Repository& repo, const std::string& name) {
  auto v = repo.FindVariety(name);
  if (!v) throw Error(ErrorCode::kUnknownVariety, "no variety named " + name, "variety");
  return v->id;
}

struct Options {
  std::string config;
  std::string database;

  std::string variety;
  std::string kind;
  std::string file;
  std::string dir;
  std::string out;
  std::string format = "unimorph";
  std::string structure;
  std::string name;
  bool create = false;
  bool all_or_nothing = false;

  std::string gold;
  std::string policy;
  int budget = 0;
  std::uint64_t seed = 0;
  int round_size = 100;
  int eval_size = 0;
  int n_train = 100;
  int delta_n = 100;
  int epochs = 15;
  bool no_rules = false;
  std::string sources = "rule,neural";

  std::string host;
  int port = -1;
};

class Runner {
 public:
  Runner(const Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {
    if (!o_.config.empty()) config_ = morph::LoadConfig(o_.config);
    if (!o_.database.empty()) config_.database = o_.database;
  }

  morph::SqliteRepository& repo() {
    if (!repo_) repo_ = std::make_unique<morph::SqliteRepository>(config_.database);
    return *repo_;
  }

  int Import() {
    morph::Id variety;
    if (auto v = repo().FindVariety(o_.variety)) {
      variety = v->id;
    } else if (o_.create) {
      morph::Variety fresh;
      fresh.name = o_.variety;
      variety = repo().Create(fresh);
    } else {
      throw Error(ErrorCode::kUnknownVariety, "no variety named " + o_.variety + " (use --create)",
                  "variety");
    }
    morph::ImportOptions opts{o_.all_or_nothing};
    std::map<morph::MaterialKind, morph::ImportResult> results;
    if (!o_.dir.empty()) {
      morph::MaterialBundle bundle;
      for (morph::MaterialKind kind : morph::kAllMaterialKinds) {
        fs::path p = fs::path(o_.dir) / morph::MaterialFileName(o_.variety, kind);
        if (fs::exists(p)) bundle[kind] = ReadFile(p.string());
      }
      if (bundle.empty()) throw Error(ErrorCode::kNotFound, "no material files in " + o_.dir, "dir");
      results = morph::ImportMaterials(repo(), variety, bundle, opts);
    } else {
      if (o_.kind.empty() || o_.file.empty()) {
        throw Error(ErrorCode::kUsageError, "import needs --dir, or --kind with --file");
      }
      morph::MaterialKind kind = morph::ParseMaterialKind(o_.kind);
      results[kind] = morph::Import(repo(), variety, kind, ReadFile(o_.file), opts);
    }
    int rejected = 0;
    for (const auto& [kind, r] : results) {
      out_ << morph::ToString(kind) << '\t' << r.count << '\t' << r.errors.size() << '\n';
      for (const morph::RowError& e : r.errors) {
        err_ << morph::ToString(kind) << ": line " << e.line << ": " << e.reason;
        if (!e.detail.empty()) err_ << " (" << e.detail << ")";
        err_ << '\n';
        ++rejected;
      }
    }
    return rejected == 0 ? 0 : 1;
  }

  int Export() {
    morph::Id variety = NeedVariety(repo(), o_.variety);
    if (o_.format == "unimorph") {
      std::string text = morph::ExportUniMorph(repo(), variety);
      if (o_.out.empty()) {
        out_ << text;
      } else {
        fs::path p = fs::is_directory(o_.out) ? fs::path(o_.out) / morph::UniMorphFileName(o_.variety)
                                              : fs::path(o_.out);
        WriteFile(p, text);
        out_ << p.string() << '\n';
      }
      return 0;
    }
    if (o_.format != "materials") throw Error(ErrorCode::kUsageError, "unknown format " + o_.format);
    if (!o_.kind.empty()) {
      morph::MaterialKind kind = morph::ParseMaterialKind(o_.kind);
      std::string text = morph::Export(repo(), variety, kind);
      if (o_.out.empty()) {
        out_ << text;
      } else {
        WriteFile(o_.out, text);
        out_ << o_.out << '\n';
      }
      return 0;
    }
    if (o_.out.empty()) throw Error(ErrorCode::kUsageError, "exporting all materials needs --out DIR");
    for (const auto& [kind, text] : morph::ExportMaterials(repo(), variety)) {
      fs::path p = fs::path(o_.out) / morph::MaterialFileName(o_.variety, kind);
      WriteFile(p, text);
      out_ << p.string() << '\n';
    }
    return 0;
  }

  int Train() {
    morph::Id variety = NeedVariety(repo(), o_.variety);
    morph::WorkflowConfig wc = config_.workflow;
    wc.train.seed = o_.seed;
    wc.auto_retrain = false;
    morph::ModelRegistry models;
    morph::Workflow workflow(repo(), wc, models);
    auto job = workflow.MaybeRetrain(variety, /*force=*/true);
    if (!job) throw Error(ErrorCode::kInvalidState, "a training job is already running");
    morph::TrainingOutcome outcome = job->get();
    out_ << "examples\t" << outcome.examples << '\n';
    out_ << "epochs\t" << outcome.loss_curve.size() << '\n';
    if (!outcome.loss_curve.empty()) out_ << "final_loss\t" << outcome.loss_curve.back() << '\n';
    return 0;
  }

  int Simulate() {
    std::vector<morph::GoldItem> gold = morph::ReadUniMorph(ReadFile(o_.gold));
    morph::SimulationConfig sc;
    sc.policy = morph::ParseSelectionPolicy(o_.policy);
    sc.seed = o_.seed;
    sc.budget = o_.budget;
    sc.round_size = o_.round_size;
    sc.eval_size = o_.eval_size;
    sc.n_train = o_.n_train;
    sc.delta_n = o_.delta_n;
    sc.apply_rules = !o_.no_rules;
    sc.train.epochs = o_.epochs;
    sc.llm = config_.llm;
    sc.sources = {false, false, false};
    std::stringstream list(o_.sources);
    for (std::string s; std::getline(list, s, ',');) {
      if (s == "rule") sc.sources.rule = true;
      else if (s == "neural") sc.sources.neural = true;
      else if (s == "llm") sc.sources.llm = true;
      else throw Error(ErrorCode::kUsageError, "unknown source " + s, "sources");
    }
    std::optional<morph::Materials> materials;
    if (!o_.variety.empty()) materials = morph::LoadMaterials(repo(), NeedVariety(repo(), o_.variety));
    std::shared_ptr<morph::CompletionProvider> provider;
    if (sc.sources.llm) {
      provider = morph::MakeProvider(config_);
      if (!provider) provider = std::make_shared<morph::AnalogyMockProvider>();
    }
    morph::SimulationResult r =
        morph::Simulate(gold, materials ? &*materials : nullptr, sc, provider.get());
    std::string table = morph::RoundTableTsv(r.rows);
    if (o_.out.empty()) {
      out_ << table;
    } else {
      WriteFile(o_.out, table);
    }
    err_ << "annotated " << r.annotated << " cells, " << r.training_runs << " training runs\n";
    return 0;
  }

  int Serve() {
    morph::ServiceConfig c = config_;
    if (!o_.host.empty()) c.host = o_.host;
    if (o_.port >= 0) c.port = o_.port;
    morph::Service service(c);
    err_ << "listening on " << c.host << ":" << c.port << '\n';
    service.Run();
    return 0;
  }

  int BlankTables() {
    morph::Id variety = NeedVariety(repo(), o_.variety);
    morph::Materials m = morph::LoadMaterials(repo(), variety);
    int written = 0;
    for (const morph::ParadigmStructure& s : m.structures) {
      if (!o_.structure.empty() && s.name != o_.structure) continue;
      fs::path p = fs::path(o_.out) / morph::BlankTableFileName(o_.variety, s.name);
      WriteFile(p, morph::BlankTableFor(m, s));
      out_ << p.string() << '\n';
      ++written;
    }
    if (written == 0) throw Error(ErrorCode::kNotFound, "no structure named " + o_.structure, "structure");
    return 0;
  }

  int CloneVariety() {
    morph::Id source = NeedVariety(repo(), o_.variety);
    morph::Id id = morph::CloneVariety(repo(), source, o_.name);
    out_ << id << '\n';
    return 0;
  }

 private:
  const Options& o_;
  std::ostream& out_;
  std::ostream& err_;
  morph::ServiceConfig config_;
  std::unique_ptr<morph::SqliteRepository> repo_;
};

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"morphdesk operator tool", "morphctl"};
  app.require_subcommand(1);
  app.add_option("--config", o.config, "Service config file")->check(CLI::ExistingFile);
  app.add_option("--db", o.database, "SQLite database (overrides the config)");

  auto* import = app.add_subcommand("import", "Import material TSV files");
  import->add_option("--variety", o.variety)->required();
  import->add_option("--kind", o.kind, "classes|lexicon|structures|layers|rules|questions");
  import->add_option("--file", o.file);
  import->add_option("--dir", o.dir, "Directory of <variety>.<kind>.tsv files");
  import->add_flag("--create", o.create, "Create the variety if it does not exist");
  import->add_flag("--all-or-nothing", o.all_or_nothing);

  auto* exp = app.add_subcommand("export", "Export materials or UniMorph data");
  exp->add_option("--variety", o.variety)->required();
  exp->add_option("--format", o.format)->check(CLI::IsMember({"unimorph", "materials"}));
  exp->add_option("--kind", o.kind);
  exp->add_option("--out", o.out, "File or directory; stdout when omitted");

  auto* train = app.add_subcommand("train", "Retrain the neural inflector now");
  train->add_option("--variety", o.variety)->required();
  train->add_option("--seed", o.seed)->required();

  auto* sim = app.add_subcommand("simulate", "Replay the elicitation loop against gold data");
  sim->add_option("--gold", o.gold)->required()->check(CLI::ExistingFile);
  sim->add_option("--policy", o.policy, "uncertainty|random|priority")->required();
  sim->add_option("--budget", o.budget)->required()->check(CLI::PositiveNumber);
  sim->add_option("--seed", o.seed)->required();
  sim->add_option("--variety", o.variety, "Take patterns and rules from this variety");
  sim->add_option("--round-size", o.round_size)->check(CLI::PositiveNumber);
  sim->add_option("--eval-size", o.eval_size)->check(CLI::NonNegativeNumber);
  sim->add_option("--n-train", o.n_train)->check(CLI::Range(2, 1 << 30));
  sim->add_option("--delta-n", o.delta_n)->check(CLI::PositiveNumber);
  sim->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  sim->add_option("--sources", o.sources, "Comma list of rule, neural, llm");
  sim->add_flag("--no-rules", o.no_rules, "Render patterns without rewrite rules");
  sim->add_option("--out", o.out);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", o.host);
  serve->add_option("--port", o.port)->check(CLI::Range(0, 65535));

  auto* blank = app.add_subcommand("blank-tables", "Write printable blank paradigm tables");
  blank->add_option("--variety", o.variety)->required();
  blank->add_option("--structure", o.structure, "Only this structure");
  blank->add_option("--out", o.out)->required();

  auto* clone = app.add_subcommand("clone-variety", "Copy a variety's materials");
  clone->add_option("--variety", o.variety)->required();
  clone->add_option("--name", o.name)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "UsageError: " << e.what() << '\n';
    return 2;
  }

  try {
    Runner r(o, out, err);
    if (*import) return r.Import();
    if (*exp) return r.Export();
    if (*train) return r.Train();
    if (*sim) return r.Simulate();
    if (*serve) return r.Serve();
    if (*blank) return r.BlankTables();
    if (*clone) return r.CloneVariety();
  } catch (const Error& e) {
    err << morph::ErrorCodeName(e.code()) << ": " << e.what();
    if (!e.field().empty()) err << " [" << e.field() << "]";
    err << '\n';
    return e.code() == ErrorCode::kUsageError ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace morphctl
