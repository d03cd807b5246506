#include "cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "culsim/asr.hpp"
#include "culsim/corpus.hpp"
#include "culsim/dialogue.hpp"
#include "culsim/errors.hpp"
#include "culsim/eval.hpp"
#include "culsim/expert.hpp"
#include "culsim/scenario.hpp"
#include "culsim/service.hpp"
#include "culsim/util.hpp"

namespace culsim::cli {

namespace {

namespace fs = std::filesystem;

std::string bundle_timestamp(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    return utc_timestamp_from_epoch(std::stoll(epoch));
  }
  return utc_timestamp();
}

FeatureRegistry registry_from_bundles(const BundleSet& bundles) {
  FeatureRegistry registry;
  for (const auto& [section, bundle] : bundles) {
    FeatureSet fs{section, {}};
    for (const auto& code : bundle->feature_codes()) fs.features.push_back({code, code, {}, {}});
    registry.emplace(section, std::move(fs));
  }
  return registry;
}

BundleSet require_bundles(const fs::path& dir) {
  BundleSet bundles = load_bundle_dir(dir);
  if (bundles.empty()) throw PreconditionError("no bundles found in '" + dir.string() + "'");
  return bundles;
}

std::string bits_text(const LabelVector& bits) {
  std::string s = "[";
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (i > 0) s += ", ";
    s += bits[i] != 0 ? '1' : '0';
  }
  return s + "]";
}

// --- train ------------------------------------------------------------------------

struct TrainArgs {
  fs::path corpus, scenario, out;
  std::string model = "rf";
  std::uint64_t seed = 42;
  std::string created_at;
  int neighbors = KnnParams{}.neighbors;
  int trees = RfParams{}.trees;
  int max_depth = RfParams{}.max_depth;
  int hidden = MlpParams{}.hidden;
  int epochs = MlpParams{}.epochs;
  double learning_rate = MlpParams{}.learning_rate;
};

Hyperparameters hyperparameters_from(const TrainArgs& a) {
  switch (parse_classifier_kind(a.model)) {
    case ClassifierKind::knn:
      return KnnParams{a.neighbors};
    case ClassifierKind::random_forest: {
      RfParams p;
      p.trees = a.trees;
      p.max_depth = a.max_depth;
      p.seed = a.seed;
      return p;
    }
    case ClassifierKind::mlp: {
      MlpParams p;
      p.hidden = a.hidden;
      p.epochs = a.epochs;
      p.learning_rate = a.learning_rate;
      p.seed = a.seed;
      return p;
    }
  }
  throw PreconditionError("unknown model '" + a.model + "'");
}

int do_train(const TrainArgs& a, std::ostream& out) {
  const Scenario scenario = load_scenario(a.scenario);
  const FeatureRegistry registry = scenario.feature_registry();
  const auto corpus = load_corpus(a.corpus, registry);
  const Hyperparameters params = hyperparameters_from(a);
  const std::string created_at = bundle_timestamp(a.created_at);

  std::vector<ExpertBundle> bundles;
  for (const auto* ep : scenario.evaluation_points()) {
    const auto slice = select_section(corpus, ep->section_id());
    if (slice.empty()) {
      throw PreconditionError("corpus has no examples for section '" + ep->section_id() + "'");
    }
    bundles.push_back(train_section(slice, ep->feature_set, params, created_at));
  }

  std::vector<fs::path> written;
  try {
    fs::create_directories(a.out);
    for (const auto& b : bundles) {
      const auto path = bundle_path(a.out, b.section_id());
      save_bundle(b, path);
      written.push_back(path);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }

  out << "trained " << bundles.size() << " " << to_string(kind_of(params)) << " bundles -> "
      << a.out.string() << "\n";
  for (const auto& b : bundles) {
    out << "  " << b.section_id() << "  k=" << b.k_labels() << "  examples="
        << select_section(corpus, b.section_id()).size() << "  vocabulary=" << b.vectorizer().dimension()
        << "\n";
  }
  return 0;
}

// --- evaluate / noise-sweep -------------------------------------------------------

struct EvalArgs {
  fs::path corpus, models, report;
  double split = 0.2;
  std::uint64_t seed = 42;
  double simulate_wer = 0.0;
};

int do_evaluate(const EvalArgs& a, std::ostream& out) {
  const BundleSet bundles = require_bundles(a.models);
  const FeatureRegistry registry = registry_from_bundles(bundles);
  const auto corpus = load_corpus(a.corpus, registry);
  EvaluationOptions options{a.simulate_wer, derive_seed(a.seed, "evaluate-noise")};
  const MetricsReport report =
      evaluate_corpus(corpus, registry, hyperparameters_of(bundles), a.split, a.seed, options);
  write_report(a.report, report);
  out << report_to_table(report);
  out << "report -> " << a.report.string() << " (+ .txt)\n";
  return 0;
}

struct SweepArgs {
  fs::path corpus, models, report;
  double split = 0.2;
  std::uint64_t seed = 42;
  std::vector<double> targets{0.0, 0.1, 0.2, 0.3, 0.5};
  std::size_t seeds = 10;
};

int do_noise_sweep(const SweepArgs& a, std::ostream& out) {
  const BundleSet stored = require_bundles(a.models);
  const FeatureRegistry registry = registry_from_bundles(stored);
  const auto corpus = load_corpus(a.corpus, registry);
  const CorpusSplit split = split_corpus(corpus, a.split, a.seed);
  const BundleSet bundles =
      train_bundles(split.train, registry, hyperparameters_of(stored), "1970-01-01T00:00:00.000Z");
  const NoiseSweepReport report = noise_sweep(split, bundles, {a.targets, a.seeds, a.seed});
  write_noise_report(a.report, report);
  out << noise_report_to_table(report);
  out << "report -> " << a.report.string() << " (+ .txt)\n";
  return 0;
}

// --- simulate ---------------------------------------------------------------------

struct SimulateArgs {
  fs::path scenario, script, models, log;
  double alpha = 0.5;
  double simulate_wer = 0.0;
  std::uint64_t seed = 42;
};

class TranscriptPrinter {
 public:
  TranscriptPrinter(const Scenario& scenario, std::ostream& out) : scenario_(scenario), out_(out) {}

  void enter(const std::string& node_id) {
    const Scene& scene = scenario_.scene_of(node_id);
    if (scene.id == scene_) return;
    scene_ = scene.id;
    ++number_;
    out_ << "Scene " << number_ << ": " << scene.title << "\n";
  }

  void print(const std::vector<Event>& events) {
    for (const auto& e : events) {
      enter(e.node_id);
      switch (e.kind) {
        case EventKind::avatar_lines:
        case EventKind::repeat_request:
          out_ << e.speaker << ": " << e.text << "\n";
          break;
        case EventKind::guide_note:
          out_ << "[Guide] " << e.text << "\n";
          break;
        case EventKind::feedback:
          out_ << "Feedback: " << e.text << "\n";
          break;
        case EventKind::session_ended:
          out_ << "-- " << e.text << " --\n";
          break;
      }
    }
  }

 private:
  const Scenario& scenario_;
  std::ostream& out_;
  std::string scene_;
  int number_ = 0;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  auto scenario = std::make_shared<const Scenario>(load_scenario(a.scenario));
  auto bundles = std::make_shared<const BundleSet>(require_bundles(a.models));
  const auto lines = load_script(a.script);
  SessionConfig config;
  config.alpha = a.alpha;
  if (a.simulate_wer > 0.0) config.asr_mode = AsrChannel::simulated_noise;

  auto started = start_session(scenario, bundles, config, "simulate");
  auto& session = started.session;
  if (!a.log.empty()) {
    if (a.log.has_parent_path()) fs::create_directories(a.log.parent_path());
    std::ofstream(a.log, std::ios::binary | std::ios::trunc).flush();
    session.set_record_sink([path = a.log](const TurnRecord& r) { append_turn_record(path, r); });
  }

  TranscriptPrinter printer(*scenario, out);
  printer.print(started.events);
  std::size_t next = 0, scored = 0;
  while (session.state().phase == Phase::awaiting_player) {
    if (next >= lines.size()) {
      throw PreconditionError("script ran out at node '" + session.state().cursor + "' after " +
                              std::to_string(lines.size()) + " lines");
    }
    const std::string& line = lines[next];
    const AsrResult recognized = a.simulate_wer > 0.0
                                     ? corrupt(line, a.simulate_wer, derive_seed(a.seed, next))
                                     : recognize_passthrough(line);
    ++next;
    printer.enter(session.state().cursor);
    const auto outcome = session.submit_input(recognized, line);
    out << "Participant: " << line;
    if (recognized.transcript != line) out << " {heard: " << recognized.transcript << "}";
    if (outcome.record && outcome.record->score) {
      out << " (score " << bits_text(outcome.record->score->bits) << ")";
      ++scored;
    } else if (outcome.record && !outcome.record->section_id.empty()) {
      out << " (not scored: low recognition confidence)";
    }
    out << "\n";
    printer.print(outcome.events);
  }
  out << "\n" << session.state().log.size() << " turns logged, " << scored << " scored";
  if (!a.log.empty()) out << " -> " << a.log.string();
  out << "\n";
  return 0;
}

// --- serve ------------------------------------------------------------------------

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  double alpha = 0.5;
  fs::path models, scenario, data = "data", static_dir;
};

int do_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  auto scenario = std::make_shared<const Scenario>(load_scenario(a.scenario));
  std::shared_ptr<const BundleSet> bundles;
  if (!a.models.empty() && fs::is_directory(a.models)) {
    bundles = std::make_shared<const BundleSet>(load_bundle_dir(a.models));
  }
  if (!bundles || bundles->empty()) {
    err << "warning: no bundles loaded from '" << a.models.string()
        << "'; session creation will answer 503\n";
  }
  ServiceConfig config;
  config.data_dir = a.data;
  config.alpha = a.alpha;
  if (!a.static_dir.empty()) config.static_dir = a.static_dir;
  TrainingService service(config, {scenario}, bundles);

  httplib::Server server;
  service.mount(server);
  if (!server.bind_to_port(a.host, a.port)) {
    throw Error("cannot bind " + a.host + ":" + std::to_string(a.port));
  }

  g_stop.store(false);
  auto previous_int = std::signal(SIGINT, on_signal);
  auto previous_term = std::signal(SIGTERM, on_signal);
  std::thread watcher([&server] {
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  });
  out << "serving scenario '" << scenario->id() << "' on http://" << a.host << ":" << a.port
      << " (data: " << a.data.string() << ")" << std::endl;
  server.listen_after_bind();
  g_stop.store(true);
  watcher.join();
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  out << "stopped; " << service.live_sessions() << " sessions, logs in "
      << (a.data / "sessions").string() << std::endl;
  return 0;
}

// --- synthesize -------------------------------------------------------------------

struct SynthesizeArgs {
  fs::path templates, scenario, out;
  std::size_t count = 80;
  std::uint64_t seed = 42;
};

int do_synthesize(const SynthesizeArgs& a, std::ostream& out) {
  const Scenario scenario = load_scenario(a.scenario);
  const auto library = load_template_library(a.templates);
  const auto corpus = synthesize_corpus(library, scenario.feature_registry(), a.count, a.seed);
  write_corpus(a.out, corpus);
  out << "wrote " << corpus.size() << " examples over " << sections_of(corpus).size()
      << " sections -> " << a.out.string() << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cultural training simulator: expert models, evaluation and dialogue service"};
  app.name("culsim");
  app.require_subcommand(1);
  app.set_version_flag("--version", "culsim 0.1.0");

  std::function<int()> action;

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train one expert bundle per evaluation point");
  t->add_option("--corpus", train.corpus, "Annotated corpus (JSONL)")->required()->envname("CULSIM_CORPUS");
  t->add_option("--scenario", train.scenario, "Scenario file (JSON)")->required()->envname("CULSIM_SCENARIO");
  t->add_option("--model", train.model, "Classifier: knn, rf or mlp")
      ->check(CLI::IsMember({"knn", "rf", "mlp"}))
      ->capture_default_str();
  t->add_option("--out", train.out, "Output directory for bundles")->required()->envname("CULSIM_MODELS");
  t->add_option("--seed", train.seed, "Seed for rf and mlp")->capture_default_str()->envname("CULSIM_SEED");
  t->add_option("--created-at", train.created_at,
                "Timestamp stored in bundles (default: SOURCE_DATE_EPOCH, else now)");
  t->add_option("--neighbors", train.neighbors, "knn: neighbors")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--trees", train.trees, "rf: trees per label")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--max-depth", train.max_depth, "rf: maximum tree depth")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--hidden", train.hidden, "mlp: hidden units")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--epochs", train.epochs, "mlp: full-batch epochs")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--learning-rate", train.learning_rate, "mlp: step size")->capture_default_str()->check(CLI::PositiveNumber);
  t->callback([&] { action = [&] { return do_train(train, out); }; });

  EvalArgs eval;
  auto* e = app.add_subcommand("evaluate", "Hold out a split, refit and report per-section metrics");
  e->add_option("--corpus", eval.corpus, "Annotated corpus (JSONL)")->required()->envname("CULSIM_CORPUS");
  e->add_option("--models", eval.models, "Bundle directory; supplies classifier settings")->required()->envname("CULSIM_MODELS");
  e->add_option("--split", eval.split, "Held-out fraction per section, in (0, 1)")->capture_default_str();
  e->add_option("--seed", eval.seed, "Split and noise seed")->capture_default_str()->envname("CULSIM_SEED");
  e->add_option("--report", eval.report, "Report path (JSON; table goes to <path>.txt)")->required();
  e->add_option("--simulate-wer", eval.simulate_wer, "Corrupt held-out texts at this WER")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.9));
  e->callback([&] { action = [&] { return do_evaluate(eval, out); }; });

  SweepArgs sweep;
  auto* n = app.add_subcommand("noise-sweep", "Rescore held-out texts under simulated recognition noise");
  n->add_option("--corpus", sweep.corpus, "Annotated corpus (JSONL)")->required()->envname("CULSIM_CORPUS");
  n->add_option("--models", sweep.models, "Bundle directory; supplies classifier settings")->required()->envname("CULSIM_MODELS");
  n->add_option("--split", sweep.split, "Held-out fraction per section, in (0, 1)")->capture_default_str();
  n->add_option("--seed", sweep.seed, "Split and base noise seed")->capture_default_str()->envname("CULSIM_SEED");
  n->add_option("--wer", sweep.targets, "Comma-separated WER targets")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.9));
  n->add_option("--seeds", sweep.seeds, "Noise seeds per target")->capture_default_str()->check(CLI::PositiveNumber);
  n->add_option("--report", sweep.report, "Report path (JSON; table goes to <path>.txt)")->required();
  n->callback([&] { action = [&] { return do_noise_sweep(sweep, out); }; });

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Replay a participant script through the scenario");
  s->add_option("--scenario", sim.scenario, "Scenario file (JSON)")->required()->envname("CULSIM_SCENARIO");
  s->add_option("--script", sim.script, "One participant line per row")->required();
  s->add_option("--models", sim.models, "Bundle directory")->required()->envname("CULSIM_MODELS");
  s->add_option("--log", sim.log, "Write the session log (JSONL) here");
  s->add_option("--alpha", sim.alpha, "Recognition confidence threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0))
      ->envname("CULSIM_ALPHA");
  s->add_option("--simulate-wer", sim.simulate_wer, "Corrupt each line at this WER before scoring")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.9));
  s->add_option("--seed", sim.seed, "Noise seed")->capture_default_str()->envname("CULSIM_SEED");
  s->callback([&] { action = [&] { return do_simulate(sim, out); }; });

  ServeArgs serve;
  auto* v = app.add_subcommand("serve", "Run the HTTP/JSON training service");
  v->add_option("--host", serve.host, "Bind address")->capture_default_str()->envname("CULSIM_HOST");
  v->add_option("--port", serve.port, "TCP port")->capture_default_str()->check(CLI::Range(1, 65535))->envname("CULSIM_PORT");
  v->add_option("--alpha", serve.alpha, "Default recognition confidence threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0))
      ->envname("CULSIM_ALPHA");
  v->add_option("--models", serve.models, "Bundle directory")->envname("CULSIM_MODELS");
  v->add_option("--scenario", serve.scenario, "Scenario file (JSON)")->required()->envname("CULSIM_SCENARIO");
  v->add_option("--data", serve.data, "Data directory for session logs and reports")
      ->capture_default_str()
      ->envname("CULSIM_DATA");
  v->add_option("--static", serve.static_dir, "Directory served at / (browser client build)")->envname("CULSIM_STATIC");
  v->callback([&] { action = [&] { return do_serve(serve, out, err); }; });

  SynthesizeArgs syn;
  auto* y = app.add_subcommand("synthesize", "Generate the annotated corpus from phrase templates");
  y->add_option("--templates", syn.templates, "Template library (JSON)")->required();
  y->add_option("--scenario", syn.scenario, "Scenario file (JSON)")->required()->envname("CULSIM_SCENARIO");
  y->add_option("--out", syn.out, "Output corpus (JSONL)")->required();
  y->add_option("--count", syn.count, "Template realizations per section")->capture_default_str()->check(CLI::PositiveNumber);
  y->add_option("--seed", syn.seed, "Synthesis seed")->capture_default_str()->envname("CULSIM_SEED");
  y->callback([&] { action = [&] { return do_synthesize(syn, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return 2;
  }

  try {
    return action();
  } catch (const std::exception& ex) {
    err << "culsim: error: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace culsim::cli
