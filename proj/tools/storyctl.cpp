// storyctl: experiments, the session server and one-off evaluations.

#include <csignal>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "httplib.h"
#include "story/error.hpp"
#include "story/evaluation.hpp"
#include "story/experiment.hpp"
#include "story/graph_io.hpp"
#include "story/http_api.hpp"
#include "story/patterns.hpp"
#include "story/session.hpp"
#include "story/targets.hpp"

namespace {

using namespace story;

LevelConstraints parse_budgets(const std::string& text) {
  LevelConstraints c;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d,%d,%d%c", &c.heroes, &c.enemies, &c.quest_items, &tail) != 3)
    throw InvalidArgument("budgets must look like H,E,Q (got '" + text + "')");
  c.validate();
  return c;
}

NarrativeGraph graph_arg(const std::string& arg) {
  const auto ids = builtin_target_ids();
  if (std::find(ids.begin(), ids.end(), arg) != ids.end()) return builtin_target(arg).graph;
  return load_graph(arg);
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Narrative graph search toolkit"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run an experiment and export its report");
  std::string experiment = "1", dims = "pair", constraints = "on", out = "out", budgets;
  std::size_t runs = 5, generations = 500, offspring = 100, threads = 0;
  std::uint64_t seed = 0;
  bool desk = false, quiet = false;
  run->add_option("--experiment", experiment, "1, 2, 3, 4, 4.1-4.5 or a graph file");
  run->add_option("--dims", dims, "pair or all")->check(CLI::IsMember({"pair", "all"}));
  run->add_option("--constraints", constraints, "on or off")->check(CLI::IsMember({"on", "off"}));
  auto* runs_opt = run->add_option("--runs", runs)->check(CLI::PositiveNumber);
  auto* gens_opt = run->add_option("--generations", generations, "per design step for 4")
                       ->check(CLI::PositiveNumber);
  auto* off_opt = run->add_option("--offspring", offspring, "parent pairs per generation")
                      ->check(CLI::PositiveNumber);
  run->add_option("--seed", seed);
  run->add_option("--out", out, "output directory");
  run->add_option("--threads", threads, "concurrent runs (0 = all cores)");
  run->add_option("--budgets", budgets, "H,E,Q budgets for custom graphs");
  run->add_flag("--desk", desk, "3 runs of 100 generations");
  run->add_flag("--quiet", quiet);

  // serve
  auto* serve = app.add_subcommand("serve", "Start the session service");
  std::string host = "127.0.0.1", state_dir;
  int port = 8080;
  int step_delay = 0;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--state-dir", state_dir, "persist sessions here");
  serve->add_option("--step-delay", step_delay, "milliseconds between generations");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Evaluate a graph document");
  std::string graph_path, target_arg, eval_budgets;
  bool show_patterns = false;
  eval->add_option("graph", graph_path, "graph file or builtin id")->required();
  eval->add_option("--target", target_arg, "graph file or builtin id for the step dimension");
  eval->add_option("--budgets", eval_budgets, "H,E,Q");
  eval->add_flag("--patterns", show_patterns, "list every pattern instance");

  // target
  auto* target = app.add_subcommand("target", "Print a builtin target");
  std::string target_id, target_out;
  target->add_option("id", target_id)->required();
  target->add_option("-o,--output", target_out, "write to a file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentConfig cfg =
          desk ? ExperimentConfig::desk(experiment) : ExperimentConfig::full(experiment, dims == "all");
      cfg.all_dims = dims == "all";
      if (runs_opt->count()) cfg.runs = runs;
      if (gens_opt->count()) cfg.generations = generations;
      if (off_opt->count()) cfg.offspring_per_generation = offspring;
      cfg.constraints = constraints == "on";
      cfg.seed = seed;
      cfg.threads = threads;
      if (!budgets.empty()) cfg.budgets = parse_budgets(budgets);
      cfg.checkpoint_dir = std::filesystem::path(out) / "checkpoints";
      ProgressFn progress;
      if (!quiet) {
        progress = [](std::size_t k, const GenerationRecord& r) {
          if (r.generation % 10 == 0)
            std::fprintf(stderr, "run %zu gen %zu coverage %.3f uniques %zu\n", k,
                         r.generation, r.coverage, r.uniques);
        };
      }
      auto report = run_experiment(cfg, progress);
      export_report(report, out);
      std::cout << summary_csv(report.rows);
      return 0;
    }

    if (*serve) {
      std::optional<std::filesystem::path> dir;
      if (!state_dir.empty()) dir = state_dir;
      SessionManager sessions(dir);
      if (step_delay > 0) sessions.set_step_delay(std::chrono::milliseconds(step_delay));
      httplib::Server server;
      mount_api(server, sessions);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "listening on http://%s:%d\n", host.c_str(), port);
      if (!server.listen(host, port)) {
        std::fprintf(stderr, "cannot listen on %s:%d\n", host.c_str(), port);
        return 1;
      }
      return 0;
    }

    if (*eval) {
      NarrativeGraph g = graph_arg(graph_path);
      NarrativeGraph t = target_arg.empty() ? g : graph_arg(target_arg);
      std::optional<LevelConstraints> c;
      if (!eval_budgets.empty()) c = parse_budgets(eval_budgets);
      EvaluationContext ctx(t, c);
      auto patterns = detect_patterns(g);
      nlohmann::ordered_json doc;
      doc["digest"] = canonical_hash(g);
      doc["evaluation"] = evaluation_to_json(evaluate(g, ctx));
      doc["patterns"] = show_patterns ? patterns_to_json(patterns, g) : pattern_summary(patterns);
      std::cout << doc.dump(2) << "\n";
      return 0;
    }

    if (*target) {
      auto t = builtin_target(target_id);
      if (target_out.empty()) {
        std::cout << serialize(t.graph);
      } else {
        save_graph(t.graph, target_out);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "storyctl: %s\n", e.what());
    return 2;
  }
  return 0;
}
