// Command-line front end.
//
//   qv precompute-tl <config>   build the TL cache
//   qv fit-rbf <config>         fit and save the surrogate
//   qv plan <config>            plan the quiet route
//   qv simulate <config>        optimise speeds and replay (--baseline: AIS voyage)
//   qv compare <config>         optimised voyage vs baseline
//   qv serve <config>           HTTP API
//
// Exit status: 0 success, 1 invalid input or usage, 2 runtime failure.

#include "quietvoyage/http_api.hpp"
#include "quietvoyage/pipeline.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>
#include <optional>
#include <set>

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string log_level = "info";
  std::string tl_cache;
};

qv::ScenarioConfig load(const std::string& path, const Globals& g) {
  std::vector<std::string> warnings;
  auto c = qv::parse_scenario(path, &warnings);
  for (const auto& w : warnings) spdlog::warn("{}", w);
  if (g.seed) {
    c.seeds.planner = *g.seed;
    c.seeds.ga = *g.seed;
    c.seeds.wildlife = *g.seed;
  }
  if (!g.tl_cache.empty())
    c.paths.tl_cache = std::filesystem::absolute(g.tl_cache).string();
  return c;
}

qv::ProgressFn progress_logger() {
  return [last = std::string()](std::string_view stage, double f) mutable {
    if (stage != last) {
      spdlog::info("{} ({:.0f}%)", stage, 100.0 * f);
      last = std::string(stage);
    }
  };
}

int run_mode(const std::string& cfg_path, const Globals& g, qv::RunMode mode) {
  const auto c = load(cfg_path, g);
  const auto bundle = qv::run_scenario(c, mode, progress_logger());
  for (const auto& w : bundle.warnings) spdlog::warn("{}", w);
  const auto files = qv::write_outputs(bundle, g.out_dir);
  for (const auto& f : files) spdlog::debug("wrote {}/{}", g.out_dir, f);
  if (bundle.plan)
    spdlog::info("route {:.3f} NM, {} waypoints", bundle.plan->route.length_nm,
                 bundle.plan->route.waypoints.size());
  if (bundle.comparison) std::cout << qv::summary_text(bundle);
  else if (bundle.optimized && !bundle.mammals.empty())
    spdlog::info("optimized J_s {:.3f} dB", bundle.optimized->footprint.mean_sel_db);
  else if (bundle.baseline && !bundle.mammals.empty())
    spdlog::info("baseline J_s {:.3f} dB", bundle.baseline->footprint.mean_sel_db);
  return 0;
}

bool is_input_error(const qv::Error& e) {
  static const std::set<std::string> kinds{"parse", "validation", "configuration",
                                           "invalid-coordinate", "range"};
  return kinds.count(e.kind()) > 0;
}

qv::ApiService* g_service = nullptr;

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quiet voyage planning: noise-aware routes and speed profiles"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Override the planner, GA and wildlife seeds");
  app.add_option("--out-dir", g.out_dir, "Directory for result files")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_option("--tl-cache", g.tl_cache, "Override paths.tl_cache");

  std::string cfg;
  auto add = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("config", cfg, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    return s;
  };
  auto* pre = add("precompute-tl", "Compute the transmission-loss cache");
  auto* fit = add("fit-rbf", "Fit the RBF surrogate on the cache");
  auto* plan = add("plan", "Plan the route");
  auto* sim = add("simulate", "Optimise speeds and replay the voyage");
  bool baseline = false;
  sim->add_flag("--baseline", baseline, "Replay the AIS baseline voyage instead");
  auto* cmp = add("compare", "Optimised voyage against the baseline");
  auto* serve = add("serve", "Run the HTTP API");
  int port = qv::default_port();
  std::string host = "127.0.0.1";
  serve->add_option("--port", port, "Port (default from QV_PORT, else 8080)")
      ->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Bind address")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto logger = spdlog::stderr_color_mt("qv");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (pre->parsed()) {
      const auto c = load(cfg, g);
      const auto env = qv::load_environment(c);
      const auto cache = qv::precompute_tl(c, env);
      spdlog::info("TL cache: {} samples from {} sources in {}", cache.samples.size(),
                   cache.sources.size(), qv::tl_cache_dir(c));
      return 0;
    }
    if (fit->parsed()) {
      const auto c = load(cfg, g);
      const auto dir = qv::tl_cache_dir(c);
      if (!qv::tl_cache_exists(dir))
        throw qv::IoError("no TL cache at " + dir + "; run precompute-tl first");
      const auto m = qv::fit_surrogate(c, qv::load_tl_cache(dir));
      spdlog::info("surrogate: {} centres, sigma {:.4f}, saved to {}", m.size(), m.sigma,
                   qv::rbf_dir(c));
      return 0;
    }
    if (plan->parsed()) return run_mode(cfg, g, qv::RunMode::Plan);
    if (sim->parsed())
      return run_mode(cfg, g, baseline ? qv::RunMode::SimulateBaseline : qv::RunMode::Simulate);
    if (cmp->parsed()) return run_mode(cfg, g, qv::RunMode::Compare);
    if (serve->parsed()) {
      qv::ApiService svc(load(cfg, g));
      g_service = &svc;
      std::signal(SIGINT, [](int) { if (g_service) g_service->server().stop(); });
      std::signal(SIGTERM, [](int) { if (g_service) g_service->server().stop(); });
      spdlog::info("listening on http://{}:{}", host, port);
      svc.serve(host, port);
      g_service = nullptr;
      return 0;
    }
  } catch (const qv::Error& e) {
    spdlog::error("{}", e.what());
    return is_input_error(e) ? 1 : 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
