#pragma once

// JSON-over-HTTP service for the web console. Scenarios are created by
// merge-patching a request body onto the service's base scenario; optimise
// jobs run asynchronously, one per scenario at a time.
//
//   POST /scenarios                          -> 201 {scenario_id, warnings}
//   GET  /scenarios/{id}                     -> 200 scenario
//   POST /scenarios/{id}/optimize            -> 202 {job_id, status}
//   GET  /jobs/{id}                          -> 200 {status, progress, ...}
//   GET  /scenarios/{id}/result              -> 200 result bundle
//   GET  /scenarios/{id}/tiles/tl?src_lat=&src_lon=[&depth_m=&stride=]

#include "quietvoyage/errors.hpp"
#include "quietvoyage/pipeline.hpp"
#include "quietvoyage/scenario.hpp"

#include "httplib.h"
#include "json.hpp"

#include <condition_variable>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qv {

inline constexpr int kDefaultPort = 8080;

/// Port from QV_PORT when set and valid, else 8080.
inline int default_port() {
  if (const char* v = std::getenv("QV_PORT")) {
    char* end = nullptr;
    const long p = std::strtol(v, &end, 10);
    if (end && *end == '\0' && p > 0 && p < 65536) return static_cast<int>(p);
  }
  return kDefaultPort;
}

enum class JobStatus { Queued, Running, Done, Failed };

inline const char* to_string(JobStatus s) {
  switch (s) {
  case JobStatus::Queued: return "queued";
  case JobStatus::Running: return "running";
  case JobStatus::Done: return "done";
  case JobStatus::Failed: return "failed";
  }
  return "failed";
}

class ApiService {
public:
  explicit ApiService(ScenarioConfig base) : base_(std::move(base)) { routes(); }

  ~ApiService() {
    stop();
    std::vector<std::thread> workers;
    {
      std::lock_guard lk(mu_);
      workers.swap(workers_);
    }
    for (auto& t : workers)
      if (t.joinable()) t.join();
  }

  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port.
  int start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
      bound = server_.bind_to_any_port(host);
    } else if (!server_.bind_to_port(host, port)) {
      bound = -1;
    }
    if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  /// Serves on the calling thread until stop().
  void serve(const std::string& host, int port) {
    if (!server_.listen(host, port))
      throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    server_.stop();
    if (listener_.joinable()) listener_.join();
  }

  /// Blocks until the job leaves queued/running.
  void wait_job(const std::string& job_id) {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] {
      auto it = jobs_.find(job_id);
      return it == jobs_.end() || it->second->status == JobStatus::Done ||
             it->second->status == JobStatus::Failed;
    });
  }

  httplib::Server& server() { return server_; }

private:
  struct Job {
    std::string id;
    std::string scenario_id;
    JobStatus status = JobStatus::Queued;
    double progress = 0.0;
    std::string stage = "queued";
    std::string error;
    std::shared_ptr<const ResultBundle> result;
  };

  struct Scenario {
    ScenarioConfig config;
    std::vector<std::string> warnings;
    std::string last_job;
    std::shared_ptr<const Environment> env; // loaded on first tile request
    std::shared_ptr<const RbfInterpolant> rbf;
  };

  using J = nlohmann::ordered_json;

  static void reply(httplib::Response& res, int status, const J& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static J error_body(const std::string& msg) { return J{{"error", msg}}; }

  void routes() {
    server_.Post("/scenarios", [this](const httplib::Request& rq, httplib::Response& rs) {
      create(rq, rs);
    });
    server_.Get(R"(/scenarios/([A-Za-z0-9_-]+))",
                [this](const httplib::Request& rq, httplib::Response& rs) {
                  std::lock_guard lk(mu_);
                  auto it = scenarios_.find(rq.matches[1]);
                  if (it == scenarios_.end())
                    return reply(rs, 404, error_body("unknown scenario"));
                  reply(rs, 200, J{{"scenario_id", it->first},
                                   {"scenario", scenario_to_json(it->second.config)}});
                });
    server_.Post(R"(/scenarios/([A-Za-z0-9_-]+)/optimize)",
                 [this](const httplib::Request& rq, httplib::Response& rs) {
                   optimize(rq.matches[1], rs);
                 });
    server_.Get(R"(/jobs/([A-Za-z0-9_-]+))",
                [this](const httplib::Request& rq, httplib::Response& rs) {
                  std::lock_guard lk(mu_);
                  auto it = jobs_.find(rq.matches[1]);
                  if (it == jobs_.end()) return reply(rs, 404, error_body("unknown job"));
                  reply(rs, 200, job_json(*it->second));
                });
    server_.Get(R"(/scenarios/([A-Za-z0-9_-]+)/result)",
                [this](const httplib::Request& rq, httplib::Response& rs) {
                  result(rq.matches[1], rs);
                });
    server_.Get(R"(/scenarios/([A-Za-z0-9_-]+)/tiles/tl)",
                [this](const httplib::Request& rq, httplib::Response& rs) {
                  tile(rq, rs);
                });
    server_.set_exception_handler(
        [](const httplib::Request&, httplib::Response& rs, std::exception_ptr ep) {
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            reply(rs, 500, error_body(e.what()));
          } catch (...) {
            reply(rs, 500, error_body("unknown error"));
          }
        });
  }

  static J job_json(const Job& j) {
    J o{{"job_id", j.id},
        {"scenario_id", j.scenario_id},
        {"status", to_string(j.status)},
        {"progress", j.progress},
        {"stage", j.stage}};
    if (!j.error.empty()) o["error"] = j.error;
    return o;
  }

  void create(const httplib::Request& rq, httplib::Response& rs) {
    J patch;
    try {
      patch = J::parse(rq.body.empty() ? std::string("{}") : rq.body);
    } catch (const nlohmann::json::parse_error& e) {
      return reply(rs, 422, J{{"errors", J::array({J{{"field", ""}, {"message", e.what()}}})}});
    }
    if (!patch.is_object())
      return reply(rs, 422, J{{"errors", J::array({J{{"field", ""},
                                                     {"message", "body must be an object"}}})}});
    J doc = scenario_to_json(base_);
    doc.merge_patch(patch);
    Scenario sc;
    try {
      sc.config = parse_scenario_text(doc.dump(2), base_.base_dir, &sc.warnings);
    } catch (const ParseError& e) {
      return reply(rs, 422, J{{"errors", J::array({J{{"field", e.key()}, {"message", e.what()}}})}});
    }
    std::lock_guard lk(mu_);
    const std::string id = "s" + std::to_string(++scenario_seq_);
    J body{{"scenario_id", id}, {"warnings", sc.warnings}};
    scenarios_.emplace(id, std::move(sc));
    reply(rs, 201, body);
  }

  void optimize(const std::string& sid, httplib::Response& rs) {
    std::unique_lock lk(mu_);
    auto it = scenarios_.find(sid);
    if (it == scenarios_.end()) return reply(rs, 404, error_body("unknown scenario"));
    Scenario& sc = it->second;
    if (!sc.last_job.empty()) {
      const auto& prev = *jobs_.at(sc.last_job);
      if (prev.status == JobStatus::Queued || prev.status == JobStatus::Running)
        return reply(rs, 409, J{{"error", "a job is already running for this scenario"},
                                {"job_id", prev.id},
                                {"status", to_string(prev.status)}});
    }
    if (!tl_cache_exists(tl_cache_dir(sc.config)))
      return reply(rs, 409, error_body("no TL cache at " + tl_cache_dir(sc.config) +
                                       "; run precompute-tl first"));
    auto job = std::make_shared<Job>();
    job->id = "j" + std::to_string(++job_seq_);
    job->scenario_id = sid;
    jobs_[job->id] = job;
    sc.last_job = job->id;
    const ScenarioConfig cfg = sc.config;
    workers_.emplace_back([this, job, cfg] { run_job(job, cfg); });
    reply(rs, 202, J{{"job_id", job->id}, {"status", to_string(job->status)}});
  }

  void run_job(const std::shared_ptr<Job>& job, const ScenarioConfig& cfg) {
    {
      std::lock_guard lk(mu_);
      job->status = JobStatus::Running;
      job->stage = "load";
    }
    try {
      auto bundle = std::make_shared<const ResultBundle>(run_scenario(
          cfg, RunMode::Compare, [&](std::string_view stage, double f) {
            std::lock_guard lk(mu_);
            job->stage = std::string(stage);
            job->progress = f;
          }));
      std::lock_guard lk(mu_);
      job->result = std::move(bundle);
      job->progress = 1.0;
      job->stage = "done";
      job->status = JobStatus::Done;
    } catch (const std::exception& e) {
      std::lock_guard lk(mu_);
      job->error = e.what();
      job->status = JobStatus::Failed;
    }
    cv_.notify_all();
  }

  void result(const std::string& sid, httplib::Response& rs) {
    std::shared_ptr<const ResultBundle> bundle;
    {
      std::lock_guard lk(mu_);
      auto it = scenarios_.find(sid);
      if (it == scenarios_.end()) return reply(rs, 404, error_body("unknown scenario"));
      if (it->second.last_job.empty())
        return reply(rs, 409, J{{"error", "scenario has not been optimized"},
                                {"status", nullptr}});
      const Job& j = *jobs_.at(it->second.last_job);
      if (j.status != JobStatus::Done) {
        J body = job_json(j);
        body["error"] = j.status == JobStatus::Failed ? j.error : "job not finished";
        return reply(rs, 409, body);
      }
      bundle = j.result;
    }
    reply(rs, 200, bundle_json(*bundle));
  }

  void tile(const httplib::Request& rq, httplib::Response& rs) {
    const std::string sid = rq.matches[1];
    J errors = J::array();
    auto param = [&](const char* name, std::optional<double> def) -> double {
      if (!rq.has_param(name)) {
        if (!def) errors.push_back({{"field", name}, {"message", "required"}});
        return def.value_or(0.0);
      }
      const auto s = rq.get_param_value(name);
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || !end || *end != '\0' || !std::isfinite(v))
        errors.push_back({{"field", name}, {"message", "not a number"}});
      return v;
    };
    const double lat = param("src_lat", std::nullopt);
    const double lon = param("src_lon", std::nullopt);
    const double depth = param("depth_m", 10.0);
    const double stride = param("stride", 4.0);
    if (!errors.empty()) return reply(rs, 422, J{{"errors", errors}});

    ScenarioConfig cfg;
    std::shared_ptr<const Environment> env;
    std::shared_ptr<const RbfInterpolant> rbf;
    {
      std::lock_guard lk(mu_);
      auto it = scenarios_.find(sid);
      if (it == scenarios_.end()) return reply(rs, 404, error_body("unknown scenario"));
      cfg = it->second.config;
      env = it->second.env;
      rbf = it->second.rbf;
    }
    if (!rbf) {
      if (!tl_cache_exists(tl_cache_dir(cfg)))
        return reply(rs, 409, error_body("no TL cache at " + tl_cache_dir(cfg)));
      env = std::make_shared<const Environment>(load_environment(cfg));
      rbf = std::make_shared<const RbfInterpolant>(load_surrogate(cfg).rbf);
      std::lock_guard lk(mu_);
      auto& sc = scenarios_.at(sid);
      sc.env = env;
      sc.rbf = rbf;
    }
    try {
      if (depth < 0.0 || depth > kMaxReceiverDepthM)
        throw DomainError("depth_m must lie in [0, 100]");
      const auto t = tl_tile(*rbf, *env, {lat, lon, kShipSourceDepthM}, depth,
                             static_cast<int>(stride));
      reply(rs, 200, tile_json(t));
    } catch (const Error& e) {
      reply(rs, 422, J{{"errors", J::array({J{{"field", "src_lat"}, {"message", e.what()}}})}});
    }
  }

  ScenarioConfig base_;
  httplib::Server server_;
  std::thread listener_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Scenario> scenarios_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::vector<std::thread> workers_;
  int scenario_seq_ = 0;
  int job_seq_ = 0;
};

} // namespace qv
