#include "support.hpp"

#include "quietvoyage/http_api.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

using namespace qvtest;
using J = nlohmann::json;

namespace {

// One service per test binary, backed by a quick M1 scenario with a cache.
struct Harness {
  fs::path dir = temp_dir("api");
  fs::path cfg_path;
  std::unique_ptr<qv::ApiService> svc;
  int port = 0;

  Harness() {
    cfg_path = write_scenario(m1_with_cache(dir, 120, 40), dir);
    svc = std::make_unique<qv::ApiService>(qv::parse_scenario(cfg_path.string()));
    port = svc->start("127.0.0.1", 0);
  }
  ~Harness() {
    svc.reset();
    fs::remove_all(dir);
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);
    return c;
  }
};

Harness& harness() {
  static Harness h;
  return h;
}

J body_of(const httplib::Result& r) { return J::parse(r->body); }

std::string create(const std::string& patch = "{}") {
  auto c = harness().client();
  auto r = c.Post("/scenarios", patch, "application/json");
  EXPECT_TRUE(r);
  EXPECT_EQ(r->status, 201) << r->body;
  return body_of(r).at("scenario_id").get<std::string>();
}

std::string optimize(const std::string& sid) {
  auto c = harness().client();
  auto r = c.Post("/scenarios/" + sid + "/optimize", "", "application/json");
  EXPECT_TRUE(r);
  EXPECT_EQ(r->status, 202) << r->body;
  return body_of(r).at("job_id").get<std::string>();
}

J wait_done(const std::string& job) {
  harness().svc->wait_job(job);
  auto c = harness().client();
  auto r = c.Get("/jobs/" + job);
  EXPECT_EQ(r->status, 200);
  return body_of(r);
}

} // namespace

TEST(Api, CreateOptimizePollResult) {
  const auto sid = create();
  auto c = harness().client();
  auto sc = c.Get("/scenarios/" + sid);
  ASSERT_EQ(sc->status, 200);
  EXPECT_DOUBLE_EQ(body_of(sc).at("scenario").at("eta_h").get<double>(), 1.35);

  const auto job = optimize(sid);
  const auto status = wait_done(job);
  EXPECT_EQ(status.at("status"), "done") << status.dump();
  EXPECT_DOUBLE_EQ(status.at("progress").get<double>(), 1.0);
  EXPECT_EQ(status.at("scenario_id"), sid);

  auto res = c.Get("/scenarios/" + sid + "/result");
  ASSERT_EQ(res->status, 200);
  const auto b = body_of(res);
  ASSERT_TRUE(b.contains("delta_j_s_db"));
  EXPECT_LT(b.at("delta_j_s_db").get<double>(), 0.0);
  EXPECT_EQ(b.at("comparison").at("delta_j_s_db"), b.at("delta_j_s_db"));
  EXPECT_EQ(b.at("version"), qv::kVersion);
}

TEST(Api, ResultBeforeDoneIsConflict) {
  const auto sid = create();
  auto c = harness().client();
  auto r = c.Get("/scenarios/" + sid + "/result");
  EXPECT_EQ(r->status, 409);
  const auto job = optimize(sid);
  auto again = c.Get("/scenarios/" + sid + "/result");
  if (again->status == 409) {
    const auto b = body_of(again);
    EXPECT_TRUE(b.at("status") == "queued" || b.at("status") == "running") << b.dump();
    EXPECT_EQ(b.at("job_id"), job);
    // A second optimize while the first is in flight is refused too.
    auto dup = c.Post("/scenarios/" + sid + "/optimize", "", "application/json");
    EXPECT_TRUE(dup->status == 409 || dup->status == 202);
  }
  wait_done(job);
  EXPECT_EQ(c.Get("/scenarios/" + sid + "/result")->status, 200);
}

TEST(Api, UnknownIdsAre404) {
  auto c = harness().client();
  EXPECT_EQ(c.Get("/scenarios/s999")->status, 404);
  EXPECT_EQ(c.Get("/scenarios/s999/result")->status, 404);
  EXPECT_EQ(c.Post("/scenarios/s999/optimize", "", "application/json")->status, 404);
  EXPECT_EQ(c.Get("/jobs/j999")->status, 404);
  EXPECT_EQ(c.Get("/scenarios/s999/tiles/tl?src_lat=48.68&src_lon=-123.3")->status, 404);
}

TEST(Api, MalformedBodiesAre422WithFields) {
  auto c = harness().client();
  auto r = c.Post("/scenarios", R"({"eta_h": -2})", "application/json");
  ASSERT_EQ(r->status, 422);
  EXPECT_EQ(body_of(r).at("errors").at(0).at("field"), "eta_h");
  r = c.Post("/scenarios", R"({"ship": {"v_max_kt": "fast"}})", "application/json");
  ASSERT_EQ(r->status, 422);
  EXPECT_EQ(body_of(r).at("errors").at(0).at("field"), "ship.v_max_kt");
  EXPECT_EQ(c.Post("/scenarios", "{nope", "application/json")->status, 422);
  EXPECT_EQ(c.Post("/scenarios", "[1, 2]", "application/json")->status, 422);
}

TEST(Api, MissingCacheIsConflict) {
  const auto sid = create(R"({"paths": {"tl_cache": "/nonexistent/qv_cache"}})");
  auto c = harness().client();
  EXPECT_EQ(c.Post("/scenarios/" + sid + "/optimize", "", "application/json")->status, 409);
  EXPECT_EQ(c.Get("/scenarios/" + sid + "/tiles/tl?src_lat=48.68&src_lon=-123.3")->status, 409);
}

TEST(Api, TwoConcurrentJobsComplete) {
  const auto a = create();
  const auto b = create(R"({"mammals": [{"id": 4, "lat_deg": 48.62, "lon_deg": -123.25, "depth_m": 20}]})");
  const auto ja = optimize(a);
  const auto jb = optimize(b);
  EXPECT_EQ(wait_done(ja).at("status"), "done");
  EXPECT_EQ(wait_done(jb).at("status"), "done");
  auto c = harness().client();
  const auto rb = body_of(c.Get("/scenarios/" + b + "/result"));
  EXPECT_EQ(rb.at("mammals").at(0).at("mammal_id"), 4);
}

TEST(Api, TlTile) {
  const auto sid = create();
  auto c = harness().client();
  auto r = c.Get("/scenarios/" + sid + "/tiles/tl?src_lat=48.684&src_lon=-123.3&stride=8");
  ASSERT_EQ(r->status, 200) << r->body;
  const auto t = body_of(r);
  const auto rows = t.at("rows").get<int>(), cols = t.at("cols").get<int>();
  EXPECT_GT(rows, 0);
  EXPECT_EQ(t.at("tl_db").size(), static_cast<std::size_t>(rows * cols));
  EXPECT_DOUBLE_EQ(t.at("r_z").get<double>(), 10.0);
  EXPECT_EQ(c.Get("/scenarios/" + sid + "/tiles/tl?src_lat=48.684")->status, 422);
  EXPECT_EQ(c.Get("/scenarios/" + sid + "/tiles/tl?src_lat=x&src_lon=-123.3")->status, 422);
  EXPECT_EQ(c.Get("/scenarios/" + sid + "/tiles/tl?src_lat=48.684&src_lon=-123.3&depth_m=500")->status,
            422);
}

TEST(Api, NumbersMatchCliCsv) {
  const auto sid = create();
  const auto job = optimize(sid);
  ASSERT_EQ(wait_done(job).at("status"), "done");
  auto c = harness().client();
  const auto b = body_of(c.Get("/scenarios/" + sid + "/result"));

  const auto out = harness().dir / "cli_out";
  const std::string cmd = std::string("\"") + QV_BIN + "\" --log-level warn --out-dir \"" +
                          out.string() + "\" compare \"" + harness().cfg_path.string() +
                          "\" > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  std::istringstream csv(slurp(out / "comparison.csv"));
  std::string line, last;
  while (std::getline(csv, line))
    if (!line.empty()) last = line;
  ASSERT_EQ(last.rfind("mean,", 0), 0u);
  std::vector<std::string> cells;
  std::istringstream ls(last);
  for (std::string x; std::getline(ls, x, ',');) cells.push_back(x);
  ASSERT_EQ(cells.size(), 5u);
  const auto& cmp = b.at("comparison");
  EXPECT_EQ(std::strtod(cells[1].c_str(), nullptr), cmp.at("baseline_j_s_db").get<double>());
  EXPECT_EQ(std::strtod(cells[2].c_str(), nullptr), cmp.at("optimized_j_s_db").get<double>());
  EXPECT_EQ(std::strtod(cells[3].c_str(), nullptr), b.at("delta_j_s_db").get<double>());
  EXPECT_EQ(std::strtod(cells[4].c_str(), nullptr), cmp.at("reduction_pct").get<double>());
}

TEST(Api, DefaultPortFromEnvironment) {
  ::setenv("QV_PORT", "9123", 1);
  EXPECT_EQ(qv::default_port(), 9123);
  ::setenv("QV_PORT", "notaport", 1);
  EXPECT_EQ(qv::default_port(), 8080);
  ::unsetenv("QV_PORT");
  EXPECT_EQ(qv::default_port(), 8080);
}
