#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <cmath>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "beliefnet/cli.hpp"
#include "beliefnet/netlang.hpp"
#include "beliefnet/report.hpp"
#include "beliefnet/sensitivity.hpp"
#include "beliefnet/service.hpp"
#include "testing.hpp"

using namespace beliefnet;
using nlohmann::json;

namespace {

struct Reply {
  int status;
  json body;
  std::string raw;
  std::string content_type;
};

Reply call(Service& s, std::string_view method, std::string_view path, const json& body = nullptr) {
  const auto r = s.handle(method, path, body.is_null() ? std::string() : body.dump());
  Reply out{r.status, nullptr, r.body, r.content_type};
  if (r.content_type == "application/json") out.body = json::parse(r.body);
  return out;
}

std::string fixture_text(const std::string& name) {
  return beliefnet::testing::read_text(beliefnet::testing::data_dir() / name);
}

std::string open_session(Service& s, const std::string& network) {
  const auto r = call(s, "POST", "/sessions", {{"network", network}});
  REQUIRE(r.status == 201);
  return r.body.at("session").get<std::string>();
}

std::vector<double> probs(const json& consultation, const std::string& variable) {
  return consultation.at("posteriors").at(variable).at("probabilities").get<std::vector<double>>();
}

json run_cli_json(std::vector<std::string> args) {
  args.insert(args.begin(), {"beliefnet", "--format", "json"});
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  REQUIRE(code == 0);
  return json::parse(out.str());
}

std::string data(const std::string& name) { return (beliefnet::testing::data_dir() / name).string(); }

}  // namespace

TEST_CASE("loading networks") {
  Service s;
  const auto r = call(s, "POST", "/networks", {{"source", fixture_text("orchard-mini.bn")}});
  REQUIRE(r.status == 201);
  const auto id = r.body.at("id").get<std::string>();
  CHECK(r.body.at("nodes").size() == 24);
  CHECK(r.body.at("decision") == "FungicideTreatment");
  CHECK(r.body.at("utility") == "TotalCost");
  CHECK(r.body.at("diagnosis") == json::array({"AbioticStress", "OtherRootProblems", "Phytophthora"}));
  CHECK(r.body.at("diagnostics").size() == 1);  // the palette lint

  // Raw text bodies work too, and identical sources get independent ids.
  const auto again = s.handle("POST", "/networks", fixture_text("orchard-mini.bn"));
  CHECK(again.status == 201);
  CHECK(json::parse(again.body).at("id") != id);

  const auto g = call(s, "GET", "/networks/" + id);
  CHECK(g.status == 200);
  CHECK(g.body.at("id") == id);
  CHECK(call(s, "GET", "/networks/n999").status == 404);
}

TEST_CASE("malformed networks return diagnostics") {
  Service s;
  const auto r = call(s, "POST", "/networks",
                      {{"source", "variable A { levels no yes }\nnode A { kind chance; parents Q; cpd table { row 1 0 } }\n"}});
  CHECK(r.status == 422);
  CHECK(r.body.at("error") == "invalid_network");
  REQUIRE(r.body.at("diagnostics").size() >= 1);
  const auto& d = r.body.at("diagnostics")[0];
  CHECK(d.at("severity") == "error");
  CHECK(d.at("span").at("line") == 2);
  CHECK(d.at("span").at("column").get<int>() >= 1);
}

TEST_CASE("cold-stress consultation") {
  Service s;
  const auto id = s.load(fixture_text("coldstress.bn"));
  const auto created = call(s, "POST", "/sessions", {{"network", id}});
  REQUIRE(created.status == 201);
  CHECK(created.body.at("revision") == 0);
  CHECK(created.body.at("network") == id);
  CHECK(std::abs(probs(created.body, "ColdStressRegion")[1] - 0.95) < 1e-15);
  CHECK(created.body.at("decision").is_null());
  const auto sid = created.body.at("session").get<std::string>();

  auto set = call(s, "PUT", "/sessions/" + sid + "/evidence", {{"variable", "ReportsOfColdStress"}, {"level", "none"}});
  REQUIRE(set.status == 200);
  CHECK(set.body.at("revision") == 1);
  CHECK(std::abs(probs(set.body, "ColdStressRegion")[1] - 1.0 / 3.0) < 1e-12);
  CHECK(set.body.at("evidence") == json{{"ReportsOfColdStress", "none"}});
  CHECK(std::abs(set.body.at("evidence_probability").get<double>() - 0.07125) < 1e-15);
  CHECK(set.body.at("conflict") == false);

  auto clear = call(s, "PUT", "/sessions/" + sid + "/evidence", {{"clear_all", true}});
  REQUIRE(clear.status == 200);
  CHECK(clear.body.at("revision") == 2);
  CHECK(std::abs(probs(clear.body, "ColdStressRegion")[1] - 0.95) < 1e-15);
  CHECK(clear.body.at("evidence").empty());

  CHECK(call(s, "GET", "/sessions/" + sid + "/decision").status == 422);
}

TEST_CASE("set then clear equals never set") {
  Service s;
  const auto id = s.load(fixture_text("orchard-mini.bn"));
  const auto sid = open_session(s, id);
  const auto path = "/sessions/" + sid + "/evidence";
  const auto before = call(s, "GET", "/sessions/" + sid + "/posteriors");
  call(s, "PUT", path, {{"variable", "LabTest"}, {"level", "positive"}});
  const auto cleared = call(s, "DELETE", path + "/LabTest");
  REQUIRE(cleared.status == 200);
  CHECK(cleared.body.at("revision") == 2);
  CHECK(cleared.body.at("posteriors") == before.body.at("posteriors"));
  CHECK(cleared.body.at("decision") == before.body.at("decision"));
  CHECK(before.body.at("revision") == 0);
}

TEST_CASE("repeating an assignment is idempotent") {
  Service s;
  const auto sid = open_session(s, s.load(fixture_text("orchard-mini.bn")));
  const auto path = "/sessions/" + sid + "/evidence";
  const json body{{"assignments", {{"LabTest", "positive"}, {"TissueDamage", "moderate"}}}};
  const auto a = call(s, "PUT", path, body);
  const auto b = call(s, "PUT", path, body);
  REQUIRE(a.status == 200);
  REQUIRE(b.status == 200);
  CHECK(a.body.at("revision") == 1);
  CHECK(b.body.at("revision") == 2);
  CHECK(a.body.at("posteriors") == b.body.at("posteriors"));
  CHECK(a.body.at("decision") == b.body.at("decision"));
  CHECK(a.body.at("evidence_probability") == b.body.at("evidence_probability"));
}

TEST_CASE("sessions are isolated") {
  Service s;
  const auto id = s.load(fixture_text("orchard-mini.bn"));
  const auto s1 = open_session(s, id);
  const auto s2 = open_session(s, id);
  const auto prior = call(s, "GET", "/sessions/" + s2 + "/posteriors").body;

  call(s, "PUT", "/sessions/" + s1 + "/evidence", {{"variable", "LabTest"}, {"level", "positive"}});
  auto r2 = call(s, "GET", "/sessions/" + s2 + "/posteriors").body;
  CHECK(r2.at("posteriors") == prior.at("posteriors"));
  CHECK(r2.at("revision") == 0);

  call(s, "PUT", "/sessions/" + s2 + "/evidence", {{"variable", "LabTest"}, {"level", "negative"}});
  call(s, "PUT", "/sessions/" + s1 + "/evidence", {{"variable", "CankerMargin"}, {"level", "present"}});
  const auto r1 = call(s, "GET", "/sessions/" + s1 + "/posteriors").body;
  r2 = call(s, "GET", "/sessions/" + s2 + "/posteriors").body;
  CHECK(r1.at("evidence") == json{{"CankerMargin", "present"}, {"LabTest", "positive"}});
  CHECK(r2.at("evidence") == json{{"LabTest", "negative"}});
  CHECK(r1.at("revision") == 2);
  CHECK(r2.at("revision") == 1);
}

TEST_CASE("conflicting evidence is refused and the session kept") {
  Service s;
  const auto sid = open_session(s, s.load(fixture_text("orchard-mini.bn")));
  const auto path = "/sessions/" + sid + "/evidence";
  call(s, "PUT", path, {{"variable", "WaterStress"}, {"level", "beyond_recovery"}});
  const auto r = call(s, "PUT", path, {{"variable", "AbioticStress"}, {"level", "none"}});
  CHECK(r.status == 409);
  CHECK(r.body.at("error") == "conflict");
  CHECK(r.body.at("conflict") == true);
  CHECK(r.body.at("evidence_probability") == 0.0);
  CHECK(r.body.at("revision") == 1);
  CHECK(r.body.at("evidence") == json{{"WaterStress", "beyond_recovery"}});
  const auto after = call(s, "GET", "/sessions/" + sid + "/posteriors");
  CHECK(after.body.at("revision") == 1);
  CHECK(after.body.at("evidence") == json{{"WaterStress", "beyond_recovery"}});
  CHECK(after.body.at("conflict") == false);
}

TEST_CASE("request errors") {
  Service s;
  const auto sid = open_session(s, s.load(fixture_text("orchard-mini.bn")));
  const auto path = "/sessions/" + sid + "/evidence";
  CHECK(call(s, "PUT", path, {{"variable", "Nope"}, {"level", "x"}}).status == 422);
  CHECK(call(s, "PUT", path, {{"variable", "LabTest"}, {"level", "maybe"}}).status == 422);
  CHECK(call(s, "PUT", path, {{"variable", "TotalCost"}, {"level", "x"}}).status == 422);
  CHECK(call(s, "PUT", path, {{"variable", "LabTest"}, {"level", 3}}).status == 422);
  CHECK(call(s, "PUT", path, {{"something", "else"}}).status == 400);
  CHECK(s.handle("PUT", path, "{not json").status == 400);
  CHECK(call(s, "DELETE", path + "/Nope").status == 422);
  CHECK(call(s, "GET", "/sessions/s999/posteriors").status == 404);
  CHECK(call(s, "PUT", "/sessions/s999/evidence", {{"clear_all", true}}).status == 404);
  CHECK(call(s, "GET", "/nowhere").status == 404);
  CHECK(call(s, "PATCH", path).status == 404);
  CHECK(call(s, "POST", "/sessions", {{"network", "n404"}}).status == 404);
  CHECK(call(s, "POST", "/sessions", json::object()).status == 400);
  const auto e = call(s, "GET", "/nowhere");
  CHECK(e.body.at("error") == "not_found");
  // The failed requests did not touch the session.
  CHECK(call(s, "GET", "/sessions/" + sid + "/posteriors").body.at("revision") == 0);
}

TEST_CASE("what-if queries") {
  Service s;
  const auto sid = open_session(s, s.load(fixture_text("orchard-mini.bn")));
  call(s, "PUT", "/sessions/" + sid + "/evidence", {{"variable", "LabTest"}, {"level", "positive"}});
  const auto base = call(s, "GET", "/sessions/" + sid + "/posteriors").body;

  SUBCASE("equal to the current evidence gives zero deltas") {
    const auto r = call(s, "POST", "/sessions/" + sid + "/whatif", {{"assignments", {{"LabTest", "positive"}}}});
    REQUIRE(r.status == 200);
    CHECK(r.body.at("hypothetical") == true);
    for (const auto& [var, d] : r.body.at("deltas").at("posteriors").items()) {
      for (const auto& x : d) CHECK(x.get<double>() == 0.0);
    }
    for (const auto& [alt, d] : r.body.at("deltas").at("expected_utilities").items()) CHECK(d.get<double>() == 0.0);
    CHECK(r.body.at("deltas").at("expected_utilities").size() == 2);
  }

  SUBCASE("the session is not mutated") {
    const auto r = call(s, "POST", "/sessions/" + sid + "/whatif", {{"assignments", {{"CankerMargin", "present"}}}});
    REQUIRE(r.status == 200);
    CHECK(r.body.at("evidence") == json{{"CankerMargin", "present"}, {"LabTest", "positive"}});
    const auto after = call(s, "GET", "/sessions/" + sid + "/posteriors").body;
    CHECK(after == base);
    // Deltas are the differences between the two consultations.
    const auto p = probs(r.body, "Phytophthora");
    const auto q = probs(base, "Phytophthora");
    const auto d = r.body.at("deltas").at("posteriors").at("Phytophthora");
    for (std::size_t k = 0; k < 3; ++k) CHECK(d[k].get<double>() == p[k] - q[k]);
  }

  SUBCASE("conflicting hypothesis") {
    const auto r = call(s, "POST", "/sessions/" + sid + "/whatif",
                        {{"assignments", {{"WaterStress", "beyond_recovery"}, {"AbioticStress", "none"}}}});
    CHECK(r.status == 409);
    CHECK(call(s, "GET", "/sessions/" + sid + "/posteriors").body == base);
  }
}

TEST_CASE("what-if on a d-separated indicant leaves the diagnoses unchanged") {
  Service s;
  const auto sid = open_session(s, s.load(fixture_text("orchard-mini.bn")));
  call(s, "PUT", "/sessions/" + sid + "/evidence",
       {{"assignments", {{"AbioticStress", "none"}, {"WaterloggedSoil", "no"}}}});
  const auto r = call(s, "POST", "/sessions/" + sid + "/whatif", {{"assignments", {{"LatePruning", "yes"}}}});
  REQUIRE(r.status == 200);
  for (const auto& [var, d] : r.body.at("deltas").at("posteriors").items()) {
    for (const auto& x : d) CHECK(std::abs(x.get<double>()) < 1e-12);
  }
}

TEST_CASE("what-if ranking matches the offline sensitivity ranking") {
  Service s;
  const auto sid = open_session(s, s.load(fixture_text("orchard-mini.bn")));
  const auto r = call(s, "POST", "/sessions/" + sid + "/whatif", {{"target", "Phytophthora=beyond_recovery"}});
  REQUIRE(r.status == 200);
  CHECK(r.body.at("target") == "Phytophthora=beyond_recovery");

  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  const auto offline = rank_indicants(net, {}, {"Phytophthora", "beyond_recovery"}, report::indicant_variables(net));
  const auto& served = r.body.at("indicants");
  REQUIRE(served.size() == offline.size());
  for (std::size_t i = 0; i < offline.size(); ++i) {
    CHECK(served[i].at("variable") == offline[i].variable);
    CHECK(served[i].at("level") == offline[i].level);
    CHECK(served[i].at("range").get<double>() == offline[i].range);
  }

  const auto cli = run_cli_json({"sense", data("orchard-mini.bn"), "--target", "Phytophthora=beyond_recovery", "--rank"});
  CHECK(cli.at("indicants") == served);

  // Default target: last level of the first diagnosis variable.
  const auto d = call(s, "POST", "/sessions/" + sid + "/whatif", json::object());
  CHECK(d.body.at("target") == "AbioticStress=beyond_recovery");
  // Observed targets get no ranking.
  const auto o = call(s, "POST", "/sessions/" + sid + "/whatif",
                      {{"assignments", {{"Phytophthora", "none"}}}, {"target", "Phytophthora=none"}});
  CHECK(o.body.at("indicants").empty());
}

TEST_CASE("served numbers equal the command line's structured output") {
  Service s;
  const auto sid = open_session(s, s.load(fixture_text("orchard-mini.bn")));
  const auto ev_path = data("scenarios/08-conflicting.ev");
  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  const auto ev = load_evidence(beliefnet::testing::read_text(ev_path), net);
  json assignments = report::evidence(net, ev);
  const auto set = call(s, "PUT", "/sessions/" + sid + "/evidence", {{"assignments", assignments}});
  REQUIRE(set.status == 200);

  for (const auto* v : {"Phytophthora", "AbioticStress", "OtherRootProblems"}) {
    const auto cli = run_cli_json({"infer", data("orchard-mini.bn"), "--evidence", ev_path, "--target", v});
    const auto a = cli.at("probabilities").get<std::vector<double>>();
    const auto b = probs(set.body, v);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-12);
    CHECK(std::abs(cli.at("evidence_probability").get<double>() - set.body.at("evidence_probability").get<double>()) <
          1e-12);
  }

  const auto cli = run_cli_json({"decide", data("orchard-mini.bn"), "--evidence", ev_path});
  const auto served = call(s, "GET", "/sessions/" + sid + "/decision");
  REQUIRE(served.status == 200);
  CHECK(served.body.at("recommended") == cli.at("recommended"));
  CHECK(served.body.at("tie") == cli.at("tie"));
  for (std::size_t a = 0; a < 2; ++a) {
    CHECK(std::abs(served.body.at("alternatives")[a].at("expected_utility").get<double>() -
                   cli.at("alternatives")[a].at("expected_utility").get<double>()) < 1e-12);
  }
  CHECK(served.body.at("alternatives") == set.body.at("decision").at("alternatives"));
}

TEST_CASE("export returns an evidence file") {
  Service s;
  const auto id = s.load(fixture_text("orchard-mini.bn"));
  const auto sid = open_session(s, id);
  call(s, "PUT", "/sessions/" + sid + "/evidence",
       {{"assignments", {{"LabTest", "positive"}, {"FungicideTreatment", "treat"}}}});
  const auto r = s.handle("GET", "/sessions/" + sid + "/export", "");
  CHECK(r.status == 200);
  CHECK(r.content_type == "text/plain");
  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  const auto ev = load_evidence(r.body, net);
  CHECK(ev.size() == 2);
  CHECK(ev.get("LabTest") == std::size_t{1});
  CHECK(ev.get("FungicideTreatment") == std::size_t{1});
}

TEST_CASE("concurrent mutations on one session are serialized") {
  Service s;
  const auto sid = open_session(s, s.load(fixture_text("coldstress.bn")));
  const auto path = "/sessions/" + sid + "/evidence";
  constexpr int kThreads = 8, kEach = 20;
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < kEach; ++i) {
        const char* level = (t + i) % 2 ? "none" : "reported";
        s.handle("PUT", path, json{{"variable", "ReportsOfColdStress"}, {"level", level}}.dump());
        s.handle("GET", "/sessions/" + sid + "/posteriors", "");
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(call(s, "GET", "/sessions/" + sid + "/posteriors").body.at("revision") == kThreads * kEach);
}

TEST_CASE("over HTTP") {
  Service s;
  const int port = s.start_background();
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);

  auto loaded = client.Post("/networks", fixture_text("coldstress.bn"), "text/plain");
  REQUIRE(loaded);
  CHECK(loaded->status == 201);
  const auto id = json::parse(loaded->body).at("id").get<std::string>();

  auto session = client.Post("/sessions", json{{"network", id}}.dump(), "application/json");
  REQUIRE(session);
  CHECK(session->status == 201);
  CHECK(session->get_header_value("Content-Type").find("application/json") == 0);
  const auto sid = json::parse(session->body).at("session").get<std::string>();

  auto set = client.Put("/sessions/" + sid + "/evidence",
                        json{{"variable", "ReportsOfColdStress"}, {"level", "none"}}.dump(), "application/json");
  REQUIRE(set);
  CHECK(set->status == 200);
  const auto body = json::parse(set->body);
  CHECK(std::abs(body.at("posteriors").at("ColdStressRegion").at("probabilities")[1].get<double>() - 1.0 / 3.0) <
        1e-12);
  // Probabilities are JSON numbers, not strings.
  CHECK(body.at("posteriors").at("ColdStressRegion").at("probabilities")[1].is_number_float());

  auto cleared = client.Delete("/sessions/" + sid + "/evidence/ReportsOfColdStress");
  REQUIRE(cleared);
  CHECK(cleared->status == 200);
  CHECK(std::abs(json::parse(cleared->body).at("posteriors").at("ColdStressRegion").at("probabilities")[1].get<double>() -
                 0.95) < 1e-15);

  auto exported = client.Get("/sessions/" + sid + "/export");
  REQUIRE(exported);
  CHECK(exported->status == 200);

  auto missing = client.Get("/sessions/s999/posteriors");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  s.stop();
  CHECK_FALSE(client.Get("/networks/" + id));
}
