#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("parporo_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run run(const std::string& args) {
  const fs::path o = scratch() / "stdout", e = scratch() / "stderr";
  const std::string cmd = std::string(PARPORO_CLI) + " " + args + " >" + o.string() + " 2>" + e.string();
  int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

std::string fixture(const std::string& name) { return std::string(PARPORO_FIXTURES) + "/" + name; }

fs::path write_file(const std::string& name, const std::string& body) {
  fs::path p = scratch() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("maxhole reports the exact hole") {
  Run r = run("maxhole --set " + fixture("hyperplane.json") + " --cap 2");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["measure"] == "1/64");
  CHECK(j["address"]["level"] == 1);
  CHECK(j["config"]["cap"] == 2);
  CHECK(j["status"] == "ok");
}

TEST_CASE("input errors exit with status 1") {
  Run missing = run("maxhole --set " + (scratch() / "none.json").string());
  CHECK(missing.code == 1);
  CHECK(missing.err.find("cannot open") != std::string::npos);

  Run bad = run("maxhole --set " + write_file("bad.json", "{bad").string());
  CHECK(bad.code == 1);
  CHECK(bad.err.find("malformed set JSON") != std::string::npos);

  Run geom = run("maxhole --set " + fixture("point.json") + " --d 1");
  CHECK(geom.code == 1);
  CHECK(geom.err.find("invalid geometry") != std::string::npos);

  Run flag = run("maxhole --set " + fixture("point.json") + " --bogus");
  CHECK(flag.code == 1);

  Run key = run("maxhole --set " + fixture("point.json") + " --config " +
                write_file("cfg_bad.json", R"({"cap": 2, "zzz": 1})").string());
  CHECK(key.code == 1);
  CHECK(key.err.find("zzz") != std::string::npos);

  Run num = run("maxhole --set " + fixture("point.json") + " --cap two");
  CHECK(num.code == 1);
}

TEST_CASE("config file supplies defaults and flags win") {
  const std::string cfg = write_file("cfg.json", R"({"cap": 3})").string();
  Run a = run("maxhole --set " + fixture("hyperplane.json") + " --config " + cfg);
  REQUIRE(a.code == 0);
  CHECK(json::parse(a.out)["config"]["cap"] == 3);
  Run b = run("maxhole --set " + fixture("hyperplane.json") + " --config " + cfg + " --cap 2");
  REQUIRE(b.code == 0);
  CHECK(json::parse(b.out)["config"]["cap"] == 2);
}

TEST_CASE("porosity output is deterministic and thread independent") {
  const std::string base = "porosity --set " + fixture("point.json") + " --cap 3 --samples 4 --deltas 6 --seed 3";
  Run a = run(base + " --threads 1");
  Run b = run(base + " --threads 4");
  Run c = run(base + " --threads 1");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out == c.out);
  json ja = json::parse(a.out), jb = json::parse(b.out);
  ja.erase("config");
  jb.erase("config");
  CHECK(ja == jb);

  Run csv = run(base + " --format csv");
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("delta,c\n", 0) == 0);
  CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 7);
}

TEST_CASE("a1 on the hyperplane") {
  Run r = run("a1 --set " + fixture("hyperplane.json") + " --beta 1/6 --tol 1e-7");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  const double lo = std::stod(j["sup_ratio"][0].get<std::string>());
  const double hi = std::stod(j["sup_ratio"][1].get<std::string>());
  CHECK(std::fabs(lo - 2.0) < 1e-5);
  CHECK(std::fabs(hi - 2.0) < 1e-5);
}

TEST_CASE("--out writes the report to a file") {
  const fs::path out = scratch() / "chain.json";
  Run r = run("chain --out " + out.string());
  REQUIRE(r.code == 0);
  json j = json::parse(slurp(out));
  CHECK(j["ok"] == true);
}

TEST_CASE("stopping and tower subcommands") {
  Run s = run("stopping --set " + fixture("band.json") + " --top 1/2 --cap 3 --delta 1/262144");
  REQUIRE(s.code == 0);
  json js = json::parse(s.out);
  const json& part = js["partition"];
  CHECK(part["decay"]["pass"] == true);
  REQUIRE(part["S"].size() == 2);
  CHECK(part["S"][0]["count"] == 1072);
  CHECK(part["S"][1]["count"] == 640);
  for (const auto& [name, c] : js["checks"].items()) {
    CAPTURE(name);
    CHECK(c["ok"] == true);
  }

  Run t = run("tower --set " + fixture("hyperplane.json") + " --cap 3 --delta 1/4 --deltas 6");
  REQUIRE(t.code == 0);
  json jt = json::parse(t.out);
  CHECK(jt["residual"] == "1/16");
  CHECK(jt["union_ok"] == true);
  CHECK(jt["disjoint_ok"] == true);
}

TEST_CASE("characterize exit codes") {
  Run ok = run("characterize --set " + fixture("hyperplane.json"));
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out)["verdict"] == "consistent");

  Run starved = run("characterize --set " + fixture("halfspace.json") + " --samples 4");
  CHECK(starved.code == 2);
  json j = json::parse(starved.out);
  CHECK(j["verdict"] == "inconclusive");
  CHECK(j["starved_stage"] == "porosity");
}
