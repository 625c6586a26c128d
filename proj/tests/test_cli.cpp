#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "../tools/cli.hpp"

using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = prw::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> v;
  std::string cur;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    else if (c == ',' && !quoted) v.push_back(std::exchange(cur, {}));
    else cur += c;
  }
  v.push_back(cur);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / "prw_cli_test";
  fs::create_directories(d);
  auto p = d / name;
  fs::remove(p);
  return p;
}

// label column of every data row of a sweep
std::vector<std::string> labels(const std::string& csv) {
  auto ls = lines(csv);
  REQUIRE(!ls.empty());
  const auto header = split(ls[0]);
  const auto col = std::find(header.begin(), header.end(), "label") - header.begin();
  std::vector<std::string> out;
  for (std::size_t i = 1; i < ls.size(); ++i) out.push_back(split(ls[i]).at(col));
  return out;
}

const std::string kHarmonicHalf = R"({"kind":"harmonic","params":{"lambda":0.5}})";

}  // namespace

TEST_CASE("classify prints the label and exits cleanly") {
  auto r = run({"classify", "--model", kHarmonicHalf});
  CHECK(r.code == prw::cli::kExitOk);
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 2);
  CHECK(ls[0] == "Recurrent");
  CHECK_THAT(ls[1], ContainsSubstring("\"label\":\"Recurrent\""));

  auto t = run({"classify", "--model", R"({"kind":"harmonic","params":{"lambda_up":0.3,"lambda_down":0.6}})"});
  CHECK(t.code == 0);
  CHECK(lines(t.out)[0] == "TransientUp");

  auto cf = run({"classify", "--closed-form", "--model", R"({"kind":"prime_lacunar","params":{"lambda":0.8,"r":2}})"});
  CHECK(cf.code == 0);
  CHECK(lines(cf.out)[0] == "TransientDown");
}

TEST_CASE("classify exits 2 when the verdict is inconclusive") {
  // a tiny budget leaves the tabulated heavy tails undecided
  const std::string m =
      R"({"kind":"tabulated","params":{"up":{"values":[0.5],"tail":{"rule":"power","coef":0.5,"rate":1}},)"
      R"("down":{"values":[0.5],"tail":{"rule":"power","coef":0.5,"rate":1}}}})";
  auto r = run({"--budget-terms", "10", "classify", "--model", m});
  INFO(r.out << r.err);
  CHECK(lines(r.out).at(0) == "Inconclusive");
  CHECK(r.code == prw::cli::kExitInconclusive);
  auto full = run({"--budget-terms", "100000", "classify", "--model", m});
  CHECK(lines(full.out).at(0) == "Recurrent");
  CHECK(full.code == prw::cli::kExitOk);
}

TEST_CASE("simulate is reproducible byte for byte") {
  const auto a = scratch("a.csv"), b = scratch("b.csv");
  const std::vector<std::string> common{"--seed", "42", "simulate", "--model", kHarmonicHalf, "--steps", "5000",
                                        "--replicas", "8"};
  auto ra = common, rb = common;
  ra.insert(ra.begin(), {"--out", a.string()});
  rb.insert(rb.begin(), {"--threads", "4", "--out", b.string()});
  REQUIRE(run(ra).code == 0);
  REQUIRE(run(rb).code == 0);
  const auto sa = slurp(a);
  CHECK(sa == slurp(b));
  auto ls = lines(sa);
  REQUIRE(ls.size() == 9);
  CHECK(ls[0] == "replica,seed,final_position,drift_estimate,sign_changes_M,returns_to_origin,min_pos,max_pos");
  auto other = run({"--seed", "43", "simulate", "--model", kHarmonicHalf, "--steps", "5000", "--replicas", "8"});
  CHECK(other.out != sa);
}

TEST_CASE("tails and oracle output") {
  auto t = run({"tails", "--model", R"({"kind":"constant","params":{"p_up":0.5,"p_down":0.25}})", "--n-max", "3"});
  REQUIRE(t.code == 0);
  auto ls = lines(t.out);
  REQUIRE(ls.size() == 4);
  CHECK(ls[0] == "n,alpha_up,alpha_down,tail_up,tail_down,trunc_mean_up,trunc_mean_down");
  CHECK(ls[1] == "1,0.5,0.25,1,1,1,1");
  CHECK(split(ls[3])[3] == "0.25");

  auto o = run({"oracle", "--model", R"({"kind":"constant","params":{"p_up":0.5,"p_down":0.25}})", "--n", "2"});
  REQUIRE(o.code == 0);
  auto ol = lines(o.out);
  CHECK_THAT(ol.at(0), ContainsSubstring("\"retained_mass\":1"));
  CHECK(ol.at(1) == "position,probability");
  CHECK(ol.at(2) == "-2,0.75");
  CHECK(ol.at(3) == "0,0.25");
}

TEST_CASE("sweep over the down exponent") {
  const std::string grid = R"({"base":{"kind":"harmonic","params":{"lambda_up":0.5,"lambda_down":0.5}},
    "axes":[{"name":"lambda_down","path":"/params/lambda_down","values":[0.3,0.4,0.5,0.6,0.7]}]})";
  auto r = run({"--budget-terms", "200000", "sweep", "--grid", grid});
  INFO(r.out << r.err);
  REQUIRE(r.code == 0);
  CHECK(labels(r.out) == std::vector<std::string>{"TransientDown", "TransientDown", "Recurrent", "TransientUp", "TransientUp"});
  CHECK(lines(r.out)[0] == "index,lambda_down,label,regime,drift_S,J_ud,J_du,K_ud,K_du,rules,error");
}

TEST_CASE("sweep labels follow the drift sign on constant models") {
  const std::string grid = R"({"base":{"kind":"constant","params":{"p_up":0.5,"p_down":0.5}},
    "axes":[{"path":"/params/p_up","values":[0.25,0.75]},{"path":"/params/p_down","values":[0.3,0.6]}]})";
  auto r = run({"sweep", "--grid", grid});
  REQUIRE(r.code == 0);
  // drift sign is that of 1/p_up - 1/p_down
  CHECK(labels(r.out) == std::vector<std::string>{"TransientUp", "TransientUp", "TransientDown", "TransientDown"});
  for (std::size_t i = 1; i < lines(r.out).size(); ++i) {
    auto row = split(lines(r.out)[i]);
    const double pu = std::stod(row[1]), pd = std::stod(row[2]);
    CHECK(std::stod(row[5]) == Catch::Approx((1 / pu - 1 / pd) / (1 / pu + 1 / pd)));
  }
}

TEST_CASE("boundary perturbed grid is recurrent exactly when |c| <= 1") {
  for (const std::string type : {"upper", "lower"}) {
    const std::string grid = R"({"base":{"kind":"boundary_perturbed","params":{"type":")" + type +
                             R"(","p":0,"c":0}},"axes":[{"name":"c","path":"/params/c","values":[-2,-1,0,1,2]}]})";
    auto r = run({"sweep", "--closed-form", "--grid", grid});
    INFO(r.out << r.err);
    REQUIRE(r.code == 0);
    const auto l = labels(r.out);
    REQUIRE(l.size() == 5);
    CHECK(l[0] != "Recurrent");
    CHECK(l[1] == "Recurrent");
    CHECK(l[2] == "Recurrent");
    CHECK(l[3] == "Recurrent");
    CHECK(l[4] != "Recurrent");
  }
}

TEST_CASE("an empty grid gives the header only") {
  auto r = run({"sweep", "--grid", R"({"points":[]})"});
  CHECK(r.code == 0);
  CHECK(r.out == "index,model,label,regime,drift_S,J_ud,J_du,K_ud,K_du,rules,error\n");
  auto a = run({"sweep", "--grid", R"({"base":{"kind":"constant","params":{"p_up":0.5,"p_down":0.5}},
    "axes":[{"path":"/params/p_up","values":[]}]})"});
  CHECK(a.code == 0);
  CHECK(lines(a.out).size() == 1);
}

TEST_CASE("sweep errors land in the error column") {
  auto r = run({"sweep", "--grid", R"({"points":[{"kind":"constant","params":{"p_up":0.5,"p_down":0.5}},
    {"kind":"constant","params":{"p_up":2,"p_down":0.5}}]})"});
  CHECK(r.code == 0);
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 3);
  CHECK(split(ls[1])[2] == "Recurrent");
  CHECK(split(ls[2])[2].empty());
  CHECK(!split(ls[2]).back().empty());
}

TEST_CASE("sweep resumes from its journal") {
  const auto j = scratch("sweep.journal");
  const std::string grid = R"({"base":{"kind":"constant","params":{"p_up":0.5,"p_down":0.5}},
    "axes":[{"path":"/params/p_up","values":[0.2,0.4,0.6]}]})";
  auto first = run({"sweep", "--grid", grid, "--journal", j.string()});
  REQUIRE(first.code == 0);
  // a journal row is reused verbatim, so an edited row shows up in the output
  auto journal = lines(slurp(j));
  REQUIRE(journal.size() == 4);
  std::ofstream(j, std::ios::binary) << journal[0] << "\n" << journal[1] << "\n" << "1,0.4,Edited,,,,,,,,\n";
  auto second = run({"sweep", "--grid", grid, "--journal", j.string()});
  REQUIRE(second.code == 0);
  CHECK(labels(second.out) == std::vector<std::string>{labels(first.out)[0], "Edited", labels(first.out)[2]});
  CHECK(lines(slurp(j)).size() == 4);

  auto other = run({"sweep", "--grid", R"({"points":[]})", "--journal", j.string()});
  CHECK(other.code == prw::cli::kExitError);
  CHECK_THAT(other.err, ContainsSubstring("different grid"));
}

TEST_CASE("config files override flags") {
  const auto cfg = scratch("cfg.json");
  std::ofstream(cfg) << R"({"schema_version": 1, "command": "simulate", "seed": 7, "steps": 100, "replicas": 2,
    "model": {"kind": "constant", "params": {"p_up": 0.5, "p_down": 0.5}}})";
  auto a = run({"--config", cfg.string(), "--seed", "99"});
  auto b = run({"--seed", "7", "simulate", "--steps", "100", "--replicas", "2", "--model",
                R"({"kind":"constant","params":{"p_up":0.5,"p_down":0.5}})"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  std::ofstream(cfg) << R"({"schema_version": 2, "command": "simulate"})";
  auto v = run({"--config", cfg.string()});
  CHECK(v.code == prw::cli::kExitError);
  CHECK_THAT(v.err, ContainsSubstring("schema_version"));

  std::ofstream(cfg) << R"({"schema_version": 1, "command": "simulate", "stepz": 3})";
  auto u = run({"--config", cfg.string()});
  CHECK(u.code == 1);
  CHECK_THAT(u.err, ContainsSubstring("unknown field 'stepz'"));

  std::ofstream(cfg) << "{\n  \"command\": \"simulate\",\n  \"steps\": ,\n}";
  auto s = run({"--config", cfg.string()});
  CHECK(s.code == 1);
  CHECK_THAT(s.err, ContainsSubstring(":3:"));
}

TEST_CASE("bad input exits 1 with a diagnostic") {
  auto a = run({"classify", "--model", R"({"kind":"constant","params":{"p_up":0.5}})"});
  CHECK(a.code == 1);
  CHECK_THAT(a.err, ContainsSubstring("missing field 'p_down'"));
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"classify"}).code == 1);
  CHECK(run({"oracle", "--model", kHarmonicHalf, "--n", "501"}).code == 1);
  CHECK(run({"simulate", "--model", kHarmonicHalf, "--replicas", "0"}).code == 1);
}
