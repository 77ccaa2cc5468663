#include "doctest.h"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "twistmom/cache.hpp"
#include "twistmom/cli.hpp"

using namespace twistmom;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("twistmom-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) v.push_back(l);
  return v;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> v;
  for (auto& l : lines(text))
    if (!l.empty() && l[0] != '#') v.push_back(l);
  return v;
}

}  // namespace

TEST_CASE("fnv1a and hex") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("cache round trips") {
  TempDir tmp;
  const Cache cache(tmp.path);

  const auto t1 = cache.tau_table(2000);
  const auto t2 = cache.tau_table(2000);
  for (u64 n = 1; n <= 2000; ++n) REQUIRE(t1->lambda(n) == t2->lambda(n));
  const auto fresh = EigenformTable::builtin_delta(2000);
  CHECK(t2->lambda(1999) == fresh.lambda(1999));

  // a damaged entry is regenerated
  const auto path = cache.entry_path("tau", "v1 tau n_max=2000", ".tsv");
  REQUIRE(fs::exists(path));
  { std::ofstream(path) << "garbage\n"; }
  const auto t3 = cache.tau_table(2000);
  CHECK(t3->lambda(1024) == fresh.lambda(1024));

  const auto g1 = cache.group(101);
  const auto g2 = cache.group(101);
  CHECK(g2->generator() == g1->generator());
  CHECK(g2->dlog(57) == g1->dlog(57));

  const auto w1 = cache.weights(12);
  const auto w2 = cache.weights(12);
  for (double x : {1e-5, 0.3, 2.0, 47.0}) {
    CHECK((*w1.w)(x) == (*w2.w)(x));
    CHECK((*w1.w2)(x) == (*w2.w2)(x));
  }
  const auto uncached = make_weight_pair(12);
  CHECK((*w2.w)(0.7) == doctest::Approx((*uncached.w)(0.7)).epsilon(1e-12));
}

TEST_CASE("cli tau and validation") {
  const auto r = run({"tau", "--n-max", "100"});
  CHECK(r.code == cli::kExitOk);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 100);
  CHECK(ls[1] == "2\t-24");
  CHECK(ls[99] == "100\t37534859200");

  const auto bad = run({"tau", "--bogus"});
  CHECK(bad.code == cli::kExitValidation);
  CHECK(bad.err.find("Usage: tau") != std::string::npos);
  CHECK(bad.out.empty());
  CHECK(run({}).code == cli::kExitValidation);
  CHECK(run({"tau"}).code == cli::kExitValidation);
  CHECK(run({"moments", "--q", "12"}).code == cli::kExitValidation);
  CHECK(run({"moments", "--q", "53", "--tail-eps", "0"}).code == cli::kExitValidation);
  CHECK(run({"moments", "--q", "53", "--kappa", "16"}).code == cli::kExitValidation);
  CHECK(run({"moments", "--q", "53", "--k", "-1"}).code == cli::kExitValidation);
  CHECK(run({"moments", "--q", "5x"}).code == cli::kExitValidation);
  CHECK(run({"chars", "--q", "10"}).code == cli::kExitValidation);
  // truncation far beyond the coefficient limit
  CHECK(run({"moments", "--q", "100003", "--audit-count", "0"}).code == cli::kExitComputation);
}

TEST_CASE("cli chars") {
  const auto r = run({"chars", "--q", "15"});
  REQUIRE(r.code == 0);
  const auto rows = data_lines(r.out);
  CHECK(rows.size() == 1 + 8);
  CHECK(r.out.find("\"match\":true") != std::string::npos);
}

TEST_CASE("cli moments, config and formats") {
  TempDir tmp;
  const std::string cache = (tmp.path / "cache").string();
  const std::vector<std::string> base = {"moments", "--q", "53", "--k", "1", "--tail-eps", "1e-6",
                                         "--audit-count", "2", "--cache-dir", cache};
  const auto a = run(base);
  REQUIRE(a.code == 0);
  const auto rows = data_lines(a.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "q,k,phi_star,raw_moment,normalized,ratio_to_logq_pow_k2");
  CHECK(rows[1].rfind("53,1,51,", 0) == 0);

  auto with_workers = base;
  with_workers.insert(with_workers.end(), {"--workers", "3"});
  const auto b = run(with_workers);
  CHECK(b.out == a.out);

  {
    std::ofstream cfg(tmp.path / "cfg.json");
    cfg << R"({"q": [53], "k": 1, "tail_eps": 1e-6, "audit_count": 2})";
  }
  const auto c = run({"moments", "--config", (tmp.path / "cfg.json").string(), "--cache-dir", cache});
  CHECK(c.code == 0);
  CHECK(c.out == a.out);
  const auto over = run({"moments", "--config", (tmp.path / "cfg.json").string(), "--k", "2", "--cache-dir", cache});
  CHECK(over.out.find("\n53,2,51,") != std::string::npos);

  {
    std::ofstream cfg(tmp.path / "bad.json");
    cfg << R"({"qq": 53})";
  }
  CHECK(run({"moments", "--config", (tmp.path / "bad.json").string()}).code == cli::kExitValidation);

  auto js = base;
  js.insert(js.end(), {"--format", "json"});
  const auto j = run(js);
  REQUIRE(j.code == 0);
  const auto doc = nlohmann::json::parse(j.out);
  CHECK(doc["rows"].size() == 1);
  CHECK(doc["rows"][0]["phi_star"] == 51);
  CHECK(doc["config_hash"].get<std::string>().size() == 16);
  CHECK(a.out.find(doc["config_hash"].get<std::string>()) == std::string::npos);  // format is part of the hash

  auto to_file = base;
  to_file.insert(to_file.end(), {"--out", (tmp.path / "m.csv").string()});
  CHECK(run(to_file).out.empty());
  std::ifstream in(tmp.path / "m.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == a.out);
}

TEST_CASE("cli fit") {
  TempDir tmp;
  {
    std::ofstream f(tmp.path / "m.csv");
    f.precision(17);
    f << "# header\nq,k,phi_star,raw_moment,normalized,ratio_to_logq_pow_k2\n";
    for (u64 q : {101, 307, 1009, 3001, 10007}) f << q << ",1,0,0," << 0.5 * std::log(static_cast<double>(q)) << ",0\n";
    f << "53,2,0,0,3.0,0\n";
  }
  const auto r = run({"fit", "--in", (tmp.path / "m.csv").string()});
  REQUIRE(r.code == 0);
  const auto rows = data_lines(r.out);
  REQUIRE(rows.size() == 3);
  REQUIRE(rows[1].rfind("1,5,", 0) == 0);
  CHECK(std::stod(rows[1].substr(4)) == doctest::Approx(1.0).epsilon(1e-12));  // c log q has slope 1
  CHECK(rows[2] == "2,1,,,,insufficient_points");
  CHECK(run({"fit"}).code == cli::kExitValidation);
}
