#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "purisim/cli/app.h"
#include "purisim/format.h"

using namespace purisim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "purisim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("purisim-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(fields);
  }
  return rows;
}

// Rows as maps from header name to field.
std::vector<std::map<std::string, std::string>> read_table(const std::string& path) {
  const auto rows = read_csv(path);
  std::vector<std::map<std::string, std::string>> table;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::map<std::string, std::string> row;
    for (std::size_t c = 0; c < rows[0].size(); ++c) row[rows[0][c]] = rows[i].at(c);
    table.push_back(row);
  }
  return table;
}

}  // namespace

TEST_CASE("analyze writes the tolerance tables") {
  TempDir dir;
  const auto r = invoke({"analyze", "--out", dir / "a", "--grid-res", "51"});
  REQUIRE(r.code == 0);
  const json dm = json::parse(slurp(dir / "a/delta-max.json"));
  CHECK(dm["delta_max"].get<double>() == doctest::Approx(0.0760).epsilon(0.0005 / 0.076));
  CHECK(dm["f1_star"].get<double>() == doctest::Approx(0.811).epsilon(0.002 / 0.811));

  const auto table = read_table(dir / "a/delta-table.csv");
  CHECK(table.size() == 499);
  bool found = false;
  for (const auto& row : table) {
    if (row.at("f") == "0.811") {
      found = true;
      CHECK(parse_double(row.at("delta_superior")) == doctest::Approx(0.076).epsilon(0.01));
    }
  }
  CHECK(found);

  const auto grid = read_table(dir / "a/gain-grid.csv");
  CHECK(grid.size() == 51 * 51);
  for (const auto& row : grid) {
    const double f1 = parse_double(row.at("f1"));
    if (row.at("f1") == row.at("f2") && f1 > 0.5 && f1 < 1.0) {
      CHECK(parse_double(row.at("gain")) > 0.0);
    }
  }
  CHECK(fs::exists(dir / "a/manifest.json"));
}

TEST_CASE("simulate smoke run and reruns") {
  TempDir dir;
  const std::vector<std::string> base{"simulate", "--smoke", "--policy", "sp", "--memory", "emm",
                                      "--t-coh", "50", "--f-th", "0.9"};
  auto args = base;
  args.insert(args.end(), {"--out", dir / "s1"});
  REQUIRE(invoke(args).code == 0);
  const json summary = json::parse(slurp(dir / "s1/summary.json"));
  CHECK(summary.contains("eta"));
  CHECK(summary["trials"] == 1000);

  args = base;
  args.insert(args.end(), {"--out", dir / "s2"});
  REQUIRE(invoke(args).code == 0);
  CHECK(slurp(dir / "s1/trials.csv") == slurp(dir / "s2/trials.csv"));
  CHECK(slurp(dir / "s1/summary.json") == slurp(dir / "s2/summary.json"));

  REQUIRE(invoke({"simulate", "--config", dir / "s1/manifest.json", "--out", dir / "s3"}).code ==
          0);
  CHECK(slurp(dir / "s1/trials.csv") == slurp(dir / "s3/trials.csv"));

  SUBCASE("summary can be recomputed from trials.csv") {
    const auto rows = read_table(dir / "s1/trials.csv");
    REQUIRE(rows.size() == 1000);
    std::vector<TrialOutcome> outcomes;
    for (const auto& row : rows) {
      TrialOutcome o;
      o.delivered = row.at("delivered") == "1";
      if (o.delivered) {
        o.t_deliver = std::stoll(row.at("t_deliver"));
        o.f_deliver = parse_double(row.at("f_deliver"));
      }
      outcomes.push_back(o);
    }
    const MetricsSummary m = aggregate_metrics(outcomes);
    CHECK(summary["eta"].get<double>() == m.eta);
    CHECK(summary["delivered"] == m.delivered);
    CHECK(summary["time"]["mean"].get<double>() == m.time->mean);
    CHECK(summary["time"]["median"].get<double>() == m.time->median);
    CHECK(summary["fidelity"]["mean"].get<double>() == m.fidelity->mean);
    CHECK(summary["fidelity"]["q3"].get<double>() == m.fidelity->q3);
  }
}

TEST_CASE("simulate below the swap ceiling never delivers") {
  TempDir dir;
  const auto r = invoke({"simulate", "--smoke", "--policy", "no-pur", "--f-th", "0.99", "--hops",
                         "2", "--memory", "cmm", "--cutoff", "500", "--out", dir / "x"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(slurp(dir / "x/summary.json"))["eta"].get<double>() == 0.0);
}

TEST_CASE("simulate debug outputs") {
  TempDir dir;
  REQUIRE(invoke({"simulate", "--trials", "20", "--policy", "sp", "--debug-events", "--gain-log",
                  "--out", dir / "d"})
              .code == 0);
  const auto events = read_csv(dir / "d/events.csv");
  CHECK(events.at(0).at(0) == "trial");
  CHECK(events.size() > 20);
  const auto gains = read_csv(dir / "d/gains.csv");
  CHECK(gains.size() >= 21);
}

TEST_CASE("sweep heatmap") {
  TempDir dir;
  const auto r = invoke({"sweep", "--trials", "200", "--policy", "no-pur,sp,ps", "--f-th",
                         "0.8,0.985", "--budget", "10,40,160", "--memory", "emm", "--t-coh", "50",
                         "--out", dir / "h"});
  REQUIRE(r.code == 0);
  const auto rows = read_table(dir / "h/heatmap.csv");
  CHECK(rows.size() == 3 * 2 * 3);
  std::map<std::string, double> last;
  for (const auto& row : rows) {
    if (row.at("policy") == "no-pur" && row.at("f_th") == "0.985") {
      CHECK(parse_double(row.at("eta")) == 0.0);
      CHECK(row.at("mean_time").empty());
    }
    const std::string group = row.at("policy") + "/" + row.at("f_th");
    const double eta = parse_double(row.at("eta"));
    if (last.contains(group)) CHECK(eta >= last[group]);
    last[group] = eta;
  }
  CHECK(fs::exists(dir / "h/manifest.json"));
}

TEST_CASE("compare") {
  TempDir dir;
  CHECK(invoke({"compare", "--policy", "sp", "--f-th", "0.9", "--out", dir / "c0"}).code == 2);

  const std::vector<std::string> base{"compare", "--trials", "200", "--policy",
                                      "no-pur,sp,delta-purify", "--f-th", "0.9", "--hops",
                                      "2,3,4,5"};
  auto a = base;
  a.insert(a.end(), {"--out", dir / "c1"});
  auto b = base;
  b.insert(b.end(), {"--out", dir / "c2"});
  REQUIRE(invoke(a).code == 0);
  REQUIRE(invoke(b).code == 0);
  CHECK(slurp(dir / "c1/compare.csv") == slurp(dir / "c2/compare.csv"));
  CHECK(slurp(dir / "c1/compare-diff.csv") == slurp(dir / "c2/compare-diff.csv"));

  const auto rows = read_table(dir / "c1/compare.csv");
  CHECK(rows.size() == 12);
  std::map<std::string, std::map<std::string, double>> means;
  for (const auto& row : rows) means[row.at("hops")][row.at("policy")] = parse_double(row.at("mean_time"));
  for (auto& [hops, m] : means) {
    CHECK(m["delta-purify"] <= m["no-pur"]);
    CHECK(m["delta-purify"] <= m["sp"]);
  }
  CHECK(read_table(dir / "c1/compare-diff.csv").size() == 4 * 3);
}

TEST_CASE("calibrate") {
  TempDir dir;
  const auto r = invoke({"calibrate", "--trials", "4000", "--out", dir / "k"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(slurp(dir / "k/calibration.json"));
  CHECK(doc["within_tolerance"] == true);
  CHECK(doc["emm"]["fraction_positive"].get<double>() == doctest::Approx(0.143).epsilon(0.02 / 0.143));
  const auto rows = read_table(dir / "k/calibration.csv");
  CHECK(rows.size() > 8);
  CHECK(rows.back().at("stage") == "final");
}

TEST_CASE("configuration files and precedence") {
  TempDir dir;
  {
    std::ofstream ini(dir / "run.ini");
    ini << "; smoke settings\n[chain]\nhops = 3\npe = 0.3\n[run]\ntrials = 50\npolicy = ps\n"
           "[memory]\nkind = lmm\nt_coh = 70\n";
  }
  REQUIRE(invoke({"simulate", "--config", dir / "run.ini", "--trials", "20", "--out", dir / "o"})
              .code == 0);
  const json manifest = json::parse(slurp(dir / "o/manifest.json"));
  CHECK(manifest["run"]["trials"] == "20");
  CHECK(manifest["chain"]["hops"] == "3");
  CHECK(manifest["memory"]["kind"] == "lmm");
  CHECK(manifest["manifest"]["command"] == "simulate");
  CHECK(read_csv(dir / "o/trials.csv").size() == 21);

  SUBCASE("unknown keys are rejected") {
    std::ofstream(dir / "bad.ini") << "[chain]\nhops = 2\nwidth = 3\n";
    const auto r = invoke({"simulate", "--config", dir / "bad.ini", "--out", dir / "b"});
    CHECK(r.code == 2);
    CHECK(r.err.find("chain.width") != std::string::npos);
  }
  SUBCASE("every invalid key is reported") {
    const auto r = invoke({"simulate", "--pe", "1.5", "--ps", "0", "--trials", "many", "--out",
                           dir / "b"});
    CHECK(r.code == 2);
    CHECK(r.err.find("chain.pe") != std::string::npos);
    CHECK(r.err.find("chain.ps") != std::string::npos);
    CHECK(r.err.find("run.trials") != std::string::npos);
  }
  SUBCASE("missing config file is an I/O failure") {
    CHECK(invoke({"simulate", "--config", dir / "nope.ini"}).code == 3);
  }
  SUBCASE("unwritable output is an I/O failure") {
    std::ofstream(dir / "file") << "x";
    CHECK(invoke({"analyze", "--out", dir / "file/sub"}).code == 3);
  }
  SUBCASE("usage errors") {
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"simulate", "--no-such-flag"}).code == 2);
    CHECK(invoke({"simulate", "--policy", "no-pur,sp", "--out", dir / "u"}).code == 2);
    CHECK(invoke({"simulate", "--policy", "delta-purify", "--out", dir / "u"}).code == 2);
    CHECK(invoke({"sweep", "--out", dir / "u"}).code == 2);
  }
}
