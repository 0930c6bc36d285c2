#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dtn/cli.hpp"
#include "dtn/dataset.hpp"
#include "dtn/trace.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dtn::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir() {
  static int counter = 0;
  const auto dir =
      fs::temp_directory_path() / ("dtnopt_test_" + std::to_string(++counter));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out);
  out << content;
}

bool has_line(const std::string& text, const std::string& line) {
  std::istringstream is(text);
  std::string l;
  while (std::getline(is, l)) {
    if (l == line) return true;
  }
  return false;
}

std::string kv(const std::string& text, const std::string& key) {
  std::istringstream is(text);
  std::string l;
  while (std::getline(is, l)) {
    if (l.rfind(key + "=", 0) == 0) return l.substr(key.size() + 1);
  }
  return "";
}

}  // namespace

TEST_CASE("cli: gen-trace is byte-deterministic") {
  const auto dir = temp_dir();
  const auto t1 = (dir / "a.txt").string();
  const auto t2 = (dir / "b.txt").string();
  const std::vector<std::string> base = {
      "gen-trace", "--nodes", "6",   "--duration", "120",  "--world",
      "100,100",   "--period", "5",  "--seed",     "42"};
  auto args1 = base;
  args1.insert(args1.end(), {"--out", t1});
  auto args2 = base;
  args2.insert(args2.end(), {"--out", t2});
  CHECK(cli(args1).exit_code == 0);
  CHECK(cli(args2).exit_code == 0);
  CHECK(slurp(t1) == slurp(t2));
}

TEST_CASE("cli: simulate a two-node in-range fixture") {
  const auto dir = temp_dir();
  const auto trace_path = dir / "pair.txt";
  write(trace_path, dtn::trace::write_external_trace(
                        {{0, "a", 0, 0}, {0, "b", 5, 0}}));

  const auto config_path = dir / "scenario.txt";
  write(config_path,
        "# two nodes in range\n"
        "btInterface.transmitSpeed = 250k\n"
        "btInterface.transmitRange = 10m\n"
        "Group.bufferSize = 500M\n"
        "Group.waitTime = 60,120\n"
        "Group.router = EpidemicRouter\n"
        "Group.msgTtl = 3600s\n"
        "EventsI.interval = 10\n"  // alias spelling
        "Events1.size = 25\n"
        "Scenario.seed = 4\n"
        "Scenario.duration = 120\n"
        "Movement.file = " + trace_path.string() + "\n");

  const auto log_path = dir / "events.txt";
  const auto r = cli({"simulate", "--config", config_path.string(), "--log",
                      log_path.string()});
  CHECK(r.exit_code == 0);
  CHECK(has_line(r.out, "delivery_prob=1"));
  CHECK(fs::exists(log_path));
  CHECK(slurp(log_path).find("delivered") != std::string::npos);
}

TEST_CASE("cli: simulate rejects unknown keys with the line number") {
  const auto dir = temp_dir();
  const auto config_path = dir / "bad.txt";
  write(config_path, "Group.bufferSize = 500\nGroup.bogus = 7\n");
  const auto r = cli({"simulate", "--config", config_path.string()});
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("line 2") != std::string::npos);
  CHECK(r.err.find("Group.bogus") != std::string::npos);
}

TEST_CASE("cli: router tokens select the policy") {
  const auto dir = temp_dir();
  const auto trace_path = dir / "pair.txt";
  write(trace_path, dtn::trace::write_external_trace(
                        {{0, "a", 0, 0}, {0, "b", 5, 0}}));
  for (const std::string router : {"EpidemicRouter", "MaxPropRouter"}) {
    const auto config_path = dir / (router + ".txt");
    write(config_path, "Group.router = " + router +
                           "\nScenario.duration = 60\nMovement.file = " +
                           trace_path.string() + "\n");
    const auto r = cli({"simulate", "--config", config_path.string()});
    CHECK(r.exit_code == 0);
    CHECK(!kv(r.out, "created").empty());
  }
}

TEST_CASE("cli: usage errors exit with 1, missing files with 2") {
  CHECK(cli({"simulate"}).exit_code == 1);          // missing --config
  CHECK(cli({"bogus-subcommand"}).exit_code == 1);  // unknown subcommand
  CHECK(cli({"simulate", "--config", "/nonexistent/cfg.txt"}).exit_code == 1);
  const auto r = cli({"train", "--data", "/nonexistent/data.csv"});
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("/nonexistent/data.csv") != std::string::npos);
}

TEST_CASE("cli: sweep produces a loadable CSV, stable across job counts") {
  const auto dir = temp_dir();
  const auto trace_path = dir / "trace.txt";
  auto r = cli({"gen-trace", "--out", trace_path.string(), "--nodes", "8",
                "--duration", "150", "--world", "120,120", "--period", "5",
                "--seed", "9"});
  REQUIRE(r.exit_code == 0);

  const auto csv1 = dir / "sweep1.csv";
  const auto csv2 = dir / "sweep2.csv";
  const std::vector<std::string> base = {
      "sweep",   "--trace", trace_path.string(), "--runs", "10",
      "--seed",  "3",       "--time-step",       "0.2",    "--range",
      "Group.msgTtl=60:120"};
  auto a1 = base;
  a1.insert(a1.end(), {"--out", csv1.string(), "--jobs", "1"});
  auto a2 = base;
  a2.insert(a2.end(), {"--out", csv2.string(), "--jobs", "2"});
  REQUIRE(cli(a1).exit_code == 0);
  REQUIRE(cli(a2).exit_code == 0);
  CHECK(slurp(csv1) == slurp(csv2));

  const auto ds = dtn::ml::Dataset::read_csv_file(csv1.string());
  CHECK(ds.n() == 10);
  // swept ttl stayed within the narrowed range
  for (const auto& row : ds.features) {
    CHECK(row[5] >= 60);
    CHECK(row[5] <= 120);
  }
}

TEST_CASE("cli: grid sweep with 2 levels runs the full factorial") {
  const auto dir = temp_dir();
  const auto trace_path = dir / "trace.txt";
  REQUIRE(cli({"gen-trace", "--out", trace_path.string(), "--nodes", "4",
               "--duration", "30", "--world", "80,80", "--period", "5",
               "--seed", "2"})
              .exit_code == 0);
  const auto csv = dir / "grid.csv";
  const auto r = cli({"sweep", "--trace", trace_path.string(), "--out",
                      csv.string(), "--mode", "grid", "--levels", "2",
                      "--time-step", "0.5", "--seed", "1"});
  REQUIRE(r.exit_code == 0);
  CHECK(kv(r.out, "rows") == "256");
  CHECK(dtn::ml::Dataset::read_csv_file(csv.string()).n() == 256);
}

namespace {

// small synthetic dataset with a known polynomial structure
fs::path synthetic_dataset(const fs::path& dir) {
  dtn::ml::Dataset ds;
  dtn::sim::ScenarioConfig cfg;
  std::uint64_t state = 12345;
  const auto next = [&]() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(state >> 11) / static_cast<double>(1ull << 53);
  };
  for (int i = 0; i < 120; ++i) {
    cfg.transmit_speed = 125 + std::floor(next() * 250);
    cfg.transmit_range = 10 + std::floor(next() * 20);
    cfg.buffer_size = 500 + std::floor(next() * 9740);
    cfg.wait_time = 60 + std::floor(next() * 840);
    cfg.router = next() < 0.5 ? dtn::sim::RouterKind::Epidemic
                              : dtn::sim::RouterKind::MaxProp;
    cfg.msg_ttl = 1800 + std::floor(next() * 5400);
    cfg.event_interval = 5 + std::floor(next() * 10);
    cfg.event_size = 20 + std::floor(next() * 30);
    const double delivery = 0.002 * cfg.transmit_range +
                            0.0005 * cfg.transmit_speed +
                            0.01 * (cfg.router == dtn::sim::RouterKind::MaxProp);
    const double overhead = 8.0 - 0.01 * cfg.transmit_speed * 0.1 +
                            0.02 * cfg.event_size;
    ds.append(cfg, delivery, overhead);
  }
  const auto path = dir / "data.csv";
  std::ofstream out(path);
  ds.write_csv(out);
  return path;
}

}  // namespace

TEST_CASE("cli: train, tune, select, optimize, validate, analyze") {
  const auto dir = temp_dir();
  const auto data = synthetic_dataset(dir);

  SUBCASE("train reports metrics and saves a model") {
    const auto model_path = dir / "rf.model";
    const auto r = cli({"train", "--data", data.string(), "--model", "rf",
                        "--target", "delivery_prob", "--trees", "40",
                        "--min-leaf", "1", "--min-split", "2",
                        "--max-features", "auto", "--out", model_path.string()});
    REQUIRE(r.exit_code == 0);
    CHECK(kv(r.out, "train_rows") == "96");  // 80/20 split of 120
    CHECK(kv(r.out, "test_rows") == "24");
    CHECK(!kv(r.out, "r2_test").empty());
    CHECK(fs::exists(model_path));

    // byte-identical on repetition
    const auto again = cli({"train", "--data", data.string(), "--model", "rf",
                            "--target", "delivery_prob", "--trees", "40",
                            "--min-leaf", "1", "--min-split", "2",
                            "--max-features", "auto"});
    CHECK(again.out.substr(0, again.out.find("out=")) ==
          r.out.substr(0, r.out.find("out=")));
  }

  SUBCASE("gbm split defaults to 70/30") {
    const auto r = cli({"train", "--data", data.string(), "--model", "gbm",
                        "--target", "overhead_ratio"});
    REQUIRE(r.exit_code == 0);
    CHECK(kv(r.out, "train_rows") == "84");
    CHECK(kv(r.out, "test_rows") == "36");
  }

  SUBCASE("tune echoes a singleton grid") {
    const auto r = cli({"tune", "--data", data.string(), "--model", "rf",
                        "--target", "delivery_prob", "--grid",
                        "max_depth=7", "--folds", "5"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("best max_depth=7") != std::string::npos);
  }

  SUBCASE("select prints exactly k names") {
    const auto r = cli({"select", "--data", data.string(), "--model", "rf",
                        "--target", "delivery_prob", "--k", "5", "--trees",
                        "20", "--min-leaf", "1", "--min-split", "2"});
    REQUIRE(r.exit_code == 0);
    const auto selected = kv(r.out, "selected");
    CHECK(std::count(selected.begin(), selected.end(), ',') == 4);
  }

  SUBCASE("optimize and validate") {
    const auto md = dir / "d.model";
    const auto mo = dir / "o.model";
    REQUIRE(cli({"train", "--data", data.string(), "--model", "gbm",
                 "--target", "delivery_prob", "--subsample", "1",
                 "--learning-rate", "0.1", "--trees", "80", "--min-leaf", "1",
                 "--min-split", "2", "--out", md.string()})
                .exit_code == 0);
    REQUIRE(cli({"train", "--data", data.string(), "--model", "gbm",
                 "--target", "overhead_ratio", "--subsample", "1",
                 "--learning-rate", "0.1", "--trees", "80", "--min-leaf", "1",
                 "--min-split", "2", "--out", mo.string()})
                .exit_code == 0);

    const auto opt1 = cli({"optimize", "--data", data.string(),
                           "--model-delivery", md.string(), "--model-overhead",
                           mo.string(), "--pop", "20", "--gens", "40",
                           "--de-seed", "5"});
    REQUIRE(opt1.exit_code == 0);
    CHECK(!kv(opt1.out, "predicted_delivery_prob").empty());
    const auto opt2 = cli({"optimize", "--data", data.string(),
                           "--model-delivery", md.string(), "--model-overhead",
                           mo.string(), "--pop", "20", "--gens", "40",
                           "--de-seed", "5"});
    CHECK(opt1.out == opt2.out);  // deterministic

    // single-point bounds pin the recommendation to that point
    const auto pinned = cli(
        {"optimize", "--data", data.string(), "--model-delivery", md.string(),
         "--model-overhead", mo.string(), "--pop", "16", "--gens", "20",
         "--bounds", "btInterface.transmitSpeed=300:300", "--bounds",
         "btInterface.transmitRange=25:25", "--bounds",
         "Group.bufferSize=1000:1000", "--bounds", "Group.waitTime=120:120",
         "--bounds", "Group.router=1:1", "--bounds", "Group.msgTtl=2000:2000",
         "--bounds", "Events1.interval=10:10", "--bounds",
         "Events1.size=30:30"});
    REQUIRE(pinned.exit_code == 0);
    CHECK(kv(pinned.out, "recommend.btInterface.transmitSpeed") == "300");
    CHECK(kv(pinned.out, "recommend.Group.router") == "MaxPropRouter");

    // validate re-simulates on a trace and appends when asked
    const auto trace_path = dir / "vtrace.txt";
    REQUIRE(cli({"gen-trace", "--out", trace_path.string(), "--nodes", "8",
                 "--duration", "100", "--world", "100,100", "--period", "5",
                 "--seed", "6"})
                .exit_code == 0);
    const auto before = dtn::ml::Dataset::read_csv_file(data.string()).n();
    const auto v = cli({"validate", "--data", data.string(),
                        "--model-delivery", md.string(), "--model-overhead",
                        mo.string(), "--pop", "16", "--gens", "20", "--trace",
                        trace_path.string(), "--time-step", "0.5", "--append"});
    REQUIRE(v.exit_code == 0);
    CHECK(!kv(v.out, "simulated_delivery_prob").empty());
    CHECK(dtn::ml::Dataset::read_csv_file(data.string()).n() == before + 1);

    // missing model file names the path
    const auto missing = cli({"optimize", "--data", data.string(),
                              "--model-delivery", (dir / "nope.model").string(),
                              "--model-overhead", mo.string()});
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("nope.model") != std::string::npos);
  }

  SUBCASE("analyze emits the correlation matrix and box stats") {
    const auto prefix = (dir / "stats").string();
    const auto r = cli({"analyze", "--data", data.string(), "--out", prefix});
    REQUIRE(r.exit_code == 0);
    const auto pearson = slurp(prefix + ".pearson.csv");
    CHECK(pearson.find("delivery_prob") != std::string::npos);
    const auto box = slurp(prefix + ".box.csv");
    CHECK(box.find("MaxPropRouter") != std::string::npos);
    CHECK(box.find("overhead_ratio") != std::string::npos);
  }
}

TEST_CASE("cli: convert applies the day filter") {
  const auto dir = temp_dir();
  const auto input = dir / "fixes.txt";
  // columns: id lat lon occupancy time; two days of fixes
  write(input,
        "cab_a 37.75 -122.39 1 1211328000\n"   // 2008-05-21
        "cab_a 37.76 -122.40 0 1211331600\n"
        "cab_b 37.74 -122.41 1 1211331601\n"
        "cab_b 37.70 -122.45 0 1211241600\n"); // 2008-05-20
  const auto out_path = dir / "trace.txt";
  const auto r = cli({"convert", "--input", input.string(), "--out",
                      out_path.string(), "--day", "2008-05-21", "--world",
                      "2000,2000", "--seed", "3"});
  REQUIRE(r.exit_code == 0);
  CHECK(kv(r.out, "nodes") == "2");
  // 3 fixes on the day + 1 synthetic start for the later-entering cab
  CHECK(kv(r.out, "samples") == "4");

  const auto empty = cli({"convert", "--input", input.string(), "--out",
                          out_path.string(), "--day", "2009-01-01", "--world",
                          "2000,2000"});
  CHECK(empty.exit_code == 2);
  CHECK(empty.err.find("no fixes") != std::string::npos);
}
