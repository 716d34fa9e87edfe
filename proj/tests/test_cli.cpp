#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "tilegraph/cli.hpp"
#include "tilegraph/reference.hpp"
#include "test_support.hpp"

using tilegraph::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = tilegraph::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 1") {
    CHECK(cli({}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"run"}).code == 1);
    CHECK(cli({"run", "--dataset", "x", "--bogus"}).code == 1);
    CHECK(cli({"run", "--dataset", "x", "--cache-mode", "7"}).code == 1);
    CHECK(cli({"--help"}).code == 0);
  }

  TEST_CASE("partition and info") {
    TempDir dir;
    // in-degrees [1, 2, 1, 2, 2]
    write_text(dir / "g.txt", "# example\n1 0\n0 1\n2 1\n4 2\n0 3\n2 3\n1 4\n3 4\n");
    auto r = cli({"partition", "--input", (dir / "g.txt").string(), "--out", (dir / "ds").string(), "--tile-size", "2"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("tiles 3") != std::string::npos);
    r = cli({"info", (dir / "ds").string(), "--tiles"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("vertices 5\n") != std::string::npos);
    CHECK(r.out.find("edges 8\n") != std::string::npos);
    CHECK(r.out.find("tiles 3\n") != std::string::npos);
    CHECK(r.out.find("weighted no\n") != std::string::npos);
    CHECK(r.out.find("tile 1 targets [2, 4) edges 3") != std::string::npos);

    CHECK(cli({"partition", "--input", (dir / "missing.txt").string(), "--out", (dir / "x").string()}).code == 2);
    CHECK(cli({"info", (dir / "nope").string()}).code == 2);
  }

  TEST_CASE("run writes raw ids and a report") {
    TempDir dir;
    write_text(dir / "g.txt", "10 20 1.5\n20 30 2\n30 10 1\n10 30 5\n");
    REQUIRE(cli({"partition", "--input", (dir / "g.txt").string(), "--out", (dir / "ds").string(), "--tile-size", "1"})
                .code == 0);
    auto r = cli({"run", "--dataset", (dir / "ds").string(), "--algo", "sssp", "--source", "10", "--servers", "2",
                  "--out", (dir / "out.txt").string(), "--report", (dir / "rep.jsonl").string()});
    REQUIRE(r.code == 0);
    CHECK(read_text(dir / "out.txt") == "10 0\n20 1.5\n30 3.5\n");
    CHECK(r.err.find("superstep 1 ") != std::string::npos);
    auto report = read_text(dir / "rep.jsonl");
    CHECK(std::count(report.begin(), report.end(), '\n') == 3);
    CHECK(report.find("\"updated_vertex_count\"") != std::string::npos);

    CHECK(cli({"run", "--dataset", (dir / "ds").string(), "--algo", "sssp"}).code == 1);
    CHECK(cli({"run", "--dataset", (dir / "ds").string(), "--algo", "sssp", "--source", "11"}).code == 2);
    CHECK(cli({"run", "--dataset", (dir / "ds").string(), "--rank", "0"}).code == 1);
  }

  TEST_CASE("verify reports zero deviation") {
    std::mt19937_64 rng(41);
    auto edges = tilegraph::testing::random_graph({.vertices = 120, .edges = 700, .weighted = true}, rng);
    TempDir dir;
    tilegraph::testing::write_edge_list(edges, true, dir / "g.txt");
    REQUIRE(cli({"partition", "--input", (dir / "g.txt").string(), "--out", (dir / "ds").string(), "--tile-size", "30"})
                .code == 0);
    auto r = cli({"verify", "--dataset", (dir / "ds").string(), "--algo", "sssp", "--source", "0", "--servers", "3",
                  "--quiet", "--input", (dir / "g.txt").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("max_deviation 0\n") != std::string::npos);
    r = cli({"verify", "--dataset", (dir / "ds").string(), "--algo", "pagerank", "--servers", "2", "--workers", "2",
             "--comm", "sparse", "--cache-mode", "2", "--quiet"});
    CHECK(r.code == 0);
    CHECK(r.out.find("status ok") != std::string::npos);
  }

  TEST_CASE("cost") {
    auto r = cli({"cost", "--system", "tilegraph", "--vertices", "1e6", "--edges", "1e7", "--servers", "4", "--tiles",
                  "16", "--beta", "0"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("disk_read  beta|E| = 0") != std::string::npos);
    CHECK(r.out.find("disk_write - = 0") != std::string::npos);
    CHECK(cli({"cost", "--system", "all", "--vertices", "10", "--edges", "20"}).code == 0);
    CHECK(cli({"cost", "--system", "giraph", "--vertices", "10", "--edges", "20"}).code == 2);
    CHECK(cli({"cost", "--vertices", "10"}).code == 1);
  }

  TEST_CASE("two processes over tcp agree with the local run") {
    TempDir dir;
    write_text(dir / "g.txt", "0 1\n1 2\n2 3\n3 0\n0 2\n4 0\n2 4\n");
    REQUIRE(cli({"partition", "--input", (dir / "g.txt").string(), "--out", (dir / "ds").string(), "--tile-size", "2"})
                .code == 0);
    auto p0 = tilegraph::pick_free_port(), p1 = tilegraph::pick_free_port();
    std::string a0 = "127.0.0.1:" + std::to_string(p0), a1 = "127.0.0.1:" + std::to_string(p1);
    auto cmd = [&](int rank, const std::string& listen, const std::string& peer) {
      return std::string(TILEGRAPH_CLI_PATH) + " run --dataset " + (dir / "ds").string() +
             " --algo pagerank --max-supersteps 15 --quiet --servers 2 --transport tcp --listen " + listen +
             " --peers " + peer + " --rank " + std::to_string(rank) + " --out " +
             (dir / ("tcp" + std::to_string(rank) + ".txt")).string();
    };
    std::string both = "(" + cmd(0, a0, a1) + ") & (" + cmd(1, a1, a0) + ") & wait";
    // `wait` alone loses exit codes; each rank's output file is checked instead.
    REQUIRE(std::system(("sh -c '" + both + "'").c_str()) == 0);
    REQUIRE(cli({"run", "--dataset", (dir / "ds").string(), "--max-supersteps", "15", "--quiet", "--out",
                 (dir / "local.txt").string()})
                .code == 0);
    auto local = read_text(dir / "local.txt");
    CHECK(!local.empty());
    CHECK(read_text(dir / "tcp0.txt") == local);
    CHECK(read_text(dir / "tcp1.txt") == local);
  }
}
