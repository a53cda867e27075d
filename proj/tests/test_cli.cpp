#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "walloc/gen.hpp"
#include "walloc/io.hpp"

using namespace walloc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("walloc-cli-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  std::string cmd = std::string(WALLOC_CLI_PATH) + " " + args + " 2>/dev/null >/dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("end-to-end CLI pipeline on a small generated world") {
  TempDir tmp;
  const auto d = tmp.path;

  REQUIRE(run("gen-world --out " + (d / "world").string() + " --seed 7") == 0);
  REQUIRE(fs::exists(d / "world" / "world.json"));
  REQUIRE(fs::exists(d / "world" / "pos.csv"));

  REQUIRE(run("train --training " + (d / "world" / "training.csv").string() + " --world " +
              (d / "world" / "world.json").string() + " --out " + (d / "model.txt").string() +
              " --kind logistic --seed 7") == 0);
  REQUIRE(fs::exists(d / "model.txt"));

  REQUIRE(run("predict-splits --model " + (d / "model.txt").string() + " --po " +
              (d / "world" / "pos.csv").string() + " --world " +
              (d / "world" / "world.json").string() + " --out " + (d / "splits.csv").string()) ==
          0);
  REQUIRE(fs::exists(d / "splits.csv"));

  // single-PO file for allocate
  {
    auto pos = load_po_file(d / "world" / "pos.csv");
    std::ofstream out(d / "one_po.csv");
    out << "sku_id,quantity,business_unit,article_type,gender,attr:region_affinity\n";
    for (const auto& line : pos.front().lines)
      out << line.sku.id << "," << line.quantity << "," << pos.front().business_unit << ","
          << line.sku.article_type << "," << line.sku.gender << ","
          << line.sku.attributes.at("region_affinity") << "\n";
  }
  REQUIRE(run("allocate --po " + (d / "one_po.csv").string() + " --world " +
              (d / "world" / "world.json").string() + " --model " + (d / "model.txt").string() +
              " --scenario " + (d / "world" / "scenario1.csv").string() + " --out " +
              (d / "alloc.csv").string() + " --report " + (d / "rep.json").string()) == 0);
  auto [ids, x] = read_allocation_csv(d / "alloc.csv");
  auto pos = load_po_file(d / "one_po.csv");
  CHECK(satisfies_quantity_constraint(x, pos.front()));

  REQUIRE(run("backtest --pos " + (d / "world" / "pos.csv").string() + " --scenario " +
              (d / "world" / "scenario1.csv").string() + " --world " +
              (d / "world" / "world.json").string() + " --model " + (d / "model.txt").string() +
              " --events " + (d / "world" / "events.csv").string() + " --out " +
              (d / "bt").string()) == 0);
  REQUIRE(fs::exists(d / "bt" / "metrics.json"));
  REQUIRE(fs::exists(d / "bt" / "metrics.txt"));

  CHECK(run("report --metrics " + (d / "bt" / "metrics.json").string()) == 0);
}

TEST_CASE("allocate with the oracle solver matches the flow solver") {
  TempDir tmp;
  const auto d = tmp.path;
  // tiny world: 2 warehouses, tight capacity
  {
    WorldConfig w;
    w.warehouses = {"W1", "W2"};
    w.seed = 3;
    w.penalties = PenaltyMatrix::from_truncated(MatD::from_rows({{0, 2}, {2, 0}}), 100.0);
    w.pincode_nearest = {{"P1", 0}};
    save_world_config(w, d / "world.json");
    std::ofstream po(d / "po.csv");
    po << "sku_id,quantity,business_unit,attr:region_affinity\nA,4,BU,c1\nB,3,BU,c1\n";
    std::ofstream sp(d / "splits.csv");
    sp << "po_id,sku_id,W1,W2\npo,A,1.0,0.0\npo,B,0.75,0.25\n";
    std::ofstream sc(d / "scenario.csv");
    sc << "warehouse,period,business_unit,capacity\nW1,m,BU,3\nW2,m,BU,10\n";
  }
  std::string common = "allocate --po " + (d / "po.csv").string() + " --world " +
                       (d / "world.json").string() + " --splits " + (d / "splits.csv").string() +
                       " --scenario " + (d / "scenario.csv").string();
  REQUIRE(run(common + " --solver flow --out " + (d / "a1.csv").string() + " --report " +
              (d / "r1.json").string()) == 0);
  REQUIRE(run(common + " --solver oracle --out " + (d / "a2.csv").string() + " --report " +
              (d / "r2.json").string()) == 0);
  auto r1 = nlohmann::json::parse(read_file(d / "r1.json"));
  auto r2 = nlohmann::json::parse(read_file(d / "r2.json"));
  CHECK(r1["objective"].get<double>() == r2["objective"].get<double>());
  auto [ids1, x1] = read_allocation_csv(d / "a1.csv");
  CHECK(x1.col_sum(0) <= 3);
}

TEST_CASE("CLI error exit codes") {
  TempDir tmp;
  const auto d = tmp.path;
  // missing model file -> nonzero exit
  CHECK(run("predict-splits --model " + (d / "nope.txt").string() + " --po x --world y --out z") !=
        0);
  // malformed PO -> parse exit code
  {
    WorldConfig w;
    w.warehouses = {"W1"};
    w.penalties = PenaltyMatrix::from_truncated(MatD(1, 1));
    save_world_config(w, d / "world.json");
    std::ofstream po(d / "bad.csv");
    po << "not,a,po\n1,2,3\n";
    std::ofstream sc(d / "scenario.csv");
    sc << "warehouse,period,business_unit,capacity\nW1,m,BU,3\n";
    std::ofstream sp(d / "splits.csv");
    sp << "po_id,sku_id,W1\np,A,1.0\n";
  }
  CHECK(run("allocate --po " + (d / "bad.csv").string() + " --world " +
            (d / "world.json").string() + " --splits " + (d / "splits.csv").string() +
            " --scenario " + (d / "scenario.csv").string()) == 2);
  // both --model and --splits -> validation exit code
  CHECK(run("allocate --po " + (d / "bad.csv").string() + " --world " +
            (d / "world.json").string() + " --scenario " + (d / "scenario.csv").string()) == 1);
}
