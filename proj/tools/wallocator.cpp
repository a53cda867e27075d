#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "walloc/backtest.hpp"
#include "walloc/gen.hpp"
#include "walloc/ideal_splits.hpp"
#include "walloc/io.hpp"
#include "walloc/solver.hpp"
#include "walloc/split_model.hpp"

namespace fs = std::filesystem;
using namespace walloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitParse = 2;
constexpr int kExitInternal = 3;

ClassifierKind parse_kind(const std::string& s) {
  if (s == "baseline") return ClassifierKind::Baseline;
  if (s == "logistic") return ClassifierKind::Logistic;
  if (s == "perceptron") return ClassifierKind::Perceptron;
  throw ValidationError("unknown classifier kind '" + s + "'");
}

ModelRegistry load_registry(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ModelRegistry::load(in);
}

int cmd_train(const fs::path& training_path, const fs::path& world_path, const fs::path& out,
              const std::string& kind_name, std::uint64_t seed) {
  WorldConfig world = load_world_config(world_path);
  auto partitions = load_training_file(training_path, world.warehouses);
  const int k = static_cast<int>(world.warehouses.size());
  ClassifierKind kind = parse_kind(kind_name);
  FitOptions opts;
  opts.seed = seed;

  ModelRegistry reg;
  TrainingCorpus all;
  all.article_type = "*";
  all.gender = "*";
  for (auto& [key, corpus] : partitions) {
    reg.add(key.first, key.second, SplitClassifier::fit(corpus, k, kind, opts));
    all.rows.insert(all.rows.end(), corpus.rows.begin(), corpus.rows.end());
  }
  reg.set_global(SplitClassifier::fit(all, k, kind, opts));

  std::ofstream os(out, std::ios::binary);
  reg.save(os);
  std::cerr << "trained " << reg.partition_count() << " partition models + global ("
            << kind_name << ")\n";
  return kExitOk;
}

int cmd_predict_splits(const fs::path& model_path, const fs::path& po_path,
                       const fs::path& world_path, const fs::path& out) {
  WorldConfig world = load_world_config(world_path);
  ModelRegistry reg = load_registry(model_path);
  auto pos = load_po_file(po_path);
  const int k = static_cast<int>(world.warehouses.size());
  std::ofstream os(out, std::ios::binary);
  os << output_header(world.seed, {model_path, po_path, world_path});
  os << "po_id,sku_id";
  for (const auto& w : world.warehouses) os << "," << w;
  os << "\n";
  os << std::setprecision(17);
  for (const auto& po : pos) {
    SplitProbabilityMatrix p = build_split_matrix(reg, po, k);
    for (std::size_t i = 0; i < po.lines.size(); ++i) {
      os << po.id << "," << po.lines[i].sku.id;
      for (int j = 0; j < k; ++j) os << "," << p(i, j);
      os << "\n";
    }
  }
  return kExitOk;
}

SplitProbabilityMatrix load_splits_csv(const fs::path& path, const PurchaseOrder& po,
                                       std::size_t k) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::map<std::string, std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!saw_header) {
      if (cells.size() != k + 2 || cells[0] != "po_id" || cells[1] != "sku_id")
        throw ParseError(lineno, "expected header po_id,sku_id,<warehouses>");
      saw_header = true;
      continue;
    }
    std::vector<double> p;
    for (std::size_t c = 2; c < cells.size(); ++c) p.push_back(std::stod(cells[c]));
    rows[cells[1]] = std::move(p);
  }
  SplitProbabilityMatrix m(po.lines.size(), k);
  for (std::size_t i = 0; i < po.lines.size(); ++i) {
    auto it = rows.find(po.lines[i].sku.id);
    if (it == rows.end())
      throw ValidationError("no split row for sku '" + po.lines[i].sku.id + "'");
    for (std::size_t j = 0; j < k; ++j) m(i, j) = it->second[j];
  }
  if (!probability_rows_valid(m, 1e-6)) throw ValidationError("split rows do not sum to 1");
  return m;
}

int cmd_allocate(const fs::path& po_path, const fs::path& world_path,
                 const fs::path& model_path, const fs::path& splits_path,
                 const fs::path& inventory_path, const fs::path& scenario_path,
                 const std::string& period, const std::string& solver, double lambda_na,
                 const fs::path& out_alloc, const fs::path& out_report) {
  WorldConfig world = load_world_config(world_path);
  if (lambda_na > 0)
    world.penalties = PenaltyMatrix::from_truncated(world.penalties.truncated(), lambda_na);
  const std::size_t k = world.warehouses.size();
  auto pos = load_po_file(po_path);
  if (pos.size() != 1)
    throw ValidationError("allocate expects a single-PO file, got " +
                          std::to_string(pos.size()));
  PurchaseOrder& po = pos.front();
  CapacityScenario scenario = load_scenario_file(scenario_path, world.warehouses, period);
  std::vector<long long> capacity = scenario.require(po.business_unit);
  WarehouseSet ws{world.warehouses, capacity};

  SplitProbabilityMatrix p;
  if (!splits_path.empty())
    p = load_splits_csv(splits_path, po, k);
  else
    p = build_split_matrix(load_registry(model_path), po, static_cast<int>(k));

  FractionalSplit f;
  if (!inventory_path.empty()) {
    ExistingInventory e = load_inventory_file(inventory_path, po, world.warehouses);
    validate_instance(po, ws, &e);
    f = fractional_splits_with_inventory(p, po, e);
  } else {
    validate_instance(po, ws);
    f = fractional_splits_no_inventory(p, po);
  }
  IdealSplitMatrix ideal = round_to_integers(f, po);

  SkuFlowTensor tensor;
  SolveReport rep;
  if (solver == "oracle") {
    auto [t, obj] = brute_force_solve(ideal, world.penalties, capacity);
    tensor = std::move(t);
    rep.objective = obj;
    rep.solver_kind = "oracle";
  } else {
    auto [t, r] = solve_ip(ideal, world.penalties, capacity);
    tensor = std::move(t);
    rep = r;
  }
  AllocationMatrix x = extract_allocation(tensor);

  std::vector<fs::path> inputs = {po_path, world_path, scenario_path};
  if (!splits_path.empty()) inputs.push_back(splits_path);
  if (!model_path.empty()) inputs.push_back(model_path);
  if (!inventory_path.empty()) inputs.push_back(inventory_path);
  write_allocation_csv(out_alloc, po, world.warehouses, x, output_header(world.seed, inputs));

  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["seed"] = world.seed;
  j["po_id"] = po.id;
  j["objective"] = rep.objective;
  j["solver_kind"] = rep.solver_kind;
  j["iterations"] = rep.iterations;
  j["warm_start_used"] = rep.warm_start_used;
  j["unassigned_units"] = x.col_sum(k);
  std::ofstream os(out_report, std::ios::binary);
  os << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_backtest(const fs::path& pos_path, const fs::path& scenario_path,
                 const fs::path& world_path, const fs::path& model_path,
                 const fs::path& events_path, const std::string& period, const fs::path& out_dir) {
  WorldConfig world = load_world_config(world_path);
  auto pos = load_po_file(pos_path);
  CapacityScenario scenario = load_scenario_file(scenario_path, world.warehouses, period);
  ModelRegistry reg = load_registry(model_path);
  auto events = load_events_file(events_path, world);

  BacktestState state = replay(pos, scenario, reg, {world.warehouses, {}}, world.penalties);
  MetricsReport rep = report(state, events, world.penalties, world.warehouses.size());

  fs::create_directories(out_dir);
  const auto header =
      output_header(world.seed, {pos_path, scenario_path, world_path, model_path, events_path});
  {
    std::ofstream os(out_dir / "metrics.txt", std::ios::binary);
    os << header << format_metrics_table(rep);
  }
  {
    nlohmann::json j = metrics_to_json(rep);
    j["tool_version"] = kToolVersion;
    j["seed"] = world.seed;
    j["dropped_unassigned"] = state.dropped_unassigned;
    std::ofstream os(out_dir / "metrics.json", std::ios::binary);
    os << j.dump(2) << "\n";
  }
  {
    // one allocation ledger file, all POs
    std::ofstream os(out_dir / "allocations.csv", std::ios::binary);
    os << header << "po_id,sku_id";
    for (const auto& w : world.warehouses) os << "," << w;
    os << ",unassigned\n";
    for (const auto& entry : state.ledger)
      for (std::size_t i = 0; i < entry.sku_ids.size(); ++i) {
        os << entry.po_id << "," << entry.sku_ids[i];
        for (std::size_t j = 0; j <= world.warehouses.size(); ++j)
          os << "," << entry.constrained(i, j);
        os << "\n";
      }
  }
  std::cout << format_metrics_table(rep);
  return kExitOk;
}

int cmd_report(const fs::path& metrics_path) {
  nlohmann::json j = nlohmann::json::parse(read_file(metrics_path));
  std::cout << format_metrics_table(metrics_from_json(j));
  return kExitOk;
}

int cmd_gen_world(const fs::path& out_dir, std::uint64_t seed) {
  GenConfig cfg;
  cfg.seed = seed;
  emit_world(generate_world(cfg), out_dir);
  std::cerr << "wrote demo world to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warehouse allocation pipeline"};
  app.require_subcommand(1);

  std::string training_file, world_file, out_file, model_file, kind = "logistic";
  std::string po_file, splits_file, inventory_file, scenario_file, period;
  std::string events_file, out_dir = "out", alloc_out = "allocation.csv";
  std::string report_out = "solve_report.json", metrics_file, solver = "flow";
  std::uint64_t seed = 20190401;
  double lambda_na = 0.0;

  auto* train = app.add_subcommand("train", "fit split classifiers per (article_type, gender)");
  train->add_option("--training", training_file, "training corpus CSV")->required();
  train->add_option("--world", world_file, "world config JSON")->required();
  train->add_option("--out", out_file, "model registry output")->required();
  train->add_option("--kind", kind, "baseline|logistic|perceptron");
  train->add_option("--seed", seed, "training seed");

  auto* predict = app.add_subcommand("predict-splits", "write split probabilities for a PO file");
  predict->add_option("--model", model_file, "model registry")->required();
  predict->add_option("--po", po_file, "purchase order CSV")->required();
  predict->add_option("--world", world_file, "world config JSON")->required();
  predict->add_option("--out", out_file, "splits CSV output")->required();

  auto* alloc = app.add_subcommand("allocate", "compute a feasible allocation for one PO");
  alloc->add_option("--po", po_file, "purchase order CSV")->required();
  alloc->add_option("--world", world_file, "world config JSON")->required();
  alloc->add_option("--model", model_file, "model registry");
  alloc->add_option("--splits", splits_file, "precomputed split probabilities CSV");
  alloc->add_option("--inventory", inventory_file, "existing inventory CSV");
  alloc->add_option("--scenario", scenario_file, "capacity scenario CSV")->required();
  alloc->add_option("--period", period, "scenario period (default: first in file)");
  alloc->add_option("--solver", solver, "flow|oracle");
  alloc->add_option("--lambda-na", lambda_na, "override non-assignment penalty");
  alloc->add_option("--out", alloc_out, "allocation CSV output");
  alloc->add_option("--report", report_out, "solve report JSON output");

  auto* backtest = app.add_subcommand("backtest", "replay POs against a capacity scenario");
  backtest->add_option("--pos", po_file, "purchase order sequence CSV")->required();
  backtest->add_option("--scenario", scenario_file, "capacity scenario CSV")->required();
  backtest->add_option("--world", world_file, "world config JSON")->required();
  backtest->add_option("--model", model_file, "model registry")->required();
  backtest->add_option("--events", events_file, "purchase events CSV")->required();
  backtest->add_option("--period", period, "scenario period");
  backtest->add_option("--out", out_dir, "output directory");

  auto* rep = app.add_subcommand("report", "print a metrics table from a metrics JSON");
  rep->add_option("--metrics", metrics_file, "metrics.json from backtest")->required();

  auto* gen = app.add_subcommand("gen-world", "generate a synthetic demo world");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--seed", seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(training_file, world_file, out_file, kind, seed);
    if (predict->parsed())
      return cmd_predict_splits(model_file, po_file, world_file, out_file);
    if (alloc->parsed()) {
      if (model_file.empty() == splits_file.empty()) {
        std::cerr << "error: allocate needs exactly one of --model / --splits\n";
        return kExitValidation;
      }
      return cmd_allocate(po_file, world_file, model_file, splits_file, inventory_file,
                          scenario_file, period, solver, lambda_na, alloc_out, report_out);
    }
    if (backtest->parsed())
      return cmd_backtest(po_file, scenario_file, world_file, model_file, events_file, period,
                          out_dir);
    if (rep->parsed()) return cmd_report(metrics_file);
    if (gen->parsed()) return cmd_gen_world(out_dir, seed);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
