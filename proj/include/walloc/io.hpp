#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "walloc/backtest.hpp"
#include "walloc/core.hpp"

namespace walloc {

inline constexpr const char* kToolVersion = "0.1.0";

// ---- small helpers ----------------------------------------------------------

inline std::string fnv1a_digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << h;
  return os.str();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string file_digest(const std::filesystem::path& path) {
  return fnv1a_digest(read_file(path));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Header comment carried by every output file: tool version, seed, input
// digests. Lines starting with '#' are skipped by all readers.
inline std::string output_header(std::uint64_t seed,
                                 const std::vector<std::filesystem::path>& inputs) {
  std::ostringstream os;
  os << "# walloc " << kToolVersion << " seed=" << seed << " inputs=";
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (i) os << ";";
    os << inputs[i].filename().string() << ":" << file_digest(inputs[i]);
  }
  os << "\n";
  return os.str();
}

// ---- world config -----------------------------------------------------------

struct WorldConfig {
  std::vector<std::string> warehouses;
  std::map<std::string, int> pincode_nearest;            // pincode -> column index
  std::map<std::string, std::set<int>> pincode_two_day;  // pincode -> serviceable set
  PenaltyMatrix penalties;
  std::uint64_t seed = 0;

  int warehouse_index(const std::string& id) const {
    for (std::size_t j = 0; j < warehouses.size(); ++j)
      if (warehouses[j] == id) return static_cast<int>(j);
    throw ValidationError("unknown warehouse '" + id + "'");
  }
};

inline WorldConfig load_world_config(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  WorldConfig w;
  w.warehouses = j.at("warehouses").get<std::vector<std::string>>();
  w.seed = j.value("seed", 0ULL);
  const std::size_t k = w.warehouses.size();
  std::optional<double> lambda;
  if (j.contains("lambda_na")) lambda = j["lambda_na"].get<double>();
  auto to_mat = [&](const nlohmann::json& rows) {
    MatD m(k, k);
    for (std::size_t u = 0; u < k; ++u)
      for (std::size_t v = 0; v < k; ++v) m(u, v) = rows.at(u).at(v).get<double>();
    return m;
  };
  if (j.contains("penalties"))
    w.penalties = PenaltyMatrix::from_truncated(to_mat(j["penalties"]), lambda);
  else if (j.contains("distances"))
    w.penalties = PenaltyMatrix::from_distances(to_mat(j["distances"]), lambda);
  else
    throw ValidationError("world config needs 'penalties' or 'distances'");
  for (auto& [pin, wh] : j.at("pincode_nearest").items())
    w.pincode_nearest[pin] = w.warehouse_index(wh.get<std::string>());
  if (j.contains("pincode_two_day"))
    for (auto& [pin, list] : j["pincode_two_day"].items())
      for (const auto& wh : list) w.pincode_two_day[pin].insert(w.warehouse_index(wh));
  return w;
}

inline void save_world_config(const WorldConfig& w, const std::filesystem::path& path) {
  nlohmann::json j;
  j["warehouses"] = w.warehouses;
  j["seed"] = w.seed;
  const std::size_t k = w.warehouses.size();
  std::vector<std::vector<double>> pen(k, std::vector<double>(k));
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < k; ++v) pen[u][v] = w.penalties.truncated()(u, v);
  j["penalties"] = pen;
  j["lambda_na"] = w.penalties.lambda_na();
  nlohmann::json nearest = nlohmann::json::object();
  for (const auto& [pin, idx] : w.pincode_nearest) nearest[pin] = w.warehouses[idx];
  j["pincode_nearest"] = nearest;
  nlohmann::json tdd = nlohmann::json::object();
  for (const auto& [pin, set] : w.pincode_two_day) {
    std::vector<std::string> names;
    for (int idx : set) names.push_back(w.warehouses[idx]);
    tdd[pin] = names;
  }
  j["pincode_two_day"] = tdd;
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
}

// ---- purchase orders --------------------------------------------------------

// CSV header: sku_id,quantity,business_unit,attr:<name>,...  An optional
// leading po_id column packs several POs into one file; without it the file
// is a single PO named after its stem.
inline std::vector<PurchaseOrder> load_po_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw ParseError(lineno, "missing header");
  std::size_t col = 0;
  bool has_po_id = header[col] == "po_id";
  if (has_po_id) ++col;
  if (header.size() < col + 3 || header[col] != "sku_id" || header[col + 1] != "quantity" ||
      header[col + 2] != "business_unit")
    throw ParseError(lineno, "expected header sku_id,quantity,business_unit,attr:...");
  std::vector<std::string> attr_names;
  std::size_t attr_start = col + 3;
  std::size_t at_col = std::string::npos, gender_col = std::string::npos;
  for (std::size_t c = attr_start; c < header.size(); ++c) {
    if (header[c] == "article_type") {
      at_col = c;
      attr_names.push_back("");
    } else if (header[c] == "gender") {
      gender_col = c;
      attr_names.push_back("");
    } else if (header[c].rfind("attr:", 0) == 0) {
      attr_names.push_back(header[c].substr(5));
    } else {
      throw ParseError(lineno, "unexpected column '" + header[c] + "'");
    }
  }

  std::vector<PurchaseOrder> pos;
  std::map<std::string, std::size_t> po_index;
  auto po_for = [&](const std::string& id, const std::string& bu) -> PurchaseOrder& {
    auto it = po_index.find(id);
    if (it != po_index.end()) return pos[it->second];
    po_index[id] = pos.size();
    pos.push_back({id, bu, {}});
    return pos.back();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " cells");
    std::size_t c = 0;
    std::string po_id = has_po_id ? cells[c++] : path.stem().string();
    PoLine pl;
    pl.sku.id = cells[c++];
    try {
      pl.quantity = std::stoll(cells[c]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad quantity '" + cells[c] + "'");
    }
    ++c;
    std::string bu = cells[c++];
    for (std::size_t a = 0; a < attr_names.size(); ++a) {
      const std::size_t cc = attr_start + a;
      if (cc == at_col)
        pl.sku.article_type = cells[cc];
      else if (cc == gender_col)
        pl.sku.gender = cells[cc];
      else
        pl.sku.attributes[attr_names[a]] = cells[cc];
    }
    po_for(po_id, bu).lines.push_back(std::move(pl));
  }
  for (auto& po : pos) {
    WarehouseSet dummy{{"_"}, {0}};
    auto violations = check_instance(po, dummy, nullptr);
    for (const auto& v : violations) {
      if (v.kind == Violation::Kind::DuplicateSku) throw DuplicateSku(v.detail);
      if (v.kind == Violation::Kind::NegativeQuantity) throw NegativeQuantity(v.detail);
    }
  }
  return pos;
}

// ---- capacity scenario ------------------------------------------------------

// CSV: warehouse,period,business_unit,capacity  ('-' marks an unavailable
// warehouse, i.e. capacity 0). Rows are filtered to one period.
inline CapacityScenario load_scenario_file(const std::filesystem::path& path,
                                           const std::vector<std::string>& warehouses,
                                           const std::string& period = "") {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  std::string use_period = period;
  CapacityScenario sc;
  auto wh_index = [&](const std::string& id) {
    for (std::size_t j = 0; j < warehouses.size(); ++j)
      if (warehouses[j] == id) return j;
    throw ParseError(lineno, "unknown warehouse '" + id + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!saw_header) {
      if (cells != std::vector<std::string>{"warehouse", "period", "business_unit", "capacity"})
        throw ParseError(lineno, "expected header warehouse,period,business_unit,capacity");
      saw_header = true;
      continue;
    }
    if (cells.size() != 4) throw ParseError(lineno, "expected 4 cells");
    if (use_period.empty()) use_period = cells[1];  // default: first period seen
    if (cells[1] != use_period) continue;
    auto& caps = sc.by_business_unit[cells[2]];
    if (caps.empty()) caps.assign(warehouses.size(), 0);
    long long cap = 0;
    if (cells[3] != "-") {
      try {
        cap = std::stoll(cells[3]);
      } catch (const std::exception&) {
        throw ParseError(lineno, "bad capacity '" + cells[3] + "'");
      }
    }
    if (cap < 0) throw ParseError(lineno, "negative capacity");
    caps[wh_index(cells[0])] = cap;
  }
  if (!saw_header) throw ParseError(lineno, "missing header");
  return sc;
}

// ---- events -----------------------------------------------------------------

// CSV: timestamp,sku_id,pincode
inline std::vector<PurchaseEvent> load_events_file(const std::filesystem::path& path,
                                                   const WorldConfig& world) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  std::vector<PurchaseEvent> events;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!saw_header) {
      if (cells != std::vector<std::string>{"timestamp", "sku_id", "pincode"})
        throw ParseError(lineno, "expected header timestamp,sku_id,pincode");
      saw_header = true;
      continue;
    }
    if (cells.size() != 3) throw ParseError(lineno, "expected 3 cells");
    PurchaseEvent ev;
    try {
      ev.timestamp = std::stoll(cells[0]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad timestamp '" + cells[0] + "'");
    }
    ev.sku_id = cells[1];
    ev.pincode = cells[2];
    auto near = world.pincode_nearest.find(ev.pincode);
    if (near == world.pincode_nearest.end())
      throw ParseError(lineno, "pincode '" + ev.pincode + "' has no nearest warehouse");
    ev.nearest_warehouse = near->second;
    auto tdd = world.pincode_two_day.find(ev.pincode);
    if (tdd != world.pincode_two_day.end()) ev.two_day_serviceable_by = tdd->second;
    events.push_back(std::move(ev));
  }
  return events;
}

// ---- existing inventory -----------------------------------------------------

// CSV: sku_id,warehouse,units; shaped against the PO's sku order.
inline ExistingInventory load_inventory_file(const std::filesystem::path& path,
                                             const PurchaseOrder& po,
                                             const std::vector<std::string>& warehouses) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::map<std::string, std::size_t> sku_row;
  for (std::size_t i = 0; i < po.lines.size(); ++i) sku_row[po.lines[i].sku.id] = i;
  ExistingInventory e(po.lines.size(), warehouses.size());
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!saw_header) {
      if (cells != std::vector<std::string>{"sku_id", "warehouse", "units"})
        throw ParseError(lineno, "expected header sku_id,warehouse,units");
      saw_header = true;
      continue;
    }
    if (cells.size() != 3) throw ParseError(lineno, "expected 3 cells");
    auto row = sku_row.find(cells[0]);
    if (row == sku_row.end()) continue;  // inventory for skus outside this PO
    std::size_t col = warehouses.size();
    for (std::size_t j = 0; j < warehouses.size(); ++j)
      if (warehouses[j] == cells[1]) col = j;
    if (col == warehouses.size()) throw ParseError(lineno, "unknown warehouse '" + cells[1] + "'");
    long long units = 0;
    try {
      units = std::stoll(cells[2]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad units '" + cells[2] + "'");
    }
    if (units < 0) throw ParseError(lineno, "negative units");
    e(row->second, col) += units;
  }
  return e;
}

// ---- allocations ------------------------------------------------------------

// CSV: sku_id,<warehouse ids...>,unassigned
inline void write_allocation_csv(const std::filesystem::path& path, const PurchaseOrder& po,
                                 const std::vector<std::string>& warehouses,
                                 const AllocationMatrix& x, const std::string& header = "") {
  std::ofstream out(path, std::ios::binary);
  out << header;
  out << "sku_id";
  for (const auto& w : warehouses) out << "," << w;
  out << ",unassigned\n";
  for (std::size_t i = 0; i < po.lines.size(); ++i) {
    out << po.lines[i].sku.id;
    for (std::size_t j = 0; j <= warehouses.size(); ++j) out << "," << x(i, j);
    out << "\n";
  }
}

inline std::pair<std::vector<std::string>, AllocationMatrix> read_allocation_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  std::size_t cols = 0;
  std::vector<std::string> sku_ids;
  std::vector<std::vector<long long>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!saw_header) {
      if (cells.size() < 3 || cells.front() != "sku_id" || cells.back() != "unassigned")
        throw ParseError(lineno, "expected allocation header");
      cols = cells.size() - 1;
      saw_header = true;
      continue;
    }
    if (cells.size() != cols + 1) throw ParseError(lineno, "cell count mismatch");
    sku_ids.push_back(cells[0]);
    std::vector<long long> row;
    for (std::size_t c = 1; c < cells.size(); ++c) row.push_back(std::stoll(cells[c]));
    rows.push_back(std::move(row));
  }
  return {std::move(sku_ids), MatI::from_rows(rows)};
}

// ---- training corpus --------------------------------------------------------

// CSV: article_type,gender,label,attr:<name>...; label is a warehouse id.
inline std::map<std::pair<std::string, std::string>, TrainingCorpus> load_training_file(
    const std::filesystem::path& path, const std::vector<std::string>& warehouses) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> attr_names;
  bool saw_header = false;
  std::map<std::pair<std::string, std::string>, TrainingCorpus> out;
  auto wh_index = [&](const std::string& id) {
    for (std::size_t j = 0; j < warehouses.size(); ++j)
      if (warehouses[j] == id) return static_cast<int>(j);
    throw ParseError(lineno, "unknown warehouse '" + id + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!saw_header) {
      if (cells.size() < 3 || cells[0] != "article_type" || cells[1] != "gender" ||
          cells[2] != "label")
        throw ParseError(lineno, "expected header article_type,gender,label,attr:...");
      for (std::size_t c = 3; c < cells.size(); ++c) {
        if (cells[c].rfind("attr:", 0) != 0)
          throw ParseError(lineno, "unexpected column '" + cells[c] + "'");
        attr_names.push_back(cells[c].substr(5));
      }
      saw_header = true;
      continue;
    }
    if (cells.size() != attr_names.size() + 3) throw ParseError(lineno, "cell count mismatch");
    CorpusRow row;
    row.label = wh_index(cells[2]);
    for (std::size_t a = 0; a < attr_names.size(); ++a)
      row.attributes[attr_names[a]] = cells[a + 3];
    auto& corpus = out[{cells[0], cells[1]}];
    corpus.article_type = cells[0];
    corpus.gender = cells[1];
    corpus.rows.push_back(std::move(row));
  }
  if (!saw_header) throw ParseError(lineno, "missing header");
  return out;
}

// ---- metrics ----------------------------------------------------------------

inline std::string format_metrics_table(const MetricsReport& rep) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  auto block = [&](const std::string& name, const MetricsRow& r) {
    os << name << "\n";
    os << "  RU  (ideal splits)        " << r.ru_ideal << "\n";
    os << "  RU  (constrained splits)  " << r.ru_constrained << "\n";
    os << "  RU  (heuristics based)    " << r.ru_heuristic << "\n";
    os << "  2DD (ideal splits)        " << r.tdd_ideal << "\n";
    os << "  2DD (constrained splits)  " << r.tdd_constrained << "\n";
    os << "  2DD (heuristics based)    " << r.tdd_heuristic << "\n";
  };
  block("Overall", rep.overall);
  for (const auto& [bu, row] : rep.by_business_unit) block(bu, row);
  return os.str();
}

inline nlohmann::json metrics_to_json(const MetricsReport& rep) {
  auto row = [](const MetricsRow& r) {
    return nlohmann::json{{"ru_ideal", r.ru_ideal},
                          {"ru_constrained", r.ru_constrained},
                          {"ru_heuristic", r.ru_heuristic},
                          {"tdd_ideal", r.tdd_ideal},
                          {"tdd_constrained", r.tdd_constrained},
                          {"tdd_heuristic", r.tdd_heuristic}};
  };
  nlohmann::json j;
  j["overall"] = row(rep.overall);
  for (const auto& [bu, r] : rep.by_business_unit) j["by_business_unit"][bu] = row(r);
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  auto row = [](const nlohmann::json& r) {
    MetricsRow m;
    m.ru_ideal = r.at("ru_ideal");
    m.ru_constrained = r.at("ru_constrained");
    m.ru_heuristic = r.at("ru_heuristic");
    m.tdd_ideal = r.at("tdd_ideal");
    m.tdd_constrained = r.at("tdd_constrained");
    m.tdd_heuristic = r.at("tdd_heuristic");
    return m;
  };
  MetricsReport rep;
  rep.overall = row(j.at("overall"));
  if (j.contains("by_business_unit"))
    for (auto& [bu, r] : j["by_business_unit"].items()) rep.by_business_unit[bu] = row(r);
  return rep;
}

}  // namespace walloc
