#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "walloc/io.hpp"

namespace walloc {

// Synthetic world generator. Real purchase data is proprietary; this builds
// a self-contained stand-in: pincode geography, attribute-driven demand,
// POs, purchase events, a training corpus and two capacity scenarios. All
// parameters flow from one seed so fixtures are reproducible byte for byte.
struct GenConfig {
  std::uint64_t seed = 20190401;
  int warehouse_count = 4;
  int pincodes_per_cluster = 25;
  int pos_per_business_unit = 12;
  int skus_per_po = 12;
  int max_quantity = 60;
  int events_per_unit_pct = 60;  // expected events per allocated unit, percent
  double affinity_strength = 0.75;
  std::vector<std::string> business_units = {"Apparel", "Footwear", "PersonalCare"};
  // Demand share per cluster vs capacity share per scenario; the mismatch is
  // what separates the three policies in the report.
  std::vector<double> demand_share = {0.40, 0.30, 0.20, 0.10};
  std::vector<double> capacity_share_s1 = {0.10, 0.20, 0.30, 0.40};
  std::vector<double> capacity_share_s2 = {0.25, 0.25, 0.25, 0.25};
  // Total capacity = slack * total quantity. Enough headroom lets the solver
  // chase demand while the capacity-proportional baseline stays misallocated.
  double capacity_slack = 1.6;
};

struct GeneratedWorld {
  WorldConfig world;
  std::vector<PurchaseOrder> pos;
  std::vector<PurchaseEvent> events;
  std::map<std::pair<std::string, std::string>, TrainingCorpus> training;
  CapacityScenario scenario1, scenario2;
};

namespace detail {

// Hand-rolled categorical draw; keeps fixture bytes stable across standard
// library implementations.
inline int sample_index(std::mt19937_64& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

inline std::vector<double> sku_cluster_weights(const GenConfig& cfg, int affinity) {
  std::vector<double> w(cfg.warehouse_count);
  for (int c = 0; c < cfg.warehouse_count; ++c)
    w[c] = (1.0 - cfg.affinity_strength) * cfg.demand_share[c];
  w[affinity] += cfg.affinity_strength;
  return w;
}

}  // namespace detail

inline GeneratedWorld generate_world(const GenConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  GeneratedWorld g;
  const int k = cfg.warehouse_count;

  for (int j = 0; j < k; ++j) g.world.warehouses.push_back("WH" + std::to_string(j + 1));
  g.world.seed = cfg.seed;

  // Ring distances stand in for logistics cost.
  MatD dist(k, k);
  for (int u = 0; u < k; ++u)
    for (int v = 0; v < k; ++v) {
      int d = std::abs(u - v);
      dist(u, v) = 10.0 * std::min(d, k - d);
    }
  g.world.penalties = PenaltyMatrix::from_distances(dist);

  // Pincodes: cluster c owns P<c>001..; two-day sets favour the nearest
  // warehouse, sometimes a ring neighbour, sometimes nothing.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int c = 0; c < k; ++c)
    for (int p = 0; p < cfg.pincodes_per_cluster; ++p) {
      std::string pin = "P" + std::to_string(c + 1) + std::to_string(1000 + p).substr(1);
      g.world.pincode_nearest[pin] = c;
      double r = unif(rng);
      if (r < 0.60) {
        g.world.pincode_two_day[pin] = {c, (c + 1) % k};
      } else if (r < 0.85) {
        g.world.pincode_two_day[pin] = {c};
      }  // else: no two-day coverage
    }

  // Attribute pools. region_affinity is the signal; the rest is noise the
  // classifier has to see past.
  const std::vector<std::string> article_types = {"Tshirts", "Dresses", "Shoes"};
  const std::vector<std::string> genders = {"Men", "Women"};
  const std::vector<std::string> brands = {"Alpha", "Beta", "Gamma", "Delta", "Epsilon"};
  const std::vector<std::string> colours = {"red", "blue", "black", "white", "green", "yellow"};
  const std::vector<std::string> fabrics = {"cotton", "polyester", "wool", "linen"};
  const std::vector<std::string> price_bands = {"low", "mid", "high"};

  auto random_sku = [&](const std::string& bu, int idx, int& affinity) {
    Sku sku;
    sku.id = bu.substr(0, 2) + "-SKU" + std::to_string(10000 + idx);
    sku.article_type = article_types[rng() % article_types.size()];
    sku.gender = genders[rng() % genders.size()];
    affinity = detail::sample_index(rng, cfg.demand_share);
    sku.attributes["region_affinity"] = "c" + std::to_string(affinity + 1);
    sku.attributes["brand"] = brands[rng() % brands.size()];
    sku.attributes["colour"] = colours[rng() % colours.size()];
    sku.attributes["fabric"] = fabrics[rng() % fabrics.size()];
    sku.attributes["price_band"] = price_bands[rng() % price_bands.size()];
    return sku;
  };

  // POs and their purchase events.
  std::map<std::string, long long> bu_quantity;
  int sku_serial = 0;
  long long ts = 1554076800;  // event clock, one tick per event
  std::uniform_int_distribution<int> qty(1, cfg.max_quantity);
  for (const auto& bu : cfg.business_units) {
    for (int p = 0; p < cfg.pos_per_business_unit; ++p) {
      PurchaseOrder po;
      po.id = bu + "-PO" + std::to_string(100 + p);
      po.business_unit = bu;
      for (int s = 0; s < cfg.skus_per_po; ++s) {
        int affinity = 0;
        PoLine line;
        line.sku = random_sku(bu, sku_serial++, affinity);
        line.quantity = qty(rng);
        bu_quantity[bu] += line.quantity;
        // events for this sku, geographically tied to its affinity
        auto weights = detail::sku_cluster_weights(cfg, affinity);
        long long n_events = line.quantity * cfg.events_per_unit_pct / 100;
        for (long long e = 0; e < n_events; ++e) {
          int cluster = detail::sample_index(rng, weights);
          int pin_no = static_cast<int>(rng() % cfg.pincodes_per_cluster);
          PurchaseEvent ev;
          ev.sku_id = line.sku.id;
          ev.pincode =
              "P" + std::to_string(cluster + 1) + std::to_string(1000 + pin_no).substr(1);
          ev.timestamp = ts++;
          ev.nearest_warehouse = cluster;
          auto tdd = g.world.pincode_two_day.find(ev.pincode);
          if (tdd != g.world.pincode_two_day.end()) ev.two_day_serviceable_by = tdd->second;
          g.events.push_back(std::move(ev));
        }
        po.lines.push_back(std::move(line));
      }
      g.pos.push_back(std::move(po));
    }
  }

  // Training corpus: label = cluster of a simulated purchase, features = sku
  // attributes. Drawn independently of the PO skus above.
  for (const auto& at : article_types)
    for (const auto& gen : genders) {
      TrainingCorpus corpus;
      corpus.article_type = at;
      corpus.gender = gen;
      for (int r = 0; r < 600; ++r) {
        int affinity = 0;
        Sku sku = random_sku("TR", 90000 + r, affinity);
        sku.article_type = at;
        sku.gender = gen;
        CorpusRow row;
        row.attributes = sku.attributes;
        row.label = detail::sample_index(rng, detail::sku_cluster_weights(cfg, affinity));
        corpus.rows.push_back(std::move(row));
      }
      g.training[{at, gen}] = std::move(corpus);
    }

  // Capacity scenarios shaped like the per-BU, per-period constraint tables.
  auto make_scenario = [&](const std::vector<double>& share) {
    CapacityScenario sc;
    for (const auto& [bu, total] : bu_quantity) {
      std::vector<long long> caps(k);
      for (int j = 0; j < k; ++j)
        caps[j] = static_cast<long long>(cfg.capacity_slack * share[j] *
                                         static_cast<double>(total));
      sc.by_business_unit[bu] = caps;
    }
    return sc;
  };
  g.scenario1 = make_scenario(cfg.capacity_share_s1);
  g.scenario2 = make_scenario(cfg.capacity_share_s2);
  return g;
}

// ---- file emission ----------------------------------------------------------

inline void write_po_csv(const std::filesystem::path& path,
                         const std::vector<PurchaseOrder>& pos) {
  const std::vector<std::string> attrs = {"brand", "colour", "fabric", "price_band",
                                          "region_affinity"};
  std::ofstream out(path, std::ios::binary);
  out << "po_id,sku_id,quantity,business_unit,article_type,gender";
  for (const auto& a : attrs) out << ",attr:" << a;
  out << "\n";
  for (const auto& po : pos)
    for (const auto& line : po.lines) {
      out << po.id << "," << line.sku.id << "," << line.quantity << "," << po.business_unit
          << "," << line.sku.article_type << "," << line.sku.gender;
      for (const auto& a : attrs) {
        auto it = line.sku.attributes.find(a);
        out << "," << (it == line.sku.attributes.end() ? "" : it->second);
      }
      out << "\n";
    }
}

inline void write_events_csv(const std::filesystem::path& path,
                             const std::vector<PurchaseEvent>& events) {
  std::ofstream out(path, std::ios::binary);
  out << "timestamp,sku_id,pincode\n";
  for (const auto& ev : events)
    out << ev.timestamp << "," << ev.sku_id << "," << ev.pincode << "\n";
}

inline void write_scenario_csv(const std::filesystem::path& path, const CapacityScenario& sc,
                               const std::vector<std::string>& warehouses,
                               const std::string& period) {
  std::ofstream out(path, std::ios::binary);
  out << "warehouse,period,business_unit,capacity\n";
  for (const auto& [bu, caps] : sc.by_business_unit)
    for (std::size_t j = 0; j < warehouses.size(); ++j)
      out << warehouses[j] << "," << period << "," << bu << "," << caps[j] << "\n";
}

inline void write_training_csv(
    const std::filesystem::path& path,
    const std::map<std::pair<std::string, std::string>, TrainingCorpus>& training,
    const std::vector<std::string>& warehouses) {
  const std::vector<std::string> attrs = {"brand", "colour", "fabric", "price_band",
                                          "region_affinity"};
  std::ofstream out(path, std::ios::binary);
  out << "article_type,gender,label";
  for (const auto& a : attrs) out << ",attr:" << a;
  out << "\n";
  for (const auto& [key, corpus] : training)
    for (const auto& row : corpus.rows) {
      out << key.first << "," << key.second << "," << warehouses[row.label];
      for (const auto& a : attrs) {
        auto it = row.attributes.find(a);
        out << "," << (it == row.attributes.end() ? "" : it->second);
      }
      out << "\n";
    }
}

// Emits the full fixture set into a directory.
inline void emit_world(const GeneratedWorld& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_world_config(g.world, dir / "world.json");
  write_po_csv(dir / "pos.csv", g.pos);
  write_events_csv(dir / "events.csv", g.events);
  write_scenario_csv(dir / "scenario1.csv", g.scenario1, g.world.warehouses, "2019-04");
  write_scenario_csv(dir / "scenario2.csv", g.scenario2, g.world.warehouses, "2019-04");
  write_training_csv(dir / "training.csv", g.training, g.world.warehouses);
}

}  // namespace walloc
