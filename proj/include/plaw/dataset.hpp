#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plaw/distributions.hpp"
#include "plaw/error_model.hpp"

namespace plaw {

enum class Side { US, Native };

inline std::string to_string(Side side) { return side == Side::US ? "US" : "Native"; }

inline Side side_from_string(const std::string& s) {
  if (s == "US") return Side::US;
  if (s == "Native") return Side::Native;
  throw std::invalid_argument("unknown side '" + s + "' (expected US or Native)");
}

struct BattleRecord {
  std::string battle_id;
  Side side = Side::US;
  long long casualties = 0;
};

struct ObservedDataset {
  std::vector<BattleRecord> records;
  std::string provenance;

  std::vector<long long> casualties_for(Side side) const {
    std::vector<long long> out;
    for (const auto& r : records)
      if (r.side == side) out.push_back(r.casualties);
    return out;
  }

  std::vector<Side> sides_present() const {
    std::vector<Side> out;
    for (const Side s : {Side::US, Side::Native})
      if (!casualties_for(s).empty()) out.push_back(s);
    return out;
  }
};

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// CSV ingestion. Header `battle_id,side,casualties`; every validation failure
// is collected with its row number and reported in one error.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline ObservedDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DatasetError("empty dataset file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "battle_id,side,casualties")
    throw DatasetError("bad header in " + path.string() +
                       " (expected battle_id,side,casualties)");

  ObservedDataset data;
  data.provenance = path.string();
  std::vector<std::string> problems;
  std::map<std::pair<int, std::string>, long long> seen;  // (side, id) -> row
  long long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 3) {
      problems.push_back("row " + std::to_string(row) + ": expected 3 fields");
      continue;
    }
    BattleRecord rec;
    rec.battle_id = fields[0];
    try {
      rec.side = side_from_string(fields[1]);
    } catch (const std::invalid_argument& e) {
      problems.push_back("row " + std::to_string(row) + ": " + e.what());
      continue;
    }
    try {
      std::size_t pos = 0;
      rec.casualties = std::stoll(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      problems.push_back("row " + std::to_string(row) + ": casualties '" + fields[2] +
                         "' is not an integer");
      continue;
    }
    if (rec.casualties < 1) {
      problems.push_back("row " + std::to_string(row) + ": casualties must be >= 1");
      continue;
    }
    const auto key = std::make_pair(static_cast<int>(rec.side), rec.battle_id);
    const auto [it, inserted] = seen.emplace(key, row);
    if (!inserted) {
      problems.push_back("row " + std::to_string(row) + ": duplicate battle_id '" +
                         rec.battle_id + "' within side " + to_string(rec.side) +
                         " (first at row " + std::to_string(it->second) + ")");
      continue;
    }
    data.records.push_back(std::move(rec));
  }
  if (!problems.empty()) {
    std::string msg = "invalid dataset " + path.string() + ":";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DatasetError(msg);
  }
  if (data.records.empty()) throw DatasetError("dataset has no records: " + path.string());
  return data;
}

inline void save_csv(const ObservedDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write dataset file: " + path.string());
  out << "battle_id,side,casualties\n";
  for (const auto& r : data.records)
    out << r.battle_id << ',' << to_string(r.side) << ',' << r.casualties << '\n';
}

// ---------------------------------------------------------------------------
// Frequency summary (counts of battles at each casualty total) and the
// empirical CCDF used for log-log plots.
// ---------------------------------------------------------------------------

inline std::map<Side, std::vector<long long>> frequency_table(const ObservedDataset& data,
                                                              long long max_count = 10) {
  std::map<Side, std::vector<long long>> out;
  for (const Side s : {Side::US, Side::Native})
    out[s].assign(static_cast<std::size_t>(max_count), 0);
  for (const auto& r : data.records)
    if (r.casualties <= max_count) ++out[r.side][static_cast<std::size_t>(r.casualties - 1)];
  return out;
}

// (x, fraction of records >= x) over the distinct observed values; the first
// point always carries fraction 1.
inline std::vector<std::pair<long long, double>> ccdf_points(const ObservedDataset& data,
                                                             Side side) {
  auto values = data.casualties_for(side);
  if (values.empty())
    throw std::invalid_argument("ccdf_points: no records for side " + to_string(side));
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::vector<std::pair<long long, double>> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && values[i] == values[i - 1]) continue;
    out.emplace_back(values[i], static_cast<double>(values.size() - i) / n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data generation: power-law severities piped through the
// observation-error pipeline, with a sealed ground-truth record kept apart
// from the observed data so inference runs cannot touch it.
// ---------------------------------------------------------------------------

struct SimulationConfig {
  double alpha = 2.2;
  ObservationModel model{ObsVariant::exponential_linear, 0.007, 0.05, 0.0};
  double heap_p = 0.19;
  long long n_true = 20000;
  Side side = Side::Native;
};

struct GroundTruthEntry {
  std::string battle_id;
  long long true_count = 0;
  bool observed = false;
  long long pre_heap_count = 0;  // 0 when the event was not observed
};

struct GroundTruth {
  std::vector<GroundTruthEntry> entries;
  long long sum_true = 0;
  long long sum_recorded = 0;
};

struct SimulationOutput {
  ObservedDataset observed;
  GroundTruth truth;
};

namespace detail {

inline std::string event_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "evt-%06zu", index + 1);
  return buf;
}

}  // namespace detail

inline SimulationOutput generate_simulation_study(const SimulationConfig& config,
                                                  std::uint64_t seed) {
  if (config.n_true < 1)
    throw std::invalid_argument("generate_simulation_study: n_true must be >= 1");
  if (!(config.heap_p >= 0.0 && config.heap_p <= 1.0))
    throw std::invalid_argument("generate_simulation_study: heap_p must lie in [0,1]");
  config.model.validate();

  RngStream rng(derive_seed(seed, 0));
  PowerLawSampler sampler(PowerLawParams{config.alpha, 1});
  std::vector<long long> true_counts(static_cast<std::size_t>(config.n_true));
  for (auto& w : true_counts) w = sampler(rng);

  RngStream corrupt_rng(derive_seed(seed, 1));
  const CorruptedDataset corrupted =
      corrupt_dataset(true_counts, config.model, config.heap_p, corrupt_rng);

  SimulationOutput out;
  out.observed.provenance = "simulated";
  out.truth.sum_true = corrupted.sum_true;
  out.truth.sum_recorded = corrupted.sum_recorded;
  for (std::size_t i = 0; i < true_counts.size(); ++i) {
    GroundTruthEntry entry;
    entry.battle_id = detail::event_id(i);
    entry.true_count = true_counts[i];
    entry.observed = corrupted.observed[i] != 0;
    entry.pre_heap_count = corrupted.pre_heap[i];
    if (entry.observed)
      out.observed.records.push_back({entry.battle_id, config.side, corrupted.recorded[i]});
    out.truth.entries.push_back(std::move(entry));
  }
  return out;
}

inline void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write ground truth file: " + path.string());
  out << "battle_id,true_count,observed,pre_heap_count\n";
  for (const auto& e : truth.entries)
    out << e.battle_id << ',' << e.true_count << ',' << (e.observed ? 1 : 0) << ','
        << e.pre_heap_count << '\n';
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open ground truth file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "battle_id,true_count,observed,pre_heap_count")
    throw DatasetError("bad ground truth header in " + path.string());
  GroundTruth truth;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 4) throw DatasetError("bad ground truth row in " + path.string());
    GroundTruthEntry e;
    e.battle_id = fields[0];
    e.true_count = std::stoll(fields[1]);
    e.observed = fields[2] == "1";
    e.pre_heap_count = std::stoll(fields[3]);
    truth.sum_true += e.true_count;
    truth.entries.push_back(std::move(e));
  }
  return truth;
}

}  // namespace plaw
