#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mbic/criteria.hpp"
#include "mbic/csv.hpp"
#include "mbic/datagen.hpp"
#include "mbic/rng.hpp"
#include "mbic/search.hpp"
#include "mbic/types.hpp"

namespace mbic {

// How p follows n across the grid: a fixed value, a multiple of n, or a
// power of n. Keeps grids inside the p > n style regimes.
struct PRule {
  enum class Kind { fixed, multiple, power };
  Kind kind = Kind::fixed;
  double value = 0.0;

  long apply(long n) const {
    double p = 0.0;
    switch (kind) {
      case Kind::fixed: p = value; break;
      case Kind::multiple: p = value * static_cast<double>(n); break;
      case Kind::power: p = std::pow(static_cast<double>(n), value); break;
    }
    return static_cast<long>(std::llround(p));
  }
};

struct SearchSpec {
  Strategy strategy = Strategy::forward_backward;
  std::optional<int> max_size;  // per-cell default when absent
  double enumeration_cap = 2e6;
};

struct ExperimentConfig {
  std::vector<long> n_values;
  PRule p_rule;
  std::vector<long> p0_values;
  std::vector<double> beta_values;
  std::vector<DesignKind> designs;
  std::vector<ErrorFamily> families;
  long replicates = 1;
  std::vector<Criterion> criteria;
  SearchSpec search;
  std::uint64_t seed = 0;
  bool report_identifiability = false;
  double identifiability_k = 1.0;
  std::uint64_t identifiability_cap = 200000;
  std::string out = "results.csv";
};

struct Cell {
  int index = 0;
  long n = 0;
  long p = 0;
  long p0 = 0;
  double beta = 0.0;
  DesignKind design = DesignKind::iid_normal;
  ErrorFamily family = ErrorFamily::standard_normal;
};

// Cartesian product in declared order: n, p0, beta, design, family.
inline std::vector<Cell> experiment_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  int idx = 0;
  for (long n : cfg.n_values)
    for (long p0 : cfg.p0_values)
      for (double beta : cfg.beta_values)
        for (DesignKind design : cfg.designs)
          for (ErrorFamily family : cfg.families) {
            cells.push_back({idx++, n, cfg.p_rule.apply(n), p0, beta, design, family});
          }
  return cells;
}

inline void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw input_error("config: " + field + ": " + why);
  };
  if (cfg.n_values.empty()) fail("n", "at least one sample size required");
  for (long n : cfg.n_values)
    if (n < 2) fail("n", "every value must be >= 2");
  if (cfg.p0_values.empty()) fail("p0", "at least one value required");
  if (cfg.beta_values.empty()) fail("beta", "at least one value required");
  if (cfg.designs.empty()) fail("design", "at least one design kind required");
  if (cfg.families.empty()) fail("family", "at least one error family required");
  if (cfg.replicates < 1) fail("replicates", "must be >= 1");
  if (cfg.criteria.empty()) fail("criteria", "at least one criterion required");
  if (!(cfg.identifiability_k > 0.0)) fail("identifiability.k", "must be > 0");
  for (const Cell& c : experiment_cells(cfg)) {
    const std::string where = "cell " + std::to_string(c.index) + " (n=" + std::to_string(c.n) +
                              ", p=" + std::to_string(c.p) + ")";
    if (c.p < 1) fail("p", where + ": p rule gives p < 1");
    if (c.p0 > c.p) fail("p0", where + ": p0 exceeds p");
    if (c.design == DesignKind::orthogonalized && c.p > c.n) {
      fail("design", where + ": orthogonalized requires p <= n");
    }
    if (cfg.search.max_size) {
      if (*cfg.search.max_size < 0 || *cfg.search.max_size > c.p) {
        fail("search.max_size", where + ": outside {0..p}");
      }
      if (cfg.search.strategy != Strategy::exhaustive &&
          *cfg.search.max_size > std::min(c.n, c.p)) {
        fail("search.max_size", where + ": forward searches need max_size <= min(n, p)");
      }
    }
  }
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  auto fail = [](const std::string& field, const std::string& why) {
    throw input_error("config: " + field + ": " + why);
  };
  try {
    cfg.n_values = j.at("n").get<std::vector<long>>();
  } catch (const nlohmann::json::exception&) {
    fail("n", "required list of sample sizes");
  }
  if (!j.contains("p")) fail("p", "required rule object, e.g. {\"rule\":\"multiple\",\"value\":2}");
  try {
    const auto& pj = j.at("p");
    const std::string kind = pj.at("rule").get<std::string>();
    if (kind == "fixed") cfg.p_rule.kind = PRule::Kind::fixed;
    else if (kind == "multiple") cfg.p_rule.kind = PRule::Kind::multiple;
    else if (kind == "power") cfg.p_rule.kind = PRule::Kind::power;
    else fail("p.rule", "expected fixed, multiple or power");
    cfg.p_rule.value = pj.at("value").get<double>();
  } catch (const nlohmann::json::exception&) {
    fail("p", "rule object needs string 'rule' and numeric 'value'");
  }
  try {
    cfg.p0_values = j.at("p0").get<std::vector<long>>();
    cfg.beta_values = j.at("beta").get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    fail("p0/beta", "required numeric lists");
  }
  try {
    for (const auto& s : j.at("design").get<std::vector<std::string>>()) {
      cfg.designs.push_back(design_kind_from_string(s));
    }
    for (const auto& s : j.at("family").get<std::vector<std::string>>()) {
      cfg.families.push_back(error_family_from_string(s));
    }
    for (const auto& s : j.at("criteria").get<std::vector<std::string>>()) {
      cfg.criteria.push_back(criterion_from_string(s));
    }
  } catch (const nlohmann::json::exception&) {
    fail("design/family/criteria", "required lists of names");
  }
  try {
    cfg.replicates = j.at("replicates").get<long>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception&) {
    fail("replicates/seed", "required integers");
  }
  if (j.contains("search")) {
    const auto& sj = j.at("search");
    if (sj.contains("strategy")) {
      cfg.search.strategy = strategy_from_string(sj.at("strategy").get<std::string>());
    }
    if (sj.contains("max_size")) cfg.search.max_size = sj.at("max_size").get<int>();
    if (sj.contains("enumeration_cap")) {
      cfg.search.enumeration_cap = sj.at("enumeration_cap").get<double>();
    }
  }
  if (j.contains("identifiability")) {
    const auto& ij = j.at("identifiability");
    if (ij.contains("report")) cfg.report_identifiability = ij.at("report").get<bool>();
    if (ij.contains("k")) cfg.identifiability_k = ij.at("k").get<double>();
    if (ij.contains("cap")) cfg.identifiability_cap = ij.at("cap").get<std::uint64_t>();
  }
  if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
  validate_config(cfg);
  return cfg;
}

struct ReplicateOutcome {
  int cell = 0;
  long replicate = 0;
  Criterion criterion = Criterion::mBIC;
  ModelIndexSet selected;
  int size = 0;
  bool correct = false;         // selected == s0
  bool screening = false;       // s0 subset of selected
  bool contained = false;       // selected subset of s0
  double total = 0.0;           // re-scored criterion total
  std::optional<double> ident_ratio;
  double wall_ms = 0.0;         // informational; never written to result files
};

struct SummaryRow {
  Cell cell;
  Criterion criterion = Criterion::mBIC;
  long replicates = 0;
  long correct = 0;
  double p_correct = 0.0;
  double se = 0.0;  // binomial standard error of p_correct
  long screening = 0;
  double p_screening = 0.0;
  long contained = 0;
  double p_contained = 0.0;
  double mean_size = 0.0;
};

struct ExperimentResult {
  std::vector<Cell> cells;
  std::vector<ReplicateOutcome> outcomes;  // ordered by (cell, replicate, criterion)
  std::vector<SummaryRow> summary;
};

namespace experiment_detail {

inline constexpr std::uint64_t kRoleReplicate = 0xC6;

inline std::uint64_t scenario_seed(std::uint64_t root, int cell, long replicate) {
  return derive_stream({root, kRoleReplicate, static_cast<std::uint64_t>(cell),
                        static_cast<std::uint64_t>(replicate)});
}

}  // namespace experiment_detail

// Runs every (cell, replicate): generate, search per criterion, record. Work
// is farmed over threads by task index; each replicate derives its own
// substream from (root seed, cell, replicate), so the outputs are identical
// for any thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 0) {
  validate_config(cfg);
  ExperimentResult res;
  res.cells = experiment_cells(cfg);

  const std::size_t ncrit = cfg.criteria.size();
  const std::size_t ntasks = res.cells.size() * static_cast<std::size_t>(cfg.replicates);
  res.outcomes.resize(ntasks * ncrit);

  std::atomic<std::size_t> next_task{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t task = next_task.fetch_add(1);
      if (task >= ntasks) break;
      const Cell& cell = res.cells[task / static_cast<std::size_t>(cfg.replicates)];
      const long rep = static_cast<long>(task % static_cast<std::size_t>(cfg.replicates));

      Scenario sc{cell.n, cell.p, cell.p0, cell.beta, cell.design, cell.family,
                  experiment_detail::scenario_seed(cfg.seed, cell.index, rep)};
      const auto t_start = std::chrono::steady_clock::now();
      const GeneratedInstance inst = generate(sc);

      SearchBudget budget;
      budget.strategy = cfg.search.strategy;
      budget.enumeration_cap = cfg.search.enumeration_cap;
      budget.max_size = cfg.search.max_size ? *cfg.search.max_size
                                            : default_max_size_known_truth(cell.p, cell.p0);
      const ScoringContext ctx = make_context(cell.n, cell.p, inst.y.squaredNorm());

      std::optional<double> ratio;
      if (cfg.report_identifiability && cell.p0 >= 1) {
        ratio = identifiability_ratio(inst, cfg.identifiability_k, cfg.identifiability_cap).ratio;
      }

      for (std::size_t c = 0; c < ncrit; ++c) {
        const SelectionResult sel = run_search(inst.X, inst.y, ctx, cfg.criteria[c], budget);
        ReplicateOutcome& out = res.outcomes[task * ncrit + c];
        out.cell = cell.index;
        out.replicate = rep;
        out.criterion = cfg.criteria[c];
        out.selected = sel.model;
        out.size = sel.model.size();
        out.correct = sel.model == inst.s0;
        out.screening = inst.s0.is_subset_of(sel.model);
        out.contained = sel.model.is_subset_of(inst.s0);
        out.total = sel.score.total;
        out.ident_ratio = ratio;
        out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                t_start)
                          .count();
      }
    }
  };

  int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (nthreads < 1) nthreads = 1;
  std::vector<std::thread> pool;
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // Per (cell, criterion) summary with binomial standard errors.
  for (const Cell& cell : res.cells) {
    for (std::size_t c = 0; c < ncrit; ++c) {
      SummaryRow row;
      row.cell = cell;
      row.criterion = cfg.criteria[c];
      row.replicates = cfg.replicates;
      double size_sum = 0.0;
      for (long rep = 0; rep < cfg.replicates; ++rep) {
        const std::size_t task =
            static_cast<std::size_t>(cell.index) * static_cast<std::size_t>(cfg.replicates) +
            static_cast<std::size_t>(rep);
        const ReplicateOutcome& out = res.outcomes[task * ncrit + c];
        row.correct += out.correct ? 1 : 0;
        row.screening += out.screening ? 1 : 0;
        row.contained += out.contained ? 1 : 0;
        size_sum += out.size;
      }
      const double r = static_cast<double>(cfg.replicates);
      row.p_correct = static_cast<double>(row.correct) / r;
      row.se = std::sqrt(row.p_correct * (1.0 - row.p_correct) / r);
      row.p_screening = static_cast<double>(row.screening) / r;
      row.p_contained = static_cast<double>(row.contained) / r;
      row.mean_size = size_sum / r;
      res.summary.push_back(row);
    }
  }
  return res;
}

inline std::string model_field(const ModelIndexSet& s) {
  std::string out;
  for (int j : s) {
    if (!out.empty()) out += ';';
    out += std::to_string(j);
  }
  return out;
}

// Pinned results schema; one row per (cell, replicate, criterion).
inline std::string results_csv(const ExperimentResult& res) {
  std::string out =
      "cell,replicate,n,p,p0,beta,design,family,criterion,selected,size,correct,screening,"
      "contained,total,ident_ratio\n";
  for (const ReplicateOutcome& o : res.outcomes) {
    const Cell& c = res.cells[static_cast<std::size_t>(o.cell)];
    out += std::to_string(o.cell) + ',' + std::to_string(o.replicate) + ',' +
           std::to_string(c.n) + ',' + std::to_string(c.p) + ',' + std::to_string(c.p0) + ',' +
           format_double(c.beta) + ',' + std::string(to_string(c.design)) + ',' +
           std::string(to_string(c.family)) + ',' + std::string(to_string(o.criterion)) + ',' +
           model_field(o.selected) + ',' + std::to_string(o.size) + ',' +
           (o.correct ? "1" : "0") + ',' + (o.screening ? "1" : "0") + ',' +
           (o.contained ? "1" : "0") + ',' + format_double(o.total) + ',' +
           (o.ident_ratio ? format_double(*o.ident_ratio) : std::string()) + '\n';
  }
  return out;
}

// Pinned summary schema; one row per (cell, criterion).
inline std::string summary_csv(const ExperimentResult& res) {
  std::string out =
      "cell,n,p,p0,beta,design,family,criterion,replicates,correct,p_correct,se,screening,"
      "p_screening,contained,p_contained,mean_size\n";
  for (const SummaryRow& s : res.summary) {
    out += std::to_string(s.cell.index) + ',' + std::to_string(s.cell.n) + ',' +
           std::to_string(s.cell.p) + ',' + std::to_string(s.cell.p0) + ',' +
           format_double(s.cell.beta) + ',' + std::string(to_string(s.cell.design)) + ',' +
           std::string(to_string(s.cell.family)) + ',' + std::string(to_string(s.criterion)) +
           ',' + std::to_string(s.replicates) + ',' + std::to_string(s.correct) + ',' +
           format_double(s.p_correct) + ',' + format_double(s.se) + ',' +
           std::to_string(s.screening) + ',' + format_double(s.p_screening) + ',' +
           std::to_string(s.contained) + ',' + format_double(s.p_contained) + ',' +
           format_double(s.mean_size) + '\n';
  }
  return out;
}

}  // namespace mbic
