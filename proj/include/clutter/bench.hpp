#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clutter/planners.hpp"
#include "clutter/scene.hpp"

namespace clutter::bench {

struct BenchConfig {
    std::vector<scene::GenMode> modes{scene::GenMode::cluttered};
    std::vector<int> object_counts{5};
    int seeds_per_cell = 10;
    uint64_t seed_base = 0;
    std::vector<int> k_values{2};
    std::vector<std::string> algorithms{"greedy"};
    std::vector<bool> lookahead_variants{true};
    double time_budget = 400.0;
    scene::GenParams gen;      // mode/n overridden per cell
    scene::FleetParams fleet;  // robot_count overridden per cell
    bool compute_single_opt = true;
    int single_opt_cap = 12;
    int mcts_iterations = 2000;
    double mcts_exploration = 1.0;
    int dp_cap = 20;
    bool require_dependency = false;  // only keep instances with a lookahead dependency
    std::string corpus_dir;           // empty = in-memory corpus
    std::string out_dir = ".";
    std::string csv_name = "bench.csv";
    int jobs = 0;  // 0 = hardware concurrency
    bool wall_clock_timing = true;

    static BenchConfig from_json_text(const std::string& text);
    static BenchConfig load(const std::string& path);
};

struct BenchRecord {
    std::string instance_id;
    std::string mode;
    int n = 0;
    int k = 0;
    std::string algorithm;
    bool lookahead = true;
    double makespan = 0.0;
    double single_opt_T = std::numeric_limits<double>::quiet_NaN();
    double ratio = std::numeric_limits<double>::quiet_NaN();
    double compute_time = 0.0;
    long nodes_expanded = 0;
};

// Called per finished cell with the record and the full plan (trace included).
using CellObserver = std::function<void(const BenchRecord&, const planners::PlanResult&)>;

std::vector<BenchRecord> run_suite(const BenchConfig& config,
                                   const CellObserver& observer = {});

std::string to_csv(const std::vector<BenchRecord>& records);
std::vector<BenchRecord> from_csv(const std::string& text);
void write_csv(const std::vector<BenchRecord>& records, const std::string& path);
std::vector<BenchRecord> read_csv(const std::string& path);

struct AggregateRow {
    std::string mode;
    int n = 0;
    int k = 0;
    std::string algorithm;
    bool lookahead = true;
    int count = 0;
    double mean_ratio = std::numeric_limits<double>::quiet_NaN();
    double stddev_ratio = std::numeric_limits<double>::quiet_NaN();
    double mean_makespan = 0.0;
    double stddev_makespan = 0.0;
    double mean_compute = 0.0;
};

std::vector<AggregateRow> aggregate(const std::vector<BenchRecord>& records);

// Writes the aggregate table plus two plot-data series per (mode, k,
// algorithm, lookahead) grouping: ratio vs n and compute time vs n.
void write_aggregates(const std::vector<AggregateRow>& rows, const std::string& out_dir);

// Deterministic corpus instance for a cell; generated (and cached on disk
// when corpus_dir is set). require_dependency scans seeds upward.
scene::Instance corpus_instance(const BenchConfig& config, scene::GenMode mode, int n, int k,
                                int seed_index);

}  // namespace clutter::bench
