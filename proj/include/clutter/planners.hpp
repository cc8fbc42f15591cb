#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "clutter/motion.hpp"

namespace clutter::planners {

using cspace::CSpace;
using cspace::Mask;

struct PlannerParams {
    bool lookahead = true;
    double time_budget = 400.0;  // wall-clock seconds for A*
    int mcts_iterations = 2000;  // per commit round
    double mcts_exploration = 1.0;
    int dp_cap = 20;
    int assignment_cap = 5000;  // joint assignments enumerated per epoch
    long node_cap = 2000000;    // A* generated-node cap
    bool paper_heuristic = false;  // distance-only H, no stationary-work term
    motion::SimParams sim;
};

// One joint decision: (robot, object index) pairs, ascending robot id.
using Assignment = std::vector<std::pair<int, int>>;

struct PlanResult {
    std::string algorithm;
    bool lookahead = true;
    std::vector<std::vector<int>> sequences;  // object ids per robot, pick order
    std::vector<Assignment> assignment_sequence;
    double makespan = 0.0;
    double compute_time = 0.0;
    long nodes_expanded = 0;
    bool budget_exhausted = false;
    bool assignments_capped = false;
    // Complexity instrumentation (DP / single-robot baseline).
    long subset_evaluations = 0;
    long recursion_evaluations = 0;
    motion::Trace trace;
};

// Shared per-instance planning state: configuration space, trip cache,
// simulator, and the accessibility memo. One context serves all planners for
// the same instance; the caches are safe to share because entries are
// deterministic.
class PlannerContext {
public:
    PlannerContext(const scene::Instance& inst, PlannerParams params = {});

    const scene::Instance& inst;
    PlannerParams params;
    CSpace cs;
    motion::TripCache trips;
    motion::Simulator sim;

    bool object_accessible(int obj_idx, Mask present);

private:
    std::unordered_map<uint64_t, bool> access_memo_;
    std::mutex memo_mutex_;
};

struct Successor {
    Assignment assignment;
    motion::SimState state;
    double added_cost = 0.0;
};

// All injective assignments of idle robots to assignable objects, each
// evaluated by planning trips and simulating forward to the next decision
// epoch. Stalled or unreachable branches are dropped; an empty O_NA or an
// all-blocked epoch yields a single empty-assignment waiting successor.
std::vector<Successor> successors(PlannerContext& ctx, const motion::SimState& st,
                                  bool use_lookahead, bool* capped = nullptr);

// Assignment enumeration without simulation (used by MCTS roots and tests).
std::vector<Assignment> enumerate_assignments(PlannerContext& ctx, const motion::SimState& st,
                                              bool use_lookahead, bool* capped = nullptr);

// Admissible makespan lower bound for a decision-epoch state.
double heuristic(PlannerContext& ctx, const motion::SimState& st);
double f_value(PlannerContext& ctx, const motion::SimState& st);

// Re-run a committed assignment sequence through the simulator.
PlanResult realize(PlannerContext& ctx, const std::vector<Assignment>& seq,
                   bool record_samples = true);

PlanResult plan_greedy(PlannerContext& ctx);
PlanResult plan_astar(PlannerContext& ctx);
PlanResult plan_dp(PlannerContext& ctx);
PlanResult plan_mcts(PlannerContext& ctx);
// Optimal single-robot baseline (fleet size ignored); returns (T, plan).
std::pair<double, PlanResult> plan_single_optimal(PlannerContext& ctx);

PlanResult plan_by_name(PlannerContext& ctx, const std::string& algorithm);

// Plan file export (embedded trace reference by relative filename).
std::string serialize_plan(const PlanResult& plan, const std::string& trace_file);

}  // namespace clutter::planners
