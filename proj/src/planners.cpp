#include "clutter/planners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <queue>
#include <sstream>

#include "clutter/rng.hpp"
#include "json.hpp"

namespace clutter::planners {

using cspace::bit;
using geom::Point2;
using motion::RobotMode;
using motion::SimState;
using motion::TripRef;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int popcount(Mask m) { return static_cast<int>(__builtin_popcountll(m)); }

}  // namespace

PlannerContext::PlannerContext(const scene::Instance& instance, PlannerParams p)
    : inst(instance), params(p), cs(instance), sim(instance, cs, p.sim) {}

bool PlannerContext::object_accessible(int obj_idx, Mask present) {
    const uint64_t key = rng::hash_combine(present, static_cast<uint64_t>(obj_idx));
    {
        std::lock_guard<std::mutex> lock(memo_mutex_);
        auto it = access_memo_.find(key);
        if (it != access_memo_.end()) return it->second;
    }
    const bool value = access::accessible_from_slot(cs, obj_idx, present);
    std::lock_guard<std::mutex> lock(memo_mutex_);
    access_memo_[key] = value;
    return value;
}

namespace {

struct EpochView {
    std::vector<int> idle;
    Mask present = 0;
    Mask inflight = 0;
    Mask unassigned = 0;
};

EpochView epoch_view(PlannerContext& ctx, const SimState& st) {
    EpochView v;
    v.idle = ctx.sim.assignable_robots(st);
    v.present = st.present;
    v.inflight = ctx.sim.inflight_mask(st);
    v.unassigned = v.present & ~v.inflight;
    return v;
}

// Objects a robot may take given the virtual removal set built so far.
std::vector<int> options_for(PlannerContext& ctx, Mask present, Mask virtual_removed,
                             Mask unassigned_left, bool lookahead) {
    std::vector<int> opts;
    for (int i = 0; i < ctx.cs.object_count(); ++i) {
        if (!(unassigned_left & bit(i))) continue;
        if (ctx.object_accessible(i, present)) {
            opts.push_back(i);
        } else if (lookahead && (virtual_removed & present) != 0 &&
                   ctx.object_accessible(i, present & ~virtual_removed)) {
            opts.push_back(i);
        }
    }
    // Object ids are the deterministic tie-break order.
    std::sort(opts.begin(), opts.end(), [&](int a, int b) {
        return ctx.cs.id_of_index(a) < ctx.cs.id_of_index(b);
    });
    return opts;
}

void enumerate_rec(PlannerContext& ctx, const EpochView& view, bool lookahead,
                   size_t robot_pos, int full_levels, Assignment& partial, Mask taken,
                   std::vector<Assignment>& out) {
    if (robot_pos == view.idle.size()) {
        if (!partial.empty()) out.push_back(partial);
        return;
    }
    const Mask virtual_removed = view.inflight | taken;
    std::vector<int> opts =
        options_for(ctx, view.present, virtual_removed, view.unassigned & ~taken, lookahead);
    if (opts.empty()) {
        enumerate_rec(ctx, view, lookahead, robot_pos + 1, full_levels, partial, taken, out);
        return;
    }
    if (static_cast<int>(robot_pos) >= full_levels) {
        // Enumeration cap reached: surplus robots take the nearest option.
        int best = opts[0];
        double best_d = std::numeric_limits<double>::infinity();
        for (int o : opts) {
            const double d =
                geom::dist(ctx.inst.objects[o].rect.center, ctx.inst.exit_center);
            if (d < best_d - 1e-12) {
                best_d = d;
                best = o;
            }
        }
        partial.emplace_back(view.idle[robot_pos], best);
        enumerate_rec(ctx, view, lookahead, robot_pos + 1, full_levels, partial,
                      taken | bit(best), out);
        partial.pop_back();
        return;
    }
    for (int o : opts) {
        partial.emplace_back(view.idle[robot_pos], o);
        enumerate_rec(ctx, view, lookahead, robot_pos + 1, full_levels, partial,
                      taken | bit(o), out);
        partial.pop_back();
    }
}

// Plans and queues the trips of one joint assignment onto `st`.
// Returns false when some trip is unreachable.
bool apply_assignment(PlannerContext& ctx, SimState& st, const Assignment& asg,
                      bool record_events) {
    Mask assign_mask = 0;
    for (const auto& [robot, obj] : asg) {
        (void)robot;
        assign_mask |= bit(obj);
    }
    const Mask inflight = ctx.sim.inflight_mask(st);
    for (const auto& [robot, obj] : asg) {
        const RobotMode mode = st.robots[robot].mode;
        const int depart_slot =
            mode == RobotMode::idle ? st.robots[robot].cur_slot : ctx.sim.choose_entry_slot(st);
        const Point2 start = ctx.cs.slots()[depart_slot];
        const Mask virtual_removed = (inflight | assign_mask) & ~bit(obj);
        const double est_arrival =
            st.time +
            (2.0 * geom::dist(start, ctx.inst.objects[obj].rect.center)) / ctx.inst.v_max +
            ctx.inst.t_pick;
        const int return_slot = ctx.sim.choose_return_slot(st, depart_slot, est_arrival,
                                                           est_arrival + ctx.inst.t_unload);
        TripRef trip = motion::plan_trip(ctx.cs, ctx.trips, start,
                                         ctx.cs.slot_point(depart_slot), obj, st.present,
                                         virtual_removed, depart_slot, return_slot);
        if (!trip) return false;
        ctx.sim.assign_trip(st, robot, trip, record_events);
    }
    return true;
}

bool any_active(const SimState& st) {
    for (const motion::RobotSim& r : st.robots) {
        if (r.mode != RobotMode::outside && r.mode != RobotMode::idle) return true;
    }
    return false;
}

void park_unassigned(PlannerContext& ctx, SimState& st, const Assignment& asg) {
    for (int r = 0; r < static_cast<int>(st.robots.size()); ++r) {
        if (st.robots[r].mode != RobotMode::idle) continue;
        bool used = false;
        for (const auto& [robot, obj] : asg) {
            (void)obj;
            used |= robot == r;
        }
        if (!used) ctx.sim.step_outside(st, r);
    }
}

}  // namespace

std::vector<Assignment> enumerate_assignments(PlannerContext& ctx, const SimState& st,
                                              bool use_lookahead, bool* capped) {
    const EpochView view = epoch_view(ctx, st);
    // Levels enumerated in full before the cap forces greedy-nearest choices.
    const int max_opts = std::max(1, popcount(view.unassigned));
    int full_levels = 0;
    long combos = 1;
    while (full_levels < static_cast<int>(view.idle.size()) &&
           combos * max_opts <= ctx.params.assignment_cap) {
        combos *= max_opts;
        ++full_levels;
    }
    if (capped) *capped = full_levels < static_cast<int>(view.idle.size());
    std::vector<Assignment> out;
    Assignment partial;
    enumerate_rec(ctx, view, use_lookahead, 0, full_levels, partial, 0, out);
    return out;
}

std::vector<Successor> successors(PlannerContext& ctx, const SimState& st, bool use_lookahead,
                                  bool* capped) {
    const EpochView view = epoch_view(ctx, st);
    std::vector<Successor> out;

    auto wait_child = [&]() -> bool {
        SimState child = st;
        park_unassigned(ctx, child, {});
        if (!any_active(child)) return false;
        const motion::AdvanceStatus status = ctx.sim.advance(child, false);
        if (status == motion::AdvanceStatus::stalled) return false;
        Successor s;
        s.added_cost = child.time - st.time;
        s.state = std::move(child);
        out.push_back(std::move(s));
        return true;
    };

    if (view.unassigned == 0) {
        // Nothing to decide: either the goal (caller checks completed) or a
        // pure waiting step while in-flight work finishes.
        wait_child();
        return out;
    }

    const std::vector<Assignment> assignments =
        enumerate_assignments(ctx, st, use_lookahead, capped);
    for (const Assignment& asg : assignments) {
        SimState child = st;
        if (!apply_assignment(ctx, child, asg, false)) continue;
        park_unassigned(ctx, child, asg);
        const motion::AdvanceStatus status = ctx.sim.advance(child, false);
        if (status == motion::AdvanceStatus::stalled) continue;
        Successor s;
        s.assignment = asg;
        s.added_cost = child.time - st.time;
        s.state = std::move(child);
        out.push_back(std::move(s));
    }
    if (out.empty()) {
        // Unassignable objects can only unblock through in-flight picks.
        if (view.inflight == 0 || !wait_child()) {
            if (view.inflight != 0) return out;  // stalled wait: dead branch
            throw NoFeasibleAssignment(
                "successors: unassigned objects remain but nothing is assignable");
        }
    }
    return out;
}

double heuristic(PlannerContext& ctx, const SimState& st) {
    const scene::Instance& inst = ctx.inst;
    const int k = inst.robot_count;
    double travel = 0.0;
    double stationary = 0.0;
    for (int r = 0; r < static_cast<int>(st.robots.size()); ++r) {
        travel += ctx.sim.remaining_travel_lb(st, r);
        stationary += ctx.sim.remaining_stationary(st, r);
    }
    const Mask unassigned = st.present & ~ctx.sim.inflight_mask(st);
    for (int i = 0; i < ctx.cs.object_count(); ++i) {
        if (!(unassigned & bit(i))) continue;
        if (ctx.params.paper_heuristic) {
            travel += 2.0 * geom::dist(inst.objects[i].rect.center, inst.exit_center);
        } else {
            travel += motion::travel_lower_bound(ctx.cs, i);
        }
        stationary += inst.t_pick + inst.t_unload;
    }
    double h = travel / (k * inst.v_max);
    if (!ctx.params.paper_heuristic) h += stationary / k;
    return h;
}

double f_value(PlannerContext& ctx, const SimState& st) {
    if (st.completed) return st.makespan;
    double committed = st.time;
    for (int r = 0; r < static_cast<int>(st.robots.size()); ++r) {
        committed = std::max(committed, ctx.sim.committed_finish_lb(st, r));
    }
    return std::max(committed, st.time + heuristic(ctx, st));
}

namespace {

std::vector<std::vector<int>> sequences_from(PlannerContext& ctx,
                                             const std::vector<Assignment>& seq) {
    std::vector<std::vector<int>> lists(ctx.inst.robot_count);
    for (const Assignment& a : seq) {
        for (const auto& [robot, obj] : a) lists[robot].push_back(ctx.cs.id_of_index(obj));
    }
    return lists;
}

}  // namespace

PlanResult realize(PlannerContext& ctx, const std::vector<Assignment>& seq,
                   bool record_samples) {
    SimState st = ctx.sim.initial_state();
    motion::Trace trace;
    trace.dt = ctx.params.sim.dt;
    trace.robot_count = ctx.inst.robot_count;
    motion::Trace* samples = record_samples ? &trace : nullptr;

    size_t idx = 0;
    while (!st.completed) {
        if (idx < seq.size()) {
            if (!apply_assignment(ctx, st, seq[idx], true)) {
                throw Unreachable("realize: committed assignment became unreachable");
            }
            park_unassigned(ctx, st, seq[idx]);
            ++idx;
        } else {
            park_unassigned(ctx, st, {});
        }
        const motion::AdvanceStatus status = ctx.sim.advance(st, true, samples);
        if (status == motion::AdvanceStatus::stalled) {
            throw SimulationStall("realize: joint simulation stalled");
        }
    }
    if (idx != seq.size()) throw Error("realize: unused assignments in sequence");

    PlanResult plan;
    plan.assignment_sequence = seq;
    plan.sequences = sequences_from(ctx, seq);
    plan.makespan = st.makespan;
    trace.events = st.events;
    trace.makespan = st.makespan;
    plan.trace = std::move(trace);
    return plan;
}

// ---------------------------------------------------------------------------
// Greedy best-first

PlanResult plan_greedy(PlannerContext& ctx) {
    const double t0 = now_seconds();
    const bool lookahead = ctx.params.lookahead;
    SimState st = ctx.sim.initial_state();
    std::vector<Assignment> seq;
    long epochs = 0;

    while (!st.completed) {
        const EpochView view = epoch_view(ctx, st);
        Assignment asg;
        Mask taken = 0;
        SimState& work = st;
        for (int robot : view.idle) {
            const Mask virtual_removed = view.inflight | taken;
            const std::vector<int> opts = options_for(ctx, view.present, virtual_removed,
                                                      view.unassigned & ~taken, lookahead);
            if (opts.empty()) continue;
            const RobotMode mode = work.robots[robot].mode;
            const int depart_slot = mode == RobotMode::idle ? work.robots[robot].cur_slot
                                                            : ctx.sim.choose_entry_slot(work);
            const Point2 start = ctx.cs.slots()[depart_slot];
            int best = -1;
            double best_len = std::numeric_limits<double>::infinity();
            for (int o : opts) {
                const double est_arrival =
                    work.time +
                    (2.0 * geom::dist(start, ctx.inst.objects[o].rect.center)) /
                        ctx.inst.v_max +
                    ctx.inst.t_pick;
                const int return_slot = ctx.sim.choose_return_slot(
                    work, depart_slot, est_arrival, est_arrival + ctx.inst.t_unload);
                TripRef trip = motion::plan_trip(
                    ctx.cs, ctx.trips, start, ctx.cs.slot_point(depart_slot), o, work.present,
                    (virtual_removed | taken) & ~bit(o), depart_slot, return_slot);
                if (!trip) continue;
                const double len = trip->out_length + trip->back_length;
                if (len < best_len - 1e-12) {
                    best_len = len;
                    best = o;
                }
            }
            if (best < 0) continue;
            asg.emplace_back(robot, best);
            taken |= bit(best);
        }
        if (!asg.empty()) {
            if (!apply_assignment(ctx, st, asg, false)) {
                throw Unreachable("plan_greedy: chosen assignment unreachable");
            }
            seq.push_back(asg);
        } else {
            if (view.unassigned != 0 && view.inflight == 0) {
                throw NoFeasibleAssignment("plan_greedy: instance is not peel-feasible");
            }
            seq.push_back({});
        }
        park_unassigned(ctx, st, asg);
        if (!any_active(st)) break;  // everything delivered, nothing queued
        const motion::AdvanceStatus status = ctx.sim.advance(st, false);
        if (status == motion::AdvanceStatus::stalled) {
            throw SimulationStall("plan_greedy: simulation stalled");
        }
        ++epochs;
    }

    // Drop trailing empty assignments; realize() parks idles by itself.
    while (!seq.empty() && seq.back().empty()) seq.pop_back();
    PlanResult plan = realize(ctx, seq);
    plan.algorithm = "greedy";
    plan.lookahead = lookahead;
    plan.nodes_expanded = epochs;
    plan.compute_time = now_seconds() - t0;
    return plan;
}

// ---------------------------------------------------------------------------
// A* over decision-epoch states

PlanResult plan_astar(PlannerContext& ctx) {
    const double t0 = now_seconds();
    const bool lookahead = ctx.params.lookahead;
    PlanResult incumbent = plan_greedy(ctx);

    struct Node {
        SimState st;
        Assignment asg;
        int parent = -1;
        double f = 0.0;
    };
    std::deque<Node> arena;
    struct OpenItem {
        double f;
        long id;
        bool operator>(const OpenItem& o) const {
            return f > o.f || (f == o.f && id > o.id);
        }
    };
    std::priority_queue<OpenItem, std::vector<OpenItem>, std::greater<OpenItem>> open;

    arena.push_back({ctx.sim.initial_state(), {}, -1, 0.0});
    arena[0].f = f_value(ctx, arena[0].st);
    open.push({arena[0].f, 0});

    long expanded = 0;
    bool exhausted = false;
    bool capped = false;
    while (!open.empty()) {
        if (now_seconds() - t0 > ctx.params.time_budget ||
            static_cast<long>(arena.size()) > ctx.params.node_cap) {
            exhausted = true;
            break;
        }
        const OpenItem top = open.top();
        open.pop();
        const long id = top.id;
        if (arena[id].st.completed) {
            std::vector<Assignment> seq;
            for (long u = id; u > 0; u = arena[u].parent) seq.push_back(arena[u].asg);
            std::reverse(seq.begin(), seq.end());
            PlanResult plan = realize(ctx, seq);
            plan.algorithm = "astar";
            plan.lookahead = lookahead;
            plan.nodes_expanded = expanded;
            plan.assignments_capped = capped;
            plan.compute_time = now_seconds() - t0;
            return plan;
        }
        ++expanded;
        bool node_capped = false;
        std::vector<Successor> succ = successors(ctx, arena[id].st, lookahead, &node_capped);
        capped |= node_capped;
        for (Successor& s : succ) {
            const double f = f_value(ctx, s.state);
            if (f > incumbent.makespan + 1e-9) continue;  // admissible f: cannot win
            arena.push_back({std::move(s.state), std::move(s.assignment),
                             static_cast<int>(id), f});
            open.push({f, static_cast<long>(arena.size()) - 1});
        }
    }

    incumbent.algorithm = "astar";
    incumbent.budget_exhausted = exhausted;
    incumbent.nodes_expanded = expanded;
    incumbent.compute_time = now_seconds() - t0;
    return incumbent;
}

// ---------------------------------------------------------------------------
// Approximate dynamic programming over object subsets

namespace {

struct DpTables {
    int n = 0, k = 0, slots = 1;
    std::vector<double> cost;        // per mask
    std::vector<uint8_t> feasible;   // per mask
    std::vector<uint8_t> choice_o;   // per mask
    std::vector<uint8_t> choice_r;   // per mask
    std::vector<float> avail;        // mask * k + r
    std::vector<int8_t> slot_of;     // mask * k + r
    std::vector<float> pick_end;     // mask * n + o
    std::vector<float> slot_free;    // mask * slots + s
};

}  // namespace

PlanResult plan_dp(PlannerContext& ctx) {
    const double t0 = now_seconds();
    const int n = ctx.cs.object_count();
    const int k = ctx.inst.robot_count;
    if (n > ctx.params.dp_cap) {
        throw CapExceeded("plan_dp: object count exceeds the configured cap");
    }
    const bool lookahead = ctx.params.lookahead;
    const int slot_count = static_cast<int>(ctx.cs.slots().size());
    const Mask all = ctx.cs.all_present();
    const size_t total = 1ull << n;
    const double dt = ctx.params.sim.dt;
    const double step_len = ctx.inst.v_max * dt;
    auto quant_len = [&](double len) { return std::ceil(len / step_len - 1e-9) * dt; };
    auto quant_time = [&](double t) { return std::ceil(t / dt - 1e-9) * dt; };
    const double tp = quant_time(ctx.inst.t_pick);
    const double tu = quant_time(ctx.inst.t_unload);

    DpTables T;
    T.n = n;
    T.k = k;
    T.slots = slot_count;
    T.cost.assign(total, std::numeric_limits<double>::infinity());
    T.feasible.assign(total, 0);
    T.choice_o.assign(total, 255);
    T.choice_r.assign(total, 255);
    T.avail.assign(total * k, 0.0f);
    T.slot_of.assign(total * k, -1);
    T.pick_end.assign(total * n, 0.0f);
    T.slot_free.assign(total * slot_count, 0.0f);

    long subset_evals = 1;  // the empty set
    long recursion_evals = 0;
    T.cost[0] = 0.0;
    T.feasible[0] = 1;

    // Masks grouped by cardinality, ascending.
    std::vector<std::vector<uint32_t>> by_card(n + 1);
    for (uint32_t m = 1; m < total; ++m) by_card[popcount(m)].push_back(m);

    for (int card = 1; card <= n; ++card) {
        for (uint32_t mask : by_card[card]) {
            ++subset_evals;
            double best = std::numeric_limits<double>::infinity();
            int best_o = -1, best_r = -1, best_slot = 0;
            double best_pick = 0.0, best_finish = 0.0;
            for (int o = 0; o < n; ++o) {
                if (!(mask & bit(o))) continue;
                const uint32_t parent = mask & ~static_cast<uint32_t>(bit(o));
                if (!T.feasible[parent]) {
                    recursion_evals += k;
                    continue;
                }
                for (int r = 0; r < k; ++r) {
                    ++recursion_evals;
                    const double t_avail = T.avail[parent * k + r];
                    const int8_t prev_slot = T.slot_of[parent * k + r];
                    const int depart_slot = prev_slot < 0 ? r % slot_count : prev_slot;
                    // Members of the parent subset still on the floor at t_avail.
                    Mask unpicked = 0;
                    for (int j = 0; j < n; ++j) {
                        if ((parent & bit(j)) && T.pick_end[parent * n + j] > t_avail + 1e-9) {
                            unpicked |= bit(j);
                        }
                    }
                    const Mask present_phys = (all & ~Mask(mask)) | unpicked | bit(o);
                    const Mask virtual_removed = lookahead ? unpicked : 0;
                    const Point2 start = ctx.cs.slots()[depart_slot];
                    const double est_arrival =
                        t_avail +
                        2.0 * geom::dist(start, ctx.inst.objects[o].rect.center) /
                            ctx.inst.v_max +
                        tp;
                    int return_slot = depart_slot;
                    if (slot_count > 1 &&
                        T.slot_free[parent * slot_count + depart_slot] > est_arrival + 1e-9) {
                        return_slot = 0;
                        for (int s = 1; s < slot_count; ++s) {
                            if (T.slot_free[parent * slot_count + s] <
                                T.slot_free[parent * slot_count + return_slot]) {
                                return_slot = s;
                            }
                        }
                    }
                    TripRef trip = motion::plan_trip(ctx.cs, ctx.trips, start,
                                                     ctx.cs.slot_point(depart_slot), o,
                                                     present_phys, virtual_removed, depart_slot,
                                                     return_slot);
                    if (!trip) continue;
                    double arrive_pose = t_avail + quant_len(trip->out_length);
                    if (lookahead) {
                        Mask crossed = 0;
                        for (Mask w : trip->out_wait) crossed |= w;
                        for (int j = 0; j < n; ++j) {
                            if (crossed & bit(j)) {
                                arrive_pose =
                                    std::max(arrive_pose,
                                             static_cast<double>(T.pick_end[parent * n + j]));
                            }
                        }
                        arrive_pose = quant_time(arrive_pose);
                    }
                    const double pick_done = arrive_pose + tp;
                    double back_arrive = pick_done + quant_len(trip->back_length);
                    if (lookahead) {
                        Mask crossed = 0;
                        for (Mask w : trip->back_wait) crossed |= w;
                        for (int j = 0; j < n; ++j) {
                            if (crossed & bit(j)) {
                                back_arrive =
                                    std::max(back_arrive,
                                             static_cast<double>(T.pick_end[parent * n + j]));
                            }
                        }
                        back_arrive = quant_time(back_arrive);
                    }
                    const double unload_start = std::max(
                        back_arrive,
                        static_cast<double>(T.slot_free[parent * slot_count + return_slot]));
                    const double finish = unload_start + tu;
                    const double cand = std::max(T.cost[parent], finish);
                    if (cand < best - 1e-12) {
                        best = cand;
                        best_o = o;
                        best_r = r;
                        best_slot = return_slot;
                        best_pick = pick_done;
                        best_finish = finish;
                    }
                }
            }
            if (best_o < 0) continue;  // infeasible subset
            const uint32_t parent = mask & ~static_cast<uint32_t>(bit(best_o));
            T.cost[mask] = best;
            T.feasible[mask] = 1;
            T.choice_o[mask] = static_cast<uint8_t>(best_o);
            T.choice_r[mask] = static_cast<uint8_t>(best_r);
            for (int r = 0; r < k; ++r) T.avail[mask * k + r] = T.avail[parent * k + r];
            for (int r = 0; r < k; ++r) T.slot_of[mask * k + r] = T.slot_of[parent * k + r];
            for (int j = 0; j < n; ++j) T.pick_end[mask * n + j] = T.pick_end[parent * n + j];
            for (int s = 0; s < slot_count; ++s) {
                T.slot_free[mask * slot_count + s] = T.slot_free[parent * slot_count + s];
            }
            T.avail[mask * k + best_r] = static_cast<float>(best_finish);
            T.slot_of[mask * k + best_r] = static_cast<int8_t>(best_slot);
            T.pick_end[mask * n + best_o] = static_cast<float>(best_pick);
            T.slot_free[mask * slot_count + best_slot] = static_cast<float>(best_finish);
        }
    }

    const uint32_t full = static_cast<uint32_t>(total - 1);
    if (n > 0 && !T.feasible[full]) {
        throw NoFeasibleAssignment("plan_dp: no feasible removal order found");
    }

    // Witness reconstruction: removal order with robot matching, oldest first.
    std::vector<std::pair<int, int>> picks;  // (robot, object), in removal order
    for (uint32_t m = full; m != 0;) {
        picks.emplace_back(T.choice_r[m], T.choice_o[m]);
        m &= ~static_cast<uint32_t>(bit(T.choice_o[m]));
    }
    std::reverse(picks.begin(), picks.end());
    std::vector<std::vector<int>> lists(k);
    for (const auto& [r, o] : picks) lists[r].push_back(o);

    // Execute the per-robot lists through the real simulator: each idle robot
    // takes its next listed object as soon as it becomes assignable.
    SimState st = ctx.sim.initial_state();
    std::vector<size_t> ptr(k, 0);
    std::vector<Assignment> seq;
    while (!st.completed) {
        const EpochView view = epoch_view(ctx, st);
        Assignment asg;
        Mask taken = 0;
        for (int robot : view.idle) {
            if (ptr[robot] >= lists[robot].size()) continue;
            const int o = lists[robot][ptr[robot]];
            const Mask virtual_removed = view.inflight | taken;
            if (!(view.unassigned & bit(o))) continue;
            const bool now = ctx.object_accessible(o, view.present);
            const bool later = lookahead && (virtual_removed & view.present) != 0 &&
                               ctx.object_accessible(o, view.present & ~virtual_removed);
            if (!now && !later) continue;
            asg.emplace_back(robot, o);
            taken |= bit(o);
            ++ptr[robot];
        }
        if (!asg.empty()) {
            if (!apply_assignment(ctx, st, asg, false)) {
                // Roll the pointers back and wait for the scene to open up.
                for (const auto& [robot, obj] : asg) {
                    (void)obj;
                    --ptr[robot];
                }
                asg.clear();
            }
        }
        bool lists_pending = false;
        for (int r = 0; r < k; ++r) lists_pending |= ptr[r] < lists[r].size();
        if (asg.empty() && lists_pending && view.inflight == 0) {
            throw NoFeasibleAssignment("plan_dp: witness schedule cannot proceed");
        }
        seq.push_back(asg);
        park_unassigned(ctx, st, asg);
        if (!any_active(st) && !lists_pending) break;
        if (ctx.sim.advance(st, false) == motion::AdvanceStatus::stalled) {
            throw SimulationStall("plan_dp: witness execution stalled");
        }
    }
    while (!seq.empty() && seq.back().empty()) seq.pop_back();

    PlanResult plan = realize(ctx, seq);
    plan.algorithm = "dp";
    plan.lookahead = lookahead;
    plan.nodes_expanded = recursion_evals;
    plan.subset_evaluations = subset_evals;
    plan.recursion_evaluations = recursion_evals;
    plan.compute_time = now_seconds() - t0;
    return plan;
}

// ---------------------------------------------------------------------------
// Single-robot optimal baseline (Held-Karp style subset recursion)

std::pair<double, PlanResult> plan_single_optimal(PlannerContext& ctx) {
    const double t0 = now_seconds();
    const int n = ctx.cs.object_count();
    if (n > ctx.params.dp_cap) {
        throw CapExceeded("plan_single_optimal: object count exceeds the configured cap");
    }
    const Mask all = ctx.cs.all_present();
    const size_t total = 1ull << n;
    const double dt = ctx.params.sim.dt;
    const double step_len = ctx.inst.v_max * dt;
    auto quant_len = [&](double len) { return std::ceil(len / step_len - 1e-9) * dt; };
    auto quant_time = [&](double t) { return std::ceil(t / dt - 1e-9) * dt; };
    const double trip_fixed = quant_time(ctx.inst.t_pick) + quant_time(ctx.inst.t_unload);

    std::vector<double> cost(total, std::numeric_limits<double>::infinity());
    std::vector<uint8_t> choice(total, 255);
    cost[0] = 0.0;
    long subset_evals = 1;
    long recursion_evals = 0;

    std::vector<std::vector<uint32_t>> by_card(n + 1);
    for (uint32_t m = 1; m < total; ++m) by_card[popcount(m)].push_back(m);
    for (int card = 1; card <= n; ++card) {
        for (uint32_t mask : by_card[card]) {
            ++subset_evals;
            for (int o = 0; o < n; ++o) {
                if (!(mask & bit(o))) continue;
                const uint32_t parent = mask & ~static_cast<uint32_t>(bit(o));
                ++recursion_evals;
                if (!std::isfinite(cost[parent])) continue;
                const Mask present = (all & ~Mask(mask)) | bit(o);
                TripRef trip = motion::plan_trip(ctx.cs, ctx.trips, ctx.cs.slots()[0],
                                                 ctx.cs.slot_point(0), o, present, 0, 0, 0);
                if (!trip) continue;
                const double dur =
                    quant_len(trip->out_length) + quant_len(trip->back_length) + trip_fixed;
                if (cost[parent] + dur < cost[mask] - 1e-12) {
                    cost[mask] = cost[parent] + dur;
                    choice[mask] = static_cast<uint8_t>(o);
                }
            }
        }
    }
    const uint32_t full = static_cast<uint32_t>(total - 1);
    if (n > 0 && choice[full] == 255) {
        throw NoFeasibleAssignment("plan_single_optimal: instance is not peel-feasible");
    }

    std::vector<Assignment> seq;
    {
        std::vector<int> order;
        for (uint32_t m = full; m != 0; m &= ~static_cast<uint32_t>(bit(choice[m]))) {
            order.push_back(choice[m]);
        }
        std::reverse(order.begin(), order.end());
        for (int o : order) seq.push_back({{0, o}});
    }
    PlanResult plan = realize(ctx, seq);
    plan.algorithm = "single";
    plan.lookahead = ctx.params.lookahead;
    plan.nodes_expanded = recursion_evals;
    plan.subset_evaluations = subset_evals;
    plan.recursion_evaluations = recursion_evals;
    plan.compute_time = now_seconds() - t0;
    if (n > 0 && std::abs(plan.makespan - cost[full]) > 1e-6) {
        throw Error("plan_single_optimal: realized makespan diverged from the recursion");
    }
    return {plan.makespan, std::move(plan)};
}

// ---------------------------------------------------------------------------
// Monte Carlo tree search with receding-horizon commits

namespace {

struct AbsState {
    double time = 0.0;
    std::vector<double> avail;      // per robot
    std::vector<double> pick_time;  // per object; inf = never scheduled
    Mask remaining = 0;             // objects not yet assigned in the abstraction
    double makespan = 0.0;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

AbsState abstract_of(PlannerContext& ctx, const SimState& st) {
    AbsState a;
    a.time = st.time;
    a.avail.assign(ctx.inst.robot_count, st.time);
    a.pick_time.assign(ctx.cs.object_count(), kInf);
    a.makespan = st.makespan;
    for (int r = 0; r < static_cast<int>(st.robots.size()); ++r) {
        const motion::RobotSim& rs = st.robots[r];
        if (!rs.trip) continue;
        a.avail[r] = ctx.sim.committed_finish_lb(st, r);
        a.makespan = std::max(a.makespan, a.avail[r]);
        if (rs.mode == RobotMode::enter_wait || rs.mode == RobotMode::to_grasp ||
            rs.mode == RobotMode::wait_block) {
            const double rem_out = rs.mode == RobotMode::enter_wait
                                       ? geom::dist(ctx.cs.slots()[rs.trip->depart_slot],
                                                    rs.trip->pose_center)
                                       : geom::dist(rs.pos, rs.trip->pose_center);
            a.pick_time[rs.trip->object_index] =
                st.time + rem_out / ctx.inst.v_max + ctx.inst.t_pick;
        } else if (rs.mode == RobotMode::picking) {
            a.pick_time[rs.trip->object_index] = rs.phase_end;
        }
    }
    for (int i = 0; i < ctx.cs.object_count(); ++i) {
        if ((st.present & bit(i)) && a.pick_time[i] == kInf &&
            !(ctx.sim.inflight_mask(st) & bit(i))) {
            a.remaining |= bit(i);
        }
    }
    return a;
}

// Pose-level accessibility in the abstraction: a pose is free once its
// blockers have pick times at or before t (inf = blocked forever).
bool abs_accessible(const PlannerContext& ctx, const AbsState& a, int obj, double t,
                    bool lookahead, double* unlock_time) {
    double best_unlock = kInf;
    for (const cspace::PoseCandidate& pc : ctx.cs.poses(obj)) {
        if (pc.wall_blocked) continue;
        double unlock = 0.0;
        bool ok = true;
        for (int j = 0; j < ctx.cs.object_count() && ok; ++j) {
            if (!(pc.blocked_by & bit(j))) continue;
            const double pt = a.pick_time[j];
            if (a.remaining & bit(j)) {
                ok = false;  // blocked by an object nobody is scheduled to take
            } else if (pt == kInf) {
                ok = false;
            } else if (pt > t + 1e-9) {
                if (!lookahead) {
                    ok = false;
                } else {
                    unlock = std::max(unlock, pt);
                }
            }
        }
        if (ok) best_unlock = std::min(best_unlock, unlock);
    }
    if (unlock_time) *unlock_time = best_unlock;
    return best_unlock < kInf;
}

void abs_assign(PlannerContext& ctx, AbsState& a, int robot, int obj, bool lookahead) {
    const double d = motion::travel_lower_bound(ctx.cs, obj) / 2.0;
    const double depart = a.avail[robot];
    double unlock = 0.0;
    abs_accessible(ctx, a, obj, depart, lookahead, &unlock);
    const double arrive = std::max(depart + d / ctx.inst.v_max, unlock);
    const double pick = arrive + ctx.inst.t_pick;
    const double finish = pick + d / ctx.inst.v_max + ctx.inst.t_unload;
    a.pick_time[obj] = pick;
    a.remaining &= ~bit(obj);
    a.avail[robot] = finish;
    a.makespan = std::max(a.makespan, finish);
    a.time = depart;
}

double abs_rollout(PlannerContext& ctx, AbsState a, bool lookahead) {
    while (a.remaining != 0) {
        int robot = 0;
        for (int r = 1; r < static_cast<int>(a.avail.size()); ++r) {
            if (a.avail[r] < a.avail[robot] - 1e-12) robot = r;
        }
        const double t = a.avail[robot];
        int best = -1;
        double best_cost = kInf;
        for (int o = 0; o < ctx.cs.object_count(); ++o) {
            if (!(a.remaining & bit(o))) continue;
            if (!abs_accessible(ctx, a, o, t, lookahead, nullptr)) continue;
            const double c = motion::estimate_cost(ctx.cs, o);
            if (c < best_cost - 1e-12) {
                best_cost = c;
                best = o;
            }
        }
        if (best < 0) {
            // Jump this robot past the next scheduled pick; if nothing is in
            // flight the rollout is stuck and scores poorly.
            double next = kInf;
            for (int o = 0; o < ctx.cs.object_count(); ++o) {
                const double pt = a.pick_time[o];
                if (pt != kInf && pt > t + 1e-9) next = std::min(next, pt);
            }
            if (next == kInf) return 1e9;
            a.avail[robot] = next;
            continue;
        }
        abs_assign(ctx, a, robot, best, lookahead);
    }
    return a.makespan;
}

struct MctsNode {
    AbsState st;
    Assignment edge;  // assignment taken from the parent (root children only
                      // carry real joint assignments; deeper edges are single)
    int depth = 0;
    bool expanded = false;
    long visits = 0;
    double reward_sum = 0.0;
    std::vector<int> children;
};

}  // namespace

PlanResult plan_mcts(PlannerContext& ctx) {
    const double t0 = now_seconds();
    const bool lookahead = ctx.params.lookahead;
    const int iterations = ctx.params.mcts_iterations;
    const double c_explore = ctx.params.mcts_exploration;

    SimState st = ctx.sim.initial_state();
    std::vector<Assignment> seq;
    long total_iterations = 0;

    while (!st.completed) {
        const EpochView view = epoch_view(ctx, st);
        if (view.unassigned == 0) {
            if (view.inflight == 0) break;
            seq.push_back({});
            park_unassigned(ctx, st, {});
            if (ctx.sim.advance(st, false) == motion::AdvanceStatus::stalled) {
                throw SimulationStall("plan_mcts: simulation stalled");
            }
            continue;
        }
        bool capped = false;
        std::vector<Assignment> root_moves = enumerate_assignments(ctx, st, lookahead, &capped);
        if (root_moves.empty()) {
            if (view.inflight == 0) {
                throw NoFeasibleAssignment("plan_mcts: nothing assignable");
            }
            seq.push_back({});
            park_unassigned(ctx, st, {});
            if (ctx.sim.advance(st, false) == motion::AdvanceStatus::stalled) {
                throw SimulationStall("plan_mcts: simulation stalled");
            }
            continue;
        }

        const AbsState root_abs = abstract_of(ctx, st);
        const double t_ref = abs_rollout(ctx, root_abs, lookahead);

        std::deque<MctsNode> tree;
        tree.push_back({root_abs, {}, 0, false, 0, 0.0, {}});
        auto expand = [&](int idx) {
            MctsNode& node = tree[idx];
            if (node.expanded) return;
            node.expanded = true;
            if (node.depth >= 3) return;
            if (idx == 0) {
                for (const Assignment& mv : root_moves) {
                    AbsState child = node.st;
                    for (const auto& [robot, obj] : mv) {
                        abs_assign(ctx, child, robot, obj, lookahead);
                    }
                    tree.push_back({std::move(child), mv, 1, false, 0, 0.0, {}});
                    tree[idx].children.push_back(static_cast<int>(tree.size()) - 1);
                }
                return;
            }
            // Deeper levels: the earliest-available robot takes one object.
            int robot = 0;
            for (int r = 1; r < static_cast<int>(node.st.avail.size()); ++r) {
                if (node.st.avail[r] < node.st.avail[robot] - 1e-12) robot = r;
            }
            const double t = node.st.avail[robot];
            for (int o = 0; o < ctx.cs.object_count(); ++o) {
                if (!(node.st.remaining & bit(o))) continue;
                if (!abs_accessible(ctx, node.st, o, t, lookahead, nullptr)) continue;
                AbsState child = node.st;
                abs_assign(ctx, child, robot, o, lookahead);
                tree.push_back({std::move(child), {{robot, o}},
                                tree[idx].depth + 1, false, 0, 0.0, {}});
                tree[idx].children.push_back(static_cast<int>(tree.size()) - 1);
            }
        };

        for (int it = 0; it < iterations; ++it) {
            ++total_iterations;
            // Selection.
            std::vector<int> path{0};
            int cur = 0;
            while (true) {
                expand(cur);
                MctsNode& node = tree[cur];
                if (node.children.empty()) break;
                int pick = -1;
                double best_ucb = -kInf;
                for (int child : node.children) {
                    const MctsNode& ch = tree[child];
                    if (ch.visits == 0) {
                        pick = child;
                        break;  // infinite UCB: visit every child once first
                    }
                    const double ucb =
                        ch.reward_sum / ch.visits +
                        c_explore * std::sqrt(std::log(static_cast<double>(node.visits + 1)) /
                                              ch.visits);
                    if (ucb > best_ucb + 1e-15) {
                        best_ucb = ucb;
                        pick = child;
                    }
                }
                cur = pick;
                path.push_back(cur);
                if (tree[cur].visits == 0 || tree[cur].depth >= 3) break;
            }
            // Simulation + backpropagation.
            const double rollout = abs_rollout(ctx, tree[cur].st, lookahead);
            const double reward = t_ref / std::max(rollout, 1e-9);
            for (int idx : path) {
                ++tree[idx].visits;
                tree[idx].reward_sum += reward;
            }
        }

        // Commit the most visited root child; fall back down the visit order
        // if its joint simulation fails.
        std::vector<int> order = tree[0].children;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (tree[a].visits != tree[b].visits) return tree[a].visits > tree[b].visits;
            return a < b;
        });
        bool committed = false;
        for (int child : order) {
            SimState next = st;
            if (!apply_assignment(ctx, next, tree[child].edge, false)) continue;
            park_unassigned(ctx, next, tree[child].edge);
            if (ctx.sim.advance(next, false) == motion::AdvanceStatus::stalled) continue;
            seq.push_back(tree[child].edge);
            st = std::move(next);
            committed = true;
            break;
        }
        if (!committed) {
            if (view.inflight == 0) {
                throw SimulationStall("plan_mcts: every root action failed");
            }
            seq.push_back({});
            park_unassigned(ctx, st, {});
            if (ctx.sim.advance(st, false) == motion::AdvanceStatus::stalled) {
                throw SimulationStall("plan_mcts: simulation stalled");
            }
        }
    }

    while (!seq.empty() && seq.back().empty()) seq.pop_back();
    PlanResult plan = realize(ctx, seq);
    plan.algorithm = "mcts";
    plan.lookahead = lookahead;
    plan.nodes_expanded = total_iterations;
    plan.compute_time = now_seconds() - t0;
    return plan;
}

PlanResult plan_by_name(PlannerContext& ctx, const std::string& algorithm) {
    if (algorithm == "greedy") return plan_greedy(ctx);
    if (algorithm == "astar") return plan_astar(ctx);
    if (algorithm == "dp") return plan_dp(ctx);
    if (algorithm == "mcts") return plan_mcts(ctx);
    if (algorithm == "single") return plan_single_optimal(ctx).second;
    throw Error("unknown algorithm: " + algorithm);
}

std::string serialize_plan(const PlanResult& plan, const std::string& trace_file) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["algorithm"] = plan.algorithm;
    j["lookahead"] = plan.lookahead;
    j["makespan"] = plan.makespan;
    j["compute_time"] = plan.compute_time;
    j["nodes_expanded"] = plan.nodes_expanded;
    j["budget_exhausted"] = plan.budget_exhausted;
    j["assignments_capped"] = plan.assignments_capped;
    j["sequences"] = plan.sequences;
    j["trace_file"] = trace_file;
    return j.dump(2) + "\n";
}

}  // namespace clutter::planners
