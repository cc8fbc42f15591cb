#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clutter/access.hpp"
#include "clutter/cspace.hpp"

namespace clutter::motion {

using cspace::CSpace;
using cspace::Mask;

// One retrieval trip: slot -> grasp pose -> slot. Immutable and shared; the
// simulator stamps the robot id when the trip is queued.
struct TripGeometry {
    int object_index = -1;
    int object_id = -1;
    int pose_index = -1;
    geom::Point2 pose_center;
    double approach_heading = 0.0;
    int depart_slot = 0;
    int return_slot = 0;
    std::vector<geom::Point2> out_path;   // depart point ... pose
    std::vector<geom::Point2> back_path;  // pose ... return slot
    double out_length = 0.0;
    double back_length = 0.0;
    double nominal_duration = 0.0;  // (out+back)/v_max + t_pick + t_unload
    // Per-segment masks of virtually removed objects the robot must outwait
    // before entering the segment (index i = segment ending at waypoint i+1).
    std::vector<Mask> out_wait;
    std::vector<Mask> back_wait;
};

using TripRef = std::shared_ptr<const TripGeometry>;

struct TripKey {
    int32_t qx = 0;  // start position quantized to 1 cm
    int32_t qy = 0;
    int object_index = -1;
    Mask plan_mask = 0;  // obstacles the paths were planned against
    Mask wait_mask = 0;  // virtually removed objects still on the floor
    int return_slot = 0;
    bool operator==(const TripKey&) const = default;
};

struct TripKeyHash {
    size_t operator()(const TripKey& k) const;
};

// Memo of motion-query results; concurrent use is safe and benign because
// values are deterministic for their key.
class TripCache {
public:
    std::optional<TripRef> get(const TripKey& key) const;
    void put(const TripKey& key, TripRef trip);
    size_t size() const;
    long hits() const { return hits_; }
    long misses() const { return misses_; }

private:
    mutable std::unordered_map<TripKey, TripRef, TripKeyHash> map_;
    mutable std::mutex mutex_;
    mutable long hits_ = 0;
    mutable long misses_ = 0;
};

TripKey make_trip_key(geom::Point2 start, int object_index, Mask plan_mask, Mask wait_mask,
                      int return_slot);

// Plans the best trip (minimal out+back length over grasp poses) from `start`
// to the object and back to `return_slot`. Obstacles are the objects in
// `present` minus `virtual_removed`; virtually removed objects still present
// become per-segment wait conditions. Returns nullptr when unreachable.
TripRef plan_trip(CSpace& cs, TripCache& cache, geom::Point2 start, int start_point,
                  int object_index, Mask present, Mask virtual_removed, int depart_slot,
                  int return_slot);

// Optimistic per-object travel bound: twice the Euclidean distance from the
// object to the exit, shortened by the grasp reach and slot spread so it
// never exceeds a feasible trip's travel.
double travel_lower_bound(const CSpace& cs, int object_index);

// Lower bound on any feasible trip duration for the object.
double estimate_cost(const CSpace& cs, int object_index);
double estimate_cost(const scene::Instance& inst, int object_id);

// Trip duration as realized by the time-stepped simulator (legs quantized to
// whole steps, pick/unload rounded up to whole steps).
double trip_sim_duration(const TripGeometry& trip, const scene::Instance& inst, double dt);

// ---------------------------------------------------------------------------
// Joint simulation

enum class EventKind : uint8_t {
    depart,
    pick_start,
    pick_end,
    unload_start,
    unload_end,
    wait_start,
    wait_end,
};

const char* to_string(EventKind k);

struct TraceEvent {
    double time = 0.0;
    int robot = -1;
    EventKind kind = EventKind::depart;
    int object = -1;  // object id, -1 when not applicable
};

struct TraceSample {
    double time = 0.0;
    int robot = -1;
    double x = 0.0;
    double y = 0.0;
    int carrying = -1;  // object id
};

struct Trace {
    double dt = 0.05;
    int robot_count = 0;
    double makespan = 0.0;
    std::vector<TraceEvent> events;
    std::vector<TraceSample> samples;  // filled when sampling was requested

    std::string serialize() const;
    static Trace parse(const std::string& text);
    void save(const std::string& path) const;
    static Trace load(const std::string& path);
};

struct SimParams {
    double dt = 0.05;
    double contact_tol = 1e-6;
    double stall_timeout = 60.0;  // simulated seconds without progress
    double rvo_horizon = 2.0;
    int rvo_directions = 36;
    int rvo_speed_fractions = 4;
    double claim_radius_factor = 3.0;  // slot claim distance, in robot radii
};

enum class RobotMode : uint8_t {
    outside,     // at the exit, not in the workspace, assignable
    enter_wait,  // has a trip, waiting for its entry slot to clear
    to_grasp,
    wait_block,  // holding for a virtually removed object still on the floor
    picking,
    to_slot,
    wait_slot,  // holding for the drop-off slot claim
    unloading,
    idle,  // materialized at a slot right after unload_end, awaiting decision
};

struct RobotSim {
    RobotMode mode = RobotMode::outside;
    geom::Point2 pos;
    bool on_path = true;     // pos equals the path point at `arc`
    geom::Point2 velocity;   // last applied velocity (diagnostics)
    TripRef trip;
    int leg = 0;             // 0 out, 1 back
    double arc = 0.0;        // meters traveled along the current leg
    double phase_end = 0.0;  // absolute end time of pick/unload
    int carrying = -1;       // object index
    int cur_slot = -1;       // slot the robot is associated with
    bool wait_open = false;  // a wait_start event has no matching wait_end yet
    double depart_time = 0.0;
};

struct SimState {
    double time = 0.0;
    Mask present = 0;  // objects still on the floor
    Mask cleared = 0;  // objects unloaded
    std::vector<RobotSim> robots;
    std::vector<int8_t> slot_claim;        // robot id holding the slot, -1 free
    std::vector<double> slot_last_sched;   // estimated last unload end per slot
    std::vector<TraceEvent> events;
    double makespan = 0.0;  // last unload_end seen so far
    double last_progress = 0.0;
    bool completed = false;
};

enum class AdvanceStatus { epoch, completed, stalled };

// Deterministic kinematic joint simulator with sampled-velocity reciprocal
// collision avoidance. One Simulator serves many SimStates (search branches).
class Simulator {
public:
    Simulator(const scene::Instance& inst, CSpace& cs, SimParams params = {});

    const SimParams& params() const { return params_; }
    const scene::Instance& instance() const { return inst_; }
    CSpace& cs() const { return cs_; }

    SimState initial_state() const;

    // Robot must be assignable (outside or idle). Departs immediately; an
    // outside robot enters at the trip's depart slot once it is clear.
    void assign_trip(SimState& st, int robot, TripRef trip, bool record_events) const;
    // Idle robot steps back outside the workspace (always allowed).
    void step_outside(SimState& st, int robot) const;

    bool assignable(const SimState& st, int robot) const;
    std::vector<int> assignable_robots(const SimState& st) const;
    // Objects assigned to robots that have not picked them up yet.
    Mask inflight_mask(const SimState& st) const;

    // Entry slot for a robot currently outside: least loaded, ties low index.
    int choose_entry_slot(const SimState& st) const;
    // Return slot for a new trip: keep the depart slot unless its estimated
    // unload window collides with an in-flight trip targeting it.
    int choose_return_slot(const SimState& st, int depart_slot, double est_arrival,
                           double est_done) const;

    // Runs until a robot finishes unloading (decision epoch), everything is
    // cleared, or no simulated progress happens for the stall timeout.
    AdvanceStatus advance(SimState& st, bool record_events, Trace* samples = nullptr) const;

    // Lower bounds used by the search heuristics (admissible under the motion
    // model: travel at v_max along straight lines, stationary work exact).
    double remaining_travel_lb(const SimState& st, int robot) const;
    double remaining_stationary(const SimState& st, int robot) const;
    double committed_finish_lb(const SimState& st, int robot) const;

private:
    void step(SimState& st, bool record_events, Trace* samples) const;
    void movement_phase(SimState& st, bool record_events) const;
    geom::Point2 path_point(const RobotSim& r, double arc) const;
    double leg_length(const RobotSim& r) const;
    const std::vector<geom::Point2>& leg_path(const RobotSim& r) const;
    void arrive(SimState& st, int robot, bool record_events) const;
    void log(SimState& st, bool record, double t, int robot, EventKind k, int object) const;

    const scene::Instance& inst_;
    CSpace& cs_;
    SimParams params_;
    int slot_count_ = 1;
};

// Spec-level joint simulation: trips with absolute start epochs per robot.
// Each robot runs its queue in order; the caller guarantees trips were
// planned against the snapshot at their epoch.
struct TimedTrip {
    double start_epoch = 0.0;
    TripRef trip;
};

Trace simulate_joint(const scene::Instance& inst, CSpace& cs,
                     const std::vector<std::vector<TimedTrip>>& schedule,
                     const SimParams& params = {}, bool record_samples = false);

}  // namespace clutter::motion
