#include <algorithm>
#include <cmath>

#include "clutter/motion.hpp"

namespace clutter::motion {

using cspace::bit;
using geom::Point2;

Simulator::Simulator(const scene::Instance& inst, CSpace& cs, SimParams params)
    : inst_(inst), cs_(cs), params_(params) {
    slot_count_ = static_cast<int>(cs.slots().size());
}

SimState Simulator::initial_state() const {
    SimState st;
    st.present = cs_.all_present();
    st.robots.assign(inst_.robot_count, RobotSim{});
    st.slot_claim.assign(slot_count_, -1);
    st.slot_last_sched.assign(slot_count_, 0.0);
    return st;
}

void Simulator::log(SimState& st, bool record, double t, int robot, EventKind k,
                    int object) const {
    if (!record) return;
    st.events.push_back({t, robot, k, object});
}

bool Simulator::assignable(const SimState& st, int robot) const {
    const RobotMode m = st.robots[robot].mode;
    return m == RobotMode::outside || m == RobotMode::idle;
}

std::vector<int> Simulator::assignable_robots(const SimState& st) const {
    std::vector<int> out;
    for (int r = 0; r < static_cast<int>(st.robots.size()); ++r) {
        if (assignable(st, r)) out.push_back(r);
    }
    return out;
}

Mask Simulator::inflight_mask(const SimState& st) const {
    Mask m = 0;
    for (const RobotSim& r : st.robots) {
        if (!r.trip) continue;
        switch (r.mode) {
            case RobotMode::enter_wait:
            case RobotMode::to_grasp:
            case RobotMode::wait_block:
            case RobotMode::picking:
                m |= bit(r.trip->object_index);
                break;
            default:
                break;
        }
    }
    return m;
}

int Simulator::choose_entry_slot(const SimState& st) const {
    std::vector<int> load(slot_count_, 0);
    for (const RobotSim& r : st.robots) {
        int s = -1;
        switch (r.mode) {
            case RobotMode::outside:
                break;
            case RobotMode::enter_wait:
                s = r.trip->depart_slot;
                break;
            case RobotMode::to_slot:
            case RobotMode::wait_slot:
            case RobotMode::unloading:
                s = r.trip->return_slot;
                break;
            default:
                s = r.cur_slot;
                break;
        }
        if (s >= 0) ++load[s];
    }
    int best = 0;
    for (int s = 1; s < slot_count_; ++s) {
        if (load[s] < load[best]) best = s;
    }
    return best;
}

int Simulator::choose_return_slot(const SimState& st, int depart_slot, double est_arrival,
                                  double /*est_done*/) const {
    if (slot_count_ == 1) return 0;
    if (st.slot_last_sched[depart_slot] <= est_arrival + 1e-9) return depart_slot;
    int best = 0;
    for (int s = 1; s < slot_count_; ++s) {
        if (st.slot_last_sched[s] < st.slot_last_sched[best]) best = s;
    }
    return best;
}

void Simulator::assign_trip(SimState& st, int robot, TripRef trip, bool record_events) const {
    RobotSim& r = st.robots[robot];
    if (!assignable(st, robot)) throw Error("assign_trip: robot is not assignable");
    r.trip = std::move(trip);
    r.leg = 0;
    r.arc = 0.0;
    r.on_path = true;
    r.velocity = {0.0, 0.0};
    r.depart_time = st.time;
    r.wait_open = false;
    if (r.mode == RobotMode::idle) {
        if (r.cur_slot != r.trip->depart_slot) {
            throw Error("assign_trip: trip depart slot does not match the robot's slot");
        }
        if (st.slot_claim[r.cur_slot] == robot) st.slot_claim[r.cur_slot] = -1;
        r.mode = RobotMode::to_grasp;
        r.pos = cs_.slots()[r.cur_slot];
        log(st, record_events, st.time, robot, EventKind::depart, r.trip->object_id);
    } else {
        r.mode = RobotMode::enter_wait;  // depart logged at materialization
    }
    st.slot_last_sched[r.trip->return_slot] =
        std::max(st.slot_last_sched[r.trip->return_slot], st.time + r.trip->nominal_duration);
    st.last_progress = st.time;
}

void Simulator::step_outside(SimState& st, int robot) const {
    RobotSim& r = st.robots[robot];
    if (r.cur_slot >= 0 && st.slot_claim[r.cur_slot] == robot) st.slot_claim[r.cur_slot] = -1;
    r.mode = RobotMode::outside;
    r.trip.reset();
    r.cur_slot = -1;
}

const std::vector<Point2>& Simulator::leg_path(const RobotSim& r) const {
    return r.leg == 0 ? r.trip->out_path : r.trip->back_path;
}

double Simulator::leg_length(const RobotSim& r) const {
    return r.leg == 0 ? r.trip->out_length : r.trip->back_length;
}

Point2 Simulator::path_point(const RobotSim& r, double arc) const {
    const std::vector<Point2>& path = leg_path(r);
    if (path.size() == 1) return path[0];
    double remaining = arc;
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        const double seg = geom::dist(path[i], path[i + 1]);
        if (remaining <= seg || i + 2 == path.size()) {
            if (seg == 0.0) return path[i + 1];
            const double t = std::clamp(remaining / seg, 0.0, 1.0);
            return path[i] + t * (path[i + 1] - path[i]);
        }
        remaining -= seg;
    }
    return path.back();
}

namespace {

bool materialized(const RobotSim& r) {
    switch (r.mode) {
        case RobotMode::outside:
        case RobotMode::enter_wait:
            return false;
        default:
            return true;
    }
}

// Collision of two discs within the horizon given relative start P and
// relative velocity V (closing when dot(P, V) > 0 with our sign convention).
bool vo_collides(Point2 P, Point2 V, double combined_radius, double horizon) {
    const double v2 = geom::dot(V, V);
    double t = 0.0;
    if (v2 > 1e-12) t = std::clamp(geom::dot(P, V) / v2, 0.0, horizon);
    return geom::dist(P - t * V, Point2{0, 0}) < combined_radius;
}

}  // namespace

void Simulator::movement_phase(SimState& st, bool record_events) const {
    const double dt = params_.dt;
    const double vmax = inst_.v_max;
    const double two_r = 2.0 * inst_.robot_radius;
    const double hard_gap = two_r - 1e-9;
    const double claim_radius = params_.claim_radius_factor * inst_.robot_radius;
    const int nr = static_cast<int>(st.robots.size());
    const double t_now = st.time;

    // Waiting resolution and slot claims, ascending robot id.
    for (int i = 0; i < nr; ++i) {
        RobotSim& r = st.robots[i];
        if (r.mode == RobotMode::wait_block) {
            // Path segments are walked again below; resume if the entry is clear.
            r.mode = r.leg == 0 ? RobotMode::to_grasp : RobotMode::to_slot;
        } else if (r.mode == RobotMode::wait_slot) {
            const int slot = r.trip->return_slot;
            if (st.slot_claim[slot] < 0 || st.slot_claim[slot] == i) {
                st.slot_claim[slot] = static_cast<int8_t>(i);
                r.mode = RobotMode::to_slot;
            }
        }
    }

    // Materialization at entry slots.
    for (int i = 0; i < nr; ++i) {
        RobotSim& r = st.robots[i];
        if (r.mode != RobotMode::enter_wait) continue;
        const int slot = r.trip->depart_slot;
        const Point2 sp = cs_.slots()[slot];
        bool clear = st.slot_claim[slot] < 0 || st.slot_claim[slot] == i;
        for (int j = 0; clear && j < nr; ++j) {
            if (j != i && materialized(st.robots[j])) {
                clear = geom::dist(st.robots[j].pos, sp) >= two_r - 1e-12;
            }
        }
        if (clear) {
            r.pos = sp;
            r.cur_slot = slot;
            r.mode = RobotMode::to_grasp;
            r.on_path = true;
            r.arc = 0.0;
            if (r.wait_open) {
                log(st, record_events, t_now, i, EventKind::wait_end, r.trip->object_id);
                r.wait_open = false;
            }
            log(st, record_events, t_now, i, EventKind::depart, r.trip->object_id);
            st.last_progress = t_now;
        } else if (!r.wait_open) {
            log(st, record_events, t_now, i, EventKind::wait_start, r.trip->object_id);
            r.wait_open = true;
        }
    }

    // Velocity selection, ascending id: a candidate must keep the hard gap to
    // already-decided robots at their next position and to undecided robots
    // at their current position; zero velocity therefore always qualifies.
    std::vector<Point2> next_pos(nr);
    std::vector<Point2> decided_vel(nr, Point2{0, 0});
    std::vector<char> decided(nr, 0);
    std::vector<double> new_arc(nr, 0.0);
    std::vector<char> landed(nr, 0);

    for (int i = 0; i < nr; ++i) {
        RobotSim& r = st.robots[i];
        if (!materialized(r)) {
            decided[i] = 1;
            continue;
        }
        next_pos[i] = r.pos;
        new_arc[i] = r.arc;
        if (r.mode != RobotMode::to_grasp && r.mode != RobotMode::to_slot) {
            decided[i] = 1;  // stationary phases
            continue;
        }

        // Wait rule: do not enter a segment whose blockers are still present.
        const std::vector<Point2>& path = leg_path(r);
        const std::vector<Mask>& waits = r.leg == 0 ? r.trip->out_wait : r.trip->back_wait;
        const double leg_len = leg_length(r);
        double target = std::min(r.arc + vmax * dt, leg_len);
        bool hold_block = false;
        if (!waits.empty()) {
            double acc = 0.0;
            for (size_t sgi = 0; sgi + 1 < path.size(); ++sgi) {
                const double seg = geom::dist(path[sgi], path[sgi + 1]);
                if ((waits[sgi] & st.present) != 0) {
                    if (acc >= r.arc - 1e-9) {
                        if (acc <= r.arc + 1e-9) {
                            hold_block = true;  // standing at the blocked entry
                        } else {
                            target = std::min(target, acc);
                        }
                        break;
                    }
                }
                acc += seg;
                if (acc >= target) break;
            }
        }
        if (hold_block && r.on_path) {
            r.mode = RobotMode::wait_block;
            if (!r.wait_open) {
                log(st, record_events, t_now, i, EventKind::wait_start, r.trip->object_id);
                r.wait_open = true;
            }
            decided[i] = 1;
            continue;
        }

        // Slot claim gate on the final approach.
        if (r.mode == RobotMode::to_slot) {
            const int slot = r.trip->return_slot;
            const Point2 sp = cs_.slots()[slot];
            const bool near = geom::dist(r.pos, sp) <= claim_radius || target >= leg_len - 1e-9;
            if (near && st.slot_claim[slot] != i) {
                if (st.slot_claim[slot] < 0) {
                    st.slot_claim[slot] = static_cast<int8_t>(i);
                } else {
                    r.mode = RobotMode::wait_slot;
                    if (!r.wait_open) {
                        log(st, record_events, t_now, i, EventKind::wait_start,
                            r.trip->object_id);
                        r.wait_open = true;
                    }
                    decided[i] = 1;
                    continue;
                }
            }
        }

        if (r.wait_open) {
            log(st, record_events, t_now, i, EventKind::wait_end, r.trip->object_id);
            r.wait_open = false;
        }

        // Preferred velocity: along the path, or back to the departure point
        // of a deviation (progress resumes only once the robot returns).
        Point2 pref;
        bool pref_lands = false;
        if (r.on_path) {
            pref = (1.0 / dt) * (path_point(r, target) - r.pos);
        } else {
            const Point2 anchor = path_point(r, r.arc);
            const Point2 d = anchor - r.pos;
            const double dl = geom::norm(d);
            if (dl <= vmax * dt) {
                pref = (1.0 / dt) * d;
                pref_lands = true;
            } else {
                pref = (vmax / dl) * d;
            }
        }

        auto hard_ok = [&](Point2 cand_next) {
            for (int j = 0; j < nr; ++j) {
                if (j == i || !materialized(st.robots[j])) continue;
                const Point2 q = decided[j] ? next_pos[j] : st.robots[j].pos;
                if (geom::dist(cand_next, q) < hard_gap) return false;
            }
            return true;
        };
        auto vo_ok = [&](Point2 v) {
            for (int j = 0; j < nr; ++j) {
                if (j == i || !materialized(st.robots[j])) continue;
                const Point2 P = st.robots[j].pos - r.pos;
                const double range =
                    two_r + 2.0 * vmax * params_.rvo_horizon + 2.0 * vmax * dt;
                if (geom::norm(P) > range) continue;
                const Point2 vj = decided[j] ? decided_vel[j] : Point2{0, 0};
                if (vo_collides(P, v - vj, two_r, params_.rvo_horizon)) return false;
            }
            return true;
        };

        Point2 chosen{0.0, 0.0};
        bool chosen_on_path = false;
        bool chosen_lands = false;
        if (hard_ok(r.pos + dt * pref) && vo_ok(pref)) {
            chosen = pref;
            chosen_on_path = r.on_path;
            chosen_lands = pref_lands;
        } else {
            double best_dev = std::numeric_limits<double>::infinity();
            bool found = false;
            for (int di = 0; di < params_.rvo_directions; ++di) {
                const double ang = 2.0 * M_PI * di / params_.rvo_directions;
                const Point2 dir{std::cos(ang), std::sin(ang)};
                for (int si = 0; si < params_.rvo_speed_fractions; ++si) {
                    const double speed =
                        vmax * (params_.rvo_speed_fractions - si) / params_.rvo_speed_fractions;
                    const Point2 v = speed * dir;
                    const Point2 nxt = r.pos + dt * v;
                    if (!hard_ok(nxt)) continue;
                    if (!vo_ok(v)) continue;
                    if (cs_.point_blocked(nxt, st.present)) continue;
                    const Point2 dv = v - pref;
                    const double dev = geom::dot(dv, dv);
                    if (dev < best_dev - 1e-15) {
                        best_dev = dev;
                        chosen = v;
                        found = true;
                    }
                }
            }
            if (!found) chosen = {0.0, 0.0};  // stopping always keeps the hard gap
            chosen_on_path = false;
            chosen_lands = false;
        }

        decided[i] = 1;
        decided_vel[i] = chosen;
        if (chosen_on_path) {
            new_arc[i] = target;
            next_pos[i] = path_point(r, target);
        } else {
            next_pos[i] = r.pos + dt * chosen;
            landed[i] = chosen_lands ? 1 : 0;
        }
        r.velocity = chosen;
    }

    // Apply movement and handle arrivals at the new time boundary.
    const double t_next = st.time + dt;
    for (int i = 0; i < nr; ++i) {
        RobotSim& r = st.robots[i];
        if (!materialized(r)) continue;
        if (r.mode != RobotMode::to_grasp && r.mode != RobotMode::to_slot) continue;
        if (geom::dist(next_pos[i], r.pos) > 1e-12) st.last_progress = t_next;
        const bool was_on_path = r.on_path;
        if (was_on_path && new_arc[i] > r.arc) {
            r.arc = new_arc[i];
            r.pos = path_point(r, r.arc);
        } else if (!was_on_path) {
            r.pos = next_pos[i];
            if (landed[i]) {
                r.on_path = true;
                r.pos = path_point(r, r.arc);
            }
        } else {
            r.pos = next_pos[i];
            if (geom::dist(r.pos, path_point(r, r.arc)) > 1e-12) r.on_path = false;
        }
        if (r.on_path && r.arc >= leg_length(r) - 1e-9) arrive(st, i, record_events);
    }
    st.time = t_next;
}

void Simulator::arrive(SimState& st, int robot, bool record_events) const {
    RobotSim& r = st.robots[robot];
    const double t = st.time + params_.dt;  // arrival is processed at the step boundary
    if (r.leg == 0) {
        r.pos = r.trip->pose_center;
        r.mode = RobotMode::picking;
        r.phase_end = t + inst_.t_pick;
        log(st, record_events, t, robot, EventKind::pick_start, r.trip->object_id);
    } else {
        r.pos = cs_.slots()[r.trip->return_slot];
        r.cur_slot = r.trip->return_slot;
        r.mode = RobotMode::unloading;
        r.phase_end = t + inst_.t_unload;
        log(st, record_events, t, robot, EventKind::unload_start, r.trip->object_id);
    }
    st.last_progress = t;
}

AdvanceStatus Simulator::advance(SimState& st, bool record_events, Trace* samples) const {
    if (st.completed) return AdvanceStatus::completed;
    const Mask all = cs_.all_present();
    while (true) {
        // Phase completions due at the current time.
        bool epoch = false;
        for (int i = 0; i < static_cast<int>(st.robots.size()); ++i) {
            RobotSim& r = st.robots[i];
            if (r.mode == RobotMode::picking && st.time >= r.phase_end - 1e-9) {
                st.present &= ~bit(r.trip->object_index);
                r.carrying = r.trip->object_index;
                r.mode = RobotMode::to_slot;
                r.leg = 1;
                r.arc = 0.0;
                r.on_path = true;
                log(st, record_events, st.time, i, EventKind::pick_end, r.trip->object_id);
                st.last_progress = st.time;
            } else if (r.mode == RobotMode::unloading && st.time >= r.phase_end - 1e-9) {
                st.cleared |= bit(r.trip->object_index);
                r.carrying = -1;
                r.mode = RobotMode::idle;
                st.makespan = std::max(st.makespan, st.time);
                log(st, record_events, st.time, i, EventKind::unload_end, r.trip->object_id);
                r.trip.reset();
                st.last_progress = st.time;
                epoch = true;
            }
        }
        if (st.cleared == all) {
            // Nothing left to assign: idle robots leave through the exit.
            for (int i = 0; i < static_cast<int>(st.robots.size()); ++i) {
                if (st.robots[i].mode == RobotMode::idle) step_outside(st, i);
            }
            epoch = false;
        }
        if (epoch) return AdvanceStatus::epoch;

        bool active = false;
        for (const RobotSim& r : st.robots) {
            if (r.mode != RobotMode::outside && r.mode != RobotMode::idle) active = true;
        }
        if (!active) {
            if (st.cleared == all) {
                st.completed = true;
                return AdvanceStatus::completed;
            }
            for (const RobotSim& r : st.robots) {
                if (r.mode == RobotMode::idle) return AdvanceStatus::epoch;
            }
            throw Error("advance: no active robots and objects remain");
        }
        if (st.time - st.last_progress >= params_.stall_timeout - 1e-9) {
            return AdvanceStatus::stalled;
        }

        movement_phase(st, record_events);

        // Timers tick by themselves; count them as progress.
        for (const RobotSim& r : st.robots) {
            if (r.mode == RobotMode::picking || r.mode == RobotMode::unloading) {
                st.last_progress = st.time;
                break;
            }
        }
        if (samples) {
            for (int i = 0; i < static_cast<int>(st.robots.size()); ++i) {
                const RobotSim& r = st.robots[i];
                if (!materialized(r)) continue;
                samples->samples.push_back(
                    {st.time, i, r.pos.x, r.pos.y,
                     r.carrying >= 0 ? cs_.id_of_index(r.carrying) : -1});
            }
        }
    }
}

double Simulator::remaining_travel_lb(const SimState& st, int robot) const {
    const RobotSim& r = st.robots[robot];
    if (!r.trip) return 0.0;
    const Point2 ret = cs_.slots()[r.trip->return_slot];
    const Point2 pose = r.trip->pose_center;
    switch (r.mode) {
        case RobotMode::enter_wait:
            return geom::dist(cs_.slots()[r.trip->depart_slot], pose) + geom::dist(pose, ret);
        case RobotMode::to_grasp:
        case RobotMode::wait_block:
            return geom::dist(r.pos, pose) + geom::dist(pose, ret);
        case RobotMode::picking:
            return geom::dist(pose, ret);
        case RobotMode::to_slot:
        case RobotMode::wait_slot:
            return geom::dist(r.pos, ret);
        default:
            return 0.0;
    }
}

double Simulator::remaining_stationary(const SimState& st, int robot) const {
    const RobotSim& r = st.robots[robot];
    if (!r.trip) return 0.0;
    switch (r.mode) {
        case RobotMode::enter_wait:
        case RobotMode::to_grasp:
        case RobotMode::wait_block:
            return inst_.t_pick + inst_.t_unload;
        case RobotMode::picking:
            return std::max(0.0, r.phase_end - st.time) + inst_.t_unload;
        case RobotMode::to_slot:
        case RobotMode::wait_slot:
            return inst_.t_unload;
        case RobotMode::unloading:
            return std::max(0.0, r.phase_end - st.time);
        default:
            return 0.0;
    }
}

double Simulator::committed_finish_lb(const SimState& st, int robot) const {
    const RobotSim& r = st.robots[robot];
    if (!r.trip) return st.time;
    return st.time + remaining_travel_lb(st, robot) / inst_.v_max +
           remaining_stationary(st, robot);
}

}  // namespace clutter::motion
