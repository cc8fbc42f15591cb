#pragma once

#include <utility>
#include <vector>

#include "clutter/cspace.hpp"
#include "clutter/scene.hpp"

namespace clutter::access {

using cspace::CSpace;
using cspace::Mask;

struct GraspPose {
    int object_id = -1;
    geom::Point2 robot_center;
    double approach_heading = 0.0;
};

enum class Reach { reachable_now, reachable_after, unreachable };

struct Availability {
    int object_id = -1;
    Reach status = Reach::unreachable;
    std::vector<int> unlocked_by;  // minimal set of in-flight object ids
};

// Collision-free standoff poses along outward edge normals, ordered by
// (edge index, edge parameter). `present` marks objects still on the floor.
std::vector<GraspPose> sample_grasps(CSpace& cs, int obj_idx, Mask present);

// True iff some grasp pose of the object has a collision-free path from the
// given start among present objects and walls.
bool accessible_from_point(CSpace& cs, int obj_idx, Mask present, geom::Point2 from);
bool accessible_from_slot(CSpace& cs, int obj_idx, Mask present, int slot = 0);

// Fixed-point availability for a decision epoch. `inflight` holds objects
// already assigned to robots (not yet picked); both masks index objects.
std::vector<Availability> lookahead_availability(CSpace& cs, Mask present, Mask inflight,
                                                 Mask unassigned);

// Repeatedly removes the lowest-id accessible object; returns whether the
// whole instance peels and the witness order.
std::pair<bool, std::vector<int>> peel_feasible(const scene::Instance& inst);
std::pair<bool, std::vector<int>> peel_feasible(CSpace& cs);

// Convenience wrappers matching the instance-level vocabulary (ids, not
// indices); they build a fresh CSpace per call.
std::vector<GraspPose> sample_grasps(const scene::Instance& inst, int object_id,
                                     const std::vector<int>& removed_ids);
bool accessible(const scene::Instance& inst, int object_id, const std::vector<int>& removed_ids,
                geom::Point2 from);

// True when the initial state hides at least one object behind the currently
// reachable wave (used to select lookahead-sensitive benchmark instances).
bool has_dependency(const scene::Instance& inst);

}  // namespace clutter::access
