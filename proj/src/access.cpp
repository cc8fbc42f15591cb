#include "clutter/access.hpp"

#include <algorithm>

namespace clutter::access {

using cspace::bit;

std::vector<GraspPose> sample_grasps(CSpace& cs, int obj_idx, Mask present) {
    std::vector<GraspPose> out;
    const int id = cs.id_of_index(obj_idx);
    for (const cspace::PoseCandidate& pc : cs.poses(obj_idx)) {
        if (!cs.pose_free(pc, present)) continue;
        out.push_back({id, pc.center, pc.approach_heading});
    }
    return out;
}

bool accessible_from_point(CSpace& cs, int obj_idx, Mask present, geom::Point2 from) {
    for (const cspace::PoseCandidate& pc : cs.poses(obj_idx)) {
        if (!cs.pose_free(pc, present)) continue;
        if (cs.find_path_from(from, pc.point, present).found) return true;
    }
    return false;
}

bool accessible_from_slot(CSpace& cs, int obj_idx, Mask present, int slot) {
    for (const cspace::PoseCandidate& pc : cs.poses(obj_idx)) {
        if (!cs.pose_free(pc, present)) continue;
        if (cs.connected(cs.slot_point(slot), pc.point, present)) return true;
    }
    return false;
}

namespace {

// Minimal subset of in-flight objects whose virtual removal makes the object
// reachable: subsets tried by increasing size, then lexicographic id order.
std::vector<int> minimal_unlock_set(CSpace& cs, int obj_idx, Mask present, Mask inflight) {
    std::vector<int> flight;
    for (int i = 0; i < cs.object_count(); ++i) {
        if (inflight & bit(i)) flight.push_back(i);
    }
    const int m = static_cast<int>(flight.size());
    for (int size = 1; size <= m; ++size) {
        // Enumerate size-subsets in lexicographic order over flight indices.
        std::vector<int> pick(size);
        for (int i = 0; i < size; ++i) pick[i] = i;
        while (true) {
            Mask removal = 0;
            for (int i : pick) removal |= bit(flight[i]);
            if (accessible_from_slot(cs, obj_idx, present & ~removal)) {
                std::vector<int> ids;
                for (int i : pick) ids.push_back(cs.id_of_index(flight[i]));
                return ids;
            }
            int pos = size - 1;
            while (pos >= 0 && pick[pos] == m - size + pos) --pos;
            if (pos < 0) break;
            ++pick[pos];
            for (int i = pos + 1; i < size; ++i) pick[i] = pick[i - 1] + 1;
        }
    }
    return {};
}

}  // namespace

std::vector<Availability> lookahead_availability(CSpace& cs, Mask present, Mask inflight,
                                                 Mask unassigned) {
    std::vector<Availability> out;
    for (int i = 0; i < cs.object_count(); ++i) {
        if (!(unassigned & bit(i))) continue;
        Availability a;
        a.object_id = cs.id_of_index(i);
        if (accessible_from_slot(cs, i, present)) {
            a.status = Reach::reachable_now;
        } else if ((inflight & present) != 0 &&
                   accessible_from_slot(cs, i, present & ~inflight)) {
            a.status = Reach::reachable_after;
            a.unlocked_by = minimal_unlock_set(cs, i, present, inflight & present);
        } else {
            a.status = Reach::unreachable;
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::pair<bool, std::vector<int>> peel_feasible(CSpace& cs) {
    Mask present = cs.all_present();
    std::vector<int> order;
    while (present != 0) {
        int found = -1;
        int best_id = 0;
        for (int i = 0; i < cs.object_count(); ++i) {
            if (!(present & bit(i))) continue;
            const int id = cs.id_of_index(i);
            if (found >= 0 && id >= best_id) continue;
            if (accessible_from_slot(cs, i, present)) {
                found = i;
                best_id = id;
            }
        }
        if (found < 0) return {false, order};
        order.push_back(cs.id_of_index(found));
        present &= ~bit(found);
    }
    return {true, order};
}

std::pair<bool, std::vector<int>> peel_feasible(const scene::Instance& inst) {
    if (inst.objects.empty()) return {true, {}};
    CSpace cs(inst);
    return peel_feasible(cs);
}

namespace {

Mask removed_mask_from_ids(const CSpace& cs, const std::vector<int>& removed_ids) {
    Mask m = 0;
    for (int id : removed_ids) m |= bit(cs.index_of_id(id));
    return m;
}

}  // namespace

std::vector<GraspPose> sample_grasps(const scene::Instance& inst, int object_id,
                                     const std::vector<int>& removed_ids) {
    CSpace cs(inst);
    const Mask present = cs.all_present() & ~removed_mask_from_ids(cs, removed_ids);
    return sample_grasps(cs, cs.index_of_id(object_id), present);
}

bool accessible(const scene::Instance& inst, int object_id, const std::vector<int>& removed_ids,
                geom::Point2 from) {
    CSpace cs(inst);
    const Mask present = cs.all_present() & ~removed_mask_from_ids(cs, removed_ids);
    return accessible_from_point(cs, cs.index_of_id(object_id), present, from);
}

bool has_dependency(const scene::Instance& inst) {
    CSpace cs(inst);
    const Mask all = cs.all_present();
    Mask wave = 0;
    for (int i = 0; i < cs.object_count(); ++i) {
        if (accessible_from_slot(cs, i, all)) wave |= bit(i);
    }
    if (wave == 0 || wave == all) return false;
    for (int i = 0; i < cs.object_count(); ++i) {
        if (wave & bit(i)) continue;
        if (accessible_from_slot(cs, i, all & ~wave)) return true;
    }
    return false;
}

}  // namespace clutter::access
