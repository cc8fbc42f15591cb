#pragma once

#include <cstdint>
#include <mutex>
#include <vector>

#include "clutter/geometry.hpp"
#include "clutter/scene.hpp"

namespace clutter::cspace {

// Bit i = object with index i (instance order). Bit 63 is reserved for walls.
using Mask = uint64_t;
constexpr Mask kWallBit = 1ull << 63;

inline Mask bit(int i) { return 1ull << i; }

struct PoseCandidate {
    geom::Point2 center;
    double approach_heading = 0.0;  // pointing at the object
    Mask blocked_by = 0;            // objects whose true footprint the robot disc overlaps
    bool wall_blocked = false;
    int point = -1;  // index into the shared point table
};

// Configuration-space model of one instance: inflated obstacle polygons,
// walls, drop-off slots, grasp pose candidates, and a lazily filled table of
// which obstacles block the segment between any two fixed points. Everything
// downstream (reachability, trip planning, the simulator) queries this.
class CSpace {
public:
    explicit CSpace(const scene::Instance& inst, int corner_segments = 4,
                    int samples_per_edge = 3, double grasp_offset = 0.05);

    CSpace(const CSpace&) = delete;
    CSpace& operator=(const CSpace&) = delete;

    const scene::Instance& instance() const { return inst_; }
    int object_count() const { return n_; }
    Mask all_present() const { return n_ == 0 ? 0 : ((n_ == 63 ? ~0ull : (1ull << n_)) - 1); }
    int index_of_id(int id) const;
    int id_of_index(int idx) const { return inst_.objects[idx].id; }

    const std::vector<geom::InflatedObstacle>& objects() const { return objects_; }
    const std::vector<geom::InflatedObstacle>& walls() const { return walls_; }
    const std::vector<geom::Point2>& slots() const { return slots_; }
    int slot_point(int slot) const { return slot_points_[slot]; }
    const std::vector<PoseCandidate>& poses(int obj_idx) const { return poses_[obj_idx]; }

    double grasp_standoff() const { return standoff_; }
    double grasp_offset() const { return grasp_offset_; }
    // Largest |slot - exit_center| over the drop-off slots.
    double slot_spread() const { return slot_spread_; }

    int point_count() const { return static_cast<int>(points_.size()); }
    geom::Point2 point(int idx) const { return points_[idx]; }

    bool pose_free(const PoseCandidate& pc, Mask present) const {
        return !pc.wall_blocked && (pc.blocked_by & present) == 0;
    }

    // Mask of objects (plus kWallBit) whose interior the open segment between
    // two table points crosses. Cached after first computation.
    Mask pair_blockers(int a, int b);

    // Uncached variant for arbitrary segments (trip waypoints, sim probes).
    Mask segment_blockers(geom::Point2 a, geom::Point2 b) const;

    // Strict interior containment against present objects or any wall.
    bool point_blocked(geom::Point2 p, Mask present) const;

    struct PathQuery {
        std::vector<int> point_path;  // table point indices, from -> to
        double length = 0.0;
        bool found = false;
    };

    // Shortest path between table points among present obstacles + walls.
    // Interior bends only at obstacle/wall corner points.
    PathQuery find_path(int from_pt, int to_pt, Mask present);
    // Same, from an arbitrary free start position.
    PathQuery find_path_from(geom::Point2 from, int to_pt, Mask present);

    bool connected(int from_pt, int to_pt, Mask present);

    std::vector<geom::Point2> to_points(const std::vector<int>& point_path) const;

private:
    Mask compute_pair(int a, int b) const;
    PathQuery run_search(int source_pt, const geom::Point2* free_source, int to_pt, Mask present);

    const scene::Instance& inst_;
    int n_ = 0;
    double standoff_ = 0.0;
    double grasp_offset_ = 0.0;
    double slot_spread_ = 0.0;
    std::vector<geom::InflatedObstacle> objects_;
    std::vector<geom::InflatedObstacle> walls_;
    std::vector<geom::Point2> slots_;
    std::vector<int> slot_points_;
    std::vector<std::vector<PoseCandidate>> poses_;

    std::vector<geom::Point2> points_;
    int corner_count_ = 0;  // points [0, corner_count_) may appear as path bends

    mutable std::vector<Mask> pair_cache_;  // triangular, ~0ull = not yet computed
    mutable std::mutex cache_mutex_;
};

}  // namespace clutter::cspace
