#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clutter/geometry.hpp"

namespace clutter::scene {

struct SceneObject {
    int id = 0;
    geom::OrientedRect rect;
};

// Immutable world description. The exit sits on the south boundary (y = 0).
struct Instance {
    double side = 10.0;
    geom::Point2 exit_center{5.0, 0.0};
    double exit_width = 1.8;
    double robot_radius = 0.3;
    int robot_count = 2;
    double v_max = 1.0;
    double t_pick = 5.0;
    double t_unload = 5.0;
    uint64_t seed = 0;
    std::vector<SceneObject> objects;

    int object_count() const { return static_cast<int>(objects.size()); }
    const SceneObject& object_by_id(int id) const;

    // Exclusive unloading positions, evenly spaced along the exit segment.
    static int slot_count(double exit_width, double robot_radius);
    std::vector<geom::Point2> dropoff_slots() const;
};

enum class GenMode { cluttered, scattered };

std::string to_string(GenMode mode);
GenMode gen_mode_from_string(const std::string& s);

struct GenParams {
    GenMode mode = GenMode::scattered;
    int n = 10;
    double min_clearance = 0.05;
    double object_size_min = 0.4;  // full extent per axis
    double object_size_max = 0.8;
    double clutter_radius_fraction = 0.25;
};

struct FleetParams {
    double side = 10.0;
    double exit_width = 1.8;
    double robot_radius = 0.3;
    int robot_count = 2;
    double v_max = 1.0;
    double t_pick = 5.0;
    double t_unload = 5.0;
};

// Rejection-sampling generator; deterministic per seed. Throws
// GenerationBudgetExceeded after 1e5 rejected placements.
Instance generate(const GenParams& params, const FleetParams& fleet, uint64_t seed);

struct ValidationReport {
    struct Violation {
        std::string kind;
        std::string detail;
        std::vector<int> object_ids;
    };
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

// Reports every violated invariant; never throws. The peel-feasibility check
// runs only when the basic geometric checks pass (and can be skipped).
ValidationReport validate(const Instance& inst, bool run_peel_check = true);

std::string serialize(const Instance& inst);
Instance deserialize(const std::string& text);

void save(const Instance& inst, const std::string& path);
Instance load(const std::string& path);

}  // namespace clutter::scene
