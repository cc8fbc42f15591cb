#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>

#include "clutter/access.hpp"
#include "clutter/rng.hpp"
#include "clutter/scene.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace clutter;
using access::Reach;
using cspace::CSpace;
using cspace::Mask;
using cspace::bit;
using geom::Point2;
using scene::Instance;

namespace {

Instance base_instance() {
    Instance inst;
    inst.exit_width = 1.32;
    return inst;
}

void add_object(Instance& inst, int id, double cx, double cy, double hx, double hy,
                double heading = 0.0) {
    scene::SceneObject o;
    o.id = id;
    o.rect.center = {cx, cy};
    o.rect.half_x = hx;
    o.rect.half_y = hy;
    o.rect.heading = heading;
    inst.objects.push_back(o);
}

Instance generated(scene::GenMode mode, int n, uint64_t seed, double clutter_frac = 0.25) {
    scene::GenParams gp;
    gp.mode = mode;
    gp.n = n;
    gp.clutter_radius_fraction = clutter_frac;
    scene::FleetParams fleet;
    fleet.exit_width = 1.32;
    return scene::generate(gp, fleet, seed);
}

}  // namespace

TEST_CASE("sample_grasps: isolated object exposes all edge poses") {
    Instance inst = base_instance();
    add_object(inst, 0, 5.0, 5.0, 0.3, 0.2, 0.4);
    const auto poses = access::sample_grasps(inst, 0, {});
    CHECK(poses.size() == 4 * 3);
    // Every pose stands off by robot_radius + grasp_offset from the boundary.
    for (const auto& g : poses) {
        CHECK(geom::point_rect_distance(g.robot_center, inst.objects[0].rect) ==
              doctest::Approx(0.35).epsilon(1e-9));
    }
}

TEST_CASE("sample_grasps: neighbors closer than the robot disc block their side") {
    Instance inst = base_instance();
    // Target at center; three slabs hug the west, east and north edges with
    // gaps under one robot diameter. Only the south edge stays open.
    add_object(inst, 0, 5.0, 5.0, 0.3, 0.3, 0.0);
    add_object(inst, 1, 5.0, 5.9, 0.6, 0.25, 0.0);  // north, gap 0.35
    add_object(inst, 2, 4.1, 5.0, 0.25, 0.6, 0.0);  // west, gap 0.35
    add_object(inst, 3, 5.9, 5.0, 0.25, 0.6, 0.0);  // east, gap 0.35
    const auto poses = access::sample_grasps(inst, 0, {});
    REQUIRE_FALSE(poses.empty());
    // Oracle: re-derive validity per candidate with a plain disc-overlap check.
    CSpace cs(inst);
    int free_count = 0;
    for (const auto& pc : cs.poses(0)) {
        bool ok = !pc.wall_blocked;
        for (int j = 1; j <= 3 && ok; ++j) {
            ok = geom::point_rect_distance(pc.center, inst.objects[j].rect) >=
                 inst.robot_radius;
        }
        if (ok) ++free_count;
    }
    CHECK(static_cast<int>(poses.size()) == free_count);
    // Every surviving pose approaches from the south.
    for (const auto& g : poses) CHECK(g.robot_center.y < 5.0);
}

TEST_CASE("sample_grasps: fully ringed object yields no poses") {
    Instance inst = base_instance();
    add_object(inst, 0, 5.0, 5.0, 0.3, 0.3, 0.0);
    add_object(inst, 1, 5.0, 5.75, 0.9, 0.2, 0.0);
    add_object(inst, 2, 5.0, 4.25, 0.9, 0.2, 0.0);
    add_object(inst, 3, 4.25, 5.0, 0.2, 0.9, 0.0);
    add_object(inst, 4, 5.75, 5.0, 0.2, 0.9, 0.0);
    CHECK(access::sample_grasps(inst, 0, {}).empty());
    // Removing the ring opens it up again.
    CHECK(access::sample_grasps(inst, 0, {1, 2, 3, 4}).size() == 12);
}

TEST_CASE("accessible: open workspace object is reachable from the exit") {
    Instance inst = base_instance();
    add_object(inst, 0, 5.0, 5.0, 0.3, 0.2, 0.0);
    CHECK(access::accessible(inst, 0, {}, {5.0, 0.0}));
}

TEST_CASE("accessible: wall of objects spanning the workspace blocks the far side") {
    Instance inst = base_instance();
    add_object(inst, 0, 5.0, 8.0, 0.3, 0.3, 0.0);  // behind the wall
    // Wall of slabs across the full width at y = 5 with sub-diameter gaps.
    const double hw = 0.58;
    for (int i = 0; i < 8; ++i) {
        add_object(inst, 1 + i, 0.65 + i * 1.25, 5.0, hw, 0.2, 0.0);
    }
    CHECK_FALSE(access::accessible(inst, 0, {}, {5.0, 0.0}));
    // Removing one wall piece opens a corridor.
    CHECK(access::accessible(inst, 0, {4}, {5.0, 0.0}));
}

TEST_CASE("accessible: agrees with a grid flood-fill oracle on random scenes") {
    int checked = 0;
    for (uint64_t s = 0; s < 12; ++s) {
        const Instance inst = generated(scene::GenMode::cluttered, 8, 4000 + s, 0.16);
        CSpace cs(inst);
        const Mask all = cs.all_present();
        for (int o = 0; o < inst.object_count(); ++o) {
            const bool lib = access::accessible_from_slot(cs, o, all);
            // Oracle occupancy: inflated objects + walls on a fine grid; the
            // target's own footprint is removed and the goal is any valid
            // grasp pose cell.
            std::vector<geom::InflatedObstacle> obstacles;
            for (int j = 0; j < inst.object_count(); ++j) {
                if (j != o) obstacles.push_back(cs.objects()[j]);
            }
            for (const auto& w : cs.walls()) obstacles.push_back(w);
            bool oracle = false;
            for (const auto& pc : cs.poses(o)) {
                if (!cs.pose_free(pc, all)) continue;
                if (oracles::grid_connected(obstacles, cs.slots()[0], pc.center, {-0.5, -0.5},
                                            {10.5, 10.5}, 0.02)) {
                    oracle = true;
                    break;
                }
            }
            if (lib) {
                // Conservative geometry: a positive answer implies real connectivity.
                CHECK(oracle);
                ++checked;
            } else if (oracle) {
                // The oracle found a corridor the conservative polygons close.
                // That is only legitimate for near-tangent gaps; re-verify by
                // shrinking the oracle's clearance margin.
                std::vector<geom::InflatedObstacle> tight;
                for (int j = 0; j < inst.object_count(); ++j) {
                    if (j != o) {
                        tight.push_back(geom::inflate(inst.objects[j].rect,
                                                      inst.robot_radius + 0.02, 4));
                    }
                }
                for (const auto& w : cs.walls()) tight.push_back(w);
                bool still_open = false;
                for (const auto& pc : cs.poses(o)) {
                    if (!cs.pose_free(pc, all)) continue;
                    if (oracles::grid_connected(tight, cs.slots()[0], pc.center, {-0.5, -0.5},
                                                {10.5, 10.5}, 0.02)) {
                        still_open = true;
                        break;
                    }
                }
                CHECK_FALSE(still_open);
                ++checked;
            }
        }
    }
    CHECK(checked >= 50);
}

TEST_CASE("accessible: monotone under extra removals") {
    for (uint64_t s = 0; s < 40; ++s) {
        const Instance inst = generated(scene::GenMode::cluttered, 7, 6000 + s, 0.16);
        CSpace cs(inst);
        const Mask all = cs.all_present();
        for (int trial = 0; trial < 25; ++trial) {
            const int o = static_cast<int>(rng::draw_u64(s, trial, 0) % inst.object_count());
            Mask removed = rng::draw_u64(s, trial, 1) & all & ~bit(o);
            if (!access::accessible_from_slot(cs, o, all & ~removed)) continue;
            Mask more = removed | (rng::draw_u64(s, trial, 2) & all & ~bit(o));
            CHECK(access::accessible_from_slot(cs, o, all & ~more));
        }
    }
}

TEST_CASE("lookahead: no in-flight assignments reduces to plain accessibility") {
    const Instance inst = generated(scene::GenMode::cluttered, 8, 11, 0.16);
    CSpace cs(inst);
    const Mask all = cs.all_present();
    const auto avail = access::lookahead_availability(cs, all, 0, all);
    REQUIRE(avail.size() == 8);
    for (const auto& a : avail) {
        const int idx = cs.index_of_id(a.object_id);
        const bool now = access::accessible_from_slot(cs, idx, all);
        CHECK((a.status == Reach::reachable_now) == now);
        CHECK(a.status != Reach::reachable_after);
    }
}

TEST_CASE("lookahead: object blocked only by an in-flight pick becomes reachable_after") {
    // Two-object scene shaped like the motivating two-robot example: the
    // front object o0 hides o1 from the exit side.
    Instance inst = base_instance();
    add_object(inst, 0, 5.0, 3.0, 1.1, 0.25, 0.0);   // front slab near the exit
    add_object(inst, 1, 5.0, 3.75, 0.85, 0.2, 0.0);  // tucked right behind it
    add_object(inst, 5, 4.05, 3.75, 0.1, 0.2, 0.0);  // side filler west
    add_object(inst, 6, 5.95, 3.75, 0.1, 0.2, 0.0);  // side filler east
    add_object(inst, 7, 5.0, 4.4, 1.1, 0.2, 0.0);    // back slab
    CSpace cs(inst);
    const Mask all = cs.all_present();
    const int o1 = cs.index_of_id(1);
    REQUIRE(access::accessible_from_slot(cs, cs.index_of_id(0), all));
    REQUIRE_FALSE(access::accessible_from_slot(cs, o1, all));

    // o0 assigned to a robot: o1 unlocks through the virtual removal.
    const Mask inflight = bit(cs.index_of_id(0));
    const auto avail = access::lookahead_availability(cs, all, inflight, all & ~inflight);
    bool found = false;
    for (const auto& a : avail) {
        if (a.object_id == 1) {
            found = true;
            CHECK(a.status == Reach::reachable_after);
            CHECK(a.unlocked_by == std::vector<int>{0});
        }
    }
    CHECK(found);
}

TEST_CASE("lookahead: chains through unassigned blockers stay unreachable") {
    // o0 assigned; o1 blocked by o0; o2 blocked by o1; o1 unassigned.
    Instance inst = base_instance();
    add_object(inst, 0, 5.0, 2.6, 1.3, 0.25, 0.0);
    add_object(inst, 1, 5.0, 3.35, 1.3, 0.2, 0.0);
    add_object(inst, 2, 5.0, 4.05, 1.3, 0.2, 0.0);
    add_object(inst, 3, 5.0, 4.75, 1.3, 0.2, 0.0);  // cap behind
    add_object(inst, 5, 3.45, 3.7, 0.15, 1.3, 0.0);  // west filler
    add_object(inst, 6, 6.55, 3.7, 0.15, 1.3, 0.0);  // east filler
    CSpace cs(inst);
    const Mask all = cs.all_present();
    REQUIRE(access::accessible_from_slot(cs, cs.index_of_id(0), all));
    REQUIRE_FALSE(access::accessible_from_slot(cs, cs.index_of_id(1), all));
    REQUIRE_FALSE(access::accessible_from_slot(cs, cs.index_of_id(2), all));

    const Mask inflight = bit(cs.index_of_id(0));
    const auto avail = access::lookahead_availability(cs, all, inflight, all & ~inflight);
    Reach r1 = Reach::unreachable, r2 = Reach::unreachable;
    for (const auto& a : avail) {
        if (a.object_id == 1) r1 = a.status;
        if (a.object_id == 2) r2 = a.status;
    }
    CHECK(r1 == Reach::reachable_after);
    CHECK(r2 == Reach::unreachable);

    // Oracle: exhaustive removal-order enumeration. o2 is reachable only
    // after both o0 and o1 are gone.
    CHECK(access::accessible_from_slot(
        cs, cs.index_of_id(2), all & ~(bit(cs.index_of_id(0)) | bit(cs.index_of_id(1)))));
}

TEST_CASE("lookahead: reachable_after objects open up once blockers are deleted") {
    for (uint64_t s = 0; s < 20; ++s) {
        const Instance inst = generated(scene::GenMode::cluttered, 9, 8000 + s, 0.15);
        CSpace cs(inst);
        const Mask all = cs.all_present();
        // Pretend the initially reachable wave is in flight.
        Mask wave = 0;
        for (int i = 0; i < inst.object_count(); ++i) {
            if (access::accessible_from_slot(cs, i, all)) wave |= bit(i);
        }
        if (wave == 0 || wave == all) continue;
        const auto avail = access::lookahead_availability(cs, all, wave, all & ~wave);
        for (const auto& a : avail) {
            if (a.status != Reach::reachable_after) continue;
            Mask removed = 0;
            for (int id : a.unlocked_by) removed |= bit(cs.index_of_id(id));
            CHECK(access::accessible_from_slot(cs, cs.index_of_id(a.object_id),
                                               all & ~removed));
            // Minimality: dropping any single unlock blocker re-blocks it.
            for (int id : a.unlocked_by) {
                const Mask partial = removed & ~bit(cs.index_of_id(id));
                CHECK_FALSE(access::accessible_from_slot(cs, cs.index_of_id(a.object_id),
                                                         all & ~partial));
            }
        }
    }
}

TEST_CASE("peel_feasible: single object and generated instances") {
    Instance inst = base_instance();
    add_object(inst, 0, 5.0, 5.0, 0.3, 0.3, 0.0);
    const auto [ok, order] = access::peel_feasible(inst);
    CHECK(ok);
    CHECK(order == std::vector<int>{0});
    for (uint64_t s = 0; s < 10; ++s) {
        CHECK(access::peel_feasible(generated(scene::GenMode::cluttered, 10, 900 + s)).first);
    }
}

TEST_CASE("peel_feasible: robust to randomized peel orders") {
    for (uint64_t s = 0; s < 5; ++s) {
        const Instance inst = generated(scene::GenMode::cluttered, 8, 950 + s, 0.15);
        REQUIRE(access::peel_feasible(inst).first);
        CSpace cs(inst);
        const Mask all = cs.all_present();
        for (int trial = 0; trial < 50; ++trial) {
            Mask present = all;
            bool done = true;
            while (present) {
                std::vector<int> candidates;
                for (int i = 0; i < inst.object_count(); ++i) {
                    if ((present & bit(i)) && access::accessible_from_slot(cs, i, present)) {
                        candidates.push_back(i);
                    }
                }
                if (candidates.empty()) {
                    done = false;
                    break;
                }
                const int pick = candidates[rng::draw_u64(s, trial, present) %
                                            candidates.size()];
                present &= ~bit(pick);
            }
            CHECK(done);
        }
    }
}
