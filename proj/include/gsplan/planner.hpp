#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "gsplan/coverage.hpp"
#include "gsplan/occupancy.hpp"
#include "gsplan/rasterizer.hpp"
#include "gsplan/scene.hpp"

namespace gsplan {

/// The 14 camera actions. Enumeration order is the documented tie-break
/// order for equal information gains.
enum class Action : int {
    translate_right = 0,
    translate_left,
    translate_up,
    translate_down,
    translate_forward,
    translate_backward,
    yaw_left,
    yaw_right,
    pitch_up,
    pitch_down,
    orbit_left,
    orbit_right,
    orbit_up,
    orbit_down,
};

constexpr int kNumActions = 14;

const char* action_name(Action a);
std::optional<Action> action_from_name(const std::string& name);

struct MotionPrimitive {
    Action action;
    double step;  // translation length (world units) or angle (radians)
};

struct PlannerState {
    View view;          // kind = virtual_
    Vec3 look_at = Vec3::Zero();
    int trajectory_id = 0;
    int step_index = 0;
    Action produced_by = Action::translate_forward;  // action that created this state
};

struct Trajectory {
    int id = 0;
    std::string seed_view_id;
    std::vector<View> views;
    std::vector<MotionPrimitive> actions;
    std::vector<uint64_t> realized_gains;
    std::string diagnostic;  // non-empty when the seed failed validation
};

struct PlannerConfig {
    int n_trajectories = 20;
    int length = 16;
    int top_k = 3;
    double translation_step = 0.025;   // fraction of bbox diagonal
    double rotation_step = 15.0 * M_PI / 180.0;
    double eps_vis = 0.05;
    double proximity_radius = 0.01;    // fraction of bbox diagonal
    uint64_t rng_seed = 0;
    Vec3 world_up = Vec3(0, 0, 1);
};

/// Everything the search consults. Grid and map lifetimes are the caller's.
struct PlannerScene {
    const GaussianCloud* cloud = nullptr;
    const std::vector<View>* training_views = nullptr;
    AABB bbox;
    const OccupancyGrid* grid = nullptr;
    DirectionBinning binning;
    RasterParams raster;
};

/// Farthest-point sampling over camera centers; the first seed is the view
/// nearest the centroid, ties by index. Returns min(n, #views) states with
/// canonical roll-free orientation and look_at from the rendered expected
/// depth at the principal pixel (fallback: quarter-diagonal ahead).
std::vector<PlannerState> select_seed_views(const std::vector<View>& training_views, int n,
                                            const GaussianCloud& cloud, const AABB& bbox,
                                            const Vec3& world_up,
                                            const RasterParams& params = {});

/// One action applied to a state. Translations slide the center along the
/// camera axes (forward/backward carry look_at along); yaw spins the optical
/// axis about world-up through the center, pitch about the camera's right
/// axis, both re-deriving look_at at its previous distance; orbits move the
/// center on the sphere around look_at and re-aim at it.
PlannerState apply_primitive(const PlannerState& state, const MotionPrimitive& primitive,
                             const Vec3& world_up);

/// Keeps states whose camera center is inside the box, in free space, and at
/// least proximity_radius * diagonal away from solid matter.
std::vector<PlannerState> filter_candidates(const std::vector<PlannerState>& candidates,
                                            const AABB& bbox, const OccupancyGrid& grid,
                                            const GaussianCloud& cloud,
                                            const PlannerConfig& config);

/// Runner-up candidates banked for dead-end recovery. Ordered by stored gain
/// (stale upper bound), then FIFO. Shared across trajectories.
class CandidateQueue {
public:
    struct Entry {
        uint64_t gain;
        uint64_t seq;
        PlannerState state;
    };

    bool empty() const { return heap_.empty(); }
    size_t size() const { return heap_.size(); }
    uint64_t top_gain() const { return heap_.top().gain; }
    void push(uint64_t gain, PlannerState state);
    Entry pop();

private:
    struct Order {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.gain != b.gain) return a.gain < b.gain;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, Order> heap_;
    uint64_t next_seq_ = 0;
};

/// Invoked once per accepted step, before the map mutation, with every valid
/// candidate and its gain. chosen_index addresses `candidates`.
struct StepRecord {
    int trajectory_id;
    int step_index;
    const std::vector<PlannerState>* candidates;
    const std::vector<uint64_t>* gains;
    size_t chosen_index;
    bool from_queue;
};
using StepObserver = std::function<void(const StepRecord&, const CoverageMap&)>;

/// Greedy best-first growth of one trajectory against the shared map.
Trajectory grow_trajectory(const PlannerState& seed, CoverageMap& map, const PlannerScene& scene,
                           const PlannerConfig& config, CandidateQueue& queue,
                           const StepObserver& observer = nullptr);

struct PlanResult {
    AABB bbox;
    OccupancyGrid grid;
    CoverageMap map;            // final state
    uint64_t popcount_initial = 0;
    std::vector<Trajectory> trajectories;
};

struct BboxParams {
    double lo_pct = 0.01;
    double hi_pct = 0.99;
    double margin = 0.05;
};

struct OccupancyParams {
    int resolution = 64;
    double tau = 0.5;
};

/// Full planning pass: bbox, occupancy, coverage init, then n_trajectories
/// grown sequentially in seed order against one shared map and queue.
/// Deterministic for a fixed config.
PlanResult plan(const GaussianCloud& cloud, const std::vector<View>& training_views,
                const PlannerConfig& config, const OccupancyParams& occ = {},
                const BboxParams& bbox_params = {}, const RasterParams& raster = {},
                const StepObserver& observer = nullptr);

}  // namespace gsplan
