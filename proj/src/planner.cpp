#include "gsplan/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "gsplan/errors.hpp"
#include "gsplan/geometry.hpp"

namespace gsplan {

namespace {

constexpr std::array<const char*, kNumActions> kActionNames = {
    "translate_right", "translate_left", "translate_up",   "translate_down",
    "translate_forward", "translate_backward", "yaw_left", "yaw_right",
    "pitch_up", "pitch_down", "orbit_left", "orbit_right", "orbit_up", "orbit_down",
};

bool is_translation(Action a) { return static_cast<int>(a) < 6; }

std::string virtual_view_id(int trajectory, int step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "virtual_%02d_%03d", trajectory, step);
    return buf;
}

/// Expected depth along the optical axis, via a single-pixel render whose
/// pixel center coincides with the principal point.
double principal_depth(const GaussianCloud& cloud, const View& view, const RasterParams& params) {
    View probe = view;
    probe.width = 1;
    probe.height = 1;
    probe.cx = 0.5;
    probe.cy = 0.5;
    probe.image.reset();
    probe.image_path.reset();
    const RenderOutput out = render(cloud, probe, params);
    if (out.alpha.at(0, 0) <= 0.0f) return -1.0;
    const double d = out.depth.at(0, 0);
    return d > params.near_plane ? d : -1.0;
}

}  // namespace

const char* action_name(Action a) { return kActionNames[static_cast<int>(a)]; }

std::optional<Action> action_from_name(const std::string& name) {
    for (int i = 0; i < kNumActions; ++i)
        if (name == kActionNames[i]) return static_cast<Action>(i);
    return std::nullopt;
}

std::vector<PlannerState> select_seed_views(const std::vector<View>& training_views, int n,
                                            const GaussianCloud& cloud, const AABB& bbox,
                                            const Vec3& world_up, const RasterParams& params) {
    if (n < 1) throw PreconditionError("select_seed_views: n must be >= 1");
    if (training_views.empty())
        throw PreconditionError("select_seed_views: no training views");

    std::vector<Vec3> centers;
    centers.reserve(training_views.size());
    for (const View& v : training_views) centers.push_back(v.camera_center());

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& c : centers) centroid += c;
    centroid /= static_cast<double>(centers.size());

    const size_t count = std::min<size_t>(n, training_views.size());
    std::vector<size_t> chosen;
    std::vector<char> taken(centers.size(), 0);

    size_t first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < centers.size(); ++i) {
        const double d = (centers[i] - centroid).norm();
        if (d < best) {
            best = d;
            first = i;
        }
    }
    chosen.push_back(first);
    taken[first] = 1;

    // Farthest-point sampling; min-distance caches keep it O(n * views).
    std::vector<double> min_dist(centers.size());
    for (size_t i = 0; i < centers.size(); ++i) min_dist[i] = (centers[i] - centers[first]).norm();
    while (chosen.size() < count) {
        size_t pick = 0;
        double far = -1.0;
        for (size_t i = 0; i < centers.size(); ++i) {
            if (taken[i]) continue;
            if (min_dist[i] > far) {
                far = min_dist[i];
                pick = i;
            }
        }
        chosen.push_back(pick);
        taken[pick] = 1;
        for (size_t i = 0; i < centers.size(); ++i)
            min_dist[i] = std::min(min_dist[i], (centers[i] - centers[pick]).norm());
    }

    std::vector<PlannerState> seeds;
    seeds.reserve(chosen.size());
    for (size_t idx : chosen) {
        const View& src = training_views[idx];
        PlannerState st;
        st.view = src;
        st.view.kind = ViewKind::virtual_;
        st.view.image.reset();
        st.view.image_path.reset();
        // Canonical roll-free orientation about the original optical axis.
        const Vec3 center = src.camera_center();
        st.view.rotation = look_rotation(src.forward_axis(), world_up, src.right_axis());
        st.view.set_camera_center(center);

        double d = principal_depth(cloud, st.view, params);
        if (d <= 0) d = 0.25 * bbox.diagonal();
        st.look_at = center + d * st.view.forward_axis();
        seeds.push_back(std::move(st));
    }
    return seeds;
}

PlannerState apply_primitive(const PlannerState& state, const MotionPrimitive& primitive,
                             const Vec3& world_up) {
    PlannerState next = state;
    next.produced_by = primitive.action;
    next.step_index = state.step_index + 1;

    const View& v = state.view;
    const Vec3 center = v.camera_center();
    const Vec3 right = v.right_axis();
    const Vec3 up = v.up_axis();
    const Vec3 forward = v.forward_axis();
    const double s = primitive.step;

    auto translate = [&](const Vec3& delta, bool carry_look_at) {
        next.view.set_camera_center(center + delta);
        if (carry_look_at) next.look_at += delta;
    };
    auto rotate_in_place = [&](const Vec3& axis, double angle) {
        const Vec3 f2 = rotate_about_axis(forward, axis, angle).normalized();
        next.view.rotation = look_rotation(f2, world_up, right);
        next.view.set_camera_center(center);
        next.look_at = center + (state.look_at - center).norm() * f2;
    };
    auto orbit = [&](const Vec3& axis, double angle) {
        const Vec3 offset = center - state.look_at;
        if (offset.norm() < 1e-12)
            throw PreconditionError("apply_primitive: orbit with camera at look_at");
        const Vec3 c2 = state.look_at + rotate_about_axis(offset, axis, angle);
        const Vec3 f2 = (state.look_at - c2).normalized();
        next.view.rotation = look_rotation(f2, world_up, right);
        next.view.set_camera_center(c2);
    };

    switch (primitive.action) {
        case Action::translate_right: translate(s * right, false); break;
        case Action::translate_left: translate(-s * right, false); break;
        case Action::translate_up: translate(s * up, false); break;
        case Action::translate_down: translate(-s * up, false); break;
        case Action::translate_forward: translate(s * forward, true); break;
        case Action::translate_backward: translate(-s * forward, true); break;
        case Action::yaw_left: rotate_in_place(world_up, s); break;
        case Action::yaw_right: rotate_in_place(world_up, -s); break;
        case Action::pitch_up: rotate_in_place(right, s); break;
        case Action::pitch_down: rotate_in_place(right, -s); break;
        case Action::orbit_left: orbit(world_up, s); break;
        case Action::orbit_right: orbit(world_up, -s); break;
        case Action::orbit_up: orbit(right, -s); break;
        case Action::orbit_down: orbit(right, s); break;
    }
    return next;
}

std::vector<PlannerState> filter_candidates(const std::vector<PlannerState>& candidates,
                                            const AABB& bbox, const OccupancyGrid& grid,
                                            const GaussianCloud& cloud,
                                            const PlannerConfig& config) {
    const double min_clearance = config.proximity_radius * bbox.diagonal();
    std::vector<PlannerState> valid;
    for (const PlannerState& c : candidates) {
        const Vec3 center = c.view.camera_center();
        if (!bbox.contains(center)) continue;
        if (!is_free(grid, center)) continue;
        if (min_dist_to_matter(cloud, center) < min_clearance) continue;
        valid.push_back(c);
    }
    return valid;
}

void CandidateQueue::push(uint64_t gain, PlannerState state) {
    heap_.push(Entry{gain, next_seq_++, std::move(state)});
}

CandidateQueue::Entry CandidateQueue::pop() {
    if (heap_.empty()) throw PreconditionError("CandidateQueue::pop on empty queue");
    Entry e = heap_.top();
    heap_.pop();
    return e;
}

namespace {

struct ScoredCandidate {
    std::vector<uint32_t> visible;
    std::vector<int> bins;
    uint64_t gain = 0;
};

ScoredCandidate score_candidate(const CoverageMap& map, const PlannerScene& scene,
                                const View& view, double eps_vis) {
    ScoredCandidate sc;
    sc.visible = visible_set(*scene.cloud, view, eps_vis, scene.raster);
    sc.bins = direction_bins_for(*scene.cloud, sc.visible, view.camera_center(), scene.binning);
    sc.gain = info_gain_indexed(map, sc.visible, sc.bins);
    return sc;
}

}  // namespace

Trajectory grow_trajectory(const PlannerState& seed, CoverageMap& map, const PlannerScene& scene,
                           const PlannerConfig& config, CandidateQueue& queue,
                           const StepObserver& observer) {
    if (map.n_gaussians() != scene.cloud->count())
        throw PreconditionError("grow_trajectory: coverage map does not match the cloud");

    Trajectory traj;
    traj.id = seed.trajectory_id;
    traj.seed_view_id = seed.view.id;

    if (filter_candidates({seed}, scene.bbox, *scene.grid, *scene.cloud, config).empty()) {
        traj.diagnostic = "seed rejected by the constraint filter";
        return traj;
    }

    const double t_step = config.translation_step * scene.bbox.diagonal();
    PlannerState current = seed;

    for (int step = 0; step < config.length; ++step) {
        std::vector<PlannerState> candidates;
        candidates.reserve(kNumActions);
        for (int a = 0; a < kNumActions; ++a) {
            const Action act = static_cast<Action>(a);
            const MotionPrimitive prim{act, is_translation(act) ? t_step : config.rotation_step};
            if (act >= Action::orbit_left &&
                (current.view.camera_center() - current.look_at).norm() < 1e-12)
                continue;  // degenerate orbit cannot be expanded
            candidates.push_back(apply_primitive(current, prim, config.world_up));
        }
        std::vector<PlannerState> valid =
            filter_candidates(candidates, scene.bbox, *scene.grid, *scene.cloud, config);

        PlannerState accepted;
        ScoredCandidate accepted_score;
        MotionPrimitive accepted_prim{Action::translate_forward, 0.0};

        if (!valid.empty()) {
            std::vector<ScoredCandidate> scored(valid.size());
            std::vector<uint64_t> gains(valid.size());
            for (size_t i = 0; i < valid.size(); ++i) {
                scored[i] = score_candidate(map, scene, valid[i].view, config.eps_vis);
                gains[i] = scored[i].gain;
            }
            // Rank by gain; stable sort keeps enum order among ties.
            std::vector<size_t> order(valid.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](size_t a, size_t b) { return gains[a] > gains[b]; });
            const size_t best = order[0];

            if (observer) {
                StepRecord rec{traj.id, step, &valid, &gains, best, false};
                observer(rec, map);
            }
            for (size_t r = 1; r < order.size() && r < static_cast<size_t>(config.top_k); ++r)
                queue.push(gains[order[r]], valid[order[r]]);

            accepted = valid[best];
            accepted_score = std::move(scored[best]);
            accepted_prim = {accepted.produced_by,
                             is_translation(accepted.produced_by) ? t_step : config.rotation_step};
        } else {
            // Dead end: fall back to banked runner-ups, re-scoring lazily
            // because the shared map has moved on since they were stored.
            bool found = false;
            while (!queue.empty()) {
                CandidateQueue::Entry e = queue.pop();
                if (filter_candidates({e.state}, scene.bbox, *scene.grid, *scene.cloud, config)
                        .empty())
                    continue;
                ScoredCandidate fresh = score_candidate(map, scene, e.state.view, config.eps_vis);
                if (!queue.empty() && fresh.gain < queue.top_gain()) {
                    queue.push(fresh.gain, std::move(e.state));
                    continue;
                }
                accepted = std::move(e.state);
                accepted_score = std::move(fresh);
                accepted_prim = {accepted.produced_by,
                                 is_translation(accepted.produced_by) ? t_step
                                                                      : config.rotation_step};
                found = true;
                break;
            }
            if (!found) break;  // nowhere to go: the trajectory ends early

            if (observer) {
                std::vector<PlannerState> single{accepted};
                std::vector<uint64_t> gains{accepted_score.gain};
                StepRecord rec{traj.id, step, &single, &gains, 0, true};
                observer(rec, map);
            }
        }

        const uint64_t realized =
            apply_view_indexed(map, accepted_score.visible, accepted_score.bins);
        accepted.trajectory_id = traj.id;
        accepted.step_index = step;
        accepted.view.id = virtual_view_id(traj.id, step);
        traj.views.push_back(accepted.view);
        traj.actions.push_back(accepted_prim);
        traj.realized_gains.push_back(realized);
        current = std::move(accepted);
    }
    return traj;
}

PlanResult plan(const GaussianCloud& cloud, const std::vector<View>& training_views,
                const PlannerConfig& config, const OccupancyParams& occ,
                const BboxParams& bbox_params, const RasterParams& raster,
                const StepObserver& observer) {
    if (config.n_trajectories < 1 || config.length < 1 || config.top_k < 1)
        throw PreconditionError("plan: n_trajectories, length and top_k must all be >= 1");
    if (training_views.empty()) throw PreconditionError("plan: no training views");

    PlanResult result;
    result.bbox = compute_scene_bbox(cloud, training_views, bbox_params.lo_pct,
                                     bbox_params.hi_pct, bbox_params.margin);

    const std::vector<double> visibility =
        estimate_gaussian_visibility(cloud, training_views, raster);
    result.grid =
        build_occupancy_grid(cloud, visibility, result.bbox, occ.resolution, occ.tau);

    const DirectionBinning binning;
    result.map = init_coverage(cloud, training_views, binning, config.eps_vis, raster);
    result.popcount_initial = result.map.popcount();

    std::vector<PlannerState> seeds = select_seed_views(
        training_views, config.n_trajectories, cloud, result.bbox, config.world_up, raster);

    PlannerScene scene;
    scene.cloud = &cloud;
    scene.training_views = &training_views;
    scene.bbox = result.bbox;
    scene.grid = &result.grid;
    scene.binning = binning;
    scene.raster = raster;

    CandidateQueue queue;
    bool any_valid_seed = false;
    for (int t = 0; t < config.n_trajectories; ++t) {
        PlannerState seed = seeds[t % seeds.size()];
        seed.trajectory_id = t;
        Trajectory traj = grow_trajectory(seed, result.map, scene, config, queue, observer);
        if (traj.diagnostic.empty()) any_valid_seed = true;
        result.trajectories.push_back(std::move(traj));
    }
    if (!any_valid_seed) throw PipelineError("plan: no seed state passed the constraint filter");
    return result;
}

}  // namespace gsplan
