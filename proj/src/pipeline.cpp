#include "gsplan/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <unordered_map>

#include <json.hpp>

#include "gsplan/cameras_io.hpp"
#include "gsplan/confidence.hpp"
#include "gsplan/errors.hpp"
#include "gsplan/image_io.hpp"
#include "gsplan/ply_io.hpp"

namespace gsplan {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kFinetuneIterations = 15000;
constexpr int kDensifyUntil = 9000;

ordered_json parse_json_file(const std::string& path, const char* what) {
    std::ifstream is(path);
    if (!is) throw IoError(std::string("cannot open ") + what + ": " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
    return j;
}

void write_json_file(const ordered_json& j, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
    if (!os) throw IoError("write failed: " + path);
}

ordered_json view_to_json(const View& v) {
    ordered_json j;
    ordered_json rot = ordered_json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(v.rotation(r, c));
    ordered_json trans = ordered_json::array();
    for (int r = 0; r < 3; ++r) trans.push_back(v.translation[r]);
    j["rotation"] = std::move(rot);
    j["translation"] = std::move(trans);
    j["fx"] = v.fx;
    j["fy"] = v.fy;
    j["cx"] = v.cx;
    j["cy"] = v.cy;
    j["width"] = v.width;
    j["height"] = v.height;
    return j;
}

View view_from_json(const ordered_json& j, const std::string& id) {
    View v;
    v.id = id;
    v.kind = ViewKind::virtual_;
    const auto& rot = j.at("rotation");
    const auto& trans = j.at("translation");
    if (rot.size() != 9 || trans.size() != 3)
        throw FormatError("trajectories: pose must hold 9+3 floats (view " + id + ")");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) v.rotation(r, c) = rot[static_cast<size_t>(3 * r + c)];
    for (int r = 0; r < 3; ++r) v.translation[r] = trans[static_cast<size_t>(r)];
    v.fx = j.at("fx");
    v.fy = j.at("fy");
    v.cx = j.at("cx");
    v.cy = j.at("cy");
    v.width = j.at("width");
    v.height = j.at("height");
    v.validate();
    return v;
}

std::string trajectories_path(const PipelineConfig& c) { return c.out_dir + "/trajectories.json"; }
std::string grid_path(const PipelineConfig& c) { return c.out_dir + "/occupancy.grid"; }
std::string stats_path(const PipelineConfig& c) { return c.out_dir + "/stats.json"; }
std::string renders_dir(const PipelineConfig& c) { return c.out_dir + "/renders"; }
std::string enhanced_dir(const PipelineConfig& c) { return c.out_dir + "/enhanced"; }
std::string confidence_dir(const PipelineConfig& c) { return c.out_dir + "/confidence"; }
std::string manifest_path(const PipelineConfig& c) { return c.out_dir + "/finetune_manifest.json"; }

std::string virtual_id(int trajectory, int step) {
    return "virtual_" + frame_tag(trajectory, step);
}

struct StoredTrajectory {
    int id = 0;
    std::string seed_view_id;
    std::vector<View> views;
    std::vector<std::string> actions;
    std::vector<uint64_t> realized_gains;
};

std::vector<StoredTrajectory> load_trajectories(const PipelineConfig& config) {
    const ordered_json doc = parse_json_file(trajectories_path(config), "trajectories");
    if (!doc.is_array()) throw FormatError("trajectories: top-level document must be an array");
    std::vector<StoredTrajectory> out;
    for (const auto& jt : doc) {
        StoredTrajectory t;
        t.id = jt.at("id");
        t.seed_view_id = jt.at("seed_view_id");
        int step = 0;
        for (const auto& jv : jt.at("views")) {
            t.views.push_back(view_from_json(jv, virtual_id(t.id, step)));
            t.actions.push_back(jv.at("action"));
            t.realized_gains.push_back(jv.at("realized_gain"));
            ++step;
        }
        out.push_back(std::move(t));
    }
    return out;
}

/// Frame view after the optional render-resolution override; intrinsics
/// scale with the resolution.
View frame_view(const View& v, const PipelineConfig& config) {
    if (!config.render_width && !config.render_height) return v;
    if (!config.render_width || !config.render_height)
        throw PipelineError("render resolution override requires both width and height");
    View s = v;
    const double sx = static_cast<double>(*config.render_width) / v.width;
    const double sy = static_cast<double>(*config.render_height) / v.height;
    s.width = *config.render_width;
    s.height = *config.render_height;
    s.fx *= sx;
    s.cx *= sx;
    s.fy *= sy;
    s.cy *= sy;
    s.validate();
    return s;
}

std::string png_path(const PipelineConfig& c, int t, int s) {
    return renders_dir(c) + "/frame_" + frame_tag(t, s) + ".png";
}
std::string pfm_path(const PipelineConfig& c, int t, int s) {
    return renders_dir(c) + "/frame_" + frame_tag(t, s) + ".pfm";
}
std::string enhanced_png_path(const PipelineConfig& c, int t, int s) {
    return enhanced_dir(c) + "/frame_" + frame_tag(t, s) + ".png";
}
std::string enhanced_pfm_path(const PipelineConfig& c, int t, int s) {
    return enhanced_dir(c) + "/frame_" + frame_tag(t, s) + ".pfm";
}
std::string upixel_path(const PipelineConfig& c, int t, int s) {
    return confidence_dir(c) + "/upixel_" + frame_tag(t, s) + ".pfm";
}

void copy_overwrite(const std::string& from, const std::string& to) {
    std::error_code ec;
    fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
    if (ec) throw IoError("copy failed: " + from + " -> " + to + " (" + ec.message() + ")");
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
    size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

ordered_json hyperparameter_echo(const PipelineConfig& config) {
    ordered_json j;
    j["iterations"] = kFinetuneIterations;
    j["densify_until"] = kDensifyUntil;
    j["n_trajectories"] = config.planner.n_trajectories;
    j["trajectory_length"] = config.planner.length;
    j["top_k"] = config.planner.top_k;
    j["occupancy_resolution"] = config.occupancy.resolution;
    j["occupancy_tau"] = config.occupancy.tau;
    const DirectionBinning binning;
    j["n_directions"] = binning.n_directions();
    j["eps_vis"] = config.planner.eps_vis;
    j["proximity_radius"] = config.planner.proximity_radius;
    j["translation_step"] = config.planner.translation_step;
    j["rotation_step"] = config.planner.rotation_step;
    j["rng_seed"] = config.planner.rng_seed;
    ordered_json prims = ordered_json::array();
    for (int a = 0; a < kNumActions; ++a) prims.push_back(action_name(static_cast<Action>(a)));
    j["primitives"] = std::move(prims);
    return j;
}

}  // namespace

std::string frame_tag(int trajectory, int step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%02d_%03d", trajectory, step);
    return buf;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    const ordered_json j = parse_json_file(path, "config");
    if (!j.is_object()) throw FormatError("config: top-level document must be an object");
    PipelineConfig c;

    auto get_to = [&](const ordered_json& obj, const char* key, auto& field) {
        if (obj.contains(key)) obj.at(key).get_to(field);
    };

    if (!j.contains("ply") || !j.contains("cameras"))
        throw FormatError("config: 'ply' and 'cameras' paths are required");
    j.at("ply").get_to(c.ply_path);
    j.at("cameras").get_to(c.cameras_path);
    get_to(j, "out_dir", c.out_dir);

    // Paths are understood relative to the config file's directory.
    const fs::path base = fs::path(path).parent_path();
    auto rebase = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative()) p = (base / p).string();
    };
    rebase(c.ply_path);
    rebase(c.cameras_path);

    if (j.contains("planner")) {
        const auto& p = j.at("planner");
        get_to(p, "n_trajectories", c.planner.n_trajectories);
        get_to(p, "length", c.planner.length);
        get_to(p, "top_k", c.planner.top_k);
        get_to(p, "translation_step", c.planner.translation_step);
        get_to(p, "eps_vis", c.planner.eps_vis);
        get_to(p, "proximity_radius", c.planner.proximity_radius);
        get_to(p, "rng_seed", c.planner.rng_seed);
        if (p.contains("rotation_step_degrees"))
            c.planner.rotation_step = p.at("rotation_step_degrees").get<double>() * M_PI / 180.0;
        if (p.contains("world_up")) {
            const auto& u = p.at("world_up");
            if (u.size() != 3) throw FormatError("config: world_up must hold 3 floats");
            for (int i = 0; i < 3; ++i) c.planner.world_up[i] = u[static_cast<size_t>(i)];
        }
    }
    if (j.contains("occupancy")) {
        const auto& o = j.at("occupancy");
        get_to(o, "resolution", c.occupancy.resolution);
        get_to(o, "tau", c.occupancy.tau);
    }
    if (j.contains("bbox")) {
        const auto& b = j.at("bbox");
        get_to(b, "lo_pct", c.bbox.lo_pct);
        get_to(b, "hi_pct", c.bbox.hi_pct);
        get_to(b, "margin", c.bbox.margin);
    }
    if (j.contains("enhancer")) c.enhancer = j.at("enhancer").get<std::string>();
    if (j.contains("render_width")) c.render_width = j.at("render_width").get<int>();
    if (j.contains("render_height")) c.render_height = j.at("render_height").get<int>();
    get_to(j, "perceptual", c.perceptual);

    if (c.occupancy.resolution < 1) throw FormatError("config: occupancy resolution must be >= 1");
    if (!(c.occupancy.tau > 0 && c.occupancy.tau < 1))
        throw FormatError("config: occupancy tau must lie in (0,1)");
    if (!(c.planner.eps_vis > 0 && c.planner.eps_vis < 1))
        throw FormatError("config: eps_vis must lie in (0,1)");
    return c;
}

void cmd_plan(const PipelineConfig& config) {
    const GaussianCloud cloud = load_gaussian_ply(config.ply_path);
    const std::vector<View> views = load_cameras(config.cameras_path);

    const PlanResult res =
        plan(cloud, views, config.planner, config.occupancy, config.bbox, config.raster);

    fs::create_directories(config.out_dir);
    res.grid.save(grid_path(config));

    ordered_json jtrajs = ordered_json::array();
    for (const Trajectory& t : res.trajectories) {
        ordered_json jt;
        jt["id"] = t.id;
        jt["seed_view_id"] = t.seed_view_id;
        ordered_json jviews = ordered_json::array();
        for (size_t s = 0; s < t.views.size(); ++s) {
            ordered_json jv = view_to_json(t.views[s]);
            jv["action"] = action_name(t.actions[s].action);
            jv["realized_gain"] = t.realized_gains[s];
            jviews.push_back(std::move(jv));
        }
        jt["views"] = std::move(jviews);
        if (!t.diagnostic.empty()) jt["diagnostic"] = t.diagnostic;
        jtrajs.push_back(std::move(jt));
    }
    write_json_file(jtrajs, trajectories_path(config));

    ordered_json stats;
    stats["popcount_initial"] = res.popcount_initial;
    stats["popcount_final"] = res.map.popcount();
    ordered_json per_traj = ordered_json::array();
    for (const Trajectory& t : res.trajectories) {
        ordered_json jt;
        jt["id"] = t.id;
        jt["length"] = t.views.size();
        uint64_t total = 0;
        for (uint64_t g : t.realized_gains) total += g;
        jt["total_gain"] = total;
        jt["realized_gains"] = t.realized_gains;
        per_traj.push_back(std::move(jt));
    }
    stats["trajectories"] = std::move(per_traj);
    stats["hyperparameters"] = hyperparameter_echo(config);
    write_json_file(stats, stats_path(config));
}

void cmd_render(const PipelineConfig& config) {
    const std::vector<StoredTrajectory> trajs = load_trajectories(config);
    const GaussianCloud cloud = load_gaussian_ply(config.ply_path);
    fs::create_directories(renders_dir(config));

    ordered_json index = ordered_json::array();
    for (const StoredTrajectory& t : trajs) {
        for (size_t s = 0; s < t.views.size(); ++s) {
            const View v = frame_view(t.views[s], config);
            const RenderOutput out = render(cloud, v, config.raster);
            const std::string png = png_path(config, t.id, static_cast<int>(s));
            const std::string pfm = pfm_path(config, t.id, static_cast<int>(s));
            write_png(png, out.rgb);
            write_pfm(pfm, out.rgb);
            ordered_json entry;
            entry["trajectory"] = t.id;
            entry["step"] = s;
            entry["png"] = png;
            entry["pfm"] = pfm;
            entry["width"] = v.width;
            entry["height"] = v.height;
            index.push_back(std::move(entry));
        }
    }
    write_json_file(index, renders_dir(config) + "/index.json");
}

void cmd_enhance(const PipelineConfig& config) {
    const std::vector<StoredTrajectory> trajs = load_trajectories(config);
    fs::create_directories(enhanced_dir(config));

    if (!config.enhancer) {
        // Identity enhancement: the float frames are copied too, so later
        // comparisons can stay in the lossless format.
        for (const StoredTrajectory& t : trajs)
            for (size_t s = 0; s < t.views.size(); ++s) {
                const int step = static_cast<int>(s);
                copy_overwrite(png_path(config, t.id, step),
                               enhanced_png_path(config, t.id, step));
                copy_overwrite(pfm_path(config, t.id, step),
                               enhanced_pfm_path(config, t.id, step));
            }
        return;
    }

    const std::vector<View> training = load_cameras(config.cameras_path);
    for (const StoredTrajectory& t : trajs) {
        if (t.views.empty()) continue;
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), "%02d", t.id);
        const std::string stage_in = config.out_dir + "/enhance_in_" + suffix;
        const std::string stage_out = config.out_dir + "/enhance_out_" + suffix;
        fs::remove_all(stage_in);
        fs::remove_all(stage_out);
        fs::create_directories(stage_in);
        fs::create_directories(stage_out);

        for (size_t s = 0; s < t.views.size(); ++s) {
            const std::string name = "frame_" + frame_tag(t.id, static_cast<int>(s)) + ".png";
            copy_overwrite(png_path(config, t.id, static_cast<int>(s)), stage_in + "/" + name);
        }

        std::string cmd = *config.enhancer;
        if (cmd.find("{ref_image}") != std::string::npos) {
            const View& ref = nearest_training_view(t.views.front(), training);
            if (!ref.image_path)
                throw PipelineError("enhancer wants {ref_image} but training view " + ref.id +
                                    " has no image (trajectory " + std::to_string(t.id) + ")");
            cmd = substitute(cmd, "{ref_image}", *ref.image_path);
        }
        cmd = substitute(cmd, "{in_dir}", stage_in);
        cmd = substitute(cmd, "{out_dir}", stage_out);

        const int rc = std::system(cmd.c_str());
        if (rc != 0)
            throw PipelineError("enhancer command failed for trajectory " + std::to_string(t.id) +
                                " (exit status " + std::to_string(rc) + ")");

        for (size_t s = 0; s < t.views.size(); ++s) {
            const int step = static_cast<int>(s);
            const std::string name = "frame_" + frame_tag(t.id, step) + ".png";
            const std::string produced = stage_out + "/" + name;
            if (!fs::exists(produced))
                throw PipelineError("enhancer produced no output for trajectory " +
                                    std::to_string(t.id) + ": missing " + produced);
            const Image got = read_image(produced);
            const Image want = read_image(png_path(config, t.id, step));
            if (got.width != want.width || got.height != want.height)
                throw PipelineError("enhancer output dimensions differ for trajectory " +
                                    std::to_string(t.id) + ": " + produced);
            copy_overwrite(produced, enhanced_png_path(config, t.id, step));
        }
        fs::remove_all(stage_in);
        fs::remove_all(stage_out);
    }
}

void cmd_confidence(const PipelineConfig& config) {
    const std::vector<StoredTrajectory> trajs = load_trajectories(config);
    const GaussianCloud cloud = load_gaussian_ply(config.ply_path);
    const std::vector<View> training = load_cameras(config.cameras_path);
    fs::create_directories(confidence_dir(config));

    // All frame files must be present before any work starts.
    std::vector<std::string> missing;
    for (const StoredTrajectory& t : trajs)
        for (size_t s = 0; s < t.views.size(); ++s) {
            const int step = static_cast<int>(s);
            if (!fs::exists(png_path(config, t.id, step)))
                missing.push_back(png_path(config, t.id, step));
            if (!fs::exists(enhanced_png_path(config, t.id, step)))
                missing.push_back(enhanced_png_path(config, t.id, step));
        }
    if (!missing.empty()) {
        std::string msg = "confidence inputs missing:";
        for (const std::string& m : missing) msg += " " + m;
        throw PipelineError(msg);
    }

    std::unique_ptr<PerceptualDistanceProvider> provider;
    if (config.perceptual == "builtin") {
        provider = std::make_unique<BuiltinProxyProvider>();
    } else if (config.perceptual.rfind("external:", 0) == 0) {
        provider = std::make_unique<ExternalMapProvider>(config.perceptual.substr(9));
    } else {
        throw PipelineError("unknown perceptual provider: " + config.perceptual);
    }

    std::unordered_map<std::string, std::vector<uint32_t>> ref_cache;
    ordered_json entries = ordered_json::array();
    for (const StoredTrajectory& t : trajs) {
        for (size_t s = 0; s < t.views.size(); ++s) {
            const int step = static_cast<int>(s);
            const View& v = t.views[s];

            const View& ref = nearest_training_view(v, training);
            auto it = ref_cache.find(ref.id);
            if (it == ref_cache.end())
                it = ref_cache
                         .emplace(ref.id, visible_set(cloud, ref, config.planner.eps_vis,
                                                      config.raster))
                         .first;
            const std::vector<uint32_t> vis_v =
                visible_set(cloud, v, config.planner.eps_vis, config.raster);
            const double g = g_iou(vis_v, it->second);
            const double u_img = image_confidence(g);

            // Compare in the lossless format when both sides have it;
            // otherwise compare the 8-bit frames so quantization cancels.
            Image rendered, enhanced;
            if (fs::exists(pfm_path(config, t.id, step)) &&
                fs::exists(enhanced_pfm_path(config, t.id, step))) {
                rendered = read_pfm(pfm_path(config, t.id, step));
                enhanced = read_pfm(enhanced_pfm_path(config, t.id, step));
            } else {
                rendered = read_png(png_path(config, t.id, step));
                enhanced = read_png(enhanced_png_path(config, t.id, step));
            }
            const std::string tag = frame_tag(t.id, step);
            const Image u_pixel = pixel_confidence(rendered, enhanced, *provider, tag);
            write_pfm(upixel_path(config, t.id, step), u_pixel);

            ordered_json e;
            e["view_id"] = virtual_id(t.id, step);
            e["ref_view_id"] = ref.id;
            e["g_iou"] = g;
            e["u_img"] = u_img;
            entries.push_back(std::move(e));
        }
    }
    write_json_file(entries, confidence_dir(config) + "/confidences.json");
}

namespace {

void manifest_schema_error(const std::string& pointer, const std::string& why) {
    throw FormatError("manifest validation failed at " + pointer + ": " + why);
}

void validate_manifest(const ordered_json& m) {
    if (!m.is_object()) manifest_schema_error("", "not an object");
    if (!m.contains("hyperparameters")) manifest_schema_error("/hyperparameters", "missing");
    if (!m.contains("entries") || !m.at("entries").is_array())
        manifest_schema_error("/entries", "missing or not an array");
    const auto& h = m.at("hyperparameters");
    if (!h.contains("iterations") || !h.at("iterations").is_number_integer())
        manifest_schema_error("/hyperparameters/iterations", "missing integer");
    if (!h.contains("densify_until") || !h.at("densify_until").is_number_integer())
        manifest_schema_error("/hyperparameters/densify_until", "missing integer");

    size_t i = 0;
    for (const auto& e : m.at("entries")) {
        const std::string p = "/entries/" + std::to_string(i++);
        if (!e.is_object()) manifest_schema_error(p, "not an object");
        if (!e.contains("loss_kind")) manifest_schema_error(p + "/loss_kind", "missing");
        const std::string kind = e.at("loss_kind");
        if (!e.contains("view") || !e.at("view").is_object())
            manifest_schema_error(p + "/view", "missing object");
        if (kind == "training") {
            if (!e.contains("image") || !e.at("image").is_string())
                manifest_schema_error(p + "/image", "missing string");
        } else if (kind == "virtual") {
            for (const char* key : {"rendered", "enhanced", "u_pixel"})
                if (!e.contains(key) || !e.at(key).is_string())
                    manifest_schema_error(p + "/" + key, "missing string");
            if (!e.contains("u_img") || !e.at("u_img").is_number())
                manifest_schema_error(p + "/u_img", "missing number");
            const double u = e.at("u_img");
            if (!(u >= 0.0 && u <= 1.0)) manifest_schema_error(p + "/u_img", "outside [0,1]");
        } else {
            manifest_schema_error(p + "/loss_kind", "must be 'training' or 'virtual'");
        }
    }
}

}  // namespace

void cmd_export_manifest(const PipelineConfig& config) {
    const std::vector<StoredTrajectory> trajs = load_trajectories(config);
    const std::vector<View> training = load_cameras(config.cameras_path);

    const ordered_json confs =
        parse_json_file(confidence_dir(config) + "/confidences.json", "confidences");
    std::unordered_map<std::string, double> u_img_by_view;
    for (const auto& e : confs) u_img_by_view[e.at("view_id")] = e.at("u_img");

    ordered_json manifest;
    manifest["hyperparameters"] = hyperparameter_echo(config);
    ordered_json entries = ordered_json::array();

    for (const View& v : training) {
        if (!v.image_path) continue;  // nothing to fine-tune against
        ordered_json e;
        e["loss_kind"] = "training";
        e["image"] = *v.image_path;
        e["view"] = view_to_json(v);
        entries.push_back(std::move(e));
    }

    for (const StoredTrajectory& t : trajs) {
        for (size_t s = 0; s < t.views.size(); ++s) {
            const int step = static_cast<int>(s);
            const std::string id = virtual_id(t.id, step);
            const auto it = u_img_by_view.find(id);
            if (it == u_img_by_view.end())
                throw PipelineError("no confidence entry for view " + id +
                                    "; run the confidence stage first");
            ordered_json e;
            e["loss_kind"] = "virtual";
            e["rendered"] = png_path(config, t.id, step);
            e["enhanced"] = enhanced_png_path(config, t.id, step);
            e["u_pixel"] = upixel_path(config, t.id, step);
            e["u_img"] = it->second;
            e["view"] = view_to_json(frame_view(t.views[s], config));
            entries.push_back(std::move(e));
        }
    }
    manifest["entries"] = std::move(entries);

    validate_manifest(manifest);

    std::vector<std::string> missing;
    for (const auto& e : manifest.at("entries")) {
        for (const char* key : {"image", "rendered", "enhanced", "u_pixel"}) {
            if (!e.contains(key)) continue;
            const std::string path = e.at(key);
            if (!fs::exists(path)) missing.push_back(path);
        }
    }
    if (!missing.empty()) {
        std::string msg = "manifest references missing files:";
        for (const std::string& m : missing) msg += " " + m;
        throw PipelineError(msg);
    }

    write_json_file(manifest, manifest_path(config));
}

}  // namespace gsplan
