#pragma once

#include <optional>
#include <string>

#include "gsplan/planner.hpp"

namespace gsplan {

/// Whole-pipeline settings, loaded from a single JSON config file.
/// Precedence: CLI flags > config file > defaults.
struct PipelineConfig {
    std::string ply_path;
    std::string cameras_path;
    std::string out_dir = "out";

    PlannerConfig planner;
    OccupancyParams occupancy;
    BboxParams bbox;
    RasterParams raster;

    /// External enhancer command with {in_dir}, {out_dir}, {ref_image}
    /// placeholders; unset = identity enhancement.
    std::optional<std::string> enhancer;

    /// Render-resolution override; intrinsics are rescaled proportionally.
    std::optional<int> render_width;
    std::optional<int> render_height;

    /// "builtin" or "external:<dir>" (precomputed pdist_{tag}.pfm maps).
    std::string perceptual = "builtin";
};

PipelineConfig load_pipeline_config(const std::string& path);

/// Frame naming shared by render/enhance/confidence stages: "NN_SSS".
std::string frame_tag(int trajectory, int step);

/// plan: occupancy.grid + trajectories.json + stats.json into out_dir.
void cmd_plan(const PipelineConfig& config);

/// render: frame_{tag}.png + frame_{tag}.pfm + index.json into
/// out_dir/renders.
void cmd_render(const PipelineConfig& config);

/// enhance: out_dir/enhanced mirrors the rendered frames, either copied
/// (identity) or produced by the external command run once per trajectory.
void cmd_enhance(const PipelineConfig& config);

/// confidence: confidences.json + upixel_{tag}.pfm into out_dir/confidence.
void cmd_confidence(const PipelineConfig& config);

/// export-manifest: finetune_manifest.json into out_dir.
void cmd_export_manifest(const PipelineConfig& config);

}  // namespace gsplan
