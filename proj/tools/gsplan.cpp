#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gsplan/errors.hpp"
#include "gsplan/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "override the planner RNG seed");
    cmd->add_option("--out", opts.out_dir, "override the output directory");
}

gsplan::PipelineConfig resolve(const CommonOpts& opts) {
    gsplan::PipelineConfig config = gsplan::load_pipeline_config(opts.config_path);
    if (opts.seed) config.planner.rng_seed = *opts.seed;
    if (opts.out_dir) config.out_dir = *opts.out_dir;
    return config;
}

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const gsplan::IoError& e) {
        std::fprintf(stderr, "gsplan: error[io]: %s\n", e.what());
    } catch (const gsplan::FormatError& e) {
        std::fprintf(stderr, "gsplan: error[format]: %s\n", e.what());
    } catch (const gsplan::DataError& e) {
        std::fprintf(stderr, "gsplan: error[data]: %s\n", e.what());
    } catch (const gsplan::PipelineError& e) {
        std::fprintf(stderr, "gsplan: error[pipeline]: %s\n", e.what());
    } catch (const gsplan::PreconditionError& e) {
        std::fprintf(stderr, "gsplan: error[precondition]: %s\n", e.what());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "gsplan: error: %s\n", e.what());
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D Gaussian splatting view planner"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        void (*fn)(const gsplan::PipelineConfig&);
    };
    const Sub subs[] = {
        {"plan", "search virtual-view trajectories", gsplan::cmd_plan},
        {"render", "render planned trajectories to frames", gsplan::cmd_render},
        {"enhance", "enhance rendered frames (external command or identity)",
         gsplan::cmd_enhance},
        {"confidence", "compute image- and pixel-level confidences", gsplan::cmd_confidence},
        {"export-manifest", "assemble the fine-tuning manifest", gsplan::cmd_export_manifest},
    };

    CommonOpts opts[std::size(subs)];
    int selected = -1;
    for (size_t i = 0; i < std::size(subs); ++i) {
        CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
        add_common(cmd, opts[i]);
        cmd->callback([&selected, i] { selected = static_cast<int>(i); });
    }

    CLI11_PARSE(app, argc, argv);

    return run_guarded([&] {
        const gsplan::PipelineConfig config = resolve(opts[selected]);
        subs[selected].fn(config);
    });
}
