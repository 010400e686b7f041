// scrollscape command-line driver.
//
//   scrollscape generate --config configs/default.conf --out-dir out
//   scrollscape metrics out/panorama.sstf --out-dir out
//   scrollscape fuse --tiles-dir out/tiles --out-dir fused
//   scrollscape inspect --mode snake
//   scrollscape train --config configs/sampler.conf --out-dir ckpt

#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "scrollscape/scrollscape.hpp"

namespace ss = scrollscape;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string tiles_dir;
    std::string features_dir;
    std::string mode;
    std::string aspect;
    std::string enhancer;
    std::vector<std::string> sets;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config, "configuration file (key = value)");
        cmd->add_option("--seed", seed, "io.seed");
        cmd->add_option("--out-dir", out_dir, "io.out_dir");
        cmd->add_option("--tiles-dir", tiles_dir, "io.tiles_dir");
        cmd->add_option("--features-dir", features_dir, "metrics.features_dir (selects the external extractor)");
        cmd->add_option("--mode", mode, "scan.mode: linear or snake");
        cmd->add_option("--aspect", aspect, "canvas.aspect, e.g. 8 or 8:1");
        cmd->add_option("--enhancer", enhancer, "identity, upscale or upscale:K");
        cmd->add_option("--set", sets, "any key=value override")->take_all();
    }

    ss::PipelineConfig resolve() const {
        ss::ConfigValues values;
        if (!config.empty()) values = ss::parse_config_text(ss::detail::read_file(config), config);
        for (const std::string& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ss::ConfigError("--set expects key=value, got '" + kv + "'");
            values[ss::detail::trim(kv.substr(0, eq))] = ss::detail::trim(kv.substr(eq + 1));
        }
        if (seed) values["io.seed"] = std::to_string(*seed);
        if (!out_dir.empty()) values["io.out_dir"] = out_dir;
        if (!tiles_dir.empty()) values["io.tiles_dir"] = tiles_dir;
        if (!features_dir.empty()) {
            values["metrics.features_dir"] = features_dir;
            values["metrics.extractor"] = "external";
        }
        if (!mode.empty()) values["scan.mode"] = mode;
        if (!aspect.empty()) values["canvas.aspect"] = aspect;
        if (!enhancer.empty()) {
            const auto colon = enhancer.find(':');
            values["enhancer.kind"] = enhancer.substr(0, colon);
            if (colon != std::string::npos) values["enhancer.scale"] = enhancer.substr(colon + 1);
            else if (enhancer == "upscale" && !values.count("enhancer.scale")) values["enhancer.scale"] = "2";
            else if (enhancer == "identity") values["enhancer.scale"] = "1";
        }
        return ss::resolve_config(values);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scrollscape: scan-trajectory panorama generation, fusion and patch metrics"};
    app.require_subcommand(1);

    CommonFlags gen_flags, met_flags, fuse_flags, insp_flags, train_flags;
    auto* gen = app.add_subcommand("generate", "plan, generate, enhance, select and fuse a panorama");
    gen_flags.attach(gen);
    auto* met = app.add_subcommand("metrics", "Style-L and GSD on a panorama");
    met_flags.attach(met);
    std::string panorama;
    met->add_option("panorama", panorama, "panorama (.sstf, .ppm, .pgm); default <out-dir>/panorama.sstf");
    auto* fuse = app.add_subcommand("fuse", "fuse tiles written by generate");
    fuse_flags.attach(fuse);
    auto* insp = app.add_subcommand("inspect", "print the resolved config, trajectory, blocks and coverage");
    insp_flags.attach(insp);
    auto* trn = app.add_subcommand("train", "train the sampler network and write a checkpoint");
    train_flags.attach(trn);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            const ss::PipelineConfig cfg = gen_flags.resolve();
            const ss::RunResult r = ss::run_generate(cfg);
            std::cout << "wrote " << cfg.io.out_dir << "/panorama.sstf (" << r.panorama.image.height() << "x"
                      << r.panorama.image.width() << "x" << r.panorama.image.channels() << ", " << r.windows.size()
                      << " windows, " << r.partition.blocks.size() << " blocks, peak tile bytes " << r.peak_tile_bytes
                      << ")\n";
        } else if (met->parsed()) {
            const ss::PipelineConfig cfg = met_flags.resolve();
            const std::filesystem::path p =
                panorama.empty() ? std::filesystem::path(cfg.io.out_dir) / "panorama.sstf" : std::filesystem::path(panorama);
            const ss::MetricsReport rep = ss::run_metrics(p, cfg);
            std::cout << rep.to_csv();
        } else if (fuse->parsed()) {
            const ss::PipelineConfig cfg = fuse_flags.resolve();
            const ss::RunResult r = ss::run_fuse(cfg);
            std::cout << "fused " << r.windows.size() << " tiles into " << cfg.io.out_dir << "/panorama.sstf\n";
        } else if (insp->parsed()) {
            std::cout << ss::inspect_text(insp_flags.resolve());
        } else if (trn->parsed()) {
            const ss::PipelineConfig cfg = train_flags.resolve();
            const ss::TrainReport rep = ss::run_train(cfg);
            std::cout << "loss " << rep.losses.front() << " -> " << rep.losses.back() << ", wrote "
                      << rep.checkpoint.string() << "\n";
        }
    } catch (const ss::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
