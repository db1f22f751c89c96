#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hvfif/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hidden-variable fractal interpolation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;

    for (const char* name : {"generate", "analyze", "stability", "surface"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (default: current)");
        sub->add_option("--seed", seed, "override the RNG seed from the config");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = hvfif::load_config(config_path);
        const auto res =
            hvfif::run_command(app.get_subcommands().front()->get_name(), cfg, out_dir, seed);
        for (const auto& a : res.artifacts) std::printf("wrote %s\n", a.c_str());
        return res.exit_code;
    } catch (const hvfif::Error& e) {
        std::fprintf(stderr, "error: %s (config: %s)\n", e.what(), config_path.c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
