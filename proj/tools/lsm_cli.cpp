// Command-line front end: run presets, validate against oracles, print configs.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lsm/errors.hpp"
#include "lsm/pipeline.hpp"
#include "lsm/validation.hpp"

namespace {

lsm::ExperimentConfig resolve(const std::string& preset_name, const std::string& config_path,
                              const std::vector<std::string>& overrides, const std::optional<std::uint64_t>& seed,
                              const std::string& out) {
    if (preset_name.empty() == config_path.empty()) {
        throw lsm::ConfigError("give exactly one of --preset or --config");
    }
    lsm::ExperimentConfig config = preset_name.empty() ? lsm::load_config(config_path) : lsm::preset(preset_name);
    for (const auto& assignment : overrides) {
        config = lsm::apply_override(config, assignment);
    }
    if (seed) {
        config.seed = *seed;
    }
    if (!out.empty()) {
        config.output = out;
    }
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear sampling reconstructions from active and passive (cross-correlation) data"};
    app.set_version_flag("--version", std::string(lsm::kVersion));
    app.require_subcommand(1);

    std::string preset_name;
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;

    auto* run_cmd = app.add_subcommand("run", "run an experiment and write its outputs");
    run_cmd->add_option("--preset", preset_name, "preset name, e.g. kite-C or kite-beta(0.6,80)");
    run_cmd->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seed, "master seed");
    run_cmd->add_option("--out", out, "output directory");
    run_cmd->add_option("--set", overrides, "override section.key=value (repeatable)");
    run_cmd->add_flag("--quiet", quiet, "no summary on stdout");

    std::string suite_name = "quick";
    std::string report_path;
    std::string scratch = (std::filesystem::temp_directory_path() / "lsm-validate").string();
    auto* validate_cmd = app.add_subcommand("validate", "run oracle and property checks");
    validate_cmd->add_option("--suite", suite_name, "suite name")->check(CLI::IsMember(lsm::suite_names()));
    validate_cmd->add_option("--report", report_path, "write the JSON report here instead of stdout");
    validate_cmd->add_option("--scratch", scratch, "directory for temporary run outputs");

    auto* info_cmd = app.add_subcommand("info", "print the resolved config of a preset");
    info_cmd->add_option("--preset", preset_name, "preset name");
    info_cmd->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
    info_cmd->add_option("--set", overrides, "override section.key=value (repeatable)");
    info_cmd->add_option("--seed", seed, "master seed");
    info_cmd->add_option("--out", out, "output directory");

    std::string verify_dir;
    auto* verify_cmd = app.add_subcommand("verify", "check a run directory against its manifest");
    verify_cmd->add_option("dir", verify_dir, "run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const auto config = resolve(preset_name, config_path, overrides, seed, out);
            const auto result = lsm::run(config);
            if (!quiet) {
                std::cout << "preset " << config.name << ": kind " << lsm::to_string(config.kind) << ", J "
                          << result.noisy.size() << ", delta " << lsm::format_number(result.manifest.delta)
                          << ", failed probes " << result.manifest.failed_probes << "\n";
                for (const auto& t : result.manifest.timings) {
                    std::printf("  %-8s %8.3f s\n", t.stage.c_str(), t.seconds);
                }
                std::cout << "outputs in " << config.output << "\n";
            }
            return 0;
        }
        if (*validate_cmd) {
            std::filesystem::create_directories(scratch);
            const auto s = lsm::suite(suite_name, scratch);
            std::vector<lsm::CheckResult> results;
            for (const auto& check : s.checks) {
                results.push_back(check());
                const auto& r = results.back();
                std::fprintf(stderr, "[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.title.c_str(), r.summary.c_str());
            }
            const auto report = lsm::report_json(results).dump(2);
            if (report_path.empty()) {
                std::cout << report << "\n";
            } else {
                std::ofstream(report_path) << report << "\n";
            }
            return lsm::report_json(results)["passed"].get<bool>() ? 0 : 1;
        }
        if (*info_cmd) {
            if (preset_name.empty() && config_path.empty()) {
                for (const auto& name : lsm::preset_names()) {
                    std::cout << name << "\n";
                }
                return 0;
            }
            lsm::write_config(resolve(preset_name, config_path, overrides, seed, out), std::cout);
            return 0;
        }
        if (*verify_cmd) {
            const auto problems = lsm::verify_manifest(verify_dir);
            for (const auto& p : problems) {
                std::cerr << p << "\n";
            }
            std::cout << (problems.empty() ? "manifest ok" : "manifest mismatch") << "\n";
            return problems.empty() ? 0 : 1;
        }
    } catch (const lsm::StageError& e) {
        std::cerr << "error " << e.what() << "\n";
        return 3;
    } catch (const lsm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
