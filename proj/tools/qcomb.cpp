// qcomb <jsa|dip|comb|events|validate|plot> --config <path> --out <dir> [--seed N] [--delays ...]
//
// Exit codes: 0 success, 2 validation error, 3 numerical-resolution error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qcomb/pipeline.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitResolution = 3;

int run(const std::string& command, const std::string& config_path, const std::string& out_dir,
        std::optional<std::uint64_t> seed, const std::vector<double>& delays, const std::string& delay_unit) {
    qcomb::RunConfig cfg = qcomb::load_config(config_path);
    std::optional<std::vector<qcomb::DelaySpec>> override_delays;
    if (!delays.empty()) {
        override_delays.emplace();
        for (double d : delays) override_delays->push_back({d, delay_unit});
    }
    qcomb::apply_overrides(cfg, seed, override_delays);

    if (command == "validate") {
        std::cout << qcomb::Json{{"valid", true},
                                 {"config", qcomb::config_hash(cfg)},
                                 {"poling_period_um", cfg.crystal.poling_period_um},
                                 {"delays", cfg.delays.size()}}
                         .dump(2)
                  << "\n";
        return 0;
    }
    if (out_dir.empty()) throw qcomb::ValidationError("--out: required for the '" + command + "' command");
    std::filesystem::create_directories(out_dir);
    qcomb::Json summary;
    if (command == "jsa")
        summary = qcomb::cmd_jsa(cfg, out_dir);
    else if (command == "dip")
        summary = qcomb::cmd_dip(cfg, out_dir);
    else if (command == "comb")
        summary = qcomb::cmd_comb(cfg, out_dir);
    else if (command == "events")
        summary = qcomb::cmd_events(cfg, out_dir);
    else
        summary = qcomb::cmd_plot(cfg, out_dir);
    std::cout << summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-comb HOM simulator"};
    app.require_subcommand(1);
    std::string config_path, out_dir, delay_unit = "um";
    std::optional<std::uint64_t> seed;
    std::vector<double> delays;

    const std::vector<std::pair<const char*, const char*>> commands = {
        {"jsa", "joint spectral amplitude and marginal spectra"},
        {"dip", "HOM dip scan and metrics"},
        {"comb", "CSI, ToA marginal, peaks and qudit decomposition per delay"},
        {"events", "Monte-Carlo spectrometer events and reconstructed histograms"},
        {"validate", "check a configuration and print its hash"},
        {"plot", "write gnuplot scripts for the CSV outputs"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON configuration")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "RNG seed (overrides the config)");
        sub->add_option("--delays", delays, "delay list (overrides the config)");
        sub->add_option("--delay-unit", delay_unit, "unit of --delays")->check(CLI::IsMember({"um", "ps"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, config_path, out_dir, seed, delays, delay_unit);
    } catch (const qcomb::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const qcomb::DomainError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const qcomb::ResolutionError& e) {
        std::cerr << "resolution error: " << e.what() << "\n";
        return kExitResolution;
    } catch (const qcomb::SolverError& e) {
        std::cerr << "resolution error: " << e.what() << "\n";
        return kExitResolution;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
