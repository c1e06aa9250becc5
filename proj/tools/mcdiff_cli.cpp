#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using mcdiff::cli::Json;
using mcdiff::cli::Options;
using mcdiff::cli::Outcome;

constexpr int exit_ok = 0;
constexpr int exit_internal = 1;
constexpr int exit_validation = 2;
constexpr int exit_certificate = 3;

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path);
}

int report_error(const std::string& kind, const std::string& message, const std::string& path = {})
{
    Json err{{"kind", kind}, {"message", message}};
    if (!path.empty())
        err["path"] = path;
    std::cerr << Json{{"error", err}}.dump() << "\n";
    return kind == "InternalError" || kind == "InvariantBreach" ? exit_internal : exit_validation;
}

void emit(const Outcome& out, const std::string& command, const Options& opt)
{
    if (command == "simulate") {
        if (!opt.output.empty()) {
            std::filesystem::create_directories(opt.output);
            for (const auto& [name, text] : out.files)
                write_text((std::filesystem::path(opt.output) / name).string(), text);
        }
        std::cout << mcdiff::io::dump(out.doc);
        return;
    }
    const std::string text = mcdiff::io::dump(out.doc);
    if (opt.output.empty())
        std::cout << text;
    else
        write_text(opt.output, text);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multicomponent diffusion closures: conversion, certificates, Darken tables and 1-D simulation"};
    app.require_subcommand(1);

    Options opt;
    std::string input;
    std::string target = "C";
    std::size_t steps = 0;

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        auto* in = sub->add_option("--input", input, "Scenario document (JSON)");
        if (needs_input)
            in->required()->check(CLI::ExistingFile);
        else
            in->check(CLI::ExistingFile);
        sub->add_option("--output", opt.output, "Output path (directory for simulate)");
        sub->add_flag("--strict", opt.strict, "Exit with code 3 when a certificate fails");
        sub->add_option("--seed", opt.seed, "Seed for random gradient probes");
        sub->add_option("--probes", opt.probes, "Number of random gradient probes");
    };

    auto* convert = app.add_subcommand("convert", "Convert the closure to form A, B or C");
    add_common(convert, true);
    convert->add_option("--target", target, "Target form")->check(CLI::IsMember({"A", "B", "C"}));
    auto* check = app.add_subcommand("check", "Ellipticity certificates and PSD report");
    add_common(check, true);
    auto* darken = app.add_subcommand("darken", "Maxwell-Stefan diffusivities from self-diffusivities");
    add_common(darken, true);
    auto* counter = app.add_subcommand("counterexample", "Ternary friction with a negative coefficient");
    add_common(counter, false);
    auto* fickian = app.add_subcommand("fickian", "Fickian matrices and spectra");
    add_common(fickian, true);
    auto* simulate = app.add_subcommand("simulate", "Run the 1-D simulator and write CSV output");
    add_common(simulate, true);
    auto* steps_opt = simulate->add_option("--steps", steps, "Fixed number of steps instead of t_end");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("UsageError", e.what());
    }

    opt.target = target;
    if (steps_opt->count() > 0)
        opt.steps = steps;

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        mcdiff::io::Scenario sc;
        if (!input.empty()) {
            sc = mcdiff::io::load_scenario(input);
        } else {
            sc.species = {{"1", 1.0}, {"2", 1.0}, {"3", 1.0}};
            sc.closure.kind = mcdiff::io::ClosureKind::MaxwellStefan;
        }

        Outcome out;
        if (command == "convert")
            out = mcdiff::cli::cmd_convert(sc, opt);
        else if (command == "check")
            out = mcdiff::cli::cmd_check(sc, opt);
        else if (command == "darken")
            out = mcdiff::cli::cmd_darken(sc, opt);
        else if (command == "counterexample")
            out = mcdiff::cli::cmd_counterexample(sc, opt);
        else if (command == "fickian")
            out = mcdiff::cli::cmd_fickian(sc, opt);
        else
            out = mcdiff::cli::cmd_simulate(sc, opt);

        emit(out, command, opt);
        if (opt.strict && out.certificate_failed)
            return exit_certificate;
        return exit_ok;
    } catch (const mcdiff::io::SchemaError& e) {
        return report_error("SchemaError", e.what(), e.path());
    } catch (const mcdiff::Error& e) {
        return report_error(std::string(mcdiff::to_string(e.kind())), e.what());
    } catch (const std::exception& e) {
        return report_error("InternalError", e.what());
    }
}
