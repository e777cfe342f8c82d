#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vnoether/driver.hpp"

int main(int argc, char** argv)
{
    using namespace vnoether;

    CLI::App app{"Variational bicomplex toolkit: Euler-Lagrange operators, Noether identities, gauge symmetries, superpotentials"};
    app.require_subcommand(1);
    app.fallthrough();

    DriverOptions options;
    options.jet_cap = default_jet_cap();
    std::string format = "text";
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--jet-cap", options.jet_cap, "Highest jet order kept by total derivatives (env VNOETHER_JET_CAP)")
        ->check(CLI::Range(1, 64));
    app.add_option("--ansatz-degree", options.ansatz.degree, "Polynomial degree bound of exactness ansatze")
        ->check(CLI::Range(0, 16));
    app.add_flag("--timing", options.timing, "Report wall-clock time");

    std::string model;
    std::string name;
    std::string field;

    auto* el = app.add_subcommand("el", "Print the Euler-Lagrange expressions");
    el->add_option("model", model, "Model file")->required();
    el->add_option("--field", field, "Only this field component");

    auto* check = app.add_subcommand("check-identity", "Check a declared Noether identity");
    check->add_option("model", model, "Model file")->required();
    check->add_option("name", name, "Identity name or declared family")->required();

    auto* gauge = app.add_subcommand("gauge-symmetry", "Gauge symmetry generated by a Noether identity");
    gauge->add_option("model", model, "Model file")->required();
    gauge->add_option("name", name, "Identity name")->required();

    auto* super = app.add_subcommand("superpotential", "Split the Noether current of a gauge symmetry");
    super->add_option("model", model, "Model file")->required();
    super->add_option("name", name, "Identity or symmetry name")->required();
    super->add_flag("--break-current", options.break_current, "Perturb the current before the split");

    auto* verify = app.add_subcommand("verify", "Run every check on a model");
    verify->add_option("model", model, "Model file")->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_pass : exit_usage;
    }

    if (!field.empty()) options.field = field;
    std::string command = app.get_subcommands().front()->get_name();
    RunReport report = run_command(command, model, name, options);

    if (format == "json") std::cout << report.to_json(options.timing).dump(2) << "\n";
    else std::cout << report.to_text(options.timing);
    if (!report.error.empty()) std::cerr << "vnoether: " << report.error << "\n";
    return report.exit_code;
}
