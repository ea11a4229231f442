#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "jetforge/cli.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw jetforge::UsageError("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jetforge: symbolic calculus on jet bundles"};
    std::string command, file, json_out, mode, free_data, free_file;
    int order = -1, qmax = -1;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    bool timings = false, print = false;

    std::string commands = "run";
    for (const auto& c : jetforge::command_names()) commands += "|" + c;
    app.add_option("command", command, commands)->required();
    app.add_option("file", file, "problem file")->required();
    auto* o_order = app.add_option("--order", order, "prolongation, lift or series order");
    auto* o_samples = app.add_option("--samples", samples, "number of sampled points");
    auto* o_seed = app.add_option("--seed", seed, "sampler seed");
    auto* o_mode = app.add_option("--mode", mode, "exact|float rank computations");
    auto* o_free = app.add_option("--free-data", free_data, "zero|random|file");
    auto* o_file = app.add_option("--free-file", free_file, "JSON table of free jet values");
    auto* o_qmax = app.add_option("--qmax", qmax, "largest degree of the Spencer table");
    auto* o_json = app.add_option("--json", json_out, "write the JSON report to a file, '-' for stdout");
    app.add_flag("--timings", timings, "include wall-clock timings");
    app.add_flag("--print", print, "print the canonical problem text and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const jetforge::ProblemSpec problem = jetforge::parse_problem(read_file(file));
        if (print) {
            std::cout << jetforge::print_problem(problem);
            return 0;
        }
        jetforge::RunFlags flags;
        if (*o_order) flags.order = order;
        if (*o_samples) flags.samples = samples;
        if (*o_seed) flags.seed = seed;
        if (*o_mode) {
            if (mode != "exact" && mode != "float") throw jetforge::UsageError("--mode must be exact or float");
            flags.mode = mode == "exact" ? jetforge::RankMode::Exact : jetforge::RankMode::Float;
        }
        if (*o_free) flags.free_data = free_data;
        if (*o_file) flags.free_file = free_file;
        if (*o_qmax) flags.qmax = qmax;
        flags.timings = timings;

        const jetforge::Report report = jetforge::run_command(problem, command, flags);
        if (*o_json) {
            if (json_out == "-") {
                std::cout << jetforge::emit_json(report);
            } else {
                std::ofstream out(json_out);
                if (!out) throw jetforge::UsageError("cannot write " + json_out);
                out << jetforge::emit_json(report);
                std::cout << jetforge::emit_text(report);
            }
        } else {
            std::cout << jetforge::emit_text(report);
        }
        return jetforge::report_exit_code(report);
    } catch (const jetforge::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const jetforge::ParseError& e) {
        std::cerr << file << ":" << e.what() << "\n";
        return 2;
    } catch (const jetforge::SemanticError& e) {
        std::cerr << file << ":" << e.what() << "\n";
        return 2;
    } catch (const jetforge::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
