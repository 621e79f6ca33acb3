// Protocol-conformant runner stub for exercising the subprocess path: reads
// the config line from stdin and plays the synthetic event script in real time.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "edgebench/protocol.hpp"
#include "edgebench/runner.hpp"

int main(int argc, char** argv) {
    edgebench::SyntheticRunnerOptions options;
    std::string fatal_in;
    bool garbage = false;
    bool hang = false;
    double exit_after = -1.0;
    CLI::App app{"edgebench stub runner"};
    app.add_option("--dataset-load", options.dataset_load_seconds);
    app.add_option("--model-load", options.model_load_seconds);
    app.add_option("--inference", options.inference_seconds);
    app.add_option("--inputs", options.inputs);
    app.add_option("--error-rate", options.error_rate);
    app.add_option("--fatal-in", fatal_in);
    app.add_flag("--omit-done", options.omit_done);
    app.add_flag("--garbage", garbage, "Print a non-JSON line after hello");
    app.add_flag("--hang", hang, "Never finish after hello");
    app.add_option("--exit-after", exit_after, "Exit silently after this many seconds");
    CLI11_PARSE(app, argc, argv);
    if (!fatal_in.empty()) options.fatal_in = edgebench::parse_phase(fatal_in);

    std::string line;
    if (!std::getline(std::cin, line)) return 3;
    edgebench::RunConfig config;
    try {
        config = edgebench::decode_config(line);
    } catch (const std::exception& e) {
        edgebench::RunnerEvent fatal;
        fatal.kind = edgebench::EventKind::Fatal;
        fatal.message = e.what();
        std::cout << edgebench::encode_event(fatal) << std::endl;
        return 1;
    }

    const auto start = std::chrono::steady_clock::now();
    bool first = true;
    for (const auto& step : edgebench::synthetic_script(config, options)) {
        if (exit_after >= 0.0 && step.t > exit_after) return 0;
        std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                  std::chrono::duration<double>(step.t)));
        std::cout << step.line << std::endl;
        if (first) {
            first = false;
            if (garbage) std::cout << "this is not json" << std::endl;
            if (hang) {
                while (true) std::this_thread::sleep_for(std::chrono::seconds(1));
            }
        }
    }
    return 0;
}
