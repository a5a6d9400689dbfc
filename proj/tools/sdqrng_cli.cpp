// Copyright 2026 The sdqrng Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// sdqrng command-line front end.
//
// Exit codes: 0 success, 1 usage or input error, 2 certification or energy
// check failed (fail-closed: no output bits are produced).

#include "sdqrng/certification.hpp"
#include "sdqrng/detection_model.hpp"
#include "sdqrng/extraction.hpp"
#include "sdqrng/io/json_io.hpp"
#include "sdqrng/io/run_config.hpp"
#include "sdqrng/io/timestamps.hpp"
#include "sdqrng/io/trials.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace sdqrng;
using io::json;

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_uncertified = 2;

/// Raised for fail-closed stops that still produced a report.
struct Uncertified : Error {
    json report;
    Uncertified(const std::string &what, json r) : Error(what), report(std::move(r)) {}
};

struct Options {
    io::RunConfig run;
    std::string config_file;
    std::string bin_offsets;

    // certify
    std::string certificate_out;
    std::string certificate_in;
    bool no_symmetry = false;
    // sweep
    std::string axis = "mu";
    std::string grid;
    // simulate
    std::string timestamps_out;
    std::string inputs_out;
    // extract
    double h_min = -1.0;
    // pipeline
    std::string power_file;
    double power_headroom = 0.02;
    double power_noise = 0.005;
};

std::ifstream open_in(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw FormatError("cannot open '" + path + "' for reading");
    return f;
}

std::ofstream open_out(const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw FormatError("cannot open '" + path + "' for writing");
    return f;
}

/// Write to `path`, or to stdout when the path is empty or "-".
template <class F> void emit(const std::string &path, F &&write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
    } else {
        auto f = open_out(path);
        write(f);
    }
}

json read_json(const std::string &path) {
    auto f = open_in(path);
    try {
        return json::parse(f);
    } catch (const json::exception &e) {
        throw FormatError("'" + path + "' is not valid JSON: " + e.what());
    }
}

CertifyOptions certify_options(const Options &o) {
    CertifyOptions c;
    c.solver = o.run.solver;
    c.use_symmetry = !o.no_symmetry;
    return c;
}

std::vector<double> parse_grid(const std::string &text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(io::detail::to_double("grid", std::string(io::detail::trim(cell))));
    return out;
}

std::vector<double> mu_grid(const io::RunConfig &r) {
    std::vector<double> g;
    const auto steps = static_cast<int>(std::floor((r.mu_hi - r.mu_lo) / r.mu_step + 1e-9));
    for (int i = 0; i <= steps; ++i)
        g.push_back(r.mu_lo + i * r.mu_step);
    return g;
}

ProbTable load_or_model_table(const io::RunConfig &r) {
    if (!r.table.empty())
        return io::table_from_json(read_json(r.table));
    return model_table(r.experiment);
}

/// Toeplitz seed from a bit file, or a reproducible PRNG stream for testing.
BitString toeplitz_seed(const io::RunConfig &r, std::size_t bits, json &meta) {
    if (!r.seed_file.empty()) {
        auto f = open_in(r.seed_file);
        BitString s = read_bit_file(f);
        meta["seed_source"] = "file";
        return s;
    }
    std::mt19937_64 rng(r.seed ^ 0x5eed5eed5eed5eedULL);
    BitString s(bits);
    for (std::size_t i = 0; i < bits; i += 64) {
        const std::uint64_t w = rng();
        for (std::size_t k = 0; k < 64 && i + k < bits; ++k)
            s.set(i + k, (w >> k) & 1U);
    }
    meta["seed_source"] = "prng (testing only; not a secret seed)";
    return s;
}

json plan_to_json(const ExtractionPlan &plan) {
    json blocks = json::array();
    for (const auto &b : plan.blocks)
        blocks.push_back({{"input_offset", b.input_offset},
                          {"input_bits", b.input_bits},
                          {"symbols", b.symbols},
                          {"output_bits", b.output_bits},
                          {"seed_offset", b.seed_offset},
                          {"seed_bits", b.seed_bits}});
    return {{"h_min_per_symbol", plan.h_min_per_symbol},
            {"eps_sec", plan.eps_sec},
            {"eps_sec_total", plan.eps_sec * static_cast<double>(plan.blocks.size())},
            {"bits_per_symbol", plan.bits_per_symbol},
            {"blocks", std::move(blocks)},
            {"output_bits", plan.output_bits()},
            {"seed_bits", plan.seed_bits()}};
}

/// Hash trial outcomes at `h` bits per symbol and write the bit file.
json run_extraction(const std::vector<TrialRecord> &trials, int d, double h, const io::RunConfig &r,
                    const std::string &bits_path) {
    const RawBits raw = outcome_encoding(trials, d);
    const ExtractionPlan plan = plan_extraction(raw, h, r.eps_sec, r.block_bits);
    json meta = plan_to_json(plan);
    meta["encoding"] = raw.origin;
    BitString out;
    if (plan.output_bits() > 0) {
        const BitString seed = toeplitz_seed(r, plan.seed_bits(), meta);
        out = extract_blocks(raw, seed, plan);
    }
    if (!bits_path.empty()) {
        auto f = open_out(bits_path);
        write_bit_file(f, out);
        meta["bit_file"] = bits_path;
    }
    return meta;
}

std::vector<TrialRecord> load_trials(const io::RunConfig &r) {
    if (!r.trials_file.empty()) {
        auto f = open_in(r.trials_file);
        return io::read_trials(f);
    }
    if (!r.timestamps.empty()) {
        if (r.inputs.empty())
            throw DomainError("--timestamps needs --inputs with the prepared input sequence");
        io::BinningConfig b = r.binning;
        b.config = r.experiment.config;
        auto ts = open_in(r.timestamps);
        const auto scan = io::parse_timestamps(ts, b);
        auto in = open_in(r.inputs);
        const auto inputs = io::read_inputs(in);
        return io::join_trials(inputs, io::outcomes_from_patterns(scan.patterns, b.config, b.bins()));
    }
    return simulate_trials(model_table(r.experiment), r.trials, r.seed);
}

// ------------------------------------------------------------ commands --

int cmd_tabulate(const Options &o) {
    emit(o.run.out, [&](std::ostream &os) { os << io::table_to_json(model_table(o.run.experiment)).dump(2) << '\n'; });
    return exit_ok;
}

int cmd_simulate(const Options &o) {
    const ProbTable table = model_table(o.run.experiment);
    const auto trials = simulate_trials(table, o.run.trials, o.run.seed);
    emit(o.run.out, [&](std::ostream &os) { io::write_trials(os, trials); });
    if (!o.timestamps_out.empty()) {
        io::BinningConfig b = o.run.binning;
        b.config = o.run.experiment.config;
        std::vector<int> outcomes, inputs;
        for (const auto &t : trials) {
            inputs.push_back(t.x);
            outcomes.push_back(t.b);
        }
        auto f = open_out(o.timestamps_out);
        io::write_timestamps(f, io::patterns_for_outcomes(outcomes, b.config, b.bins()), b);
        if (!o.inputs_out.empty()) {
            auto g = open_out(o.inputs_out);
            io::write_inputs(g, inputs);
        }
    }
    return exit_ok;
}

int cmd_certify(const Options &o) {
    const ProbTable table = load_or_model_table(o.run);
    CertifyOptions opts = certify_options(o);
    CertResult r;
    if (!o.certificate_in.empty()) {
        const auto doc = io::certificate_from_json(read_json(o.certificate_in));
        r = reuse_certificate(doc.point, table, o.run.experiment.mu, o.run.model, opts);
    } else {
        // A reusable certificate must come from the full program.
        if (!o.certificate_out.empty())
            opts.use_symmetry = false;
        r = certify(table, o.run.experiment.mu, o.run.model, opts);
    }
    std::string cert_hash;
    if (!o.certificate_out.empty() && r.certified() && !r.analytic) {
        io::CertificateDocument doc{r.certificate.point, r.mu, r.model, r.delta, io::table_hash(table), r.p_guess};
        const json cj = io::certificate_to_json(doc);
        cert_hash = io::certificate_hash(cj);
        auto f = open_out(o.certificate_out);
        f << cj.dump() << '\n';
    }
    json report = io::cert_result_to_json(r, cert_hash);
    report["table_hash"] = io::table_hash(table);
    report["output_bits_per_1e6_symbols"] = output_length(1'000'000, r.h_min, o.run.eps_sec);
    emit(o.run.out, [&](std::ostream &os) { os << report.dump(2) << '\n'; });
    if (!r.certified())
        throw Uncertified("certification failed: " + r.message, report);
    return exit_ok;
}

int cmd_sweep(const Options &o) {
    SweepCurve curve;
    const CertifyOptions opts = certify_options(o);
    OptimalMuOptions search{o.run.mu_lo, o.run.mu_hi, o.run.mu_tol, 10};
    if (o.axis == "mu") {
        curve = sweep_mu(o.run.experiment, o.grid.empty() ? mu_grid(o.run) : parse_grid(o.grid), o.run.model, opts);
    } else if (o.axis == "eta") {
        if (o.grid.empty())
            throw DomainError("--axis eta needs --grid");
        curve = sweep_efficiency(o.run.experiment, parse_grid(o.grid), o.run.model, search, opts);
    } else if (o.axis == "n_inputs") {
        if (o.grid.empty())
            throw DomainError("--axis n_inputs needs --grid");
        std::vector<int> ns;
        for (double v : parse_grid(o.grid))
            ns.push_back(static_cast<int>(v));
        curve = sweep_inputs(o.run.experiment, ns, o.run.model, search, opts);
    } else {
        throw DomainError("unknown sweep axis '" + o.axis + "' (expected mu|eta|n_inputs)");
    }
    emit(o.run.out, [&](std::ostream &os) { write_curve_csv(os, curve); });
    return exit_ok;
}

int cmd_optimal_mu(const Options &o) {
    const OptimalMuOptions search{o.run.mu_lo, o.run.mu_hi, o.run.mu_tol, 10};
    const OptimalMu best = optimal_mu(o.run.experiment, o.run.model, search, certify_options(o));
    json j{{"format", "sdqrng.optimal_mu"},
           {"version", io::json_format_version},
           {"mu_star", best.mu},
           {"h_star", best.h_min},
           {"evaluations", best.evaluations},
           {"grid_fallback", best.grid_fallback},
           {"result", io::cert_result_to_json(best.result)}};
    emit(o.run.out, [&](std::ostream &os) { os << j.dump(2) << '\n'; });
    return exit_ok;
}

int cmd_ingest(const Options &o) {
    if (o.run.timestamps.empty() || o.run.inputs.empty())
        throw DomainError("ingest needs --timestamps and --inputs");
    io::BinningConfig b = o.run.binning;
    b.config = o.run.experiment.config;
    auto ts = open_in(o.run.timestamps);
    const auto scan = io::parse_timestamps(ts, b);
    auto in = open_in(o.run.inputs);
    const auto trials =
        io::join_trials(io::read_inputs(in), io::outcomes_from_patterns(scan.patterns, b.config, b.bins()));
    emit(o.run.out, [&](std::ostream &os) { io::write_trials(os, trials); });
    std::cerr << json{{"records", scan.records}, {"discarded", scan.discarded}, {"trials", trials.size()}}.dump()
              << '\n';
    return exit_ok;
}

int cmd_extract(const Options &o) {
    if (o.run.trials_file.empty())
        throw DomainError("extract needs --trials-file");
    if (!(o.h_min >= 0.0))
        throw DomainError("extract needs --h-min >= 0 (certified bits per measurement)");
    auto f = open_in(o.run.trials_file);
    const auto trials = io::read_trials(f);
    const json meta = run_extraction(trials, o.run.experiment.outcomes(), o.h_min, o.run, o.run.out);
    std::cerr << meta.dump() << '\n';
    return exit_ok;
}

int cmd_pipeline(const Options &o) {
    const io::RunConfig &r = o.run;
    json report{{"format", "sdqrng.pipeline"}, {"version", io::json_format_version}};
    report["config"] = io::params_to_json(r.experiment);
    report["model"] = std::string(to_string(r.model));

    const auto trials = load_trials(r);
    const int n = r.experiment.n_inputs;
    const int d = r.experiment.outcomes();
    const EmpiricalTable data = empirical_table(trials, n, d);
    report["trials"] = trials.size();
    report["empirical_table"] = io::table_to_json(data.table);

    std::vector<PowerRecord> power;
    if (!o.power_file.empty()) {
        auto f = open_in(o.power_file);
        power = io::read_power_records(f);
    } else {
        power = simulate_power_records(n, r.experiment.mu * (1.0 - o.power_headroom), o.power_noise, 10'000,
                                       r.seed + 1);
    }
    const EnergyReport energy = check_energy_bound(power, r.experiment.mu);
    report["energy_check"] = {{"pass", energy.pass},
                              {"offending_inputs", energy.offending},
                              {"min_margin", energy.min_margin},
                              {"mean_margin", energy.mean_margin}};

    CertifyOptions opts = certify_options(o);
    if (o.run.slack_sigma > 0.0)
        opts.slack = slack_from_counts(data, o.run.slack_sigma);
    const CertResult cert = energy.pass ? certify(data.table, r.experiment.mu, r.model, opts) : CertResult{};
    report["certification"] = io::cert_result_to_json(cert);

    const std::string dir = r.out.empty() ? "." : r.out;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw FormatError("cannot create output directory '" + dir + "': " + ec.message());
    const std::string bits_path = dir + "/output.bits";
    const double h = cert.certified() && energy.pass ? cert.h_min : 0.0;
    report["extraction"] = run_extraction(trials, d, h, r, bits_path);
    {
        auto f = open_out(dir + "/summary.json");
        f << report.dump(2) << '\n';
    }
    std::cout << report.dump(2) << '\n';
    if (!energy.pass)
        throw Uncertified("energy bound violated", report);
    if (!cert.certified())
        throw Uncertified("certification failed: " + cert.message, report);
    return exit_ok;
}

/// Run a parse callback, reporting library errors as CLI validation errors.
template <class F> void checked(F &&f) {
    try {
        f();
    } catch (const Error &e) {
        throw CLI::ValidationError(e.what());
    }
}

void add_common(CLI::App *app, Options &o) {
    auto &r = o.run;
    app->add_option("--config-file", o.config_file, "key=value run configuration; overrides flags");
    app->add_option_function<std::string>(
           "--config", [&](const std::string &v) { checked([&] { r.experiment.config = configuration_from_string(v); }); },
           "Time-bin configuration: I or II")
        ->default_str("I");
    app->add_option("--mu", r.experiment.mu, "Mean photon number per pulse (energy bound)")->capture_default_str();
    app->add_option("--eta", r.experiment.eta, "Detector efficiency")->capture_default_str();
    app->add_option("--eps", r.experiment.epsilon, "Spurious click probability per bin")->capture_default_str();
    app->add_option_function<std::string>(
           "--model", [&](const std::string &v) { checked([&] { r.model = overlap_kind_from_string(v); }); },
           "Overlap assumption: energy or overlap")
        ->default_str("energy");
    app->add_option("--n-inputs", r.experiment.n_inputs, "Number of time bins (Config I)")->capture_default_str();
    app->add_option("--trials", r.trials, "Number of simulated trials")->capture_default_str();
    app->add_option("--seed", r.seed, "Simulation seed")->capture_default_str();
    app->add_option("--eps-sec", r.eps_sec, "Extractor security parameter per block")->capture_default_str();
    app->add_option("--out", r.out, "Output file (directory for pipeline)");
    app->add_option("--slack-sigma", r.slack_sigma, "Data slack in binomial standard errors")->capture_default_str();
    app->add_option("--gap-tol", r.solver.gap_tol, "Solver relative gap tolerance")->capture_default_str();
    app->add_option("--feas-tol", r.solver.feas_tol, "Solver feasibility tolerance")->capture_default_str();
    app->add_option("--max-iters", r.solver.max_iters, "Solver iteration limit")->capture_default_str();
    app->add_option("--mu-lo", r.mu_lo, "Lower end of the mu range")->capture_default_str();
    app->add_option("--mu-hi", r.mu_hi, "Upper end of the mu range")->capture_default_str();
    app->add_option("--mu-step", r.mu_step, "Grid step for mu sweeps")->capture_default_str();
    app->add_option("--mu-tol", r.mu_tol, "Tolerance on the optimal mu")->capture_default_str();
    app->add_option("--table", r.table, "Probability table JSON (instead of the model)");
    app->add_option("--trials-file", r.trials_file, "Trials file (x,b)");
    app->add_option("--timestamps", r.timestamps, "Timestamp file (time_ps,channel)");
    app->add_option("--inputs", r.inputs, "Input-sequence file matching the timestamps");
    app->add_option("--seed-file", r.seed_file, "Toeplitz seed bit file");
    app->add_option("--block-bits", r.block_bits, "Extractor block size in input bits")->capture_default_str();
    app->add_option("--period-ps", r.binning.period_ps, "Trial period in ps")->capture_default_str();
    app->add_option("--bin-width-ps", r.binning.bin_width_ps, "Bin window width in ps")->capture_default_str();
    app->add_option("--bin-offsets-ps", o.bin_offsets, "Comma separated window start offsets in ps");
    app->add_option("--channel", r.binning.channel, "Detector channel")->capture_default_str();
}

void error_json(const std::string &type, const std::string &message, const std::string &command) {
    std::cerr << json{{"error", {{"type", type}, {"message", message}, {"command", command}}}}.dump() << '\n';
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"sdqrng: semi-device-independent randomness certification for time-bin QRNGs"};
    app.require_subcommand(1);
    Options o;

    struct Cmd {
        const char *name;
        const char *help;
        int (*run)(const Options &);
    };
    const std::vector<Cmd> cmds = {
        {"tabulate", "Print the model probability table as JSON", cmd_tabulate},
        {"simulate", "Simulate trials (optionally as timestamps)", cmd_simulate},
        {"certify", "Certify min-entropy for a table", cmd_certify},
        {"sweep", "Certified min-entropy along mu, eta or n_inputs (CSV)", cmd_sweep},
        {"optimal-mu", "Locate the mean photon number maximizing min-entropy", cmd_optimal_mu},
        {"ingest", "Decode timestamps and inputs into a trials file", cmd_ingest},
        {"extract", "Toeplitz-hash trial outcomes into a bit file", cmd_extract},
        {"pipeline", "Trials -> energy check -> certification -> extraction", cmd_pipeline},
    };
    std::vector<CLI::App *> subs;
    for (const auto &c : cmds) {
        auto *sub = app.add_subcommand(c.name, c.help);
        add_common(sub, o);
        subs.push_back(sub);
    }
    auto *certify_cmd = subs[2];
    certify_cmd->add_option("--certificate-out", o.certificate_out, "Write the dual certificate JSON");
    certify_cmd->add_option("--certificate-in", o.certificate_in, "Re-verify a saved certificate on the table");
    for (auto *s : subs)
        s->add_flag("--no-symmetry", o.no_symmetry, "Always solve the full program");
    subs[3]->add_option("--axis", o.axis, "mu, eta or n_inputs")->capture_default_str();
    subs[3]->add_option("--grid", o.grid, "Comma separated axis values");
    subs[1]->add_option("--timestamps-out", o.timestamps_out, "Also write timestamps");
    subs[1]->add_option("--inputs-out", o.inputs_out, "Input sequence for --timestamps-out");
    subs[6]->add_option("--h-min", o.h_min, "Certified bits per measurement");
    subs[7]->add_option("--power-file", o.power_file, "Power records file (x,mean_photons)");
    subs[7]->add_option("--power-headroom", o.power_headroom, "Simulated source set point below mu (fraction)")
        ->capture_default_str();
    subs[7]->add_option("--power-noise", o.power_noise, "Relative noise of simulated power readings")
        ->capture_default_str();

    std::string command = "sdqrng";
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        error_json("usage", e.what(), command);
        return exit_error;
    }

    for (std::size_t i = 0; i < cmds.size(); ++i) {
        if (!subs[i]->parsed())
            continue;
        command = cmds[i].name;
        try {
            if (!o.bin_offsets.empty())
                o.run.set("bin_offsets_ps", o.bin_offsets);
            if (!o.config_file.empty()) {
                auto f = open_in(o.config_file);
                o.run.apply(f);
            }
            o.run.validate();
            return cmds[i].run(o);
        } catch (const Uncertified &e) {
            error_json("uncertified", e.what(), command);
            return exit_uncertified;
        } catch (const ParseError &e) {
            error_json("parse", e.what(), command);
        } catch (const FormatError &e) {
            error_json("format", e.what(), command);
        } catch (const Error &e) {
            error_json("input", e.what(), command);
        } catch (const std::exception &e) {
            error_json("internal", e.what(), command);
        }
        return exit_error;
    }
    return exit_error;
}
