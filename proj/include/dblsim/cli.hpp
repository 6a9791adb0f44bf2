#pragma once

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "dblsim/analysis.hpp"
#include "dblsim/csv.hpp"
#include "dblsim/engine.hpp"
#include "dblsim/netlist.hpp"
#include "dblsim/reference.hpp"

namespace dblsim {

// Exit codes: 0 success, 1 user error (bad flags, parse/validate failures),
// 2 numerical failure (non-convergence, singular systems, aborted runs).
// CSV goes to stdout or --out; diagnostics go to the error stream only.

namespace climpl {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Signals "already reported on the error stream, exit 1".
struct Reported {};

inline double flag_value(const std::string& s, const char* what) {
    const ValueResult v = parse_value(s);
    if (!v.ok) throw UsageError(std::string(what) + ": " + v.message);
    return v.value;
}

inline Circuit load_circuit(const std::string& path, std::ostream& err) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open netlist file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());

    ParseResult pr = parse_netlist(text);
    for (const ParseIssue& w : pr.warnings)
        err << path << ":" << w.line << ": warning: " << w.message << "\n";
    if (!pr.ok()) {
        for (const ParseIssue& e : pr.errors)
            err << path << ":" << e.line << ": error: " << e.message << "\n";
        throw Reported{};
    }
    Circuit c = std::move(pr.circuit);
    const auto verrors = validate_circuit(c);
    if (!verrors.empty()) {
        for (const std::string& e : verrors)
            err << path << ": error: " << e << "\n";
        throw Reported{};
    }
    return c;
}

inline void deliver(const std::string& csv, const std::string& out_path,
                    std::ostream& out) {
    if (out_path.empty()) {
        out << csv;
        return;
    }
    std::string path = out_path;
    if (const char* dir = std::getenv("DBLSIM_OUT_DIR");
        dir && *dir && path.front() != '/')
        path = std::string(dir) + "/" + path;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write output file: " + path);
    f << csv;
}

inline CsvTable op_table(const Circuit& c, const OperatingPoint& op) {
    CsvTable t;
    t.header = {"name", "value"};
    for (size_t i = 1; i < c.nodes.size(); ++i)
        t.rows.push_back({"v(" + c.nodes[i] + ")", format_double(op.node_voltages[i])});
    for (const auto& [name, current] : op.source_currents)
        t.rows.push_back({"i(" + name + ")", format_double(current)});
    return t;
}

inline CsvTable spectrum_table(const HarmonicReport& rep) {
    CsvTable t;
    t.header = {"k", "freq_hz", "magnitude_v"};
    t.rows.push_back({"0", "0", format_double(rep.dc)});
    for (size_t i = 0; i < rep.mags.size(); ++i) {
        const auto k = static_cast<double>(i + 1);
        t.rows.push_back({format_double(k), format_double(k * rep.f0),
                          format_double(rep.mags[i])});
    }
    return t;
}

inline TranDirective tran_directive_of(const Circuit& c) {
    for (const AnalysisDirective& d : c.directives)
        if (const auto* t = std::get_if<TranDirective>(&d)) return *t;
    throw UsageError("netlist has no .tran directive; pass --tstep and --tstop");
}

inline int run_spectrum_common(const Circuit& c, const TranDirective& td,
                               const std::string& node, double f0, int nharm,
                               const std::string& out_path, std::ostream& out,
                               std::ostream& err, const char* extra_note) {
    TranOptions topt;
    topt.tstep = td.tstep;
    topt.tstop = td.tstop;
    TranResult res = solve_tran(c, topt);
    const Waveform w = trim_to_cycles(res.node(node), f0);
    const HarmonicReport rep = harmonic_report(w, f0, nharm);
    deliver(write_csv(spectrum_table(rep)), out_path, out);
    err << "spectrum of v(" << to_lower(node) << "): f0 = " << format_double(f0)
        << " Hz, thd = " << format_double(rep.thd)
        << ", doubling_ratio = " << format_double(rep.doubling_ratio) << "\n";
    if (extra_note) err << extra_note << "\n";
    return 0;
}

}  // namespace climpl

/// Full command-line front end; returns the process exit code. Stream
/// arguments make the dispatcher testable in-process.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
    using namespace climpl;

    CLI::App app{"dblsim: desk-scale square-law circuit simulator"};
    app.require_subcommand(1);

    std::string file, out_path;
    std::string source, start_s, stop_s, step_s;
    std::string node, f0_s, tstep_s, tstop_s;
    std::string modelset = "matched", mode = "consistent";
    int nharm = 8;

    auto* c_check = app.add_subcommand("check", "parse and validate a netlist");
    c_check->add_option("file", file, "netlist file")->required();

    auto* c_op = app.add_subcommand("op", "DC operating point");
    c_op->add_option("file", file, "netlist file")->required();
    c_op->add_option("--out", out_path, "write CSV to this file");

    auto* c_dc = app.add_subcommand("dc", "DC sweep of a voltage source");
    c_dc->add_option("file", file, "netlist file")->required();
    c_dc->add_option("--source", source, "name of the swept DC source")->required();
    c_dc->add_option("--start", start_s, "start value (volts)")->required();
    c_dc->add_option("--stop", stop_s, "stop value (volts)")->required();
    c_dc->add_option("--step", step_s, "step (volts, > 0)")->required();
    c_dc->add_option("--out", out_path, "write CSV to this file");

    auto* c_tran = app.add_subcommand("tran", "fixed-step transient");
    c_tran->add_option("file", file, "netlist file")->required();
    c_tran->add_option("--tstep", tstep_s, "timestep (seconds)");
    c_tran->add_option("--tstop", tstop_s, "stop time (seconds)");
    c_tran->add_option("--out", out_path, "write CSV to this file");

    auto* c_spec = app.add_subcommand(
        "spectrum", "transient run followed by a harmonic report of one node");
    c_spec->add_option("file", file, "netlist file (needs a .tran directive)")
        ->required();
    c_spec->add_option("--node", node, "node to analyze")->required();
    c_spec->add_option("--f0", f0_s, "fundamental frequency (hertz)")->required();
    c_spec->add_option("--n", nharm, "number of harmonics (default 8)");
    c_spec->add_option("--out", out_path, "write CSV to this file");

    auto* c_demo = app.add_subcommand(
        "demo", "built-in frequency-doubler run: 1 us steps for 4 ms, then a "
                "harmonic report of the output node");
    c_demo->add_option("--modelset", modelset, "table1 or matched (default matched)")
        ->check(CLI::IsMember({"table1", "matched"}));
    c_demo->add_option("--mode", mode,
                       "rooter convention for the predicted level: ktriode or "
                       "consistent (default consistent)")
        ->check(CLI::IsMember({"ktriode", "consistent"}));
    c_demo->add_option("--out", out_path, "write CSV to this file");

    try {
        std::vector<const char*> argv;
        argv.reserve(args.size() + 1);
        argv.push_back("dblsim");
        for (const std::string& a : args) argv.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            const int rc = app.exit(e, out, err);
            return rc == 0 ? 0 : 1;
        }

        if (c_check->parsed()) {
            Circuit c = load_circuit(file, err);
            int mosfets = 0;
            for (const Element& e : c.elements)
                if (std::holds_alternative<MosElement>(e)) ++mosfets;
            out << "ok: " << mosfets << " mosfets, " << c.nodes.size()
                << " nodes\n";
            return 0;
        }

        if (c_op->parsed()) {
            Circuit c = load_circuit(file, err);
            const OperatingPoint op = solve_dc(c);
            if (!op.converged) {
                err << file << ": operating point failed: " << op.message << "\n";
                return 2;
            }
            deliver(write_csv(op_table(c, op)), out_path, out);
            return 0;
        }

        if (c_dc->parsed()) {
            Circuit c = load_circuit(file, err);
            const double start = flag_value(start_s, "--start");
            const double stop = flag_value(stop_s, "--stop");
            const double step = flag_value(step_s, "--step");
            std::vector<SweepPoint> points;
            try {
                points = dc_sweep(c, source, start, stop, step);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            CsvTable t;
            t.header = {"v(" + to_lower(source) + ")_v"};
            for (size_t i = 1; i < c.nodes.size(); ++i)
                t.header.push_back("v(" + c.nodes[i] + ")_v");
            t.header.push_back("converged");
            for (const SweepPoint& p : points) {
                std::vector<std::string> row{format_double(p.value)};
                for (size_t i = 1; i < c.nodes.size(); ++i)
                    row.push_back(format_double(p.op.node_voltages[i]));
                row.push_back(p.op.converged ? "1" : "0");
                t.rows.push_back(std::move(row));
            }
            deliver(write_csv(t), out_path, out);
            return 0;
        }

        if (c_tran->parsed()) {
            Circuit c = load_circuit(file, err);
            TranOptions topt;
            if (!tstep_s.empty() || !tstop_s.empty()) {
                if (tstep_s.empty() || tstop_s.empty())
                    throw UsageError("--tstep and --tstop go together");
                topt.tstep = flag_value(tstep_s, "--tstep");
                topt.tstop = flag_value(tstop_s, "--tstop");
            } else {
                const TranDirective td = tran_directive_of(c);
                topt.tstep = td.tstep;
                topt.tstop = td.tstop;
            }
            const TranResult res = solve_tran(c, topt);
            CsvTable t;
            t.header = {"t_s"};
            for (const std::string& n : res.node_names)
                t.header.push_back("v(" + n + ")_v");
            const size_t nsamp = res.waveforms.front().samples.size();
            for (size_t i = 0; i < nsamp; ++i) {
                std::vector<std::string> row{
                    format_double(static_cast<double>(i) * topt.tstep)};
                for (const Waveform& w : res.waveforms)
                    row.push_back(format_double(w.samples[i]));
                t.rows.push_back(std::move(row));
            }
            deliver(write_csv(t), out_path, out);
            return 0;
        }

        if (c_spec->parsed()) {
            Circuit c = load_circuit(file, err);
            const double f0 = flag_value(f0_s, "--f0");
            const TranDirective td = tran_directive_of(c);
            try {
                return run_spectrum_common(c, td, node, f0, nharm, out_path, out,
                                           err, nullptr);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        }

        if (c_demo->parsed()) {
            const ModelSet set =
                modelset == "table1" ? ModelSet::Table1 : ModelSet::Matched;
            const SqrtMode m =
                mode == "ktriode" ? SqrtMode::KTriode : SqrtMode::Consistent;
            const Circuit c = build_doubler(set);
            const TranDirective td = tran_directive_of(c);
            const double predicted =
                doubler_gain(m) * 0.1 * 4.0 / (3.0 * kPi);
            const std::string note =
                "predicted 2f0 magnitude (" + mode +
                " rooter): " + format_double(predicted) + " V";
            try {
                return run_spectrum_common(c, td, "out", 1000.0, nharm, out_path,
                                           out, err, note.c_str());
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        }

        err << "no command\n";
        return 1;
    } catch (const Reported&) {
        return 1;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const TranError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const SingularMatrixError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace dblsim
