#pragma once

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>

#include "dblsim/engine.hpp"
#include "dblsim/netlist.hpp"

namespace dblsim {

/// Bundled device parameter sets. Table1 carries the extracted 0.5 um
/// process cards; Matched is an idealized set with equal transconductance
/// and mirrored thresholds, the premise the chain algebra relies on.
enum class ModelSet { Table1, Matched };

inline constexpr double kRefW = 1.5e-6;   // all reference devices
inline constexpr double kRefL = 0.15e-6;  // W/L = 10
inline constexpr double kRefVdd = 1.5;
inline constexpr double kRefVss = -1.5;

inline MosModelCard nmos_card(ModelSet set) {
    if (set == ModelSet::Table1)
        return {"cmosn", MosPolarity::Nmos, 0.7640855, 1.259355e-4, 0.0};
    return {"mn", MosPolarity::Nmos, 0.75, 1e-4, 0.0};
}

inline MosModelCard pmos_card(ModelSet set) {
    if (set == ModelSet::Table1)
        return {"cmosp", MosPolarity::Pmos, -0.9444911, 3.924644e-5, 0.0};
    return {"mp", MosPolarity::Pmos, -0.75, 1e-4, 0.0};
}

/// Parameters of the behavioral chain that correspond to a model set:
/// k and vt from the NMOS card at the reference geometry.
inline ChainParams chain_params(ModelSet set) {
    const MosModelCard n = nmos_card(set);
    ChainParams p;
    p.k = device_k(n, {kRefW, kRefL});
    p.vt = n.vto;
    p.vss = kRefVss;
    p.vdd = kRefVdd;
    return p;
}

namespace detail {

inline MosElement ref_mos(std::string name, std::string d, std::string g,
                          std::string s, std::string b, const MosModelCard& card) {
    return {std::move(name), std::move(d), std::move(g), std::move(s),
            std::move(b), card.name, kRefW, kRefL};
}

inline void finish(Circuit& c, const char* who) {
    const auto errors = validate_circuit(c);
    if (!errors.empty())
        throw std::logic_error(std::string(who) + ": builder produced an invalid circuit: " +
                               errors.front());
}

inline void add_rails(Circuit& c) {
    c.elements.push_back(VSourceElement{"vdd", "vdd", "0", kRefVdd, {}});
    c.elements.push_back(VSourceElement{"vss", "vss", "0", kRefVss, {}});
}

// Inverting input stage and squaring pair shared by the full chain.
// Branch A: PMOS common source (gate inp) with a diode-connected NMOS
// load; branch B is the complementary flavor (gate inn). With matched
// devices each branch realizes out = -in exactly while the input device
// stays saturated.
inline void add_inverter_branches(Circuit& c, const MosModelCard& n,
                                  const MosModelCard& p) {
    c.elements.push_back(ref_mos("m1", "outa", "inp", "vdd", "vdd", p));
    c.elements.push_back(ref_mos("m3", "outa", "outa", "vss", "vss", n));
    c.elements.push_back(ref_mos("m2", "outb", "inn", "vss", "vss", n));
    c.elements.push_back(ref_mos("m4", "outb", "outb", "vdd", "vdd", p));
}

}  // namespace detail

/// Two complementary inverting branches (m1/m3 and m2/m4) on +-1.5 V
/// rails, inputs inp and inn for the positive and negative phase, outputs
/// outa and outb.
inline Circuit build_inverter(ModelSet set) {
    Circuit c;
    const MosModelCard n = nmos_card(set), p = pmos_card(set);
    c.models.emplace(n.name, n);
    c.models.emplace(p.name, p);
    detail::add_rails(c);
    c.elements.push_back(VSourceElement{"vinp", "inp", "0", 0.0, {}});
    c.elements.push_back(VSourceElement{"vinn", "inn", "0", 0.0, {}});
    detail::add_inverter_branches(c, n, p);
    detail::finish(c, "build_inverter");
    return c;
}

/// Common-source squaring pair m5/m6 with sources on the negative rail and
/// both drains summed into a load resistor to the positive rail. Gate
/// drives vp (node gp) and vn (node gn) default to 0 V.
inline Circuit build_diffamp(ModelSet set, double rl = 1000.0) {
    if (!(rl > 0.0)) throw std::invalid_argument("build_diffamp: rl must be positive");
    Circuit c;
    const MosModelCard n = nmos_card(set), p = pmos_card(set);
    c.models.emplace(n.name, n);
    c.models.emplace(p.name, p);
    detail::add_rails(c);
    c.elements.push_back(VSourceElement{"vp", "gp", "0", 0.0, {}});
    c.elements.push_back(VSourceElement{"vn", "gn", "0", 0.0, {}});
    c.elements.push_back(detail::ref_mos("m5", "sum", "gp", "vss", "vss", n));
    c.elements.push_back(detail::ref_mos("m6", "sum", "gn", "vss", "vss", n));
    c.elements.push_back(ResistorElement{"rl", "vdd", "sum", rl});
    detail::finish(c, "build_diffamp");
    return c;
}

/// Square-rooter: diode-connected m7 in series with triode-biased m8,
/// driven by a test current injected at node gs; output is node out.
inline Circuit build_sqrt(ModelSet set) {
    Circuit c;
    const MosModelCard n = nmos_card(set), p = pmos_card(set);
    c.models.emplace(n.name, n);
    c.models.emplace(p.name, p);
    c.elements.push_back(ISourceElement{"iin", "0", "gs", 1e-4});
    c.elements.push_back(detail::ref_mos("m7", "gs", "gs", "out", "out", n));
    c.elements.push_back(detail::ref_mos("m8", "out", "gs", "0", "0", n));
    detail::finish(c, "build_sqrt");
    return c;
}

namespace detail {

// Everything upstream of the square-rooter: antiphase inputs, inverting
// branches, squaring pair, load resistor with a zero-volt sense source in
// series so the load current can be mirrored.
inline Circuit doubler_front_end(ModelSet set) {
    Circuit c;
    const MosModelCard n = nmos_card(set), p = pmos_card(set);
    c.models.emplace(n.name, n);
    c.models.emplace(p.name, p);
    add_rails(c);
    c.elements.push_back(
        VSourceElement{"vinp", "inp", "0", 0.0, SinSpec{0.0, 0.1, 1000.0}});
    c.elements.push_back(
        VSourceElement{"vinn", "inn", "0", 0.0, SinSpec{0.0, -0.1, 1000.0}});
    add_inverter_branches(c, n, p);
    c.elements.push_back(ref_mos("m5", "sum", "outa", "vss", "vss", n));
    c.elements.push_back(ref_mos("m6", "sum", "outb", "vss", "vss", n));
    c.elements.push_back(ResistorElement{"rl", "vdd", "rlo", 1000.0});
    c.elements.push_back(VSourceElement{"vsense", "rlo", "sum", 0.0, {}});
    finish(c, "doubler_front_end");
    return c;
}

}  // namespace detail

/// Load current the squaring stage draws at the quietest point of the
/// +-0.1 V input cycle, found by sweeping the simulated front end. This is
/// the current the cancellation source removes so the mirrored rooter
/// input never goes negative; for the matched set it equals
/// 2K*(vss+vt)^2 to solver precision.
inline double doubler_dc_cancel_current(ModelSet set) {
    Circuit fe = detail::doubler_front_end(set);
    detail::Mna m(fe);
    auto sv = m.source_values(0.0);
    const int ip = m.vsrc_index("vinp");
    const int in = m.vsrc_index("vinn");
    const int isense = m.vsrc_index("vsense");
    std::vector<double> x(static_cast<size_t>(m.unknowns()), 0.0);
    const NewtonOptions opt;
    double best = 0.0;
    bool first = true;
    for (int i = -200; i <= 200; ++i) {
        const double vin = 0.1 * static_cast<double>(i) / 200.0;
        sv.v[static_cast<size_t>(ip)] = vin;
        sv.v[static_cast<size_t>(in)] = -vin;
        const auto outcome = detail::solve_point(m, sv, opt, x);
        if (!outcome.converged)
            throw std::runtime_error(
                "doubler_dc_cancel_current: front end failed to converge at vin = " +
                format_double(vin));
        const double irl = m.branch_current(x, isense);
        if (first || irl < best) best = irl;
        first = false;
    }
    return best;
}

/// The full chain: inverting branches, squaring pair, and the rooter fed
/// through an ideal current mirror (f1 senses the load current through
/// vsense) with the quiescent component removed by a cancellation source.
/// A weak bleed resistor keeps the mirror input node bounded when the
/// injected current crosses zero. Includes the 1 us / 4 ms transient
/// directive used by the demo.
inline Circuit build_doubler(ModelSet set) {
    Circuit c = detail::doubler_front_end(set);
    c.validated = false;
    const MosModelCard n = nmos_card(set);
    const double idc = doubler_dc_cancel_current(set);

    c.elements.push_back(CccsElement{"f1", "0", "gs", "vsense", 1.0});
    c.elements.push_back(ISourceElement{"idc", "gs", "0", idc});
    c.elements.push_back(ResistorElement{"rbleed", "gs", "0", 1e9});
    c.elements.push_back(detail::ref_mos("m7", "gs", "gs", "out", "out", n));
    c.elements.push_back(detail::ref_mos("m8", "out", "gs", "0", "0", n));
    c.directives.push_back(TranDirective{1e-6, 4e-3});
    detail::finish(c, "build_doubler");
    return c;
}

/// Writes the canonical netlist text of a circuit to a file
/// (bit-identical to emit_netlist output).
inline void write_netlist(const Circuit& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write netlist file: " + path);
    out << emit_netlist(c);
}

}  // namespace dblsim
