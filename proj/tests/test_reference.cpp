#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>

#include "dblsim/reference.hpp"
#include "oracles.hpp"

using namespace dblsim;
using Catch::Approx;

namespace {

int mos_count(const Circuit& c) {
    int n = 0;
    for (const Element& e : c.elements)
        if (std::holds_alternative<MosElement>(e)) ++n;
    return n;
}

int resistor_count(const Circuit& c) {
    int n = 0;
    for (const Element& e : c.elements)
        if (std::holds_alternative<ResistorElement>(e)) ++n;
    return n;
}

void set_dc(Circuit& c, const std::string& name, double v) {
    for (Element& e : c.elements)
        if (auto* vs = std::get_if<VSourceElement>(&e); vs && vs->name == name) {
            vs->dc = v;
            return;
        }
    FAIL("no source named " + name);
}

void set_current(Circuit& c, const std::string& name, double a) {
    for (Element& e : c.elements)
        if (auto* is = std::get_if<ISourceElement>(&e); is && is->name == name) {
            is->amperes = a;
            return;
        }
    FAIL("no current source named " + name);
}

}  // namespace

TEST_CASE("builders validate and round-trip", "[reference]") {
    for (ModelSet set : {ModelSet::Table1, ModelSet::Matched}) {
        for (const Circuit& c :
             {build_inverter(set), build_diffamp(set), build_sqrt(set),
              build_doubler(set)}) {
            REQUIRE(c.validated);
            auto pr = parse_netlist(emit_netlist(c));
            REQUIRE(pr.ok());
            CHECK(pr.circuit.same_content(c));
        }
    }
}

TEST_CASE("device counts match the stage descriptions", "[reference]") {
    CHECK(mos_count(build_inverter(ModelSet::Matched)) == 4);
    const Circuit da = build_diffamp(ModelSet::Matched);
    CHECK(mos_count(da) == 2);
    CHECK(resistor_count(da) == 1);
    CHECK(mos_count(build_sqrt(ModelSet::Matched)) == 2);
    CHECK(mos_count(build_doubler(ModelSet::Matched)) == 8);
}

TEST_CASE("matched inverter branches sit at zero for zero input", "[reference]") {
    Circuit c = build_inverter(ModelSet::Matched);
    OperatingPoint op = solve_dc(c);
    REQUIRE(op.converged);
    CHECK(node_voltage(c, op, "outa") == Approx(0.0).margin(1e-9));
    CHECK(node_voltage(c, op, "outb") == Approx(0.0).margin(1e-9));
}

TEST_CASE("matched inverter acts as unity-gain phase splitter in band",
          "[reference]") {
    Circuit c = build_inverter(ModelSet::Matched);
    for (double v = -0.3; v <= 0.3 + 1e-12; v += 0.06) {
        set_dc(c, "vinp", v);
        set_dc(c, "vinn", -v);
        OperatingPoint op = solve_dc(c);
        REQUIRE(op.converged);
        CHECK(node_voltage(c, op, "outa") == Approx(-v).margin(1e-6));
        CHECK(node_voltage(c, op, "outb") == Approx(v).margin(1e-6));
    }
}

TEST_CASE("inverter transfer curve is monotone nonincreasing", "[reference]") {
    const Circuit c = build_inverter(ModelSet::Matched);
    auto pts = dc_sweep(c, "vinp", -1.5, 1.5, 0.05);
    double prev = 1e9;
    for (const auto& p : pts) {
        REQUIRE(p.op.converged);
        const double vout = node_voltage(c, p.op, "outa");
        CHECK(vout <= prev + 1e-9);
        prev = vout;
    }
}

TEST_CASE("odd symmetry of the matched inverter sweep", "[reference]") {
    const Circuit c = build_inverter(ModelSet::Matched);
    auto pts = dc_sweep(c, "vinp", -0.3, 0.3, 0.05);
    const size_t n = pts.size();
    REQUIRE(n == 13);
    for (size_t i = 0; i < n; ++i) {
        const double a = node_voltage(c, pts[i].op, "outa");
        const double b = node_voltage(c, pts[n - 1 - i].op, "outa");
        CHECK(a == Approx(-b).margin(1e-6));
    }
}

TEST_CASE("squaring pair against its closed form", "[reference]") {
    Circuit c = build_diffamp(ModelSet::Matched);
    const ChainParams p = chain_params(ModelSet::Matched);
    const double rl = 1000.0;

    auto irl_at = [&](double vin) {
        set_dc(c, "vp", vin);
        set_dc(c, "vn", -vin);
        OperatingPoint op = solve_dc(c);
        REQUIRE(op.converged);
        return (kRefVdd - node_voltage(c, op, "sum")) / rl;
    };

    SECTION("quiescent current is 2K(vss+vt)^2 within 2%") {
        const double bias = p.vss + p.vt;
        CHECK(irl_at(0.0) == Approx(2.0 * p.k * bias * bias).epsilon(0.02));
    }

    SECTION("difference current is quadratic in the drive") {
        const double i0 = irl_at(0.0);
        std::vector<double> x2, dy;
        for (double vin = -0.1; vin <= 0.1 + 1e-12; vin += 0.02) {
            const double di = irl_at(vin) - i0;
            x2.push_back(vin * vin);
            dy.push_back(di);
            if (std::fabs(vin) > 1e-6)
                CHECK(di == Approx(2.0 * p.k * vin * vin).epsilon(0.02));
        }
        const double c2 = oracle::fit_proportional(x2, dy);
        CHECK(c2 == Approx(2.0 * p.k).epsilon(0.02));
        std::vector<double> yhat;
        for (double v2 : x2) yhat.push_back(c2 * v2);
        CHECK(oracle::r_squared(dy, yhat) > 0.999);
    }
}

TEST_CASE("transistor square-rooter follows c*sqrt(i/k)", "[reference]") {
    Circuit c = build_sqrt(ModelSet::Matched);
    const ChainParams p = chain_params(ModelSet::Matched);

    SECTION("a decade of input current fits the continuous-model constant") {
        std::vector<double> x, y;
        for (double i = 2e-5; i <= 2e-4 * (1.0 + 1e-9); i *= std::pow(10.0, 0.125)) {
            set_current(c, "iin", i);
            OperatingPoint op = solve_dc(c);
            REQUIRE(op.converged);
            x.push_back(std::sqrt(i / p.k));
            y.push_back(node_voltage(c, op, "out"));
        }
        const double fit = oracle::fit_proportional(x, y);
        CHECK(fit == Approx(0.4142).epsilon(0.05));
    }

    SECTION("zero input current gives zero output") {
        set_current(c, "iin", 0.0);
        OperatingPoint op = solve_dc(c);
        REQUIRE(op.converged);
        CHECK(node_voltage(c, op, "out") == Approx(0.0).margin(1e-6));
    }
}

TEST_CASE("matched doubler response is even in the drive", "[reference]") {
    // hold the inputs at antiphase DC values through zero-amplitude sin
    // sources and compare the output for +v and -v
    auto out_at = [](double v) {
        Circuit c = build_doubler(ModelSet::Matched);
        for (Element& e : c.elements)
            if (auto* vs = std::get_if<VSourceElement>(&e); vs && vs->sin) {
                const double sign = vs->sin->amplitude > 0.0 ? 1.0 : -1.0;
                vs->sin = SinSpec{sign * v, 0.0, 1000.0};
            }
        OperatingPoint op = solve_dc(c);
        REQUIRE(op.converged);
        return node_voltage(c, op, "out");
    };
    for (double v : {0.02, 0.05, 0.08, 0.1}) {
        CHECK(out_at(v) == Approx(out_at(-v)).margin(1e-6));
    }
}

TEST_CASE("doubler cancellation current matches the squaring-pair bias",
          "[reference]") {
    const ChainParams p = chain_params(ModelSet::Matched);
    const double bias = p.vss + p.vt;
    CHECK(doubler_dc_cancel_current(ModelSet::Matched) ==
          Approx(2.0 * p.k * bias * bias).epsilon(1e-6));
}

TEST_CASE("doubler transient runs and favors the second harmonic",
          "[reference]") {
    const Circuit c = build_doubler(ModelSet::Matched);
    TranOptions topt;
    topt.tstep = 2e-6;
    topt.tstop = 1e-3;  // one input cycle, smoke run
    const TranResult res = solve_tran(c, topt);
    const Waveform w = trim_to_cycles(res.node("out"), 1000.0);
    const HarmonicReport rep = harmonic_report(w, 1000.0, 4);
    CHECK(rep.doubling_ratio > 1.0);
}

TEST_CASE("builders export their netlists to files", "[reference]") {
    const Circuit c = build_sqrt(ModelSet::Table1);
    const std::string path = "/tmp/dblsim_test_sqrt.cir";
    write_netlist(c, path);
    std::FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    std::string text;
    char buf[4096];
    size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
    std::fclose(f);
    CHECK(text == emit_netlist(c));
    std::remove(path.c_str());
}
