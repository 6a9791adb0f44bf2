#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dblsim/cli.hpp"

using namespace dblsim;
using Catch::Approx;

namespace {

struct CliRun {
    int code = 0;
    std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = "/tmp/" + name;
    std::ofstream f(path, std::ios::binary);
    REQUIRE(f.good());
    f << text;
    return path;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        cells.push_back(cur);
        rows.push_back(std::move(cells));
    }
    return rows;
}

double cell_value(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    REQUIRE(ec == std::errc{});
    (void)p;
    return v;
}

const char* kDividerDeck = "V1 1 0 DC 1\nR1 1 2 1k\nR2 2 0 1k\n";

}  // namespace

TEST_CASE("csv values round-trip bit-exactly", "[cli]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 200; ++i) {
        const double v = (i % 3 == 0) ? u(rng) : u(rng) * 1e-9;
        const std::string s = format_double(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        REQUIRE(back == v);
    }
    CsvTable t;
    t.header = {"a", "b"};
    t.rows.push_back({"x,y", "plain"});
    CHECK(write_csv(t) == "a,b\n\"x,y\",plain\n");
}

TEST_CASE("check reports device and node counts", "[cli]") {
    const Circuit doubler = build_doubler(ModelSet::Matched);
    const std::string path = write_temp("cli_doubler.cir", emit_netlist(doubler));
    const CliRun r = cli({"check", path});
    CHECK(r.code == 0);
    CHECK(r.out == "ok: 8 mosfets, " + std::to_string(doubler.nodes.size()) +
                       " nodes\n");
}

TEST_CASE("op emits name,value rows", "[cli]") {
    const std::string path = write_temp("cli_divider.cir", kDividerDeck);
    const CliRun r = cli({"op", path});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() >= 4);
    CHECK(rows[0] == std::vector<std::string>{"name", "value"});
    CHECK(rows[2][0] == "v(2)");
    CHECK(cell_value(rows[2][1]) == Approx(0.5).margin(1e-9));
    // SPICE sign convention: the driving source sees a negative current
    CHECK(rows[3][0] == "i(v1)");
    CHECK(cell_value(rows[3][1]) == Approx(-0.5e-3).epsilon(1e-6));
}

TEST_CASE("dc sweep output", "[cli]") {
    const std::string path = write_temp("cli_divider2.cir", kDividerDeck);
    const CliRun r =
        cli({"dc", path, "--source", "v1", "--start=-1", "--stop=1", "--step=0.5"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] ==
          std::vector<std::string>{"v(v1)_v", "v(1)_v", "v(2)_v", "converged"});
    CHECK(cell_value(rows[1][0]) == -1.0);
    CHECK(cell_value(rows[1][2]) == Approx(-0.5).margin(1e-9));
    CHECK(rows[5][3] == "1");
}

TEST_CASE("tran output with explicit stepping", "[cli]") {
    const std::string path = write_temp(
        "cli_rc.cir", "V1 1 0 DC 1\nR1 1 2 1k\nC1 2 0 1u\n");
    const CliRun r =
        cli({"tran", path, "--tstep", "10u", "--tstop", "1m"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 102);  // header + 101 samples
    CHECK(rows[0] == std::vector<std::string>{"t_s", "v(1)_v", "v(2)_v"});
    CHECK(cell_value(rows[101][0]) == Approx(1e-3));
}

TEST_CASE("tran falls back to the deck directive", "[cli]") {
    const std::string path = write_temp(
        "cli_sin.cir", "VIN a 0 SIN(0 0.1 1000)\nR1 a 0 1k\n.tran 100u 1m\n");
    const CliRun r = cli({"tran", path});
    REQUIRE(r.code == 0);
    CHECK(parse_csv(r.out).size() == 12);
    const CliRun none =
        cli({"tran", write_temp("cli_notran.cir", kDividerDeck)});
    CHECK(none.code == 1);
    CHECK(none.err.find(".tran") != std::string::npos);
}

TEST_CASE("spectrum reports harmonic magnitudes", "[cli]") {
    const std::string path = write_temp(
        "cli_spec.cir", "VIN a 0 SIN(0 0.1 1000)\nR1 a 0 1k\n.tran 1u 4m\n");
    const CliRun r = cli({"spectrum", path, "--node", "a", "--f0", "1000"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 10);  // header, dc, k=1..8
    CHECK(rows[0] == std::vector<std::string>{"k", "freq_hz", "magnitude_v"});
    CHECK(cell_value(rows[1][2]) == Approx(0.0).margin(1e-9));   // dc
    CHECK(cell_value(rows[2][2]) == Approx(0.1).margin(1e-9));   // fundamental
    CHECK(cell_value(rows[3][2]) == Approx(0.0).margin(1e-9));   // 2nd
    CHECK(r.err.find("doubling_ratio") != std::string::npos);

    // identical invocations produce byte-identical CSV
    const CliRun again = cli({"spectrum", path, "--node", "a", "--f0", "1000"});
    CHECK(again.out == r.out);
}

TEST_CASE("demo runs self-contained and doubles", "[cli]") {
    const CliRun r = cli({"demo", "--modelset", "matched"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 10);
    const double m1 = cell_value(rows[2][2]);
    const double m2 = cell_value(rows[3][2]);
    CHECK(m2 > 5.0 * std::max(m1, 1e-15));
    CHECK(r.err.find("predicted 2f0 magnitude") != std::string::npos);
}

TEST_CASE("user errors exit 1 with file and line diagnostics", "[cli]") {
    SECTION("missing file") {
        const CliRun r = cli({"check", "/tmp/does_not_exist_anywhere.cir"});
        CHECK(r.code == 1);
        CHECK(r.out.empty());
    }
    SECTION("parse errors carry file:line") {
        const std::string path =
            write_temp("cli_bad.cir", "R1 1 0 1k\nQ9 1 0 2\n");
        const CliRun r = cli({"check", path});
        CHECK(r.code == 1);
        CHECK(r.err.find(path + ":2: error:") != std::string::npos);
    }
    SECTION("validation failure") {
        const std::string path = write_temp("cli_val.cir", "R1 1 2 1k\n");
        const CliRun r = cli({"op", path});
        CHECK(r.code == 1);
        CHECK(r.err.find("ground") != std::string::npos);
    }
    SECTION("unknown sweep source") {
        const std::string path = write_temp("cli_div3.cir", kDividerDeck);
        const CliRun r = cli({"dc", path, "--source", "vx", "--start=0",
                              "--stop=1", "--step=0.5"});
        CHECK(r.code == 1);
        CHECK(r.err.find("unknown source") != std::string::npos);
    }
    SECTION("bad spectrum window") {
        const std::string path = write_temp(
            "cli_spec2.cir", "VIN a 0 SIN(0 0.1 1000)\nR1 a 0 1k\n.tran 1u 4m\n");
        // under one cycle in the window
        const CliRun low = cli({"spectrum", path, "--node", "a", "--f0", "100"});
        CHECK(low.code == 1);
        // fundamental beyond Nyquist
        const CliRun high =
            cli({"spectrum", path, "--node", "a", "--f0", "600k"});
        CHECK(high.code == 1);
    }
}

TEST_CASE("numerical failures exit 2", "[cli]") {
    const std::string path =
        write_temp("cli_conflict.cir", "V1 1 0 DC 1\nV2 1 0 DC 2\nR1 1 0 1k\n");
    const CliRun r = cli({"op", path});
    CHECK(r.code == 2);
    CHECK(r.err.find("failed") != std::string::npos);
}

TEST_CASE("--out writes a file, honoring the output directory override",
          "[cli]") {
    namespace fs = std::filesystem;
    const std::string path = write_temp("cli_div4.cir", kDividerDeck);
    const std::string dir = "/tmp/dblsim_outdir";
    fs::create_directories(dir);
    ::setenv("DBLSIM_OUT_DIR", dir.c_str(), 1);
    const CliRun r = cli({"op", path, "--out", "op_result.csv"});
    ::unsetenv("DBLSIM_OUT_DIR");
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream f(dir + "/op_result.csv");
    REQUIRE(f.good());
    std::string first;
    std::getline(f, first);
    CHECK(first == "name,value");
    fs::remove_all(dir);
}

TEST_CASE("every shipped netlist checks clean", "[cli]") {
    for (const char* name :
         {"divider.cir", "rc_lowpass.cir", "process_cards.cir", "inverter.cir",
          "squaring_pair.cir", "square_rooter.cir", "doubler_matched.cir",
          "doubler_table1.cir"}) {
        const std::string path = std::string(DBLSIM_NETLIST_DIR) + "/" + name;
        INFO(path);
        const CliRun r = cli({"check", path});
        CHECK(r.code == 0);
        CHECK(r.out.rfind("ok:", 0) == 0);
    }
}

TEST_CASE("the installed binary answers check", "[cli]") {
    const std::string path = write_temp("cli_div5.cir", kDividerDeck);
    const std::string cmd =
        std::string(DBLSIM_CLI_PATH) + " check " + path + " > /tmp/dblsim_check_out.txt 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc == 0);
    std::ifstream f("/tmp/dblsim_check_out.txt");
    std::string line;
    std::getline(f, line);
    CHECK(line == "ok: 0 mosfets, 3 nodes");
}
