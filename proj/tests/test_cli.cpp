#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path dir = fs::path("cli_test_io");
    fs::create_directories(dir);
    const fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
    const fs::path err = dir / ("err" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string(NLBS_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WEXITSTATUS(raw);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

TEST_CASE("eval: trivial linear family has u = d*S", "[cli]") {
    const auto r = run_cli("eval --family linear --d 1 --s-range 1:5:5 --t-range 0:0:1");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# runspec:") != std::string::npos);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 6);  // header + 5 points
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::stod(rows[i][3]) == Catch::Approx(std::stod(rows[i][0])));  // u == S
        CHECK(rows[i][4] == "1");                                              // delta == d
        CHECK(rows[i].back() == "true");
    }
}

TEST_CASE("eval: out-of-domain rows keep the grid rectangular", "[cli]") {
    // u1 with |c| = 2 at t = 0 is defined only for S >= 1
    const auto r = run_cli("eval --family u1 --c 2 --s-range 0.5:2:4 --t-range 0:0:1");
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[1].back() == "false");
    CHECK(rows[1][3].empty());  // no u value
    CHECK(rows[4].back() == "true");
    CHECK(!rows[4][3].empty());
}

TEST_CASE("eval: byte-identical outputs for identical runspecs", "[cli]") {
    const std::string args =
        "eval --family u2 --c 0.5 --sigma 0.4 --s-range 0.5:5:40 --t-range 0:0.5:5";
    const auto a = run_cli(args + " --out cli_test_io/det_a.csv");
    const auto b = run_cli(args + " --out cli_test_io/det_b.csv");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(slurp("cli_test_io/det_a.csv") == slurp("cli_test_io/det_b.csv"));
    CHECK(!slurp("cli_test_io/det_a.csv").empty());
}

TEST_CASE("greeks: analytic and finite-difference Delta agree", "[cli]") {
    const auto r = run_cli("greeks --family u3.2 --c 1 --s-range 2:4:5 --t-range 0.01:0.5:3");
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() > 1);
    CHECK(rows[0][5] == "delta_fd");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][4].empty() || rows[i][5].empty()) continue;
        CHECK(std::stod(rows[i][4]) == Catch::Approx(std::stod(rows[i][5])).margin(1e-6));
    }
}

TEST_CASE("sweep: one surface per c, ordered by |c| pointwise", "[cli]") {
    const auto r = run_cli(
        "sweep --family u2 --c-list 0.01,1,5,10,20 --sigma 0.4 "
        "--s-range 5:15:3 --t-range 1:1:1 --out cli_test_io/sw.csv");
    REQUIRE(r.code == 0);
    // u2 curves at fixed S sit lower as |c| grows
    double prev = 1e300;
    for (const char* v : {"0.01", "1", "5", "10", "20"}) {
        const auto rows = parse_csv(slurp(std::string("cli_test_io/sw_c=") + v + ".csv"));
        REQUIRE(rows.size() == 4);
        REQUIRE(rows[1].back() == "true");  // S = 5 in the common domain
        const double u = std::stod(rows[1][3]);
        CHECK(u < prev);
        prev = u;
    }
}

TEST_CASE("solve and converge run end to end on the u3 family", "[cli]") {
    const auto s = run_cli(
        "solve --family u3.2 --c 0.5 --model frey --x-range -0.8:1.61 "
        "--nx 101 --nt 10 --T 0.5 --out cli_test_io/solve.csv");
    REQUIRE(s.code == 0);
    const auto rows = parse_csv(slurp("cli_test_io/solve.csv"));
    REQUIRE(rows.size() == static_cast<std::size_t>(1 + 101 * 11));
    // ascending t blocks: first data row at t = 0
    CHECK(std::stod(rows[1][1]) == Catch::Approx(0.0));

    const auto c = run_cli(
        "converge --family u3.2 --c 0.5 --model frey --x-range -0.8:1.61 "
        "--levels 101:13,201:25 --T 0.5 --format json");
    REQUIRE(c.code == 0);
    CHECK(c.out.find("err_max") != std::string::npos);
    CHECK(c.out.find("\"rows\"") != std::string::npos);
}

TEST_CASE("residual: report with gates and deviations", "[cli]") {
    const auto r = run_cli("residual --sigma 0.4 --rho 1 --c 0.5");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("[pass]") != std::string::npos);
    CHECK(r.out.find("published-formula deviations") != std::string::npos);
    CHECK(r.out.find("u1-linear-coefficient") != std::string::npos);
}

TEST_CASE("exit codes: validation and domain errors", "[cli]") {
    CHECK(run_cli("eval --family nosuch --s-range 1:2:3").code == 2);
    CHECK(run_cli("eval --family u2 --c 0 --s-range 1:2:3").code == 2);
    CHECK(run_cli("eval --family u2 --rho 0 --s-range 1:2:3").code == 2);
    CHECK(run_cli("eval --family linear --s-range 5:1:10").code == 2);
    // marching the r family diverges: model-validity exit
    const auto r = run_cli(
        "solve --family r --c 0.5 --model frey --x-range -1.6:1.6 --nx 201 --nt 25 --T 0.5 "
        "--out cli_test_io/ill.csv");
    CHECK(r.code == 3);
    CHECK(r.err.find("newton") != std::string::npos);
}

TEST_CASE("config file feeds the runspec, flags override", "[cli]") {
    {
        std::ofstream os("cli_test_io/cfg.json");
        os << R"({"family":"linear","d":2.0,"s_range":"1:3:3","t_range":"0:0:1"})";
    }
    const auto r = run_cli("eval --config cli_test_io/cfg.json --family linear --d 3");
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 4);
    CHECK(std::stod(rows[1][3]) == Catch::Approx(3.0 * std::stod(rows[1][0])));
}
