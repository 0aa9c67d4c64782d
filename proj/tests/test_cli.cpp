#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "magrod/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path work = fs::temp_directory_path() / "magrod_cli_tests";

// Runs the tool with the working directory's output dir; returns the exit
// code and captures the diagnostic stream.
struct RunResult {
    int code;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    const fs::path errfile = work / "stderr.txt";
    const std::string cmd = std::string(MAGROD_CLI_BIN) + " --output-dir " +
                            work.string() + " " + args + " 2>" +
                            errfile.string() + " >/dev/null";
    const int rc = std::system(cmd.c_str());
    std::ifstream es(errfile);
    std::ostringstream buf;
    buf << es.rdbuf();
    return {WEXITSTATUS(rc), buf.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

struct Setup {
    Setup() {
        fs::remove_all(work);
        fs::create_directories(work);
    }
};
const Setup setup_once;

} // namespace

TEST_CASE("equilibrium run emits data and reproducible metadata") {
    const auto r =
        run_cli("equilibria --alpha 0.5 --mu 0.1 --nu 0.01 --eps 0.01");
    REQUIRE(r.code == 0);

    std::ifstream csv(work / "equilibria.csv");
    const auto table = magrod::read_csv(csv);
    REQUIRE(table.header.size() == 8);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.header[1] == "theta");
    CHECK(table.rows[0][1] == Catch::Approx(0.546818560).epsilon(1e-8));
    CHECK(table.rows[0][4] == Catch::Approx(0.861773548).epsilon(1e-8));
    CHECK(table.rows[0][7] == Catch::Approx(0.568170293949725).epsilon(1e-10));

    const json meta = json::parse(slurp(work / "equilibria_meta.json"));
    CHECK(meta["tool"] == "magrod");
    CHECK(meta["command"] == "equilibria");
    CHECK(meta["params"]["alpha"] == 0.5);
    CHECK(meta["params"]["nu"] == 0.01);
    CHECK(meta["outputs"] == json::array({"equilibria.csv"}));
    // no wall-clock fields: a rerun must be byte-identical
    CHECK(!meta.contains("timestamp"));
}

TEST_CASE("domain failures exit 1 and name the error") {
    const auto r =
        run_cli("equilibria --alpha 0.5 --mu 0.015 --nu 0.01 --eps 0.01");
    CHECK(r.code == 1);
    CHECK(r.err.find("NoEquilibrium") != std::string::npos);
}

TEST_CASE("usage failures exit 2") {
    CHECK(run_cli("equilibria --alpha notanumber").code == 2);
    CHECK(run_cli("no-such-command").code == 2);
    CHECK(run_cli("integrate --t1 5").code == 2);  // missing required --y0
    CHECK(run_cli("").code == 2);                  // a subcommand is required
}

TEST_CASE("help and version exit cleanly") {
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("equilibria --help").code == 0);
    CHECK(run_cli("--version").code == 0);
}

TEST_CASE("identical invocations produce identical bytes") {
    REQUIRE(run_cli("integrate --y0 1.2 0 0.3 0.7 --t1 30 -o det_a").code ==
            0);
    REQUIRE(run_cli("integrate --y0 1.2 0 0.3 0.7 --t1 30 -o det_b").code ==
            0);
    CHECK(slurp(work / "det_a.csv") == slurp(work / "det_b.csv"));
}

TEST_CASE("metadata is sufficient to replay a run") {
    REQUIRE(run_cli("melnikov --alpha 0.5 --mu 1e-3 --nu 1e-4 --eps 0.01 "
                    "--gamma-hat 1.0 --grid 32 -o replay_a")
                .code == 0);
    const json meta = json::parse(slurp(work / "replay_a_meta.json"));

    std::ostringstream cmd;
    cmd << "melnikov --alpha " << meta["params"]["alpha"].get<double>()
        << " --mu " << meta["params"]["mu"].get<double>() << " --nu "
        << meta["params"]["nu"].get<double>() << " --eps "
        << meta["params"]["eps"].get<double>() << " --gamma-hat "
        << meta["params"]["gamma_hat"].get<double>() << " --grid "
        << meta["options"]["grid"].get<int>() << " --quad-nodes "
        << meta["options"]["quad_nodes"].get<int>() << " -o replay_b";
    REQUIRE(run_cli(cmd.str()).code == 0);
    CHECK(slurp(work / "replay_a.csv") == slurp(work / "replay_b.csv"));
    CHECK(slurp(work / "replay_a_zeros.csv") ==
          slurp(work / "replay_b_zeros.csv"));

    // the zeros of the splitting function sit near 0 and pi
    std::ifstream zf(work / "replay_a_zeros.csv");
    const auto zeros = magrod::read_csv(zf);
    REQUIRE(zeros.rows.size() == 2);
    CHECK(std::abs(zeros.rows[0][0]) < 1e-2);
    CHECK(zeros.rows[1][0] == Catch::Approx(magrod::pi).margin(1e-2));
}

TEST_CASE("config files feed flags and the command line wins") {
    {
        std::ofstream cfg(work / "run.ini");
        cfg << "[integrate]\n"
            << "y0=0.9 0.2 0.1 0.8\n"
            << "t1=10\n";
    }
    REQUIRE(run_cli("--config " + (work / "run.ini").string() +
                    " integrate -o cfg_base")
                .code == 0);
    REQUIRE(run_cli("--config " + (work / "run.ini").string() +
                    " integrate --t1 5 -o cfg_override")
                .code == 0);
    std::ifstream a(work / "cfg_base.csv"), b(work / "cfg_override.csv");
    const auto ta = magrod::read_csv(a), tb = magrod::read_csv(b);
    CHECK(ta.rows.front()[1] == Catch::Approx(0.9));
    CHECK(ta.rows.back()[0] == Catch::Approx(10.0));
    CHECK(tb.rows.back()[0] == Catch::Approx(5.0));
}

TEST_CASE("analytic loop sample keeps the axial momentum pinned") {
    REQUIRE(run_cli("homoclinic-analytic --alpha 0.8 --points 41 --t-max 12 "
                    "-o loop")
                .code == 0);
    std::ifstream is(work / "loop.csv");
    const auto t = magrod::read_csv(is);
    REQUIRE(t.rows.size() == 41);
    for (const auto& row : t.rows) CHECK(row[4] == 1.0);
    // symmetric sampling: theta is even in t
    CHECK(t.rows.front()[1] == Catch::Approx(t.rows.back()[1]).epsilon(1e-12));
}

TEST_CASE("amplitude curve is monotone over the sampled range") {
    REQUIRE(run_cli("delta --alpha-min 0.3 --alpha-max 3.0 --points 28 "
                    "-o amp")
                .code == 0);
    std::ifstream is(work / "amp.csv");
    const auto t = magrod::read_csv(is);
    REQUIRE(t.rows.size() == 28);
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        CHECK(t.rows[i][1] > t.rows[i - 1][1]);
    CHECK(run_cli("delta --alpha-min 2 --alpha-max 1").code == 2);
}

TEST_CASE("number formatting round-trips exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int k = 0; k < 2000; ++k) {
        const double x = u(rng) * std::pow(10.0, int(rng() % 25) - 12);
        const double back = std::stod(magrod::format_number(x));
        REQUIRE(back == x);
    }
    CHECK(magrod::format_number(0.0) == "0e+00");
    CHECK(magrod::format_number(1.0) == "1e+00");
}

TEST_CASE("csv reader rejects malformed tables") {
    {
        std::istringstream empty("");
        CHECK_THROWS_AS(magrod::read_csv(empty), std::invalid_argument);
    }
    {
        std::istringstream ragged("a,b\n1,2\n3\n");
        CHECK_THROWS_AS(magrod::read_csv(ragged), std::invalid_argument);
    }
    {
        std::istringstream bad("a,b\n1,zzz\n");
        CHECK_THROWS_AS(magrod::read_csv(bad), std::invalid_argument);
    }
    {
        std::istringstream ok("a,b\n1,2e-3\n");
        const auto t = magrod::read_csv(ok);
        CHECK(t.rows[0][1] == 2e-3);
    }
}
