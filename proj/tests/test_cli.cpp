#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sys/wait.h>
#include <unistd.h>
#include <string>

#include "secagg/json_io.hpp"
#include "secagg/keyplan.hpp"

namespace fs = std::filesystem;
using secagg::ordered_json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(SECAGG_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("secagg_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("keygen writes the built-in example table verbatim") {
    const fs::path out = scratch_dir() / "ex1.json";
    auto r = run_cli("keygen --example 1 --out " + q(out));
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("r_star = 3") != std::string::npos);
    CHECK(secagg::read_text_file(out.string()) ==
          secagg::canonical_dump(secagg::table_to_json(secagg::example1_table())));

    const fs::path out2 = scratch_dir() / "ex2.json";
    CHECK(run_cli("keygen --example 2 --out " + q(out2)).exit_code == 0);
    CHECK(secagg::read_text_file(out2.string()) ==
          secagg::canonical_dump(secagg::table_to_json(secagg::example2_table())));
}

TEST_CASE("keygen is deterministic per seed") {
    const fs::path a = scratch_dir() / "a.json", b = scratch_dir() / "b.json";
    CHECK(run_cli("keygen --U 3 --V 2 --T 0 --q 11 --seed 7 --out " + q(a)).exit_code == 0);
    CHECK(run_cli("keygen --U 3 --V 2 --T 0 --q 11 --seed 7 --out " + q(b)).exit_code == 0);
    CHECK(secagg::read_text_file(a.string()) == secagg::read_text_file(b.string()));

    const fs::path c = scratch_dir() / "c.json";
    CHECK(run_cli("keygen --U 3 --V 2 --T 0 --q 11 --seed 8 --out " + q(c)).exit_code == 0);
    CHECK(secagg::read_text_file(a.string()) != secagg::read_text_file(c.string()));
}

TEST_CASE("keygen over F_2 succeeds for (3,2,0) and fails for (4,3,2)") {
    const fs::path out = scratch_dir() / "q2.json";
    auto ok = run_cli("keygen --U 3 --V 2 --T 0 --q 2 --seed 1 --out " + q(out));
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("validation: pass") != std::string::npos);

    auto fail = run_cli("keygen --U 4 --V 3 --T 2 --q 2 --seed 1 --attempts 5 --out " +
                        q(scratch_dir() / "nope.json"));
    CHECK(fail.exit_code == 1);
    CHECK(fail.output.find("larger prime") != std::string::npos);
}

TEST_CASE("simulate agrees across servers and honors --l") {
    const fs::path out = scratch_dir() / "tr.json";
    auto r = run_cli("simulate --example 1 --seed 1 --out " + q(out));
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("agree and match the input sum: yes") != std::string::npos);

    auto r8 = run_cli("simulate --example 1 --seed 1 --l 8 --out " + q(out));
    CHECK(r8.exit_code == 0);
    const auto j = ordered_json::parse(secagg::read_text_file(out.string()));
    CHECK(j.at("x").at(0).size() == 8);
    CHECK(j.at("decoded").size() == 3);
}

TEST_CASE("simulate with an all-zero input file decodes zero") {
    const fs::path inputs = scratch_dir() / "zeros.json";
    secagg::write_text_file(inputs.string(), "[[0],[0],[0],[0],[0],[0]]\n");
    const fs::path out = scratch_dir() / "tr0.json";
    auto r = run_cli("simulate --example 1 --seed 3 --inputs " + q(inputs) + " --out " + q(out));
    CHECK(r.exit_code == 0);
    const auto j = ordered_json::parse(secagg::read_text_file(out.string()));
    for (const auto& d : j.at("decoded")) CHECK(d == ordered_json::array({0}));
}

TEST_CASE("verify exits 0 on the first example and reports its rates") {
    const fs::path out = scratch_dir() / "rep1.json";
    auto r = run_cli("verify --example 1 --seed 1 --trials 100 --out " + q(out));
    CHECK(r.exit_code == 0);
    const auto j = ordered_json::parse(secagg::read_text_file(out.string()));
    CHECK(j.at("rates").at("achieved").at("R_Z_sigma") == 3);
    CHECK(j.at("rates").at("optimal") == true);
    CHECK(j.at("security").at("evaluations") == 3);

    auto again = run_cli("verify --example 1 --seed 1 --trials 100 --out " +
                         q(scratch_dir() / "rep1b.json"));
    CHECK(again.exit_code == 0);
    CHECK(secagg::read_text_file(out.string()) ==
          secagg::read_text_file((scratch_dir() / "rep1b.json").string()));
}

TEST_CASE("verify flags the second example as insecure (exit 2) with witnesses") {
    const fs::path out = scratch_dir() / "rep2.json";
    auto r = run_cli("verify --example 2 --seed 1 --trials 50 --out " + q(out));
    CHECK(r.exit_code == 2);
    const auto j = ordered_json::parse(secagg::read_text_file(out.string()));
    CHECK(j.at("security").at("ok") == false);
    CHECK(j.at("security").at("failures").size() == 13);
    CHECK(j.at("exit_code") == 2);
}

TEST_CASE("verify with a sampled policy reports partial coverage (exit 4)") {
    const fs::path table = scratch_dir() / "gen332.json";
    CHECK(run_cli("keygen --U 3 --V 3 --T 2 --q 17 --seed 4 --out " + q(table)).exit_code == 0);
    auto r = run_cli("verify --table " + q(table) + " --policy sample:5 --seed 1 --trials 20 --out " +
                     q(scratch_dir() / "rep4.json"));
    CHECK(r.exit_code == 4);
}

TEST_CASE("conflicting or missing parameters are config errors (exit 1)") {
    CHECK(run_cli("verify --example 1 --U 4").exit_code == 1);
    CHECK(run_cli("keygen --U 3").exit_code == 1);
    CHECK(run_cli("simulate --table " + q(scratch_dir() / "missing.json")).exit_code == 1);
    CHECK(run_cli("verify --example 1 --policy bogus").exit_code == 1);
}

TEST_CASE("config file supplies defaults, flags override") {
    const fs::path cfg = scratch_dir() / "cfg.json";
    secagg::write_text_file(cfg.string(),
                            "{\"U\":3,\"V\":2,\"T\":0,\"q\":11,\"seed\":7}\n");
    const fs::path a = scratch_dir() / "cfg_a.json";
    CHECK(run_cli("keygen --config " + q(cfg) + " --out " + q(a)).exit_code == 0);
    const fs::path b = scratch_dir() / "cfg_b.json";
    CHECK(run_cli("keygen --U 3 --V 2 --T 0 --q 11 --seed 7 --out " + q(b)).exit_code == 0);
    CHECK(secagg::read_text_file(a.string()) == secagg::read_text_file(b.string()));

    // flag overrides the config's seed
    const fs::path c = scratch_dir() / "cfg_c.json";
    CHECK(run_cli("keygen --config " + q(cfg) + " --seed 8 --out " + q(c)).exit_code == 0);
    CHECK(secagg::read_text_file(a.string()) != secagg::read_text_file(c.string()));
}

TEST_CASE("oracle subcommand") {
    auto search = run_cli("oracle --search-min-q --U 3 --V 2 --T 0 --seed 1 --out " +
                          q(scratch_dir() / "minq.json"));
    CHECK(search.exit_code == 0);
    CHECK(search.output.find("smallest valid q = 2") != std::string::npos);

    // a field this small is inside the enumeration budget, so verify also
    // runs the full oracle cross-check
    const fs::path rep = scratch_dir() / "minq_rep.json";
    auto v = run_cli("verify --table " + q(scratch_dir() / "minq.json") + " --seed 1 --out " + q(rep));
    CHECK(v.exit_code == 0);
    const auto j = ordered_json::parse(secagg::read_text_file(rep.string()));
    CHECK(j.at("oracle_cross_check").at("in_budget") == true);
    CHECK(j.at("oracle_cross_check").at("security_agrees") == true);
    CHECK(j.at("oracle_cross_check").at("collections_agree") ==
          j.at("oracle_cross_check").at("collections_checked"));

    // the example-1 field is out of budget for full enumeration: 11^9 states
    auto over = run_cli("oracle --example 1 --seed 1");
    CHECK(over.exit_code == 4);

    auto ok = run_cli("oracle --table " + q(scratch_dir() / "minq.json") +
                      " --seed 1 --collections 40");
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("40/40 agree") != std::string::npos);
}
