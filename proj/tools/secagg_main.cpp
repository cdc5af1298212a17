// secagg: generate key-coefficient tables, simulate the two-hop aggregation
// protocol, and machine-check correctness, collusion security, and rate
// optimality. All outputs are canonical JSON and fully determined by the seed.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "secagg/assurance.hpp"
#include "secagg/json_io.hpp"
#include "secagg/keyplan.hpp"
#include "secagg/oracle.hpp"
#include "secagg/protocol.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSecurity = 2;
constexpr int kExitCorrectness = 3;
constexpr int kExitPartial = 4;

struct Options {
    std::uint64_t U = 0, V = 0, T = 0, q = 0, seed = 0;
    std::uint64_t l = 1;
    int example = 0;
    std::string table_path;
    std::string inputs_path;
    std::string out;
    std::string policy;
    std::string config_path;
    std::uint64_t trials = 100;
    std::uint64_t attempts = 1000;
    std::uint64_t budget = 2'000'000;
    std::uint64_t collections = 200;
    bool search_min_q = false;
};

struct Flags {
    bool U = false, V = false, T = false, q = false, seed = false, l = false, example = false;
    bool table = false, inputs = false, out = false, policy = false, trials = false;
    bool attempts = false, budget = false, collections = false;
};

void add_common(CLI::App* cmd, Options& o, Flags& f) {
    cmd->add_option("--U", o.U, "number of servers (>= 3)")
        ->each([&](const std::string&) { f.U = true; });
    cmd->add_option("--V", o.V, "users per server (>= 1)")
        ->each([&](const std::string&) { f.V = true; });
    cmd->add_option("--T", o.T, "maximum colluding users")
        ->each([&](const std::string&) { f.T = true; });
    cmd->add_option("--q", o.q, "prime field modulus (default: smallest safe prime)")
        ->each([&](const std::string&) { f.q = true; });
    cmd->add_option("--seed", o.seed, "master seed; every random draw derives from it")
        ->each([&](const std::string&) { f.seed = true; });
    cmd->add_option("--example", o.example, "built-in construction: 1 = (3,2,0) over F_11, 2 = (3,3,2) over F_17")
        ->check(CLI::Range(1, 2))
        ->each([&](const std::string&) { f.example = true; });
    cmd->add_option("--table", o.table_path, "read the coefficient table from a JSON file")
        ->each([&](const std::string&) { f.table = true; });
    cmd->add_option("--out", o.out, "output file path")
        ->each([&](const std::string&) { f.out = true; });
    cmd->add_option("--config", o.config_path, "JSON config file; flags override it");
}

/// Applies the JSON config file underneath any flags the user passed.
void merge_config(Options& o, const Flags& f) {
    if (o.config_path.empty()) return;
    const auto j = secagg::ordered_json::parse(secagg::read_text_file(o.config_path));
    auto take_u64 = [&](const char* key, bool have, std::uint64_t& dst) {
        if (!have && j.contains(key)) dst = j.at(key).get<std::uint64_t>();
    };
    take_u64("U", f.U, o.U);
    take_u64("V", f.V, o.V);
    take_u64("T", f.T, o.T);
    take_u64("q", f.q, o.q);
    take_u64("seed", f.seed, o.seed);
    take_u64("l", f.l, o.l);
    take_u64("trials", f.trials, o.trials);
    take_u64("attempts", f.attempts, o.attempts);
    take_u64("budget", f.budget, o.budget);
    if (!f.example && j.contains("example")) o.example = j.at("example").get<int>();
    if (!f.table && j.contains("table")) o.table_path = j.at("table").get<std::string>();
    if (!f.inputs && j.contains("inputs")) o.inputs_path = j.at("inputs").get<std::string>();
    if (!f.out && j.contains("out")) o.out = j.at("out").get<std::string>();
    if (!f.policy && j.contains("policy")) o.policy = j.at("policy").get<std::string>();
}

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

secagg::SystemParams example_params(int example) {
    return example == 1 ? secagg::SystemParams{3, 2, 0, 11, 0} : secagg::SystemParams{3, 3, 2, 17, 0};
}

/// Resolves (U,V,T,q): --example pins the tuple and conflicts are config
/// errors; otherwise U and V are required and q defaults to the smallest
/// prime above the validity degree bound.
secagg::SystemParams resolve_params(const Options& o, const Flags& f) {
    secagg::SystemParams p{o.U, o.V, o.T, o.q, o.seed};
    if (o.example != 0) {
        const secagg::SystemParams ex = example_params(o.example);
        if ((f.U && p.U != ex.U) || (f.V && p.V != ex.V) || (f.T && p.T != ex.T) ||
            (f.q && p.q != ex.q))
            throw ConfigError("--example " + std::to_string(o.example) + " requires (U,V,T,q)=(" +
                              std::to_string(ex.U) + "," + std::to_string(ex.V) + "," +
                              std::to_string(ex.T) + "," + std::to_string(ex.q) + ")");
        p.U = ex.U; p.V = ex.V; p.T = ex.T; p.q = ex.q;
    }
    if (p.U == 0 || p.V == 0) throw ConfigError("missing --U/--V (or --example/--table/--config)");
    if (p.q == 0) p.q = secagg::default_modulus(p.U, p.V, p.T);
    p.validate();
    return p;
}

struct ResolvedTable {
    secagg::CoefficientTable table;
    std::string source;  // "generated" | "example1" | "example2" | file path
    std::size_t attempts_used = 0;
};

ResolvedTable resolve_table(const Options& o, const Flags& f) {
    if (!o.table_path.empty()) {
        secagg::CoefficientTable t = secagg::read_table(o.table_path);
        if (o.example != 0) {
            const auto ex = example_params(o.example);
            if (!(t.params.U == ex.U && t.params.V == ex.V && t.params.T == ex.T && t.params.q == ex.q))
                throw ConfigError("--table parameters conflict with --example");
        }
        return {std::move(t), o.table_path, 0};
    }
    if (o.example != 0) {
        resolve_params(o, f);  // reject flags that conflict with the pinned tuple
        return o.example == 1 ? ResolvedTable{secagg::example1_table(), "example1", 0}
                              : ResolvedTable{secagg::example2_table(), "example2", 0};
    }
    const secagg::SystemParams p = resolve_params(o, f);
    secagg::GeneratedTable g = secagg::generate_table(p, o.attempts);
    return {std::move(g.table), "generated", g.attempts_used};
}

secagg::EnumerationPolicy resolve_policy(const Options& o, const secagg::SystemParams& p) {
    if (o.policy.empty()) return secagg::EnumerationPolicy::auto_select(p);
    if (o.policy == "exhaustive") return secagg::EnumerationPolicy::exhaustive();
    if (o.policy.rfind("sample:", 0) == 0) {
        const std::uint64_t n = std::stoull(o.policy.substr(7));
        if (n == 0) throw ConfigError("--policy sample:N needs N >= 1");
        return secagg::EnumerationPolicy::sample(n);
    }
    throw ConfigError("--policy must be 'exhaustive' or 'sample:N'");
}

secagg::ordered_json resolved_config_json(const ResolvedTable& rt, const Options& o,
                                          const std::string& policy_str) {
    secagg::ordered_json c;
    c["U"] = rt.table.params.U;
    c["V"] = rt.table.params.V;
    c["T"] = rt.table.params.T;
    c["q"] = rt.table.params.q;
    c["seed"] = o.seed;
    c["l"] = o.l;
    c["table_source"] = rt.source;
    c["policy"] = policy_str;
    c["trials"] = o.trials;
    return c;
}

int cmd_keygen(Options& o, const Flags& f) {
    ResolvedTable rt = [&] {
        if (o.example != 0) {
            resolve_params(o, f);
            return o.example == 1 ? ResolvedTable{secagg::example1_table(), "example1", 0}
                                  : ResolvedTable{secagg::example2_table(), "example2", 0};
        }
        const secagg::SystemParams p = resolve_params(o, f);
        secagg::GeneratedTable g = secagg::generate_table(p, o.attempts);
        return ResolvedTable{std::move(g.table), "generated", g.attempts_used};
    }();
    const std::string out = o.out.empty() ? "table.json" : o.out;
    secagg::write_table(out, rt.table);
    const auto validation = secagg::validate_table(rt.table);
    std::cout << "wrote " << out << "\n"
              << "r_star = " << rt.table.r_star << ", attempts = " << rt.attempts_used << "\n"
              << "validation: " << (validation.ok ? "pass" : "FAIL " + validation.witness_label())
              << "\n";
    return kExitOk;
}

int cmd_simulate(Options& o, const Flags& f) {
    ResolvedTable rt = resolve_table(o, f);
    const secagg::SystemParams& p = rt.table.params;
    const secagg::PrimeField F = rt.table.field();

    secagg::Inputs inputs{0, {}};
    if (!o.inputs_path.empty()) {
        const auto j = secagg::ordered_json::parse(secagg::read_text_file(o.inputs_path));
        inputs.w = j.get<std::vector<std::vector<std::uint64_t>>>();
        if (inputs.w.size() != p.num_users() || inputs.w.empty() || inputs.w.front().empty())
            throw ConfigError("--inputs: expected a UV x L grid");
        inputs.L = inputs.w.front().size();
        for (auto& row : inputs.w) {
            if (row.size() != inputs.L) throw ConfigError("--inputs: ragged grid");
            for (auto& x : row) {
                if (x >= p.q) throw ConfigError("--inputs: entry not a canonical residue mod q");
            }
        }
    } else {
        secagg::Rng rng = secagg::derive_stream(o.seed, "inputs");
        inputs = secagg::Inputs::random(p, o.l, rng);
    }
    secagg::Rng krng = secagg::derive_stream(o.seed, "source-key");
    const auto sample = secagg::SourceKeySample::random(rt.table.r_star, inputs.L, p.q, krng);

    const secagg::Transcript tr = secagg::run_protocol(rt.table, inputs, sample);
    const std::string out = o.out.empty() ? "transcript.json" : o.out;
    secagg::write_text_file(out, secagg::canonical_dump(transcript_to_json(tr, inputs, sample)));

    bool agree = true;
    for (const auto& d : tr.decoded) agree = agree && d == tr.decoded.front();
    const auto expected = secagg::global_input_sum(F, inputs);
    const bool correct = agree && tr.decoded.front() == expected;
    std::cout << "wrote " << out << "\n" << "decoded[server 1] = [";
    for (std::size_t i = 0; i < tr.decoded.front().size(); ++i)
        std::cout << (i ? "," : "") << tr.decoded.front()[i];
    std::cout << "]\nall servers agree and match the input sum: " << (correct ? "yes" : "NO") << "\n";
    return correct ? kExitOk : kExitCorrectness;
}

int cmd_verify(Options& o, const Flags& f) {
    ResolvedTable rt = resolve_table(o, f);
    secagg::AssuranceOptions opts;
    opts.policy = resolve_policy(o, rt.table.params);
    opts.correctness_trials = o.trials;
    opts.budget.max_states = o.budget;
    opts.seed = o.seed;

    const secagg::AssuranceReport rep = secagg::run_assurance(rt.table, opts);
    const std::string out = o.out.empty() ? "report.json" : o.out;
    secagg::write_text_file(
        out, secagg::canonical_dump(report_to_json(rep, resolved_config_json(rt, o, opts.policy.str()))));

    std::cout << "wrote " << out << "\n"
              << "validation:  " << (rep.validation.ok ? "pass" : "FAIL " + rep.validation.witness_label()) << "\n"
              << "correctness: " << (rep.correctness.ok() ? "pass" : "FAIL") << " (symbolic + "
              << rep.correctness.trials_passed << "/" << rep.correctness.trials << " trials)\n"
              << "security:    " << (rep.security.ok ? "pass" : "FAIL") << " (" << rep.security.evaluations
              << "/" << static_cast<std::uint64_t>(rep.security.total_cases) << " cases, policy "
              << rep.security.policy.str() << ")\n";
    for (const auto& fail : rep.security.failures) {
        std::cout << "  leak: server " << fail.k + 1 << " with colluders {";
        for (std::size_t i = 0; i < fail.colluders.size(); ++i)
            std::cout << (i ? "," : "") << "(" << fail.colluders[i].u + 1 << ","
                      << fail.colluders[i].v + 1 << ")";
        std::cout << "} MI = " << fail.mi << "\n";
    }
    bool lemmas_ok = true;
    for (const auto& c : rep.lemmas) lemmas_ok = lemmas_ok && c.satisfied;
    std::cout << "lemma bounds: " << (lemmas_ok ? "pass" : "FAIL") << "\n"
              << "rates: achieved (" << rep.rates.rx << "," << rep.rates.ry << "," << rep.rates.rz
              << "," << rep.rates.rz_sigma << ") vs bounds (" << rep.rates.rx_bound << ","
              << rep.rates.ry_bound << "," << rep.rates.rz_bound << "," << rep.rates.rz_sigma_bound
              << ") " << (rep.rates.optimal ? "[optimal]" : "[not optimal]") << "\n";
    if (rep.oracle && rep.oracle->in_budget)
        std::cout << "oracle cross-check: security " << (rep.oracle->security_agrees ? "agrees" : "DISAGREES")
                  << ", collections " << rep.oracle->collections_agree << "/"
                  << rep.oracle->collections_checked << "\n";
    std::cout << "exit code " << rep.exit_code() << "\n";
    return rep.exit_code();
}

int cmd_oracle(Options& o, const Flags& f) {
    if (o.search_min_q) {
        if (!(f.U || !o.config_path.empty()) && o.example == 0)
            throw ConfigError("--search-min-q needs --U/--V/--T");
        const auto found = secagg::search_smallest_valid_modulus(o.U, o.V, o.T, o.seed, o.attempts);
        if (!found) {
            std::cout << "no valid table over the candidate primes {2,3,5,7,11}\n";
            return kExitPartial;
        }
        std::cout << "smallest valid q = " << found->q << " (found after " << found->attempts
                  << " attempts)\n";
        if (!o.out.empty()) {
            secagg::write_table(o.out, found->table);
            std::cout << "wrote " << o.out << "\n";
        }
        return kExitOk;
    }

    ResolvedTable rt = resolve_table(o, f);
    secagg::OracleBudget budget{o.budget};
    secagg::ordered_json j;
    j["schema_version"] = 1;
    j["config"] = resolved_config_json(rt, o, "exhaustive");
    j["config"]["budget"] = o.budget;

    int exit_code = kExitOk;
    try {
        const auto sec = secagg::verify_security(rt.table);
        const auto brute = secagg::brute_security_check(rt.table, budget);
        j["security"] = {{"rank_ok", sec.ok}, {"brute_ok", brute.ok}, {"agree", sec.ok == brute.ok}};
        std::cout << "security: rank " << (sec.ok ? "pass" : "fail") << ", enumeration "
                  << (brute.ok ? "pass" : "fail") << (sec.ok == brute.ok ? " (agree)" : " (DISAGREE)")
                  << "\n";
        if (sec.ok != brute.ok) exit_code = kExitSecurity;
        if (!sec.ok && !brute.ok) exit_code = kExitSecurity;

        secagg::Rng rng = secagg::derive_stream(o.seed, "oracle");
        std::size_t agree = 0, checked = 0;
        for (std::uint64_t i = 0; i < o.collections; ++i) {
            const auto a = secagg::random_scheme_collection(rt.table, rng);
            const auto b = secagg::random_scheme_collection(rt.table, rng);
            const auto g = rng.uniform(2) ? secagg::random_scheme_collection(rt.table, rng)
                                          : std::vector<secagg::LinearVariable>{};
            ++checked;
            if (secagg::brute_entropy(a, budget) == static_cast<std::int64_t>(secagg::entropy(a)) &&
                secagg::brute_mi(a, b, g, budget) == secagg::mutual_information(a, b, g))
                ++agree;
        }
        j["collections"] = {{"checked", checked}, {"agree", agree}};
        std::cout << "entropy/MI collections: " << agree << "/" << checked << " agree\n";
        if (agree != checked) exit_code = kExitSecurity;
    } catch (const secagg::BudgetExceededError& e) {
        std::cout << e.what() << "\n";
        j["budget_exceeded"] = true;
        exit_code = kExitPartial;
    }
    if (!o.out.empty()) secagg::write_text_file(o.out, secagg::canonical_dump(j));
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-server secure aggregation: keygen, simulation, and machine-checked assurance"};
    app.require_subcommand(1);

    Options o;
    Flags f;

    CLI::App* keygen = app.add_subcommand("keygen", "generate (or emit) a key coefficient table");
    CLI::App* simulate = app.add_subcommand("simulate", "run the two-hop protocol and write a transcript");
    CLI::App* verify = app.add_subcommand("verify", "run the full assurance suite and write a report");
    CLI::App* oracle = app.add_subcommand("oracle", "exhaustive-enumeration cross-checks of the rank calculus");

    for (CLI::App* cmd : {keygen, simulate, verify, oracle}) add_common(cmd, o, f);
    for (CLI::App* cmd : {keygen, oracle})
        cmd->add_option("--attempts", o.attempts, "rejection-sampling retry budget")
            ->each([&](const std::string&) { f.attempts = true; });
    simulate->add_option("--l", o.l, "input length L (symbols per user)")
        ->each([&](const std::string&) { f.l = true; });
    simulate->add_option("--inputs", o.inputs_path, "JSON file with a UV x L input grid")
        ->each([&](const std::string&) { f.inputs = true; });
    verify->add_option("--policy", o.policy, "exhaustive | sample:N")
        ->each([&](const std::string&) { f.policy = true; });
    verify->add_option("--trials", o.trials, "randomized correctness trials")
        ->each([&](const std::string&) { f.trials = true; });
    for (CLI::App* cmd : {verify, oracle})
        cmd->add_option("--budget", o.budget, "oracle enumeration budget (states)")
            ->each([&](const std::string&) { f.budget = true; });
    oracle->add_option("--collections", o.collections, "random variable collections to cross-check")
        ->each([&](const std::string&) { f.collections = true; });
    oracle->add_flag("--search-min-q", o.search_min_q,
                     "search the smallest prime in {2,3,5,7,11} admitting a valid table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        merge_config(o, f);
        if (keygen->parsed()) return cmd_keygen(o, f);
        if (simulate->parsed()) return cmd_simulate(o, f);
        if (verify->parsed()) return cmd_verify(o, f);
        if (oracle->parsed()) return cmd_oracle(o, f);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const secagg::GenerationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
