#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "secagg/assurance.hpp"
#include "secagg/keyplan.hpp"
#include "secagg/protocol.hpp"

namespace secagg {

using ordered_json = nlohmann::ordered_json;

/// Canonical rendering used for every file this project writes: two-space
/// indent plus a trailing newline, with insertion-ordered keys. Re-serializing
/// a parsed document reproduces it byte for byte.
inline std::string canonical_dump(const ordered_json& j) { return j.dump(2) + "\n"; }

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Coefficient tables: {U, V, T, q, r_star, rows} with rows in (u,v)
// lexicographic order.
// ---------------------------------------------------------------------------

inline ordered_json table_to_json(const CoefficientTable& t) {
    ordered_json j;
    j["U"] = t.params.U;
    j["V"] = t.params.V;
    j["T"] = t.params.T;
    j["q"] = t.params.q;
    j["r_star"] = t.r_star;
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < t.h.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t jj = 0; jj < t.h.cols(); ++jj) row.push_back(t.h.get(i, jj));
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

inline CoefficientTable table_from_json(const ordered_json& j) {
    SystemParams p;
    p.U = j.at("U").get<std::uint64_t>();
    p.V = j.at("V").get<std::uint64_t>();
    p.T = j.at("T").get<std::uint64_t>();
    p.q = j.at("q").get<std::uint64_t>();
    const std::size_t r = j.at("r_star").get<std::size_t>();
    const auto& rows = j.at("rows");
    if (!rows.is_array() || rows.size() != p.num_users())
        throw std::invalid_argument("table JSON: expected UV rows");
    PrimeField F(p.q);
    FieldMatrix h(F, p.num_users(), r);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != r) throw std::invalid_argument("table JSON: row width != r_star");
        for (std::size_t c = 0; c < r; ++c) {
            const std::uint64_t v = rows[i][c].get<std::uint64_t>();
            if (v >= p.q) throw std::invalid_argument("table JSON: entry not a canonical residue");
            h.set(i, c, v);
        }
    }
    return CoefficientTable(p, r, std::move(h));
}

inline void write_table(const std::string& path, const CoefficientTable& t) {
    write_text_file(path, canonical_dump(table_to_json(t)));
}

inline CoefficientTable read_table(const std::string& path) {
    return table_from_json(ordered_json::parse(read_text_file(path)));
}

// ---------------------------------------------------------------------------
// Transcripts: {params, inputs, n, x, y, decoded, events}.
// ---------------------------------------------------------------------------

inline ordered_json params_to_json(const SystemParams& p) {
    return ordered_json{{"U", p.U}, {"V", p.V}, {"T", p.T}, {"q", p.q}, {"seed", p.seed}};
}

inline ordered_json transcript_to_json(const Transcript& tr, const Inputs& inputs,
                                       const SourceKeySample& sample) {
    ordered_json j;
    j["params"] = params_to_json(tr.params);
    j["params"]["l"] = tr.L;
    j["inputs"] = inputs.w;
    j["n"] = sample.n;
    j["x"] = tr.x;
    j["y"] = tr.y;
    j["decoded"] = tr.decoded;
    ordered_json events = ordered_json::array();
    for (const auto& e : tr.events)
        events.push_back(ordered_json{{"hop", e.hop},
                                      {"from", e.sender},
                                      {"to", e.receivers},
                                      {"payload", e.payload}});
    j["events"] = std::move(events);
    return j;
}

// ---------------------------------------------------------------------------
// Assurance reports. User/server indices are rendered one-based.
// ---------------------------------------------------------------------------

inline ordered_json colluders_to_json(const ColludingSet& set) {
    ordered_json arr = ordered_json::array();
    for (const auto& m : set) arr.push_back(ordered_json::array({m.u + 1, m.v + 1}));
    return arr;
}

inline ordered_json report_to_json(const AssuranceReport& rep, const ordered_json& config,
                                   int schema_version = 1) {
    ordered_json j;
    j["schema_version"] = schema_version;
    j["config"] = config;

    ordered_json val;
    val["ok"] = rep.validation.ok;
    if (!rep.validation.ok) {
        val["witness"] = rep.validation.witness_label();
        if (rep.validation.failing_server) val["server"] = *rep.validation.failing_server + 1;
        val["colluders"] = colluders_to_json(rep.validation.failing_colluders);
    }
    j["validation"] = std::move(val);

    j["correctness"] = ordered_json{{"ok", rep.correctness.ok()},
                                    {"symbolic_ok", rep.correctness.symbolic_ok},
                                    {"trials", rep.correctness.trials},
                                    {"trials_passed", rep.correctness.trials_passed}};

    ordered_json sec;
    sec["ok"] = rep.security.ok;
    sec["policy"] = rep.security.policy.str();
    sec["evaluations"] = rep.security.evaluations;
    sec["total_cases"] = static_cast<std::uint64_t>(rep.security.total_cases);
    sec["coverage_complete"] = rep.security.coverage_complete;
    ordered_json fails = ordered_json::array();
    for (const auto& f : rep.security.failures)
        fails.push_back(ordered_json{{"server", f.k + 1},
                                     {"colluders", colluders_to_json(f.colluders)},
                                     {"mi", f.mi}});
    sec["failures"] = std::move(fails);
    j["security"] = std::move(sec);

    ordered_json lemmas = ordered_json::array();
    for (const auto& c : rep.lemmas)
        lemmas.push_back(ordered_json{{"name", c.name},
                                      {"bound", c.bound},
                                      {"achieved", c.achieved},
                                      {"satisfied", c.satisfied},
                                      {"instances", c.instances}});
    j["lemma_checks"] = std::move(lemmas);

    j["rates"] = ordered_json{
        {"achieved", {{"R_X", rep.rates.rx}, {"R_Y", rep.rates.ry}, {"R_Z", rep.rates.rz},
                      {"R_Z_sigma", rep.rates.rz_sigma}}},
        {"bounds", {{"R_X", rep.rates.rx_bound}, {"R_Y", rep.rates.ry_bound},
                    {"R_Z", rep.rates.rz_bound}, {"R_Z_sigma", rep.rates.rz_sigma_bound}}},
        {"optimal", rep.rates.optimal}};

    ordered_json oracle;
    if (rep.oracle) {
        oracle["in_budget"] = rep.oracle->in_budget;
        oracle["required_states"] = detail::u128_str(rep.oracle->required_states);
        oracle["security_agrees"] = rep.oracle->security_agrees;
        oracle["collections_checked"] = rep.oracle->collections_checked;
        oracle["collections_agree"] = rep.oracle->collections_agree;
    } else {
        oracle["in_budget"] = false;
    }
    j["oracle_cross_check"] = std::move(oracle);

    j["exit_code"] = rep.exit_code();
    return j;
}

}  // namespace secagg
