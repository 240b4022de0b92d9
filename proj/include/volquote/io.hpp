#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "volquote/claims.hpp"
#include "volquote/model.hpp"
#include "volquote/pathsim.hpp"
#include "volquote/pricer.hpp"

namespace volquote {

inline constexpr const char* csv_schema_line = "# volquote-schema 1";

// Shortest round-trippable decimal form.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_quote_csv(std::ostream& os, std::span<const Quote> rows,
                            const std::string& claim_label) {
    os << csv_schema_line << '\n';
    os << "# claim=" << claim_label << '\n';
    os << "y0,T,gamma,pi,davis,h_claim,h_merton,excess_dollars,lambda1,lambda2,bond,residual_mass\n";
    for (const Quote& q : rows) {
        os << format_double(q.y0) << ',' << format_double(q.T) << ',' << format_double(q.gamma)
           << ',' << format_double(q.pi) << ',' << format_double(q.davis) << ','
           << format_double(q.h_claim) << ',' << format_double(q.h_merton) << ','
           << format_double(q.excess_dollars) << ',' << format_double(q.lambda1) << ','
           << format_double(q.lambda2) << ',' << format_double(q.bond) << ','
           << format_double(q.residual_mass) << '\n';
    }
}

inline void write_ledger_csv(std::ostream& os, const PathLedger& ledger) {
    os << csv_schema_line << '\n';
    os << "# claim=" << ledger.claim_label << '\n';
    os << "# gamma=" << format_double(ledger.gamma) << '\n';
    os << "# seed=" << ledger.seed << '\n';
    os << "# dt=" << format_double(ledger.dt) << '\n';
    os << "# s0=" << format_double(ledger.s0) << '\n';
    os << "t,y,r_shadow,pi,h_claim,h_merton,excess_dollars,lambda1,lambda2\n";
    for (const LedgerRow& row : ledger.rows) {
        os << format_double(row.t) << ',' << format_double(row.y) << ','
           << format_double(row.r_shadow) << ',' << format_double(row.pi) << ','
           << format_double(row.h_claim) << ',' << format_double(row.h_merton) << ','
           << format_double(row.excess_dollars) << ',' << format_double(row.lambda1) << ','
           << format_double(row.lambda2) << '\n';
    }
}

// Volatility risk premium along a maturity scan for the zero claim.
struct MprRow {
    double T = 0.0;
    double y0 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;         // general formula
    double lambda2_closed = 0.0;  // closed form
    double rel_gap = 0.0;
};

inline void write_mpr_csv(std::ostream& os, std::span<const MprRow> rows) {
    os << csv_schema_line << '\n';
    os << "T,y0,lambda1,lambda2,lambda2_closed,rel_gap\n";
    for (const MprRow& row : rows) {
        os << format_double(row.T) << ',' << format_double(row.y0) << ','
           << format_double(row.lambda1) << ',' << format_double(row.lambda2) << ','
           << format_double(row.lambda2_closed) << ',' << format_double(row.rel_gap) << '\n';
    }
}

namespace detail {

inline std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& text, const std::string& what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse number for " + what + ": '" + text + "'");
    }
    if (pos != text.size())
        throw std::invalid_argument("trailing characters in " + what + ": '" + text + "'");
    return v;
}

}  // namespace detail

/**
 * Flat key=value model configuration. Exactly the six model keys are
 * accepted (mu, r, rho, alpha, kappa, beta); anything else is rejected.
 * Lines starting with '#' and blank lines are skipped. Missing keys keep
 * the values already present in `base`.
 */
inline ModelParams parse_model_config(std::istream& is, ModelParams base) {
    std::map<std::string, double*> slots{
        {"mu", &base.mu},       {"r", &base.r},         {"rho", &base.rho},
        {"alpha", &base.alpha}, {"kappa", &base.kappa}, {"beta", &base.beta}};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string s = detail::strip(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        " is not key=value: '" + s + "'");
        const std::string key = detail::strip(s.substr(0, eq));
        const auto slot = slots.find(key);
        if (slot == slots.end())
            throw std::invalid_argument("unknown config key '" + key + "' on line " +
                                        std::to_string(lineno));
        *slot->second = detail::parse_number(detail::strip(s.substr(eq + 1)), key);
    }
    return base;
}

inline ModelParams load_model_config(const std::string& path, const ModelParams& base) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    return parse_model_config(f, base);
}

// Two-column CSV (y,value) for tabulated claims; a non-numeric first line
// is treated as a header.
inline VolClaim load_table_claim(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open claim table: " + path);
    std::vector<double> ys, vs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::string s = detail::strip(line);
        if (s.empty() || s[0] == '#') continue;
        const auto comma = s.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("claim table line " + std::to_string(lineno) +
                                        " is not y,value");
        try {
            const double y = detail::parse_number(detail::strip(s.substr(0, comma)), "y");
            const double v = detail::parse_number(detail::strip(s.substr(comma + 1)), "value");
            ys.push_back(y);
            vs.push_back(v);
        } catch (const std::invalid_argument&) {
            if (lineno == 1) continue;  // header row
            throw;
        }
    }
    return VolClaim::tabulated(std::move(ys), std::move(vs));
}

/**
 * Claim grammar used on the command line:
 *
 *   put:K=0.15
 *   spread:K1=0.15,K2=0.3
 *   const:k=0.1
 *   table:path.csv
 *
 * Plain calls and forwards are not expressible: their payoff is unbounded
 * above and carries an expected utility of negative infinity.
 */
inline VolClaim parse_claim(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = colon == std::string::npos ? text : text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);

    auto fields = [&rest]() {
        std::map<std::string, double> kv;
        std::stringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("claim field is not key=value: '" + item + "'");
            kv[detail::strip(item.substr(0, eq))] =
                detail::parse_number(detail::strip(item.substr(eq + 1)), "claim field");
        }
        return kv;
    };

    if (kind == "put") {
        auto kv = fields();
        if (kv.size() != 1 || !kv.count("K"))
            throw std::invalid_argument("put claim needs exactly K=<strike>");
        return VolClaim::put(kv["K"]);
    }
    if (kind == "spread") {
        auto kv = fields();
        if (kv.size() != 2 || !kv.count("K1") || !kv.count("K2"))
            throw std::invalid_argument("spread claim needs K1=<lo>,K2=<hi>");
        return VolClaim::call_spread(kv["K1"], kv["K2"]);
    }
    if (kind == "const") {
        auto kv = fields();
        if (kv.size() != 1 || !kv.count("k"))
            throw std::invalid_argument("const claim needs exactly k=<value>");
        return VolClaim::constant(kv["k"]);
    }
    if (kind == "table") {
        if (rest.empty()) throw std::invalid_argument("table claim needs a CSV path");
        return load_table_claim(rest);
    }
    if (kind == "call" || kind == "forward")
        throw std::invalid_argument(
            "claim '" + kind + "' is unbounded above and has an expected utility of "
            "negative infinity; use spread:K1=...,K2=... instead");
    throw std::invalid_argument("unknown claim kind '" + kind +
                                "' (expected put, spread, const or table)");
}

}  // namespace volquote
