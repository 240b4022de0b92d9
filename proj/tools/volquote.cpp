// volquote: batch pricing, hedging and validation for pure volatility
// claims in the reciprocal-affine stochastic volatility model.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "volquote/io.hpp"
#include "volquote/model.hpp"
#include "volquote/oracle.hpp"
#include "volquote/pathsim.hpp"
#include "volquote/pricer.hpp"

namespace {

using nlohmann::json;
using namespace volquote;

// Fixed reference parameter set used as the default for every subcommand.
constexpr ModelParams default_params{0.04, 0.02, 0.5, 5.0, 0.001, 0.04};

struct ModelFlags {
    double mu = default_params.mu;
    double r = default_params.r;
    double rho = default_params.rho;
    double alpha = default_params.alpha;
    double kappa = default_params.kappa;
    double beta = default_params.beta;
    std::string config;
    CLI::Option* opt_mu = nullptr;
    CLI::Option* opt_r = nullptr;
    CLI::Option* opt_rho = nullptr;
    CLI::Option* opt_alpha = nullptr;
    CLI::Option* opt_kappa = nullptr;
    CLI::Option* opt_beta = nullptr;
};

void add_model_flags(CLI::App* sub, ModelFlags& mf) {
    mf.opt_mu = sub->add_option("--mu", mf.mu, "asset drift per year");
    mf.opt_r = sub->add_option("--r", mf.r, "riskless rate per year");
    mf.opt_rho = sub->add_option("--rho", mf.rho, "correlation, |rho| < 1");
    mf.opt_alpha = sub->add_option("--alpha", mf.alpha, "P-measure mean reversion speed");
    mf.opt_kappa = sub->add_option("--kappa", mf.kappa, "P-measure long-run rate level");
    mf.opt_beta = sub->add_option("--beta", mf.beta, "rate volatility coefficient");
    sub->add_option("--config", mf.config, "key=value file with mu,r,rho,alpha,kappa,beta");
}

// Config file first, explicit flags override.
ModelParams resolve_params(const ModelFlags& mf) {
    ModelParams p = default_params;
    if (!mf.config.empty()) p = load_model_config(mf.config, p);
    if (mf.opt_mu->count()) p.mu = mf.mu;
    if (mf.opt_r->count()) p.r = mf.r;
    if (mf.opt_rho->count()) p.rho = mf.rho;
    if (mf.opt_alpha->count()) p.alpha = mf.alpha;
    if (mf.opt_kappa->count()) p.kappa = mf.kappa;
    if (mf.opt_beta->count()) p.beta = mf.beta;
    return p;
}

std::unique_ptr<std::ostream> open_output(const std::string& path, std::ostream*& os) {
    if (path.empty()) {
        os = &std::cout;
        return nullptr;
    }
    auto file = std::make_unique<std::ofstream>(path);
    if (!*file) throw std::invalid_argument("cannot open output file: " + path);
    os = file.get();
    return file;
}

// Grid grammar: "y0=lo:hi:n;T=lo:hi:m;gamma=g1,g2,...". Dimensions may be
// omitted to keep their defaults.
SurfaceSpec parse_surface_grid(const std::string& text, SurfaceSpec spec) {
    if (text.empty()) return spec;
    std::stringstream ss(text);
    std::string dim;
    while (std::getline(ss, dim, ';')) {
        const auto eq = dim.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("grid dimension is not key=spec: '" + dim + "'");
        const std::string key = dim.substr(0, eq);
        const std::string val = dim.substr(eq + 1);
        if (key == "gamma") {
            spec.gammas.clear();
            std::stringstream gs(val);
            std::string g;
            while (std::getline(gs, g, ','))
                spec.gammas.push_back(volquote::detail::parse_number(g, "gamma"));
            if (spec.gammas.empty()) throw std::invalid_argument("empty gamma list");
            continue;
        }
        std::vector<double> parts;
        std::stringstream vs(val);
        std::string piece;
        while (std::getline(vs, piece, ':'))
            parts.push_back(volquote::detail::parse_number(piece, key));
        if (parts.size() != 3)
            throw std::invalid_argument("grid dimension '" + key + "' needs lo:hi:n");
        const auto n = static_cast<std::size_t>(parts[2]);
        if (n < 1 || parts[2] != static_cast<double>(n))
            throw std::invalid_argument("grid count for '" + key + "' must be a positive integer");
        if (key == "y0") {
            spec.y_lo = parts[0];
            spec.y_hi = parts[1];
            spec.n_y = n;
        } else if (key == "T") {
            spec.t_lo = parts[0];
            spec.t_hi = parts[1];
            spec.n_t = n;
        } else {
            throw std::invalid_argument("unknown grid dimension '" + key + "'");
        }
    }
    return spec;
}

json quote_to_json(const Quote& q) {
    return json{{"y0", q.y0},
                {"T", q.T},
                {"gamma", q.gamma},
                {"pi", q.pi},
                {"davis", q.davis},
                {"h_claim", q.h_claim},
                {"h_merton", q.h_merton},
                {"excess_dollars", q.excess_dollars},
                {"lambda1", q.lambda1},
                {"lambda2", q.lambda2},
                {"bond", q.bond},
                {"residual_mass", q.residual_mass}};
}

int run(int argc, char** argv) {
    CLI::App app{"pricing and hedging engine for pure volatility claims under "
                 "exponential utility in the reciprocal-affine model"};
    app.require_subcommand(1);
    int exit_code = 0;

    // ----- price ---------------------------------------------------------
    auto* price = app.add_subcommand("price", "single quote at one (y0, T, gamma) point");
    static ModelFlags price_mf;
    add_model_flags(price, price_mf);
    static std::string price_claim = "put:K=0.15";
    static double price_y0 = 0.15, price_T = 1.0, price_t = 0.0, price_gamma = 1.0,
                  price_s0 = 1.0;
    static std::size_t price_nfft = 4096;
    static std::string price_out, price_format = "csv";
    price->add_option("--claim", price_claim, "claim spec (put:K=, spread:K1=,K2=, const:k=, table:path)");
    price->add_option("--y0", price_y0, "initial squared volatility");
    price->add_option("--T", price_T, "maturity in years");
    price->add_option("--t", price_t, "valuation time in years");
    price->add_option("--gamma", price_gamma, "risk aversion");
    price->add_option("--s0", price_s0, "discounted stock price");
    price->add_option("--n-fft", price_nfft, "Fourier lattice size (power of two)");
    price->add_option("--out", price_out, "output path (default stdout)");
    price->add_option("--format", price_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    price->callback([&] {
        const Market m = Market::make(resolve_params(price_mf));
        const VolClaim claim = parse_claim(price_claim);
        const RiskAversion ra(price_gamma, m.p.rho);
        const VolState st = make_state(price_t, price_T, price_y0, price_s0, m.tp);
        GridSpec spec;
        spec.n_points = price_nfft;
        const Quote q = quote(m, claim, ra, st, spec);
        std::ostream* os = nullptr;
        auto hold = open_output(price_out, os);
        if (price_format == "json") *os << quote_to_json(q).dump(2) << '\n';
        else write_quote_csv(*os, std::span(&q, 1), claim.label());
    });

    // ----- surface -------------------------------------------------------
    auto* surf = app.add_subcommand("surface", "table of quotes over (y0, T, gamma)");
    static ModelFlags surf_mf;
    add_model_flags(surf, surf_mf);
    static std::string surf_claim = "put:K=0.15";
    static std::string surf_grid;
    static double surf_s0 = 1.0;
    static std::size_t surf_nfft = 4096;
    static std::string surf_out;
    surf->add_option("--claim", surf_claim, "claim spec");
    surf->add_option("--grid", surf_grid, "grid spec y0=lo:hi:n;T=lo:hi:m;gamma=g1,g2,...");
    surf->add_option("--s0", surf_s0, "discounted stock price");
    surf->add_option("--n-fft", surf_nfft, "Fourier lattice size");
    surf->add_option("--out", surf_out, "output path (default stdout)");
    surf->callback([&] {
        const Market m = Market::make(resolve_params(surf_mf));
        const VolClaim claim = parse_claim(surf_claim);
        SurfaceSpec ss;
        ss.n_y = 25;
        ss.s0 = surf_s0;
        ss = parse_surface_grid(surf_grid, ss);
        GridSpec spec;
        spec.n_points = surf_nfft;
        const auto rows = surface(m, claim, ss, spec);
        std::ostream* os = nullptr;
        auto hold = open_output(surf_out, os);
        write_quote_csv(*os, rows, claim.label());
    });

    // ----- path ----------------------------------------------------------
    auto* path = app.add_subcommand("path", "price/hedge ledger along one simulated path");
    static ModelFlags path_mf;
    add_model_flags(path, path_mf);
    static std::string path_claim = "put:K=0.15";
    static double path_y0 = 0.15, path_T = 1.0, path_gamma = 1.0, path_s0 = 1.0, path_dt = 0.01;
    static std::uint64_t path_seed = 1;
    static std::size_t path_nfft = 4096;
    static std::string path_out;
    path->add_option("--claim", path_claim, "claim spec");
    path->add_option("--y0", path_y0, "initial squared volatility");
    path->add_option("--T", path_T, "maturity in years");
    path->add_option("--gamma", path_gamma, "risk aversion");
    path->add_option("--s0", path_s0, "discounted stock price");
    path->add_option("--dt", path_dt, "ledger step (must divide T, dt <= T/50)");
    path->add_option("--seed", path_seed, "simulation seed");
    path->add_option("--n-fft", path_nfft, "Fourier lattice size");
    path->add_option("--out", path_out, "output path (default stdout)");
    path->callback([&] {
        const Market m = Market::make(resolve_params(path_mf));
        const VolClaim claim = parse_claim(path_claim);
        const RiskAversion ra(path_gamma, m.p.rho);
        GridSpec spec;
        spec.n_points = path_nfft;
        const PathLedger ledger =
            generate_ledger(m, claim, ra, path_y0, path_s0, path_T, path_dt, path_seed, spec);
        std::ostream* os = nullptr;
        auto hold = open_output(path_out, os);
        write_ledger_csv(*os, ledger);
    });

    // ----- mpr -----------------------------------------------------------
    auto* mpr = app.add_subcommand("mpr", "market price of volatility risk across maturities");
    static ModelFlags mpr_mf;
    add_model_flags(mpr, mpr_mf);
    static double mpr_y0 = 0.15, mpr_tlo = 0.05, mpr_thi = 1.0;
    static std::size_t mpr_n = 20;
    static std::string mpr_out;
    mpr->add_option("--y0", mpr_y0, "squared volatility level");
    mpr->add_option("--T-lo", mpr_tlo, "shortest maturity");
    mpr->add_option("--T-hi", mpr_thi, "longest maturity");
    mpr->add_option("--n", mpr_n, "number of maturities");
    mpr->add_option("--out", mpr_out, "output path (default stdout)");
    mpr->callback([&] {
        const Market m = Market::make(resolve_params(mpr_mf));
        if (mpr_n < 1) throw std::invalid_argument("needs n >= 1");
        std::vector<MprRow> rows;
        const RiskAversion ra(1.0, m.p.rho);  // zero-claim premium is gamma free
        for (std::size_t i = 0; i < mpr_n; ++i) {
            const double T =
                mpr_n == 1 ? mpr_tlo
                           : mpr_tlo + (mpr_thi - mpr_tlo) * static_cast<double>(i) /
                                           static_cast<double>(mpr_n - 1);
            const VolState st = make_state(0.0, T, mpr_y0, 1.0, m.tp);
            const RiskPrices rp = market_price_of_risk(ra, nullptr, m, st, nullptr);
            const double closed = lambda2_closed_form(m, st);
            rows.push_back(MprRow{T, mpr_y0, rp.lambda1, rp.lambda2, closed,
                                  std::abs(rp.lambda2 - closed) / std::abs(closed)});
        }
        std::ostream* os = nullptr;
        auto hold = open_output(mpr_out, os);
        write_mpr_csv(*os, rows);
    });

    // ----- validate ------------------------------------------------------
    auto* val = app.add_subcommand("validate",
                                   "three-way transform/MC/PDE agreement and SDE moment checks");
    static ModelFlags val_mf;
    add_model_flags(val, val_mf);
    static std::string val_point = "paper";
    static std::string val_claim = "put:K=0.15";
    static double val_y0 = 0.15, val_T = 1.0, val_gamma = 1.0;
    static std::size_t val_paths = 200000, val_steps = 256;
    static std::uint64_t val_seed = 20260809;
    static std::string val_out;
    val->add_option("--point", val_point, "only 'paper' is predefined; flags override");
    val->add_option("--claim", val_claim, "claim spec");
    val->add_option("--y0", val_y0, "initial squared volatility");
    val->add_option("--T", val_T, "maturity");
    val->add_option("--gamma", val_gamma, "risk aversion");
    val->add_option("--n-paths", val_paths, "Monte Carlo paths");
    val->add_option("--n-steps", val_steps, "Monte Carlo steps");
    val->add_option("--seed", val_seed, "simulation seed");
    val->add_option("--out", val_out, "output path (default stdout)");
    val->callback([&] {
        if (val_point != "paper")
            throw std::invalid_argument("unknown validation point '" + val_point + "'");
        const Market m = Market::make(resolve_params(val_mf));
        const VolClaim claim = parse_claim(val_claim);
        const RiskAversion ra(val_gamma, m.p.rho);
        const VolState st = make_state(0.0, val_T, val_y0, 1.0, m.tp);

        const Quote q = quote(m, claim, ra, st);
        SimSpec sim;
        sim.n_paths = val_paths;
        sim.n_steps = val_steps;
        sim.seed = val_seed;
        const McPriceResult mc = mc_price(m, claim, ra, st, sim);
        const PdeGrid grid = default_pde_grid(m, st, &claim);
        const double pi_pde = pde_price(m, claim, ra, st, grid);

        const std::vector<double> probes{0.05, 0.1, 0.15, 0.3, 0.5};
        const SdeReport sde = sde_consistency_report(m, probes, 1e-4, 200000, val_seed);

        const double tol = std::max(0.01 * std::abs(q.pi), 3.0 * mc.pi_se);
        const bool prices_ok = std::abs(q.pi - mc.pi) <= tol &&
                               std::abs(q.pi - pi_pde) <= tol &&
                               std::abs(mc.pi - pi_pde) <= tol;
        const bool pass = prices_ok && sde.pass();

        json zs = json::array();
        for (const auto& p : sde.probes)
            zs.push_back({{"y", p.y}, {"z_drift", p.z_drift}, {"z_var", p.z_var},
                          {"z_cov", p.z_cov}});
        const json report{{"point",
                           {{"claim", claim.label()}, {"y0", val_y0}, {"T", val_T},
                            {"gamma", val_gamma}, {"mu", m.p.mu}, {"r", m.p.r},
                            {"rho", m.p.rho}, {"alpha", m.p.alpha}, {"kappa", m.p.kappa},
                            {"beta", m.p.beta}}},
                          {"pi_fft", q.pi},
                          {"pi_mc", mc.pi},
                          {"se_mc", mc.pi_se},
                          {"pi_pde", pi_pde},
                          {"tolerance", tol},
                          {"z_scores", zs},
                          {"pass", pass}};
        std::ostream* os = nullptr;
        auto hold = open_output(val_out, os);
        *os << report.dump(2) << '\n';
        if (!pass) exit_code = 1;
    });

    // ----- bench ---------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "quote throughput over a randomized batch");
    static ModelFlags bench_mf;
    add_model_flags(bench, bench_mf);
    static std::size_t bench_n = 1000, bench_nfft = 4096;
    static std::uint64_t bench_seed = 42;
    static std::string bench_format = "text";
    bench->add_option("--n", bench_n, "number of quotes (>= 100)");
    bench->add_option("--n-fft", bench_nfft, "Fourier lattice size");
    bench->add_option("--seed", bench_seed, "batch randomization seed");
    bench->add_option("--format", bench_format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    bench->callback([&] {
        if (bench_n < 100) throw std::invalid_argument("bench needs n >= 100");
        const Market m = Market::make(resolve_params(bench_mf));
        const VolClaim claim = VolClaim::put(0.15);
        const RiskAversion ra(1.0, m.p.rho);
        GridSpec spec;
        spec.n_points = bench_nfft;
        std::mt19937_64 eng(bench_seed);
        std::uniform_real_distribution<double> uy(0.05, 0.5), ut(0.1, 1.0);
        std::vector<std::pair<double, double>> batch(bench_n);
        for (auto& b : batch) b = {uy(eng), ut(eng)};
        // warmup
        for (std::size_t i = 0; i < 3; ++i) {
            const VolState st = make_state(0.0, batch[i].second, batch[i].first, 1.0, m.tp);
            (void)quote(m, claim, ra, st, spec);
        }
        double sink = 0.0;
        const auto start = std::chrono::steady_clock::now();
        for (const auto& [y0, T] : batch) {
            const VolState st = make_state(0.0, T, y0, 1.0, m.tp);
            sink += quote(m, claim, ra, st, spec).pi;
        }
        const auto stop = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(stop - start).count();
        const double rate = static_cast<double>(bench_n) / secs;
        if (bench_format == "json") {
            std::cout << json{{"n_quotes", bench_n}, {"n_fft", bench_nfft},
                              {"seconds", secs}, {"quotes_per_second", rate},
                              {"checksum", sink}}
                             .dump(2)
                      << '\n';
        } else {
            std::cout << bench_n << " quotes at n_fft=" << bench_nfft << " in " << secs
                      << " s: " << rate << " quotes/sec\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 1;
    }
}
