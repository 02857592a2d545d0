// Command-line front end: builds chain/interval-map models, runs the
// condition checks and Monte Carlo ensembles, and writes JSON reports plus
// CSV/SVG plot data. Exit codes: 0 success, 1 input error, 2 a numerical
// acceptance gate failed.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quenchlab/counterexample.hpp"
#include "quenchlab/finite_chain.hpp"
#include "quenchlab/intermittent.hpp"
#include "quenchlab/probkit.hpp"
#include "quenchlab/quenched_mc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed) {
    if (seed) return *seed;
    return static_cast<std::uint64_t>(
        std::chrono::high_resolution_clock::now().time_since_epoch().count());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
}

// canonical report envelope: resolved config (seed included), version, hash
void write_report(const fs::path& out_dir, const std::string& name, json body, json config,
                  const std::string& condition, const std::string& summary) {
    config["tool_version"] = kToolVersion;
    body["config"] = config;
    body["config_hash"] = hex64(fnv1a(config.dump()));
    body["tool_version"] = kToolVersion;
    if (!condition.empty()) body["paper_condition"] = condition;
    body["summary"] = summary;
    write_text(out_dir / name, body.dump(2) + "\n");
    std::cout << summary << "\n";
}

void csv_series(const fs::path& path, const qlab::SeriesReport& r) {
    std::ostringstream os;
    os << "k,term,partial_sum\n";
    os.precision(17);
    for (std::size_t k = 0; k < r.terms.size(); ++k)
        os << (k + 1) << "," << r.terms[k] << "," << r.partial_sums[k] << "\n";
    write_text(path, os.str());
}

// trailing-window log-log slope of a positive decaying sequence
double loglog_slope_window(const std::vector<double>& a, std::size_t k) {
    const std::size_t lo = std::max<std::size_t>(1, (k + 1) / 2);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t cnt = 0;
    for (std::size_t i = lo; i <= k; ++i) {
        if (a[i - 1] <= 0.0) continue;
        const double x = std::log(static_cast<double>(i));
        const double y = std::log(a[i - 1]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    if (cnt < 2) return 0.0;
    const double n = static_cast<double>(cnt);
    const double denom = n * sxx - sx * sx;
    return denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

void csv_alpha(const fs::path& path, const std::vector<double>& alphas) {
    std::ostringstream os;
    os << "k,alpha,loglog_slope_window\n";
    os.precision(17);
    for (std::size_t k = 1; k <= alphas.size(); ++k)
        os << k << "," << alphas[k - 1] << "," << loglog_slope_window(alphas, k) << "\n";
    write_text(path, os.str());
}

void csv_tightness(const fs::path& path, const qlab::mc::TightnessReport& t) {
    std::ostringstream os;
    os << "m,q95,stderr\n";
    os.precision(17);
    for (std::size_t i = 0; i < t.m_grid.size(); ++i)
        os << t.m_grid[i] << "," << t.q95[i] << "," << t.q95_se[i] << "\n";
    write_text(path, os.str());
}

void csv_replicas(const fs::path& path, const qlab::mc::Ensemble& e) {
    std::ostringstream os;
    os << "replica,S_n,S_n_scaled\n";
    os.precision(17);
    const double rt = std::sqrt(static_cast<double>(e.n));
    for (std::size_t r = 0; r < e.sn_scaled.size(); ++r)
        os << r << "," << e.sn_scaled[r] * rt << "," << e.sn_scaled[r] << "\n";
    write_text(path, os.str());
}

// minimal text-built SVG line chart of (x, y) pairs
void svg_line(const fs::path& path, const std::vector<double>& xs, const std::vector<double>& ys,
              const std::string& title) {
    const double W = 640, H = 400, pad = 48;
    double xmin = xs.empty() ? 0 : xs[0], xmax = xmin, ymin = ys.empty() ? 0 : ys[0], ymax = ymin;
    for (double x : xs) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
    }
    for (double y : ys) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << pad << "\" y=\"24\" font-family=\"monospace\" font-size=\"14\">" << title
       << "</text>\n<polyline fill=\"none\" stroke=\"black\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double px = pad + (xs[i] - xmin) / (xmax - xmin) * (W - 2 * pad);
        const double py = H - pad - (ys[i] - ymin) / (ymax - ymin) * (H - 2 * pad);
        os << px << "," << py << " ";
    }
    os << "\"/>\n<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad
       << "\" y2=\"" << H - pad << "\" stroke=\"gray\"/>\n<line x1=\"" << pad << "\" y1=\"" << pad
       << "\" x2=\"" << pad << "\" y2=\"" << H - pad << "\" stroke=\"gray\"/>\n</svg>\n";
    write_text(path, os.str());
}

qlab::chain::FiniteChain load_chain(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open chain file: " + file);
    json j = json::parse(in);
    return qlab::chain::FiniteChain::from_json(j);
}

// "indicator:t", "powerlog:a:d", or "table:v0,v1,..."
qlab::pm::ObservableSpec parse_obs(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.empty()) throw std::invalid_argument("empty observable spec");
    if (parts[0] == "indicator" && parts.size() == 2)
        return qlab::pm::ObservableSpec::bv_indicator(std::stod(parts[1]));
    if (parts[0] == "powerlog" && parts.size() == 3)
        return qlab::pm::ObservableSpec::power_log(std::stod(parts[1]), std::stod(parts[2]));
    throw std::invalid_argument("observable spec must be indicator:t or powerlog:a:d");
}

std::string verdict_word(const qlab::SeriesReport& r) { return qlab::to_string(r.verdict); }

struct CommonOpts {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool svg = false;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quenchlab: quenched limit-theorem diagnostics for Markov chains and "
                 "intermittent interval maps"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--out-dir", common.out_dir, "directory for report/CSV output");
    app.add_option("--seed", common.seed, "RNG seed (recorded; generated if absent)");
    app.add_flag("--svg", common.svg, "also emit minimal SVG line charts");

    // ---- map-orbit ----
    auto* orbit_cmd = app.add_subcommand("map-orbit", "sample an interval-map orbit and its sums");
    double mo_gamma = 0, mo_x0 = 0.3;
    std::size_t mo_n = 4096;
    std::string mo_obs = "indicator:0.5";
    orbit_cmd->add_option("--gamma", mo_gamma, "map exponent in (0, 1/2)")->required();
    orbit_cmd->add_option("--x0", mo_x0, "start point in (0, 1)");
    orbit_cmd->add_option("--n", mo_n, "orbit length");
    orbit_cmd->add_option("--obs", mo_obs, "observable: indicator:t or powerlog:a:d");

    // ---- ulam ----
    auto* ulam_cmd = app.add_subcommand("ulam", "build the discretized transfer operator");
    double ul_gamma = 0, ul_grading = 2.0, ul_max_res = 1e-2;
    std::size_t ul_cells = 4096;
    ulam_cmd->add_option("--gamma", ul_gamma)->required();
    ulam_cmd->add_option("--cells", ul_cells, "number of cells");
    ulam_cmd->add_option("--grading", ul_grading, "grid grading exponent");
    ulam_cmd->add_option("--max-residual", ul_max_res, "duality-residual gate");

    // ---- alpha ----
    auto* alpha_cmd = app.add_subcommand("alpha", "dependence-coefficient decay");
    std::string al_chain;
    double al_gamma = 0, al_grading = 2.0;
    std::size_t al_cells = 4096, al_kmax = 64;
    bool al_rosenblatt = false;
    alpha_cmd->add_option("--chain", al_chain, "chain JSON file (otherwise interval map)");
    alpha_cmd->add_option("--gamma", al_gamma);
    alpha_cmd->add_option("--cells", al_cells);
    alpha_cmd->add_option("--grading", al_grading);
    alpha_cmd->add_option("--kmax", al_kmax);
    alpha_cmd->add_flag("--rosenblatt", al_rosenblatt, "prepend alpha(0) = 1 (chain only)");

    // ---- conditions ----
    auto* cond_cmd = app.add_subcommand("conditions", "projective-criterion series for a chain");
    std::string co_chain;
    std::size_t co_kmax = 256, co_replicas = 2000;
    cond_cmd->add_option("--chain", co_chain)->required();
    cond_cmd->add_option("--kmax", co_kmax);
    cond_cmd->add_option("--replicas", co_replicas, "Monte Carlo size for the L1 ratio trace");

    // ---- quenched ----
    auto* q_cmd = app.add_subcommand("quenched", "quenched CLT ensemble from a fixed start");
    std::string q_chain, q_obs = "indicator:0.5", q_modulus;
    double q_gamma = 0, q_grading = 2.0, q_x0 = 0.3, q_ks_tol = 0.0;
    std::size_t q_cells = 4096, q_n = 16384, q_replicas = 10000;
    q_cmd->add_option("--chain", q_chain, "chain JSON file (otherwise interval map)");
    q_cmd->add_option("--gamma", q_gamma);
    q_cmd->add_option("--cells", q_cells);
    q_cmd->add_option("--grading", q_grading);
    q_cmd->add_option("--obs", q_obs);
    q_cmd->add_option("--x0", q_x0, "start point (cell/state index for chains)");
    q_cmd->add_option("--n", q_n);
    q_cmd->add_option("--replicas", q_replicas);
    q_cmd->add_option("--ks-tol", q_ks_tol, "KS gate (default: twice the 95% null band)");
    q_cmd->add_option("--modulus", q_modulus, "comma list of window counts m for tightness");

    // ---- fidis ----
    auto* f_cmd = app.add_subcommand("fidis", "finite-dimensional Donsker marginals");
    std::string f_chain, f_obs = "indicator:0.5", f_times = "0.25,0.5,0.75,1", f_weights;
    double f_gamma = 0, f_grading = 2.0, f_x0 = 0.3, f_ks_tol = 0.0;
    std::size_t f_cells = 4096, f_n = 16384, f_replicas = 10000;
    f_cmd->add_option("--chain", f_chain);
    f_cmd->add_option("--gamma", f_gamma);
    f_cmd->add_option("--cells", f_cells);
    f_cmd->add_option("--grading", f_grading);
    f_cmd->add_option("--obs", f_obs);
    f_cmd->add_option("--x0", f_x0);
    f_cmd->add_option("--n", f_n);
    f_cmd->add_option("--replicas", f_replicas);
    f_cmd->add_option("--times", f_times, "comma list of times in (0,1]");
    f_cmd->add_option("--weights", f_weights, "comma list of increment weights (default 1s)");
    f_cmd->add_option("--ks-tol", f_ks_tol);

    // ---- blocks ----
    auto* b_cmd = app.add_subcommand("blocks", "blocking-condition diagnostics");
    std::string b_chain, b_obs = "indicator:0.5", b_eps = "0.05,0.1,0.2";
    double b_gamma = 0, b_grading = 2.0, b_x0 = 0.3;
    std::size_t b_cells = 4096, b_m = 16, b_p = 64, b_replicas = 2000;
    b_cmd->add_option("--chain", b_chain);
    b_cmd->add_option("--gamma", b_gamma);
    b_cmd->add_option("--cells", b_cells);
    b_cmd->add_option("--grading", b_grading);
    b_cmd->add_option("--obs", b_obs);
    b_cmd->add_option("--x0", b_x0);
    b_cmd->add_option("--m", b_m, "number of blocks");
    b_cmd->add_option("--p", b_p, "block length");
    b_cmd->add_option("--eps", b_eps, "comma list of thresholds");
    b_cmd->add_option("--replicas", b_replicas);

    // ---- counterexample ----
    auto* c_cmd = app.add_subcommand("counterexample", "divergence-witness construction");
    std::size_t c_kmax = 8, c_replicas = 2000;
    std::string c_mode = "series";
    c_cmd->add_option("--kmax", c_kmax, "number of levels K");
    c_cmd->add_option("--mode", c_mode)->check(CLI::IsMember({"series", "realize"}));
    c_cmd->add_option("--replicas", c_replicas, "realizations for the conditional norms");

    // ---- tailcheck ----
    auto* t_cmd = app.add_subcommand("tailcheck", "tail-integral condition for a map exponent");
    double t_gamma = 0, t_q = 0, t_c = 1.0, t_b = 0.0, t_x0 = 1.0;
    t_cmd->add_option("--gamma", t_gamma, "map exponent in (0, 1/2)")->required();
    t_cmd->add_option("--tail-q", t_q, "power-tail exponent of H")->required();
    t_cmd->add_option("--tail-c", t_c, "tail constant");
    t_cmd->add_option("--tail-b", t_b, "log-power correction");
    t_cmd->add_option("--tail-x0", t_x0, "tail onset");

    // ---- inequalities ----
    auto* i_cmd = app.add_subcommand("inequalities", "brute-force inequality verification");
    std::size_t i_chains = 100, i_spaces = 1000, i_n = 6;
    i_cmd->add_option("--chains", i_chains, "random 3-state chains for the maximal inequality");
    i_cmd->add_option("--spaces", i_spaces, "random finite spaces for the truncation triple");
    i_cmd->add_option("--n", i_n, "path length for the maximal inequality");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const fs::path out_dir(common.out_dir);
        fs::create_directories(out_dir);
        const std::uint64_t seed = resolve_seed(common.seed);
        auto split_list = [](const std::string& s) {
            std::vector<double> out;
            std::stringstream ss(s);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) out.push_back(std::stod(tok));
            return out;
        };

        if (orbit_cmd->parsed()) {
            const qlab::pm::GammaMap map{mo_gamma};
            const auto obs = parse_obs(mo_obs);
            const auto tr =
                qlab::pm::traj(map, mo_x0, mo_n, [&obs](double x) { return obs.eval(x); });
            std::ostringstream os;
            os << "i,x,sum\n";
            os.precision(17);
            for (std::size_t i = 0; i < tr.orbit.size(); ++i)
                os << i << "," << tr.orbit[i] << "," << tr.sums[i] << "\n";
            write_text(out_dir / "map_orbit.csv", os.str());
            json body;
            body["n"] = mo_n;
            body["final_sum"] = tr.sums.back();
            body["birkhoff_average"] = tr.sums.back() / static_cast<double>(mo_n);
            json cfg{{"command", "map-orbit"}, {"gamma", mo_gamma}, {"x0", mo_x0},
                     {"n", mo_n},             {"obs", mo_obs},     {"seed", seed}};
            std::ostringstream sum;
            sum << "Sampled " << mo_n << " steps of the intermittent interval map (display 3.1 "
                << "family) at gamma=" << mo_gamma << " from x0=" << mo_x0
                << "; Birkhoff average of the observable = " << body["birkhoff_average"].get<double>()
                << ". Orbit CSV written to map_orbit.csv.";
            write_report(out_dir, "map_orbit.json", body, cfg, "3.1", sum.str());
            return 0;
        }

        if (ulam_cmd->parsed()) {
            const auto model = qlab::pm::ulam_build(ul_gamma, ul_cells, ul_grading);
            model.write_csv((out_dir / "ulam").string());
            json body = model.to_json_meta();
            double worst = 0.0;
            json res = json::object();
            for (const auto& [name, r] : model.duality_residuals()) {
                res[name] = r;
                worst = std::max(worst, r);
            }
            body["duality_residuals"] = res;
            body["max_residual"] = worst;
            json cfg{{"command", "ulam"}, {"gamma", ul_gamma},     {"cells", ul_cells},
                     {"grading", ul_grading}, {"max_residual_gate", ul_max_res}, {"seed", seed}};
            std::ostringstream sum;
            sum << "Built the " << ul_cells << "-cell discretized transfer operator at gamma="
                << ul_gamma << " (invariant-density machinery behind condition 3.5); worst "
                << "transfer/backward-kernel duality residual = " << worst << " (gate "
                << ul_max_res << "). Matrix/density CSVs written with prefix 'ulam'.";
            write_report(out_dir, "ulam.json", body, cfg, "3.5", sum.str());
            return worst <= ul_max_res ? 0 : 2;
        }

        if (alpha_cmd->parsed()) {
            std::vector<double> alphas;
            json cfg{{"command", "alpha"}, {"kmax", al_kmax}, {"seed", seed}};
            if (!al_chain.empty()) {
                const auto chain = load_chain(al_chain);
                alphas = qlab::chain::alpha_coeffs(chain, al_kmax, al_rosenblatt);
                cfg["chain"] = al_chain;
                cfg["rosenblatt"] = al_rosenblatt;
            } else {
                if (al_gamma <= 0.0)
                    throw std::invalid_argument("alpha: need --chain or --gamma");
                const auto model = qlab::pm::ulam_build(al_gamma, al_cells, al_grading);
                alphas = qlab::pm::alpha_coeffs_ulam(model, al_kmax);
                cfg["gamma"] = al_gamma;
                cfg["cells"] = al_cells;
                cfg["grading"] = al_grading;
            }
            csv_alpha(out_dir / "alpha.csv", alphas);
            if (common.svg) {
                std::vector<double> xs, ys;
                for (std::size_t k = 1; k <= alphas.size(); ++k)
                    if (alphas[k - 1] > 0) {
                        xs.push_back(std::log(static_cast<double>(k)));
                        ys.push_back(std::log(alphas[k - 1]));
                    }
                svg_line(out_dir / "alpha.svg", xs, ys, "log-log dependence-coefficient decay");
            }
            json body;
            body["alpha"] = alphas;
            const double slope = loglog_slope_window(alphas, alphas.size());
            body["loglog_slope"] = slope;
            std::ostringstream sum;
            sum << "Computed " << alphas.size() << " dependence coefficients feeding the mixing "
                << "integral condition 3.1; trailing log-log slope = " << slope
                << ". Table written to alpha.csv.";
            write_report(out_dir, "alpha.json", body, cfg, "3.1", sum.str());
            return 0;
        }

        if (cond_cmd->parsed()) {
            const auto chain = load_chain(co_chain);
            const auto eta = qlab::chain::eta_exact(chain, co_kmax);
            const auto c21 = qlab::chain::cond21_series(chain, co_kmax);
            const auto mw = qlab::chain::mw_series(chain, co_kmax);
            const auto hh = qlab::chain::hh_series(chain, std::min<std::size_t>(co_kmax, 64));
            const auto gor = qlab::chain::gordin_l1_stats(chain, 64, co_replicas, seed);
            json body;
            body["2.2"] = {{"eta", eta.eta}, {"series", qlab::to_json(eta.report)}};
            body["2.1"] = qlab::to_json(c21);
            body["5.2"] = qlab::to_json(mw);
            body["5.3"] = qlab::to_json(hh);
            body["2.3"] = {{"sup_norm", gor.sup_norm},
                           {"ratio_trace", gor.ratio_trace},
                           {"ratio_se", gor.ratio_se}};
            csv_series(out_dir / "conditions_21.csv", c21);
            csv_series(out_dir / "conditions_52.csv", mw);
            csv_series(out_dir / "conditions_53.csv", hh);
            if (common.svg) {
                std::vector<double> xs, ys;
                for (std::size_t k = 1; k <= c21.partial_sums.size(); ++k) {
                    xs.push_back(static_cast<double>(k));
                    ys.push_back(c21.partial_sums[k - 1]);
                }
                svg_line(out_dir / "conditions_21.svg", xs, ys, "partial sums, condition 2.1");
            }
            json cfg{{"command", "conditions"}, {"chain", co_chain}, {"kmax", co_kmax},
                     {"replicas", co_replicas}, {"seed", seed}};
            std::ostringstream sum;
            sum << "Evaluated the projective criteria for the chain in " << co_chain
                << ": condition 2.1 " << verdict_word(c21) << " (sum " << c21.total()
                << "), long-run variance 2.2 eta = " << eta.eta << ", condition 5.2 "
                << verdict_word(mw) << ", condition 5.3 " << verdict_word(hh)
                << ", L1 criterion 2.3 sup norm " << gor.sup_norm << ".";
            write_report(out_dir, "conditions.json", body, cfg, "2.1", sum.str());
            return 0;
        }

        if (q_cmd->parsed() || f_cmd->parsed()) {
            const bool is_fidis = f_cmd->parsed();
            const std::string chain_file = is_fidis ? f_chain : q_chain;
            const std::string obs_spec = is_fidis ? f_obs : q_obs;
            const double gamma = is_fidis ? f_gamma : q_gamma;
            const double grading = is_fidis ? f_grading : q_grading;
            const std::size_t cells = is_fidis ? f_cells : q_cells;
            const double x0 = is_fidis ? f_x0 : q_x0;
            const std::size_t n = is_fidis ? f_n : q_n;
            const std::size_t replicas = is_fidis ? f_replicas : q_replicas;

            std::optional<qlab::chain::FiniteChain> chain;
            std::optional<qlab::pm::UlamModel> model;
            std::optional<qlab::pm::ObservableSpec> obs;
            std::unique_ptr<qlab::mc::StepSampler> sampler;
            double eta = 0.0;
            if (!chain_file.empty()) {
                chain.emplace(load_chain(chain_file));
                eta = qlab::chain::eta_exact(*chain).eta;
                sampler = std::make_unique<qlab::mc::ChainSampler>(*chain);
            } else {
                if (gamma <= 0.0) throw std::invalid_argument("need --chain or --gamma");
                model.emplace(qlab::pm::ulam_build(gamma, cells, grading));
                obs.emplace(parse_obs(obs_spec));
                eta = qlab::pm::eta_ulam(*model, *obs).eta;
                sampler = std::make_unique<qlab::mc::UlamSampler>(*model, *obs);
            }

            qlab::mc::EnsembleSpec spec;
            if (is_fidis) {
                spec.fidis_times = split_list(f_times);
            } else if (!q_modulus.empty()) {
                for (double m : split_list(q_modulus))
                    spec.modulus_m.push_back(static_cast<std::size_t>(m));
            }
            const auto ens = qlab::mc::run_replicas(*sampler, x0, n, replicas, seed, spec);
            csv_replicas(out_dir / (is_fidis ? "fidis_replicas.csv" : "quenched_replicas.csv"),
                         ens);

            if (!is_fidis) {
                const auto rep = qlab::mc::quenched_clt_report(ens, eta);
                const double tol = q_ks_tol > 0.0 ? q_ks_tol : 2.0 * rep.ks_null_band;
                json body = rep.to_json();
                if (!spec.modulus_m.empty()) {
                    const auto tight = qlab::mc::tightness_report(ens);
                    body["tightness"] = tight.to_json();
                    csv_tightness(out_dir / "tightness.csv", tight);
                }
                json cfg{{"command", "quenched"}, {"x0", x0},        {"n", n},
                         {"replicas", replicas},  {"obs", obs_spec}, {"seed", seed},
                         {"ks_tol", tol}};
                if (chain) cfg["chain"] = chain_file;
                else cfg["gamma"] = gamma, cfg["cells"] = cells, cfg["grading"] = grading;
                std::ostringstream sum;
                sum << "Quenched CLT check (conclusion 2.3) from the fixed start " << x0 << ": "
                    << replicas << " replicas of S_n/sqrt(n) at n=" << n
                    << " against N(0, eta) with eta=" << eta << "; KS distance " << rep.ks
                    << " vs gate " << tol << " (95% null band " << rep.ks_null_band << ").";
                write_report(out_dir, "quenched.json", body, cfg, "2.3", sum.str());
                return rep.ks <= tol ? 0 : 2;
            }

            std::vector<double> weights = split_list(f_weights);
            if (weights.empty()) weights.assign(spec.fidis_times.size(), 1.0);
            const auto rep = qlab::mc::fidis_report(ens, weights, eta);
            const double tol = f_ks_tol > 0.0 ? f_ks_tol : 2.0 * rep.ks_null_band;
            json body = rep.to_json();
            json cfg{{"command", "fidis"}, {"x0", x0},           {"n", n},
                     {"replicas", replicas}, {"times", f_times}, {"obs", obs_spec},
                     {"seed", seed},       {"ks_tol", tol}};
            if (chain) cfg["chain"] = chain_file;
            else cfg["gamma"] = gamma, cfg["cells"] = cells, cfg["grading"] = grading;
            std::ostringstream sum;
            sum << "Finite-dimensional Donsker marginals (conclusion 2.3) at times " << f_times
                << ": weighted increment functional KS distance " << rep.ks << " vs gate " << tol
                << "; max off-diagonal increment correlation " << rep.max_offdiag_corr << ".";
            write_report(out_dir, "fidis.json", body, cfg, "2.3", sum.str());
            return rep.ks <= tol ? 0 : 2;
        }

        if (b_cmd->parsed()) {
            const std::vector<double> eps_grid = split_list(b_eps);
            json body, cfg{{"command", "blocks"}, {"m", b_m},  {"p", b_p},
                           {"eps", b_eps},        {"replicas", b_replicas}, {"seed", seed},
                           {"x0", b_x0}};
            if (!b_chain.empty()) {
                const auto chain = load_chain(b_chain);
                const qlab::mc::ChainSampler sampler(chain);
                const double eta = qlab::chain::eta_exact(chain).eta;
                const auto diag = qlab::mc::block_diagnostics_mc(
                    sampler, sampler, b_x0, b_m, b_p, eps_grid, b_replicas, seed, eta);
                body = diag.to_json();
                cfg["chain"] = b_chain;
            } else {
                if (b_gamma <= 0.0) throw std::invalid_argument("need --chain or --gamma");
                const auto model = qlab::pm::ulam_build(b_gamma, b_cells, b_grading);
                const auto obs = parse_obs(b_obs);
                const qlab::mc::UlamSampler sampler(model, obs);
                const double eta = qlab::pm::eta_ulam(model, obs).eta;
                const auto diag = qlab::mc::block_diagnostics_mc(
                    sampler, sampler, b_x0, b_m, b_p, eps_grid, b_replicas, seed, eta);
                body = diag.to_json();
                cfg["gamma"] = b_gamma;
                cfg["cells"] = b_cells;
                cfg["grading"] = b_grading;
                cfg["obs"] = b_obs;
            }
            std::ostringstream sum;
            sum << "Blocking-condition diagnostics C1..C4 with " << b_m << " blocks of length "
                << b_p << " from start " << b_x0 << "; statistics and standard errors written to "
                << "blocks.json.";
            write_report(out_dir, "blocks.json", body, cfg, "C1..C4", sum.str());
            return 0;
        }

        if (c_cmd->parsed()) {
            json body, cfg{{"command", "counterexample"}, {"kmax", c_kmax}, {"mode", c_mode},
                           {"seed", seed}};
            if (c_mode == "series") {
                const auto s21 = qlab::cex::series_cond21(c_kmax);
                const auto s23 = qlab::cex::series_gordin_lowerbound(std::max<std::size_t>(2, c_kmax));
                const auto s52 = qlab::cex::series_mw_lowerbound(4096);
                const auto s53 = qlab::cex::series_hh_lowerbound(c_kmax);
                body["2.1"] = qlab::to_json(s21);
                body["2.3"] = qlab::to_json(s23);
                body["5.2"] = qlab::to_json(s52);
                body["5.3"] = qlab::to_json(s53.report);
                body["5.3"]["prefactor"] = s53.prefactor;
                csv_series(out_dir / "counterexample_21.csv", s21);
                csv_series(out_dir / "counterexample_23.csv", s23);
                csv_series(out_dir / "counterexample_53.csv", s53.report);
                if (common.svg) {
                    std::vector<double> xs, ys;
                    for (std::size_t k = 1; k <= s23.partial_sums.size(); ++k) {
                        xs.push_back(static_cast<double>(k));
                        ys.push_back(s23.partial_sums[k - 1]);
                    }
                    svg_line(out_dir / "counterexample_23.svg", xs, ys,
                             "harmonic growth of the L1 lower bound");
                }
                std::ostringstream sum;
                sum << "Divergence-witness series at K=" << c_kmax << ": condition 2.1 "
                    << verdict_word(s21) << " (sum " << s21.total()
                    << "), while the lower bounds for conditions 2.3, 5.2, and 5.3 are all "
                    << verdict_word(s23) << " (harmonic-type growth).";
                write_report(out_dir, "counterexample.json", body, cfg, "2.1", sum.str());
                return 0;
            }
            const auto sys = qlab::cex::realize(c_kmax, seed);
            body["system"] = sys.to_json();
            const auto tr = qlab::cex::empirical_conditional_norms(sys, sys.par.N, c_replicas,
                                                                   seed + 1);
            json trace;
            trace["n_grid"] = tr.n_grid;
            trace["norm_estimate"] = tr.norm_estimate;
            trace["se"] = tr.se;
            body["conditional_norms"] = trace;
            cfg["replicas"] = c_replicas;
            std::ostringstream sum;
            sum << "Realized the K=" << c_kmax << " divergence-witness system (conditions 2.1 "
                << "holds, 2.3/5.2/5.3 fail); set properties verified exactly (largest shift "
                << "symmetric difference within half its allowance); conditional norm "
                << "estimates written for n in the level grid.";
            write_report(out_dir, "counterexample.json", body, cfg, "2.3", sum.str());
            return 0;
        }

        if (t_cmd->parsed()) {
            const auto h = qlab::probkit::TailFunction::power(t_c, t_q, t_b, t_x0);
            const double val = qlab::probkit::tail_condition_integral(h, t_gamma);
            json body{{"integral", val}, {"finite", std::isfinite(val)}};
            json cfg{{"command", "tailcheck"}, {"gamma", t_gamma}, {"tail_q", t_q},
                     {"tail_c", t_c},          {"tail_b", t_b},    {"tail_x0", t_x0},
                     {"seed", seed}};
            std::ostringstream sum;
            sum << "Tail-integral condition 3.4 at gamma=" << t_gamma << " for a power tail with "
                << "exponent " << t_q << ": integral = " << val << " ("
                << (std::isfinite(val) ? "finite, condition satisfied"
                                       : "divergent, condition fails")
                << ").";
            write_report(out_dir, "tailcheck.json", body, cfg, "3.4", sum.str());
            return std::isfinite(val) ? 0 : 2;
        }

        if (i_cmd->parsed()) {
            qlab::Rng rng(seed, 0);
            std::size_t max_fail = 0, trunc_fail = 0;
            double worst_gap = 0.0;
            for (std::size_t t = 0; t < i_chains; ++t) {
                std::vector<std::vector<double>> kernel(3, std::vector<double>(3));
                for (auto& row : kernel) {
                    double s = 0;
                    for (auto& v : row) {
                        v = 0.05 + rng.uniform();
                        s += v;
                    }
                    for (auto& v : row) v /= s;
                }
                std::vector<double> fv(3);
                for (auto& v : fv) v = 2.0 * rng.uniform() - 1.0;
                const qlab::chain::FiniteChain chain(kernel, fv);
                for (double lambda : {0.0, 0.5}) {
                    const auto [lhs, rhs] =
                        qlab::chain::max_inequality_bruteforce(chain, t % 3, i_n, lambda);
                    worst_gap = std::max(worst_gap, lhs - rhs);
                    if (lhs > rhs + 1e-10) ++max_fail;
                }
            }
            for (std::size_t t = 0; t < i_spaces; ++t) {
                const std::size_t na = 2 + (rng.next_u64() % 7);
                qlab::probkit::FiniteProbSpace space;
                space.probs.resize(na);
                space.xvals.resize(na);
                double s = 0;
                for (std::size_t a = 0; a < na; ++a) {
                    space.probs[a] = 0.05 + rng.uniform();
                    s += space.probs[a];
                    space.xvals[a] = 4.0 * rng.uniform() - 2.0;
                }
                for (auto& p : space.probs) p /= s;
                const std::size_t nblocks = 1 + (rng.next_u64() % na);
                space.partition.assign(nblocks, {});
                for (std::size_t a = 0; a < na; ++a)
                    space.partition[a % nblocks].push_back(a);
                const double p = 1.0 + 2.0 * rng.uniform();
                const double eps = 0.1 + 2.0 * rng.uniform();
                if (!qlab::probkit::check_truncation_inequalities(space, p, eps).all_hold)
                    ++trunc_fail;
            }
            json body{{"maximal_inequality_failures", max_fail},
                      {"maximal_inequality_worst_gap", worst_gap},
                      {"truncation_failures", trunc_fail},
                      {"chains", i_chains},
                      {"spaces", i_spaces}};
            json cfg{{"command", "inequalities"}, {"chains", i_chains}, {"spaces", i_spaces},
                     {"n", i_n},                  {"seed", seed}};
            std::ostringstream sum;
            sum << "Brute-force inequality verification: conditional maximal inequality "
                << "(proposition maxineq) on " << i_chains << " random 3-state chains with "
                << max_fail << " failures; truncation triple (displays 5.9/5.10) on " << i_spaces
                << " random finite spaces with " << trunc_fail << " failures.";
            write_report(out_dir, "inequalities.json", body, cfg, "maxineq", sum.str());
            return (max_fail == 0 && trunc_fail == 0) ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
