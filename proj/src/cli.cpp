#include "css/cli.hpp"

#include "css/functionals.hpp"
#include "css/inverse_wronskian.hpp"
#include "css/report.hpp"
#include "css/soliton.hpp"
#include "css/variational.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace css {

namespace {

struct Common {
    std::string grid;
    unsigned seed = 42;
    std::string out;
    bool json = false;
    bool csv = false;
    std::string config;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--grid", c.grid, "grid as L,M");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--out", c.out, "output path");
    auto* j = sub->add_flag("--json", c.json, "JSON output (default)");
    auto* v = sub->add_flag("--csv", c.csv, "CSV output");
    j->excludes(v);
    sub->add_option("--config", c.config, "JSON configuration file");
}

nlohmann::json load_json_arg(const std::string& s) {
    std::string text = s;
    if (!s.empty() && s.front() != '{' && s.front() != '[') {
        std::ifstream is(s);
        if (!is) throw std::invalid_argument("cannot open " + s);
        std::stringstream ss;
        ss << is.rdbuf();
        text = ss.str();
    }
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad JSON: ") + e.what());
    }
}

RunConfig run_config(const Common& c) {
    RunConfig rc;
    if (!c.config.empty()) rc = RunConfig::from_json(load_json_arg(c.config));
    if (!c.grid.empty()) std::tie(rc.L, rc.M) = parse_grid_spec(c.grid);
    rc.seed = c.seed;
    rc.validate();
    return rc;
}

void emit(std::ostream& out, const Common& c, const nlohmann::json& j, const std::function<void(std::ostream&)>& csv) {
    if (c.csv)
        csv(out);
    else
        out << j.dump(2) << '\n';
}

void emit_report(std::ostream& out, const Common& c, const Report& r, nlohmann::json extra = {}) {
    nlohmann::json j = r.to_json();
    if (!extra.is_null()) j["data"] = std::move(extra);
    emit(out, c, j, [&](std::ostream& os) { r.write_csv(os); });
}

std::string poly_csv(const Polynomial& p) {
    std::string s = to_json(p).dump();
    return "\"" + s + "\"";
}

// ---------------------------------------------------------------- subcommands

int cmd_solve_wronskian(std::ostream& out, const Common& c, const std::string& fspec, const std::string& method, int cap) {
    Polynomial f = polynomial_from_json(load_json_arg(fspec));
    std::vector<SolutionFamily> fams;
    std::string used = method;
    if (method == "auto") used = (f.degree() >= 0 && f.degree() <= 2) ? "closed" : "generic";
    if (used == "closed") {
        if (f.is_zero()) throw std::invalid_argument("zero polynomial");
        if (f.degree() == 2) {
            fams = solve_degree_two(f[2], f[1], f[0]);
        } else if (f.degree() <= 1) {
            // a (z - z0)^n
            cplx a = f.leading();
            cplx z0 = f.degree() == 1 ? -f[0] / f[1] : 0.0;
            fams.push_back(solve_single_root(a, z0, static_cast<int>(f.degree())));
        } else {
            throw std::invalid_argument("closed forms cover degree at most two");
        }
    } else if (used == "generic") {
        GenericSearchOptions opt;
        opt.cap = cap;
        opt.seed = c.seed;
        fams = solve_generic(f, opt);
    } else {
        throw std::invalid_argument("method must be auto, closed or generic");
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : fams) {
        nlohmann::json params = nlohmann::json::object();
        for (const auto& [name, v] : s.parameters) params[name] = nlohmann::json::array({v.real(), v.imag()});
        j.push_back({{"kind", to_string(s.kind)},
                     {"parameters", params},
                     {"constraint", s.constraint},
                     {"representative", to_json(s.representative)},
                     {"residual", s.residual}});
    }
    emit(out, c, {{"f", to_json(f)}, {"method", used}, {"families", j}}, [&](std::ostream& os) {
        os << "index,kind,deg_P,deg_Q,residual,P,Q\n";
        for (std::size_t k = 0; k < fams.size(); ++k) {
            const auto& s = fams[k];
            os << k << ',' << to_string(s.kind) << ',' << s.representative.P.degree() << ',' << s.representative.Q.degree()
               << ',' << format_g17(s.residual) << ',' << poly_csv(s.representative.P) << ',' << poly_csv(s.representative.Q) << '\n';
        }
    });
    double limit = 1e-10 * std::max(1.0, f.norm());
    for (const auto& s : fams)
        if (!(s.residual <= limit)) return 1;
    return 0;
}

/// "3" or "n=3"
int vortex_degree(const std::string& v) {
    std::string t = v.rfind("n=", 0) == 0 ? v.substr(2) : v;
    std::size_t used = 0;
    int n = std::stoi(t, &used);
    if (used != t.size() || n < 1) throw std::invalid_argument("--vortex takes a positive degree, as 3 or n=3");
    return n;
}

Soliton soliton_arg(const std::string& pair, const std::string& vortex) {
    if (!pair.empty() && !vortex.empty()) throw std::invalid_argument("give only one of --pair and --vortex");
    if (!pair.empty()) return soliton_from_json(load_json_arg(pair));
    if (!vortex.empty()) return radial_ring(vortex_degree(vortex));
    throw std::invalid_argument("give --pair or --vortex");
}

nlohmann::json soliton_summary(const Soliton& s) {
    VortexZeros z = zeros_and_vorticity(s);
    nlohmann::json zeros = nlohmann::json::array();
    for (const auto& r : z.zeros) zeros.push_back({{"at", {r.root.real(), r.root.imag()}}, {"multiplicity", r.multiplicity}});
    TailedIntegral m = mass_integral(s);
    return {{"pair", to_json(s.pair)},
            {"beta", s.beta},
            {"max_degree", s.pair.max_degree()},
            {"mass", m.value()},
            {"mass_tail_bound", m.bound},
            {"zeros", zeros},
            {"vorticity", z.total},
            {"vorticity_range", {z.range_lo, z.range_hi}},
            {"vorticity_in_range", z.in_range()}};
}

int cmd_build_soliton(std::ostream& out, const Common& c, const std::string& pair, const std::string& vortex) {
    Soliton s = soliton_arg(pair, vortex);
    RunConfig rc = run_config(c);
    nlohmann::json j = soliton_summary(s);
    if (!c.out.empty()) {
        write_field(sample_soliton(s, rc.grid()), c.out);
        j["field"] = c.out;
        j["grid"] = {{"L", rc.L}, {"M", rc.M}};
    }
    emit(out, c, j, [&](std::ostream& os) {
        os << "beta,max_degree,mass,vorticity,vorticity_lo,vorticity_hi\n";
        os << format_g17(s.beta) << ',' << s.pair.max_degree() << ',' << format_g17(j["mass"].get<double>()) << ','
           << j["vorticity"].get<int>() << ',' << format_g17(j["vorticity_range"][0].get<double>()) << ','
           << format_g17(j["vorticity_range"][1].get<double>()) << '\n';
    });
    return 0;
}

int cmd_verify_soliton(std::ostream& out, const Common& c, const std::string& pair, const std::string& vortex) {
    Soliton s = soliton_arg(pair, vortex);
    RunConfig rc = run_config(c);
    Grid g = rc.grid();
    KernelSums ks(g);
    ComplexField u = sample_soliton(s, g);
    Report r;
    r.add("mass_polar", mass_integral(s).value(), 1.0, rc.tol.mass_tol);
    double grid_mass = quadrature(u, 2.0);
    r.add("mass_grid", grid_mass, 1.0, rc.tol.mass_tol, "truncated to the box");
    EnergyReport e = magnetic_energy(ks, u, s.beta);
    r.add("bogomolnyi_gap_over_E", e.bogomolnyi_gap / e.total_E_beta, 0.0, 1e-3);
    for (auto& x : u.v) x /= std::sqrt(grid_mass);
    ELResult el = el_residual(ks, u, s.beta, 2 * pi * s.beta);
    double unorm = std::sqrt(integrate_interior(density(u), 3));
    r.add("el_residual", el.residual / unorm, 0.0, 1e-2);
    VortexZeros z = zeros_and_vorticity(s);
    r.add("vorticity_in_range", z.in_range() ? 1.0 : 0.0, 1.0, 0.0);
    // u is unchanged under a positive multiple of SU(2) acting on (P, Q)
    std::mt19937_64 rng(rc.seed);
    std::uniform_real_distribution<double> unif(0.5, 2.0);
    PairTransform T = random_su2(rng);
    double scale = unif(rng);
    T.m *= scale;
    auto moved = act(T, s.pair.pq());
    Soliton s2 = Soliton::from_pair(WronskianPair::validated(moved.first, moved.second));
    double worst = 0, peak = 0;
    for (int k = 0; k < 100; ++k) {
        cplx zk(4 * unif(rng) - 5, 4 * unif(rng) - 5);
        worst = std::max(worst, std::abs(u_value(s2, zk) - u_value(s, zk)));
        peak = std::max(peak, std::abs(u_value(s, zk)));
    }
    r.add("orbit_invariance", worst / peak, 0.0, 1e-12);
    OrbitResult orb = same_orbit(s.pair, s2.pair);
    r.add("same_orbit", orb.same ? 1.0 : 0.0, 1.0, 0.0);
    emit_report(out, c, r, {{"soliton", soliton_summary(s)}, {"energy", e.to_json()}, {"lambda", el.lambda}});
    return r.all_pass() ? 0 : 1;
}

int cmd_verify_field(std::ostream& out, const Common& c, const std::string& field, double beta) {
    ComplexField u = read_field(field);
    KernelSums ks(u.grid);
    InequalityReport ir = inequality_battery(ks, u, beta, townes_constant());
    Report r;
    nlohmann::json sides = nlohmann::json::array();
    for (const auto& chk : ir.checks) {
        // one row per inequality: the relative margin must not be below -1e-6
        r.add(chk.name + "_violation", std::max(0.0, -chk.margin()), 0.0, 1e-6);
        sides.push_back({{"name", chk.name}, {"lhs", chk.lhs}, {"rhs", chk.rhs}, {"margin", chk.margin()}});
    }
    emit_report(out, c, r, {{"inequalities", sides}, {"hardy_ratio", ir.hardy_ratio}});
    return r.all_pass() ? 0 : 1;
}

int cmd_verify_identities(std::ostream& out, const Common& c, const std::string& pair, const std::string& vortex) {
    Soliton s = soliton_arg(pair, vortex);
    RunConfig rc = run_config(c);
    Grid g = rc.grid();
    KernelSums ks(g);
    Report r;
    double n = double(s.pair.max_degree());
    r.add("liouville_residual", liouville_residual(s.pair, g), 0.0, 1e-6);
    TailedIntegral flux = flux_integral(LiouvilleSolution::from_pair(s.pair));
    r.add("flux_over_8pi", flux.value() / (8 * pi), n, 1e-2);
    r.add("wronskian_density", wronskian_density_integral(s.pair).value(), pi * n, 1e-2);
    ComplexField u = sample_soliton(s, g);
    EnergyReport e = magnetic_energy(ks, u, s.beta);
    // the factorization integrates by parts, so check it on a copy cut off smoothly inside the box
    ComplexField uc = pointwise(u, complexify(sample<double>(g, [&](double x, double y) {
        return smooth_cutoff(std::hypot(x, y), 0.5 * g.L, 0.9 * g.L);
    })));
    EnergyReport ec = magnetic_energy(ks, uc, s.beta);
    double splus = susy_rhs(ks, uc, s.beta, +1);
    double scale = ec.total_E_beta + 2 * pi * s.beta * ec.quartic;
    r.add("susy_minus", (ec.susy_rhs - ec.bogomolnyi_gap) / scale, 0.0, rc.tol.identity_tol);
    r.add("susy_plus", (splus - (ec.total_E_beta + 2 * pi * s.beta * ec.quartic)) / scale, 0.0, rc.tol.identity_tol);
    InequalityReport ir = inequality_battery(ks, u, s.beta, townes_constant());
    // equality cases sit on the boundary, so allow the discretization error here
    r.add("inequality_violations", ir.any_violation(1e-3) ? 1.0 : 0.0, 0.0, 0.0);
    r.add("bogomolnyi_margin", ir.get("bogomolnyi").margin(), 0.0, 1e-3);
    r.add("mm_interpolation_margin", ir.get("mm_interpolation").margin(), 0.0, 1e-3);
    emit_report(out, c, r, {{"energy", e.to_json()}, {"hardy_ratio", ir.hardy_ratio},
                            {"resolution_scale", resolution_scale(s.pair, g)}, {"grid_spacing", g.h()}});
    return r.all_pass() ? 0 : 1;
}

int cmd_energy(std::ostream& out, const Common& c, const std::string& field, const std::string& pair, const std::string& vortex,
               std::optional<double> beta) {
    if (!field.empty() && !beta) throw std::invalid_argument("--beta is required with --field");
    ComplexField u = field.empty() ? ComplexField(Grid(16, 16)) : read_field(field);
    double b = 0;
    if (field.empty()) {
        Soliton s = soliton_arg(pair, vortex);
        u = sample_soliton(s, run_config(c).grid());
        b = s.beta;
    }
    if (beta) b = *beta;
    EnergyReport e = magnetic_energy(u, b);
    emit(out, c, e.to_json(), [&](std::ostream& os) {
        os << "beta,kinetic,cross,curvature,quartic,mass,total_E_beta,susy_rhs,bogomolnyi_gap,scaled_quotient\n";
        const double v[] = {e.beta,         e.kinetic,  e.cross,          e.curvature,    e.quartic,
                            e.mass,         e.total_E_beta, e.susy_rhs, e.bogomolnyi_gap, e.scaled_quotient};
        for (std::size_t k = 0; k < std::size(v); ++k) os << (k ? "," : "") << format_g17(v[k]);
        os << '\n';
    });
    return 0;
}

DescentConfig descent_config(const Common& c) {
    DescentConfig d;
    if (!c.config.empty()) d = DescentConfig::from_json(load_json_arg(c.config));
    if (!c.grid.empty()) std::tie(d.L, d.M) = parse_grid_spec(c.grid);
    d.seed = c.seed;
    return d;
}

int cmd_estimate_gamma(std::ostream& out, const Common& c, double beta) {
    DescentConfig d = descent_config(c);
    d.keep_snapshot = !c.out.empty();
    GammaEstimate e = estimate_gamma(beta, d);
    nlohmann::json j = e.to_json();
    j["config"] = d.to_json();
    if (!c.out.empty() && e.minimizer_snapshot) {
        write_field(*e.minimizer_snapshot, c.out);
        j["minimizer_snapshot"] = c.out;
    }
    emit(out, c, j, [&](std::ostream& os) {
        os << "beta,lower,upper,gamma_hat,iterations,final_gradient_norm\n";
        os << format_g17(e.beta) << ',' << format_g17(e.lower_bound) << ',' << format_g17(e.upper_bound) << ','
           << format_g17(e.gamma_hat) << ',' << e.iterations << ',' << format_g17(e.final_gradient_norm) << '\n';
    });
    return 0;
}

void write_scan_csv(std::ostream& os, const std::vector<ScanRow>& rows) {
    os << "beta,lower,upper,gamma_hat,gamma_over_beta,lipschitz,lipschitz_bound,in_bounds,monotone_flag\n";
    for (const auto& r : rows)
        os << format_g17(r.beta) << ',' << format_g17(r.lower) << ',' << format_g17(r.upper) << ','
           << format_g17(r.gamma_hat) << ',' << format_g17(r.ratio) << ',' << format_g17(r.lipschitz) << ','
           << format_g17(r.lipschitz_bound) << ',' << (r.in_bounds ? 1 : 0) << ',' << (r.monotone_flag ? 1 : 0) << '\n';
}

int cmd_scan(std::ostream& out, const Common& c, const std::string& betas) {
    DescentConfig d = descent_config(c);
    auto rows = structure_scan(parse_beta_list(betas), d);
    if (!c.out.empty()) {
        std::ofstream os(c.out);
        if (!os) throw std::invalid_argument("cannot write " + c.out);
        write_scan_csv(os, rows);
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows)
        j.push_back({{"beta", r.beta}, {"lower", r.lower}, {"upper", r.upper}, {"gamma_hat", r.gamma_hat},
                     {"gamma_over_beta", r.beta > 0 ? nlohmann::json(r.ratio) : nlohmann::json(nullptr)},
                     {"lipschitz", r.lipschitz}, {"lipschitz_bound", r.lipschitz_bound}, {"in_bounds", r.in_bounds},
                     {"monotone_flag", r.monotone_flag}, {"stop_reason", r.estimate.stop_reason}});
    emit(out, c, {{"rows", j}}, [&](std::ostream& os) { write_scan_csv(os, rows); });
    return 0;
}

int cmd_townes(std::ostream& out, const Common& c, double tol) {
    TownesProfile t = townes_solve(tol);
    if (!c.out.empty()) {
        std::ofstream os(c.out);
        if (!os) throw std::invalid_argument("cannot write " + c.out);
        os << "r,tau\n";
        for (std::size_t k = 0; k < t.tau.size(); k += 10) os << format_g17(k * t.dr) << ',' << format_g17(t.tau[k]) << '\n';
    }
    emit(out, c, t.to_json(), [&](std::ostream& os) {
        os << "tau0,mass_sq,c_lgn,c_lgn_over_2pi,residual\n";
        os << format_g17(t.tau0) << ',' << format_g17(t.mass_sq) << ',' << format_g17(t.c_lgn) << ','
           << format_g17(t.c_lgn / (2 * pi)) << ',' << format_g17(t.residual) << '\n';
    });
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Self-dual Chern-Simons-Schrodinger solitons: Wronskian pairs, energies and gamma estimates", "css"};
    app.require_subcommand(1);
    Common c;

    std::string fspec, method = "auto";
    int cap = 6;
    auto* sw = app.add_subcommand("solve-wronskian", "all coprime pairs (P, Q) with W(P, Q) = f");
    sw->add_option("--f", fspec, "coefficients of f, low to high, as JSON [[re, im], ...] or a file")->required();
    sw->add_option("--method", method, "auto, closed or generic");
    sw->add_option("--cap", cap, "degree cap for the generic search");
    add_common(sw, c);

    std::string pair, vortex;
    auto soliton_opts = [&](CLI::App* s) {
        s->add_option("--pair", pair, "JSON {\"P\":..., \"Q\":...} or {\"vortex\":{...}}, or a file");
        s->add_option("--vortex", vortex, "radial vortex ring of degree n, as n or n=<n>");
        add_common(s, c);
    };
    auto* bs = app.add_subcommand("build-soliton", "sample u_{P,Q} on the grid");
    soliton_opts(bs);
    auto* vs = app.add_subcommand("verify-soliton", "mass, Bogomolnyi saturation and stationarity of a soliton");
    soliton_opts(vs);
    auto* vi = app.add_subcommand("verify-identities", "Liouville, flux, factorization and inequality checks");
    soliton_opts(vi);
    std::string vfield;
    double vbeta = 1.0;
    vi->add_option("--field", vfield, "binary field file: run the inequality battery only");
    vi->add_option("--beta", vbeta, "flux parameter for --field");

    std::string field;
    std::optional<double> beta_opt;
    auto* en = app.add_subcommand("energy", "energy decomposition of a field");
    en->add_option("--field", field, "binary field file");
    en->add_option("--beta", beta_opt, "flux parameter");
    soliton_opts(en);

    double beta = 0;
    auto* eg = app.add_subcommand("estimate-gamma", "descent estimate of the optimal interpolation constant");
    eg->add_option("--beta", beta, "flux parameter")->required()->check(CLI::NonNegativeNumber);
    add_common(eg, c);

    std::string betas = "0:2.5:0.25";
    auto* sc = app.add_subcommand("scan", "bounds and estimates over a list of beta values");
    sc->add_option("--betas", betas, "start:stop:step or a comma-separated list");
    add_common(sc, c);

    double tol = 1e-10;
    auto* tw = app.add_subcommand("townes", "radial ground state and the constant C_LGN");
    tw->add_option("--tol", tol, "bisection tolerance in [1e-10, 1e-4]");
    add_common(tw, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sw) return cmd_solve_wronskian(out, c, fspec, method, cap);
        if (*bs) return cmd_build_soliton(out, c, pair, vortex);
        if (*vs) return cmd_verify_soliton(out, c, pair, vortex);
        if (*vi) return vfield.empty() ? cmd_verify_identities(out, c, pair, vortex) : cmd_verify_field(out, c, vfield, vbeta);
        if (*en) return cmd_energy(out, c, field, pair, vortex, beta_opt);
        if (*eg) return cmd_estimate_gamma(out, c, beta);
        if (*sc) return cmd_scan(out, c, betas);
        if (*tw) return cmd_townes(out, c, tol);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace css
