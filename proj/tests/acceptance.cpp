// End-to-end acceptance run: one PASS/FAIL line per criterion.
// usage: acceptance [--out DIR] [--only K]
#include "css/cli.hpp"
#include "css/report.hpp"
#include "css/variational.hpp"
#include "support.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace css;
using namespace css::testing;

namespace {

// frozen independent values
const double kRingQuartic1 = 1.0 / (3.0 * pi);
const double kRingQuartic2 = 0.125;
const double kGaussianMengerMelnikov = std::log(4.0 / 3.0);

const Grid kGrid(12.0, 256);

struct Outcome {
    Report report;
    std::string summary;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

WronskianPair pair(std::initializer_list<cplx> P, std::initializer_list<cplx> Q) {
    return WronskianPair::validated(Polynomial(P), Polynomial(Q));
}

ComplexField normalized_soliton(const Soliton& s, const Grid& g = kGrid) {
    ComplexField u = sample_soliton(s, g);
    normalize(u);
    return u;
}

double ring_law(int n, double beta) { return pi * (2.0 * n - 1) / (n * (n + 1.0)) * (beta - 2.0 * n) * (beta - 2.0 * n); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Outcome liouville_identity() {
    Outcome o;
    Grid g(8.0, 256);
    std::mt19937_64 rng(101);
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
        WronskianPair w = random_resolved_pair(rng, 4, g);
        double r = liouville_residual(w, g);
        worst = std::max(worst, r);
        o.report.add("residual_" + std::to_string(t), r, 0.0, 1e-6);
    }
    o.summary = fmt("max residual %.2e over 20 pairs", worst);
    return o;
}

Outcome flux_quantization() {
    Outcome o;
    std::mt19937_64 rng(102);
    double worst = 0;
    for (int d = 1; d <= 4; ++d)
        for (int t = 0; t < 3; ++t) {
            Polynomial P = random_rooted(rng, d, 1.5);
            Polynomial Q = random_rooted(rng, t % (d + 1), 1.5) * cplx(0.7, 0.4);
            if (!coprime(P, Q)) Q = Q + Polynomial::constant(0.5);
            auto w = WronskianPair::validated(P, Q);
            double n = flux_integral(LiouvilleSolution::from_pair(w)).value() / (8 * pi);
            worst = std::max(worst, std::abs(n - d) / d);
            o.report.add("flux_deg" + std::to_string(d) + "_" + std::to_string(t), n / d, 1.0, 0.01);
        }
    o.summary = fmt("max relative deviation %.2e over degrees 1-4", worst);
    return o;
}

Outcome minimizer_saturation() {
    Outcome o;
    std::vector<WronskianPair> pairs{pair({0, 1}, {1}),
                                     pair({cplx(0.3, -0.2), 1}, {0.8}),
                                     pair({0, 0, 1}, {1}),
                                     pair({-0.5, 0, 1}, {0.2, 1}),
                                     pair({0, 0, 0, 1}, {1}),
                                     pair({0.1, -0.4, 0, 1}, {cplx(0, 0.5), 0, 0.6})};
    double worst_mass = 0, worst_gap = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        Soliton s = Soliton::from_pair(pairs[k]);
        std::string tag = "beta" + std::to_string(static_cast<int>(s.beta)) + "_" + std::to_string(k);
        double m = mass_integral(s).value();
        o.report.add("mass_" + tag, m, 1.0, 0.01);
        // the energy identity is checked on the raw sample; rescaling it to unit mass would
        // inflate E by the fraction of the tail outside the box
        // refine until the narrowest feature spans four cells
        int M = kGrid.M;
        while (resolution_scale(pairs[k], Grid(kGrid.L, M)) < 4 * Grid(kGrid.L, M).h() && M < 1024) M *= 2;
        Grid g(kGrid.L, M);
        tag += "_M" + std::to_string(M);
        ComplexField u = sample_soliton(s, g);
        auto e = magnetic_energy(KernelSums(g), u, s.beta);
        double rel = e.bogomolnyi_gap / e.total_E_beta;
        o.report.add("gap_over_E_" + tag, rel, 0.0, 1e-3);
        worst_mass = std::max(worst_mass, std::abs(m - 1));
        worst_gap = std::max(worst_gap, std::abs(rel));
    }
    o.summary = fmt("max |mass-1| %.2e, max |gap|/E %.2e", worst_mass, worst_gap);
    return o;
}

Outcome ring_energy_law() {
    Outcome o;
    double worst = 0;
    for (int n = 1; n <= 3; ++n)
        for (double beta : {0.0, 1.0, 2.0 * n, 2.0 * n + 2}) {
            double got = vortex_ring_ratio(n, beta), want = ring_law(n, beta);
            o.report.add(fmt("ratio_n%.0f_beta%.0f", n, beta), got, want, 0.01);
            worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
        }
    auto quartic = [](int n) {
        RealField rho = density(sample_soliton(radial_ring(n), kGrid));
        return integrate(pointwise(rho, rho));
    };
    double q1 = quartic(1), q2 = quartic(2);
    o.report.add("quartic_n1", q1 / kRingQuartic1, 1.0, 0.005);
    o.report.add("quartic_n2", q2 / kRingQuartic2, 1.0, 0.005);
    o.summary = fmt("max scaled ratio error %.2e, quartics %.3e %.3e relative", worst, q1 / kRingQuartic1 - 1,
                    q2 / kRingQuartic2 - 1);
    return o;
}

Outcome townes() {
    Outcome o;
    auto t = townes_solve();
    o.report.add("c_lgn", t.c_lgn / (0.931 * 2 * pi), 1.0, 0.005);
    o.summary = fmt("C_LGN %.6f = %.5f x 2 pi", t.c_lgn, t.c_lgn / (2 * pi));
    return o;
}

Outcome susy_factorization() {
    Outcome o;
    Grid g(8.0, 128);
    KernelSums ks(g);
    std::mt19937_64 rng(106);
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
        ComplexField u = random_smooth_field(rng, g);
        normalize(u);
        for (double beta : {0.5, 1.0, 2.0}) {
            auto e = magnetic_energy(ks, u, beta);
            for (int sign : {-1, 1}) {
                double lhs = e.total_E_beta + sign * 2 * pi * beta * e.quartic;
                double rel = (susy_rhs(ks, u, beta, sign) - lhs) / e.total_E_beta;
                worst = std::max(worst, std::abs(rel));
                o.report.add(fmt("susy_%.0f_beta%.1f_sign%+.0f", t, beta, sign), rel, 0.0, 1e-4);
            }
        }
    }
    o.summary = fmt("max relative mismatch %.2e over 120 checks", worst);
    return o;
}

Outcome inequality_battery_run() {
    Outcome o;
    Grid g(8.0, 128);
    KernelSums ks(g);
    std::mt19937_64 rng(107);
    double c = townes_constant();
    int violations = 0;
    double least = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 200; ++t) {
        ComplexField u = random_smooth_field(rng, g);
        double beta = 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        auto r = inequality_battery(ks, u, beta, c);
        for (const auto& chk : r.checks) {
            least = std::min(least, chk.margin());
            if (chk.violated(1e-6)) ++violations;
        }
    }
    o.report.add("violations", violations, 0.0, 0.0);
    KernelSums big(kGrid);
    double worst = 0;
    for (int n = 1; n <= 3; ++n) {
        auto r = inequality_battery(big, normalized_soliton(radial_ring(n)), 2.0 * n, c);
        for (const char* name : {"bogomolnyi", "mm_interpolation"}) {
            double m = r.get(name).margin();
            worst = std::max(worst, std::abs(m));
            o.report.add(std::string(name) + "_margin_n" + std::to_string(n), m, 0.0, 1e-3);
        }
    }
    o.summary = fmt("%.0f violations in 1000 checks (least margin %.2e); soliton margins <= %.2e", violations, least,
                    worst);
    return o;
}

Outcome wronskian_completeness() {
    Outcome o;
    std::mt19937_64 rng(108);
    std::normal_distribution<double> N(0.0, 1.0);
    auto rc = [&] { return cplx(N(rng), N(rng)); };
    std::vector<Polynomial> targets{Polynomial({1}), Polynomial({rc()}), Polynomial({0, 1}), Polynomial({rc(), rc()}),
                                    Polynomial({0, 0, 1}), Polynomial({1, 0, 1}), Polynomial({1, -2, 1}),
                                    Polynomial({1, 2, 3})};
    for (int t = 0; t < 4; ++t) targets.push_back(Polynomial({rc(), rc(), rc()}));
    int mismatches = 0;
    double worst = 0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const Polynomial& f = targets[k];
        std::vector<SolutionFamily> closed;
        if (f.degree() == 2)
            closed = solve_degree_two(f[2], f[1], f[0]);
        else if (f.degree() == 1)
            closed = {solve_single_root(f[1], -f[0] / f[1], 1)};
        else
            closed = {solve_single_root(f[0], 0.0, 0)};
        auto generic = solve_generic(f);
        auto covered = [](const std::vector<SolutionFamily>& a, const std::vector<SolutionFamily>& b) {
            for (const auto& x : a) {
                bool found = false;
                for (const auto& y : b) found |= same_canonical(canonical_form(x.representative), canonical_form(y.representative));
                if (!found) return false;
            }
            return true;
        };
        bool equal = generic.size() == closed.size() && covered(closed, generic) && covered(generic, closed);
        if (!equal) ++mismatches;
        for (const auto& y : generic) worst = std::max(worst, y.residual / std::max(1.0, f.norm()));
    }
    o.report.add("set_mismatches", mismatches, 0.0, 0.0);
    o.report.add("max_residual", worst, 0.0, 1e-10);
    o.summary = fmt("%.0f targets, %.0f set mismatches, max residual %.2e", double(targets.size()), mismatches, worst);
    return o;
}

Outcome symmetry_orbit() {
    Outcome o;
    std::mt19937_64 rng(109);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst_u = 0;
    int bad_orbit = 0;
    for (int t = 0; t < 50; ++t) {
        int n = 1 + t % 3;
        Polynomial P = random_rooted(rng, n, 1.5), Q = random_rooted(rng, t % (n + 1), 1.5) * cplx(0.6, 0.5);
        if (!coprime(P, Q)) Q = Q + Polynomial::constant(0.7);
        auto w = WronskianPair::validated(P, Q);
        PairTransform L = random_su2(rng);
        L.m *= 0.3 + 2.7 * U(rng);
        auto moved = act(L, w.pq());
        auto w2 = WronskianPair::validated(moved.first, moved.second);
        Soliton s = Soliton::from_pair(w), s2 = Soliton::from_pair(w2);
        for (int k = 0; k < 100; ++k) {
            cplx z(4 * U(rng) - 2, 4 * U(rng) - 2);
            worst_u = std::max(worst_u, std::abs(u_value(s, z) - u_value(s2, z)));
        }
        auto orbit = same_orbit(w, w2);
        bool ok = orbit.same;
        if (ok) {
            auto image = act(orbit.witness, w.pq());
            ok = coefficients_close(image.first, w2.P, 1e-10) && coefficients_close(image.second, w2.Q, 1e-10);
        }
        if (!ok) ++bad_orbit;
    }
    o.report.add("max_pointwise_difference", worst_u, 0.0, 1e-12);
    o.report.add("orbit_failures", bad_orbit, 0.0, 0.0);
    o.summary = fmt("max |u - u'| %.2e over 5000 points, %.0f orbit failures", worst_u, bad_orbit);
    return o;
}

Outcome gamma_estimation(const std::filesystem::path& out) {
    Outcome o;
    std::filesystem::create_directories(out);
    std::string csv = (out / "bounds.csv").string();
    std::vector<std::string> args{"css", "scan", "--betas", "0:2.5:0.25", "--out", csv};
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream sink, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), sink, err);
    if (code != 0) throw std::runtime_error("scan failed: " + err.str());

    struct Row {
        double beta, lower, upper, gamma;
    };
    std::vector<Row> rows;
    std::ifstream is(csv);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        rows.push_back({v.at(0), v.at(1), v.at(2), v.at(3)});
    }
    auto at = [&](double beta) -> const Row& {
        for (const auto& r : rows)
            if (std::abs(r.beta - beta) < 1e-9) return r;
        throw std::runtime_error("beta missing from scan");
    };
    double c = townes_constant();
    o.report.add("gamma0_over_c_lgn", at(0.0).gamma / c, 1.0, 0.02);
    o.report.add("gamma2_over_4pi", at(2.0).gamma / (4 * pi), 1.0, 0.02);
    double prev = 0;
    for (double beta : {0.5, 1.0, 1.5, 2.0}) {
        double ratio = at(beta).gamma / beta;
        // growth of gamma/beta beyond the 3% allowance
        if (prev > 0) o.report.add(fmt("ratio_rise_beta%.1f", beta), std::max(0.0, ratio / prev - 1.03), 0.0, 0.0);
        prev = ratio;
    }
    int outside = 0;
    for (const auto& r : rows) {
        bool in = r.gamma >= r.lower * 0.97 && r.gamma <= r.upper * 1.03;
        if (!in) ++outside;
        o.report.add(fmt("sandwich_beta%.2f", r.beta), in ? 0.0 : 1.0, 0.0, 0.0);
    }
    o.summary = fmt("gamma(0)/C_LGN %.4f, gamma(2)/4pi %.4f, %.0f rows outside bounds", at(0.0).gamma / c,
                    at(2.0).gamma / (4 * pi), outside);
    o.summary += ", wrote " + csv;
    return o;
}

Outcome euler_lagrange() {
    Outcome o;
    KernelSums ks(kGrid);
    double r0 = el_residual(ks, normalized_soliton(radial_ring(1)), 2.0, 4 * pi).residual;
    o.report.add("soliton_residual", r0, 0.0, 1e-2);
    std::mt19937_64 rng(111);
    double least = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 10; ++t) {
        ComplexField v = random_smooth_field(rng, kGrid);
        normalize(v);
        double beta = 0.5 + 1.5 * std::uniform_real_distribution<double>(0, 1)(rng);
        double r = el_residual(ks, v, beta, 2 * pi * beta).residual;
        least = std::min(least, r);
        // discrimination: shortfall below 0.1 counts as failure
        o.report.add("random_shortfall_" + std::to_string(t), std::max(0.0, 0.1 - r), 0.0, 0.0);
    }
    o.summary = fmt("soliton residual %.2e, least random residual %.2e", r0, least);
    return o;
}

Outcome menger_melnikov_identity() {
    Outcome o;
    Grid g(10.0, 256);
    KernelSums ks(g);
    std::mt19937_64 rng(112);
    std::string s;

    RealField gauss = gaussian_density(g);
    double grid1 = menger_melnikov(ks, gauss);
    std::normal_distribution<double> N(0.0, std::sqrt(0.5));
    auto exact_draw = [&](std::mt19937_64& r) { return std::pair<double, double>{N(r), N(r)}; };
    auto mc1 = menger_melnikov_monte_carlo(exact_draw, 1.0, 10'000'000, rng);
    o.report.add("gaussian_mc_over_grid", mc1.value / grid1, 1.0, 0.05);
    o.report.add("gaussian_grid_closed_form", grid1 / kGaussianMengerMelnikov, 1.0, 1e-4);

    RealField mix = gaussian_density(g, 0.8, 0.7, -0.3, 0.6) + gaussian_density(g, 1.2, -1.0, 0.5, 0.4);
    double grid2 = menger_melnikov(ks, mix);
    auto mc2 = menger_melnikov_monte_carlo(GridDensitySampler(mix), integrate(mix), 10'000'000, rng);
    o.report.add("mixture_mc_over_grid", mc2.value / grid2, 1.0, 0.05);

    o.summary = fmt("gaussian grid %.5f mc %.5f", grid1, mc1.value) + fmt(" (se %.1e); mixture grid %.5f", mc1.stderr_, grid2) +
                fmt(" mc %.5f (se %.1e)", mc2.value, mc2.stderr_);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("acceptance criteria");
    std::string out = "acceptance_out";
    int only = 0;
    app.add_option("--out", out, "directory for bounds.csv and acceptance.json");
    app.add_option("--only", only, "run a single criterion")->check(CLI::Range(0, 12));
    CLI11_PARSE(app, argc, argv);

    std::vector<Criterion> criteria{
        {1, "liouville_identity", 30, liouville_identity},
        {2, "flux_quantization", 60, flux_quantization},
        {3, "minimizer_mass_and_saturation", 60, minimizer_saturation},
        {4, "vortex_ring_energy_law", 120, ring_energy_law},
        {5, "townes_constant", 5, townes},
        {6, "susy_factorization", 120, susy_factorization},
        {7, "inequality_battery", 600, inequality_battery_run},
        {8, "inverse_wronskian_completeness", 10, wronskian_completeness},
        {9, "symmetry_orbit", 10, symmetry_orbit},
        {10, "gamma_estimation", 1800, [&] { return gamma_estimation(out); }},
        {11, "euler_lagrange_residual", 60, euler_lagrange},
        {12, "menger_melnikov_identity", 300, menger_melnikov_identity},
    };

    nlohmann::json summary = nlohmann::json::array();
    bool all = true;
    for (const auto& c : criteria) {
        if (only && c.id != only) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        std::string error;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool pass = error.empty() && o.report.all_pass() && secs <= c.budget_s;
        all = all && pass;
        std::printf("%s %2d %-32s %s [%.1f s / %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    error.empty() ? o.summary.c_str() : ("error: " + error).c_str(), secs, c.budget_s);
        for (const auto& r : o.report.rows)
            if (!r.pass())
                std::printf("     %s computed %.6g expected %.6g allowed %.3g\n", r.name.c_str(), r.computed, r.expected,
                            r.allowed());
        std::fflush(stdout);
        nlohmann::json j = o.report.to_json();
        j["id"] = c.id;
        j["name"] = c.name;
        j["seconds"] = secs;
        j["pass"] = pass;
        if (!error.empty()) j["error"] = error;
        summary.push_back(j);
    }
    std::filesystem::create_directories(out);
    std::ofstream(std::filesystem::path(out) / "acceptance.json") << summary.dump(2) << '\n';
    return all ? 0 : 1;
}
