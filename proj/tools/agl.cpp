// Command-line front end: profile, identity checks, spectra, delta_1 bisection
// and instability certificates. Exit codes: 0 ok, 1 failed check, 2 usage.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "agl/io.hpp"

namespace {

using nlohmann::ordered_json;
using namespace agl;

struct RunConfig {
    double r_min = 1e-3;
    double r_max = 40;
    long nodes = 2048;
    std::string kind = "geometric";
    double tol = 1e-10;
    double eig_tol = 1e-8;
    std::string out = "out";
    unsigned seed = 1;
    int threads = 0;

    // subcommand settings
    std::vector<double> deltas;
    std::string delta_range;  // "lo:hi:count"
    std::vector<int> modes{2, 3, 5, 9};
    int samples = 20;
    double threshold = 1e-6;
    int n_max = 64;
    int k = 1;
    bool svg = false;
    double width = 0.01;
    std::vector<int> dilations{8, 16, 32, 64};
    int n_limit = 256;
};

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Grid, solver and output settings of c with every subcommand setting at its default.
RunConfig common(const RunConfig& c) {
    RunConfig out;
    out.r_min = c.r_min;
    out.r_max = c.r_max;
    out.nodes = c.nodes;
    out.kind = c.kind;
    out.tol = c.tol;
    out.eig_tol = c.eig_tol;
    out.out = c.out;
    out.seed = c.seed;
    out.threads = c.threads;
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
    return s;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

Provenance base_provenance(const RunConfig& c, const std::string& cmd) {
    return {{"command", cmd},
            {"r_min", format_number(c.r_min)},
            {"r_max", format_number(c.r_max)},
            {"nodes", std::to_string(c.nodes)},
            {"kind", c.kind},
            {"tol", format_number(c.tol)},
            {"seed", std::to_string(c.seed)}};
}

std::vector<double> delta_list(const RunConfig& c, std::vector<double> fallback) {
    std::vector<double> out = c.deltas;
    if (!c.delta_range.empty()) {
        std::istringstream in(c.delta_range);
        double lo, hi;
        int count;
        char s1, s2;
        if (!(in >> lo >> s1 >> hi >> s2 >> count) || s1 != ':' || s2 != ':' || count < 1)
            throw ParameterError("--delta-range expects lo:hi:count");
        for (int i = 0; i < count; ++i) out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    }
    if (out.empty()) out = std::move(fallback);
    for (double d : out)
        if (!(d > -1 && d < 1)) throw ParameterError("delta " + format_number(d) + " outside (-1, 1)");
    return out;
}

Profile<double> make_profile(const RunConfig& c) {
    GridKind kind;
    if (c.kind == "geometric")
        kind = GridKind::geometric;
    else if (c.kind == "uniform")
        kind = GridKind::uniform;
    else
        throw ParameterError("grid kind must be geometric or uniform");
    const auto grid = build_grid(c.r_min, c.r_max, Eigen::Index(c.nodes), kind);
    return solve_profile(grid, c.tol);
}

VerdictOptions verdict_options(const RunConfig& c) {
    VerdictOptions o;
    o.n_max = c.n_max;
    o.k = c.k;
    o.tol = c.eig_tol;
    o.dilations = c.dilations;
    o.threads = c.threads;
    return o;
}

std::string path(const RunConfig& c, const std::string& name) {
    return (std::filesystem::path(c.out) / name).string();
}

void run_profile(const RunConfig& c, const Profile<double>& p) {
    auto prov = base_provenance(c, "profile");
    const auto v = validate_profile(p);
    write_profile_csv(path(c, "profile.csv"), prov, p);
    ordered_json j = to_json(v);
    j["origin_slope"] = p.origin_slope;
    j["residual"] = p.residual_norm;
    j["iterations"] = p.iterations;
    write_json(path(c, "validation.json"), prov, j);
    std::cout << "profile: origin slope " << format_number(p.origin_slope) << ", residual "
              << format_number(p.residual_norm) << ", validation " << (v.ok() ? "ok" : "FAILED") << '\n';
    if (!v.ok()) throw CheckFailure("profile validation failed");
}

void run_identities(const RunConfig& c, const Profile<double>& p) {
    auto prov = base_provenance(c, "identities");
    const auto deltas = delta_list(c, {-0.9, -0.5, -0.2, 0.0, 0.3, 0.7});
    prov.push_back({"deltas", join(deltas)});
    prov.push_back({"modes", join(c.modes)});
    prov.push_back({"samples", std::to_string(c.samples)});
    prov.push_back({"threshold", format_number(c.threshold)});
    const auto recs = identity_suite(p, deltas, c.modes, c.samples, c.seed);
    ordered_json arr = ordered_json::array();
    double worst = 0;
    for (const auto& r : recs) {
        worst = std::max(worst, r.gap.relative());
        arr.push_back({{"identity", identity_name(r.which)},
                       {"delta", r.delta},
                       {"n", r.n},
                       {"sample", r.sample},
                       {"gap", r.gap.relative()},
                       {"absolute_gap", r.gap.gap}});
    }
    write_json(path(c, "identities.json"), prov, arr);
    std::cout << "identities: " << recs.size() << " checks, largest relative gap " << format_number(worst) << '\n';
    if (!(worst <= c.threshold)) throw CheckFailure("identity gap above threshold");
}

void run_spectrum(const RunConfig& c, const Profile<double>& p, const std::vector<double>& deltas,
                  const std::string& command) {
    const std::string stem = "diagram";
    auto prov = base_provenance(c, command);
    prov.push_back({"deltas", join(deltas)});
    prov.push_back({"n_max", std::to_string(c.n_max)});
    prov.push_back({"eig_tol", format_number(c.eig_tol)});
    const auto opts = verdict_options(c);
    std::vector<std::vector<std::string>> rows;
    ordered_json reports = ordered_json::array();
    std::vector<PlotSeries> series(std::size_t(c.n_max) + 1);
    for (int n = 0; n <= c.n_max; ++n) series[n].name = "n = " + std::to_string(n);
    for (double d : deltas) {
        const auto rep = stability_verdict(p, d, opts);
        reports.push_back(to_json(rep));
        for (int n = 0; n <= c.n_max; ++n) {
            double lam;
            if (n < int(rep.modes.size())) {
                lam = rep.modes[n].lambda_min;
            } else {
                // modes covered by the tail certificate still get a value for the diagram
                const auto op = assemble_mode_operator(p, d, n);
                lam = min_eigenpairs(op, 1, c.eig_tol).eigenvalues(0);
            }
            rows.push_back({format_number(d), std::to_string(n), format_number(lam), verdict_name(rep.overall),
                            tail_name(rep.tail)});
            series[n].x.push_back(d);
            series[n].y.push_back(lam);
        }
        std::cout << "delta " << format_number(d) << ": " << verdict_name(rep.overall) << " (tail "
                  << tail_name(rep.tail) << ")\n";
    }
    write_csv_text(path(c, stem + ".csv"), prov, {"delta", "n", "lambda_min", "verdict", "tail_condition"}, rows);
    write_json(path(c, stem + "_verdicts.json"), prov, reports);
    if (c.svg) {
        if (series.size() > 8) series.resize(8);
        write_svg_plot(path(c, stem + ".svg"), "lowest eigenvalue per mode", "delta", "lambda_min", series);
    }
}

void run_delta1(const RunConfig& c, const Profile<double>& p) {
    auto prov = base_provenance(c, "delta1");
    prov.push_back({"width", format_number(c.width)});
    prov.push_back({"n_max", std::to_string(c.n_max)});
    prov.push_back({"eig_tol", format_number(c.eig_tol)});
    const auto est = estimate_delta1(p, c.width, verdict_options(c));
    write_json(path(c, "delta1.json"), prov, to_json(est));
    std::cout << "delta1 bracket [" << format_number(est.lo) << ", " << format_number(est.hi) << "]"
              << (est.lo_witnessed ? "" : ", lower end not witnessed")
              << (est.inconclusive ? ", inconclusive probes present" : "") << '\n';
    if (!(est.hi <= -1 / std::sqrt(5.0))) throw CheckFailure("delta1 upper bracket above -1/sqrt(5)");
}

void run_certify_pos(const RunConfig& c, const Profile<double>& p) {
    auto prov = base_provenance(c, "certify-pos");
    const auto deltas = delta_list(c, {0.5});
    prov.push_back({"deltas", join(deltas)});
    prov.push_back({"dilations", join(c.dilations)});
    ordered_json arr = ordered_json::array();
    for (double d : deltas) {
        if (!(d > 0)) throw ParameterError("certify-pos needs delta > 0");
        for (int nd : c.dilations) {
            const auto w = positive_delta_certificate(p, d, nd);
            arr.push_back(to_json(w));
            std::vector<std::vector<double>> rows;
            for (Eigen::Index i = 0; i < w.grid.size(); ++i)
                if (w.chi(i) != 0 || (i + 1 < w.grid.size() && w.chi(i + 1) != 0) || (i > 0 && w.chi(i - 1) != 0))
                    rows.push_back({w.grid.nodes(i), w.chi(i)});
            write_csv(path(c, "witness_pos_d" + format_number(d) + "_n" + std::to_string(nd) + ".csv"), prov,
                      {"r", "value"}, rows);
            std::cout << "delta " << format_number(d) << " dilation " << nd << ": Q0 = " << format_number(w.form_value)
                      << " (limit " << format_number(w.analytic_limit) << ")\n";
        }
    }
    write_json(path(c, "certify_pos.json"), prov, arr);
}

void run_certify_neg(const RunConfig& c, const Profile<double>& p) {
    auto prov = base_provenance(c, "certify-neg");
    const auto deltas = delta_list(c, {-0.95});
    prov.push_back({"deltas", join(deltas)});
    prov.push_back({"n_limit", std::to_string(c.n_limit)});
    ordered_json arr = ordered_json::array();
    for (double d : deltas) {
        ordered_json attempts = ordered_json::array();
        std::optional<HighModeWitness<double>> found;
        for (int n = 2; n <= c.n_limit && !found; ++n) {
            auto a = high_mode_certificate(p, d, n);
            attempts.push_back(to_json(a, d, n));
            if (a.witness) found = a.witness;
        }
        ordered_json entry = {{"delta", d}, {"found", bool(found)}, {"attempts", attempts}};
        if (found) {
            entry["witness"] = to_json(*found);
            std::vector<std::vector<double>> rows;
            for (Eigen::Index i = 0; i < p.grid.size(); ++i)
                if (found->zeta(i) != 0) rows.push_back({p.grid.nodes(i), found->zeta(i)});
            write_csv(path(c, "witness_neg_d" + format_number(d) + ".csv"), prov, {"r", "value"}, rows);
        }
        std::cout << "delta " << format_number(d) << ": "
                  << (found ? "witness at n = " + std::to_string(found->n) : "no negative bump witness up to n_limit")
                  << '\n';
        arr.push_back(entry);
    }
    write_json(path(c, "certify_neg.json"), prov, arr);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear stability toolkit for the anisotropic Ginzburg-Landau vortex"};
    app.set_config("--config", "", "Read key = value settings from a file (flags take precedence)");
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig c;
    app.add_option("--r-min", c.r_min, "Inner radius")->capture_default_str();
    app.add_option("--r-max", c.r_max, "Outer radius")->capture_default_str();
    app.add_option("--nodes", c.nodes, "Grid nodes")->capture_default_str();
    app.add_option("--grid", c.kind, "geometric or uniform")->capture_default_str();
    app.add_option("--tol", c.tol, "Profile residual tolerance")->capture_default_str();
    app.add_option("--eig-tol", c.eig_tol, "Eigen residual tolerance")->capture_default_str();
    app.add_option("--out", c.out, "Output directory")->capture_default_str();
    app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", c.threads, "Worker threads (0: all, capped by AGL_THREADS)")->capture_default_str();

    auto* profile = app.add_subcommand("profile", "Solve and validate the vortex profile");
    auto* identities = app.add_subcommand("identities", "Check the quadratic-form identities on random inputs");
    identities->add_option("--delta", c.deltas, "Anisotropy values");
    identities->add_option("--modes", c.modes, "Modes for the Qn - Q1 identity")->capture_default_str();
    identities->add_option("--samples", c.samples, "Random inputs per case")->capture_default_str();
    identities->add_option("--threshold", c.threshold, "Largest acceptable relative gap")->capture_default_str();
    auto* spectrum = app.add_subcommand("spectrum", "Lowest eigenvalues and verdicts over delta");
    spectrum->add_option("--delta", c.deltas, "Anisotropy values");
    spectrum->add_option("--delta-range", c.delta_range, "lo:hi:count");
    spectrum->add_option("--nmax", c.n_max, "Highest mode")->capture_default_str();
    spectrum->add_option("--k", c.k, "Eigenpairs per mode")->capture_default_str();
    spectrum->add_flag("--svg", c.svg, "Also write an SVG plot");
    auto* delta1 = app.add_subcommand("delta1", "Bisect for the critical anisotropy");
    delta1->add_option("--width", c.width, "Bracket width")->capture_default_str();
    delta1->add_option("--nmax", c.n_max, "Highest mode")->capture_default_str();
    auto* pos = app.add_subcommand("certify-pos", "Dilated log-sine witnesses for delta > 0");
    pos->add_option("--delta", c.deltas, "Anisotropy values");
    pos->add_option("--dilations", c.dilations, "Dilation factors")->capture_default_str();
    auto* neg = app.add_subcommand("certify-neg", "Bump witnesses for delta near -1");
    neg->add_option("--delta", c.deltas, "Anisotropy values");
    neg->add_option("--n-limit", c.n_limit, "Highest mode to try")->capture_default_str();
    auto* diagram = app.add_subcommand("diagram", "Full stability picture: all of the above");
    diagram->add_option("--delta-range", c.delta_range, "lo:hi:count")->capture_default_str();
    diagram->add_option("--nmax", c.n_max, "Highest mode")->capture_default_str();
    diagram->add_option("--width", c.width, "Bracket width")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        std::filesystem::create_directories(c.out);
        const Profile<double> p = make_profile(c);
        if (profile->parsed()) run_profile(c, p);
        if (identities->parsed()) run_identities(c, p);
        if (spectrum->parsed()) run_spectrum(c, p, delta_list(c, {-0.3}), "spectrum");
        if (delta1->parsed()) run_delta1(c, p);
        if (pos->parsed()) run_certify_pos(c, p);
        if (neg->parsed()) run_certify_neg(c, p);
        if (diagram->parsed()) {
            RunConfig d = c;
            if (d.delta_range.empty()) d.delta_range = "-0.95:0.5:30";
            d.svg = true;
            bool failed = false;
            auto guarded = [&](auto&& fn) {
                try {
                    fn();
                } catch (const CheckFailure& e) {
                    std::cerr << "check failed: " << e.what() << '\n';
                    failed = true;
                }
            };
            guarded([&] { run_profile(d, p); });
            guarded([&] { run_identities(common(d),
                                         p); });
            guarded([&] { run_spectrum(d, p, delta_list(d, {}), "diagram"); });
            guarded([&] { run_certify_pos(common(d),
                                          p); });
            guarded([&] { run_certify_neg(common(d),
                                          p); });
            guarded([&] { run_delta1(d, p); });
            if (failed) return 1;
        }
    } catch (const CheckFailure& e) {
        std::cerr << "check failed: " << e.what() << '\n';
        return 1;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << " (last residual " << e.residual << ")\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
