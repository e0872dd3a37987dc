#include "fbsde_ns/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "fbsde_ns/field_io.hpp"
#include "fbsde_ns/rng.hpp"
#include "fbsde_ns/spectral_ops.hpp"

namespace fbsde {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// sup_t ||a - b|| / sup_t ||b|| in L2, 0 when both vanish
double sup_relative(const TimeIndexedField& a, const TimeIndexedField& b) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < b.size(); ++k) {
        num = std::max(num, lp_norm(a[k] - b[k], 2.0));
        den = std::max(den, lp_norm(b[k], 2.0));
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : kInf;
    return num / den;
}

TimeIndexedField exact_decay(const VectorField& u0, double nu, const TimeGrid& grid) {
    const double kappa = 2.0 * std::numbers::pi / u0.spec().box_length();
    std::vector<VectorField> out;
    for (int k = 0; k <= grid.steps; ++k) {
        auto f = std::exp(-2.0 * nu * kappa * kappa * grid.time(k)) * u0;
        f.set_time_tag(grid.time(k));
        out.push_back(std::move(f));
    }
    return TimeIndexedField(grid, std::move(out));
}

void write_fields(const std::filesystem::path& dir, const TimeIndexedField& u) {
    for (int k = 0; k < u.size(); ++k) {
        std::ostringstream name;
        name << "u_" << std::setw(3) << std::setfill('0') << k << ".nsf";
        write_nsf1(dir / name.str(), u[k]);
    }
}

void write_norms(const std::filesystem::path& path, const TimeIndexedField& u, const ExperimentConfig& cfg) {
    std::ofstream os(path);
    os << "t,r,p,q,value\n" << std::setprecision(17);
    for (int k = 0; k < u.size(); ++k)
        for (const auto& nm : cfg.norms)
            os << u.time_grid().time(k) << ',' << nm.r << ',' << nm.p << ',' << nm.q << ','
               << smoothness_norm(u[k], nm.r, nm.p, nm.q, cfg.solver.quadrature) << '\n';
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& w) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    w(os);
}

} // namespace

VectorField taylor_green(const GridSpec& spec, double amplitude) {
    const double kappa = 2.0 * std::numbers::pi / spec.box_length();
    VectorField v(spec);
    for (std::size_t i = 0; i < spec.points(); ++i) {
        const Point x = spec.node(i);
        v.component(0)[i] = amplitude * std::sin(kappa * x[0]) * std::cos(kappa * x[1]);
        v.component(1)[i] = -amplitude * std::cos(kappa * x[0]) * std::sin(kappa * x[1]);
    }
    return v;
}

VectorField random_band_limited(const GridSpec& spec, std::uint64_t seed, int kmax, bool solenoidal) {
    if (kmax < 1 || 2 * kmax >= spec.n()) throw std::invalid_argument("random_band_limited: need 1 <= kmax < n/2");
    const NormalStream rng(seed);
    const int d = spec.dim();
    SpectralField F(spec, d);
    for (std::size_t idx = 0; idx < spec.points(); ++idx) {
        const auto m = spec.unflatten(idx);
        double k2 = 0.0;
        bool inside = true;
        for (int a = 0; a < d; ++a) {
            const int s = spec.signed_mode(m[a]);
            inside = inside && std::abs(s) <= kmax;
            k2 += spec.wavenumber(m[a]) * spec.wavenumber(m[a]);
        }
        if (!inside) continue;
        double z[2 * kMaxDim];
        rng.draws(idx, 0, z, 2 * d);
        for (int c = 0; c < d; ++c) F.component(c)[idx] = Complex(z[2 * c], z[2 * c + 1]) / (1.0 + k2);
    }
    // the real part of the inverse is the Hermitian part of F
    VectorField v(spec);
    for (int c = 0; c < d; ++c) {
        SpectralField one(spec, 1);
        std::copy(F.component(c).begin(), F.component(c).end(), one.component(0).begin());
        v.set_component(c, dft_inverse_scalar(one));
    }
    if (solenoidal) v = leray_project(v);
    const double peak = max_abs(v.data());
    return peak > 0.0 ? (1.0 / peak) * v : v;
}

VectorField initial_velocity(const ExperimentConfig& cfg) {
    const auto spec = cfg.grid();
    switch (cfg.initial) {
    case InitialCondition::taylor_green: return taylor_green(spec, cfg.amplitude);
    case InitialCondition::zero: return VectorField(spec);
    case InitialCondition::constant: {
        VectorField v(spec);
        for (int a = 0; a < spec.dim(); ++a)
            for (auto& x : v.component(a)) x = cfg.amplitude / (a + 1);
        return v;
    }
    case InitialCondition::random:
        return cfg.amplitude * random_band_limited(spec, derive_seed(cfg.solver.seed, 0x7531), 3, true);
    }
    throw std::logic_error("initial_velocity: unhandled case");
}

TaylorGreenReport run_taylor_green(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const auto u0 = taylor_green(cfg.grid(), cfg.amplitude);
    TaylorGreenReport r;
    r.picard = picard_solve(u0, cfg.solver);
    const auto grid = TimeGrid::make(0.0, r.picard.horizon, cfg.solver.time_steps);
    const auto exact = exact_decay(u0, cfg.solver.nu, grid);
    const auto reference = reference_ns_solve(u0, cfg.solver.nu, grid, cfg.reference_substeps);
    const auto& u = r.picard.solution();
    r.fixed_point_error = sup_relative(u, exact);
    r.fixed_point_vs_reference = sup_relative(u, reference);
    r.reference_error = sup_relative(reference, exact);
    double se = 0.0, scale = 0.0;
    for (int k = 0; k < exact.size(); ++k) scale = std::max(scale, lp_norm(exact[k], 2.0));
    if (!r.picard.std_error_history.empty()) se = r.picard.std_error_history.back();
    r.std_error_relative = scale > 0.0 ? se / scale : 0.0;
    if (!r.picard.divergence_history.empty()) {
        r.divergence_sup = r.picard.divergence_history.back();
        r.divergence_std_error = r.picard.divergence_std_error.back();
    }
    r.wall_seconds = seconds_since(start);
    return r;
}

SweepReport run_visc_sweep(const ExperimentConfig& cfg, int jobs) {
    const auto u0 = initial_velocity(cfg);
    std::vector<double> nus{0.0};
    nus.insert(nus.end(), cfg.visc_list.begin(), cfg.visc_list.end());
    const std::size_t count = nus.size();

    std::vector<std::optional<PicardState>> runs(count);
    std::vector<std::string> errors(count);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            SolverConfig c = cfg.solver;
            c.nu = nus[i];
            c.seed = derive_seed(cfg.solver.seed, i);
            PicardOptions opt;
            opt.compute_full_residual = false;
            try {
                runs[i] = picard_solve(u0, c, opt);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    SweepReport rep;
    for (std::size_t i = 0; i < count && rep.failure.empty(); ++i) {
        std::ostringstream why;
        if (!runs[i])
            why << "nu = " << nus[i] << " failed: " << errors[i];
        else if (runs[i]->status != PicardStatus::converged)
            why << "nu = " << nus[i] << " did not converge (" << to_string(runs[i]->status) << ")";
        else if (runs[i]->horizon != runs[0]->horizon)
            why << "nu = " << nus[i] << " converged on horizon " << runs[i]->horizon << " but the nu = 0 run on "
                << runs[0]->horizon;
        rep.failure = why.str();
    }
    if (runs[0]) rep.T1 = runs[0]->horizon;
    const double r_mon = cfg.solver.monitoring_r();
    const double p = cfg.solver.p;
    const auto fine = cfg.solver.quadrature.refined(2);
    for (std::size_t i = 1; i < count; ++i) {
        SweepRow row;
        row.nu = nus[i];
        if (runs[i]) {
            row.status = runs[i]->status;
            row.horizon = runs[i]->horizon;
            row.iterations = static_cast<int>(runs[i]->residuals.size());
        }
        if (runs[i] && runs[0] && runs[i]->horizon == runs[0]->horizon) {
            const auto& a = runs[i]->solution();
            const auto& b = runs[0]->solution();
            for (int k = 0; k < a.size(); ++k) {
                const auto diff = a[k] - b[k];
                const double D = smoothness_norm(diff, r_mon, p, p, cfg.solver.quadrature);
                if (D >= row.D) {
                    row.D = D;
                    row.quadrature_error = std::abs(smoothness_norm(diff, r_mon, p, p, fine) - D);
                }
                row.mc_error = std::max(row.mc_error, smoothness_norm(runs[i]->std_error_fields[k], r_mon, p, p,
                                                                      cfg.solver.quadrature));
            }
            row.bound = std::sqrt(2.0 * row.nu * rep.T1);
            row.ratio = row.D / row.bound;
        }
        rep.rows.push_back(row);
    }
    rep.complete = rep.failure.empty();
    if (!rep.complete) return rep;

    // least-squares slope of log D against log nu with a Student-t interval
    std::vector<double> xs, ys;
    for (const auto& row : rep.rows)
        if (row.D > 0.0) {
            xs.push_back(std::log(row.nu));
            ys.push_back(std::log(row.D));
        }
    if (xs.size() >= 3) {
        const double n = static_cast<double>(xs.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i] / n;
            my += ys[i] / n;
        }
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        rep.slope = sxy / sxx;
        double ssr = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double e = ys[i] - my - rep.slope * (xs[i] - mx);
            ssr += e * e;
        }
        const double se = std::sqrt(ssr / (n - 2.0) / sxx);
        const double t = boost::math::quantile(boost::math::students_t(n - 2.0), 0.975);
        rep.slope_lo = rep.slope - t * se;
        rep.slope_hi = rep.slope + t * se;
    } else {
        rep.slope = rep.slope_lo = rep.slope_hi = std::numeric_limits<double>::quiet_NaN();
    }

    auto sorted = rep.rows;
    std::sort(sorted.begin(), sorted.end(), [](const SweepRow& a, const SweepRow& b) { return a.nu < b.nu; });
    rep.monotone = true;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double slack = 4.0 * (sorted[i].mc_error + sorted[i].quadrature_error + sorted[i + 1].mc_error +
                                    sorted[i + 1].quadrature_error);
        if (sorted[i].D > sorted[i + 1].D + slack) rep.monotone = false;
    }
    return rep;
}

// Serialization ------------------------------------------------------------------------

void write_sweep_csv(std::ostream& os, const SweepReport& r) {
    os << "nu,D,bound,ratio,mc_error,quadrature_error,status,horizon,iterations\n" << std::setprecision(17);
    for (const auto& row : r.rows)
        os << row.nu << ',' << row.D << ',' << row.bound << ',' << row.ratio << ',' << row.mc_error << ','
           << row.quadrature_error << ',' << to_string(row.status) << ',' << row.horizon << ',' << row.iterations
           << '\n';
}

void write_invariants_csv(std::ostream& os, const std::vector<InvariantResult>& r) {
    os << "name,pass,measured,threshold,detail\n" << std::setprecision(17);
    for (const auto& x : r) {
        std::string detail = x.detail;
        std::replace(detail.begin(), detail.end(), ',', ';');
        os << x.name << ',' << (x.pass ? "true" : "false") << ',' << x.measured << ',' << x.threshold << ','
           << detail << '\n';
    }
}

void write_taylor_green_csv(std::ostream& os, const TaylorGreenReport& r) {
    os << "metric,value\n" << std::setprecision(17);
    os << "status," << to_string(r.picard.status) << '\n';
    os << "horizon," << r.picard.horizon << '\n';
    os << "iterations," << r.picard.residuals.size() << '\n';
    os << "fixed_point_error_exact," << r.fixed_point_error << '\n';
    os << "fixed_point_error_reference," << r.fixed_point_vs_reference << '\n';
    os << "reference_error_exact," << r.reference_error << '\n';
    os << "std_error_relative," << r.std_error_relative << '\n';
    os << "divergence_sup," << r.divergence_sup << '\n';
    os << "divergence_std_error," << r.divergence_std_error << '\n';
}

std::string config_hash(const ExperimentConfig& cfg) {
    // the output location does not influence any result
    ExperimentConfig key = cfg;
    key.output_dir = "-";
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : serialize(key)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string git_describe() {
#ifdef FBSDE_NS_GIT_DESCRIBE
    return FBSDE_NS_GIT_DESCRIBE;
#else
    return "unknown";
#endif
}

void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg, double wall_seconds) {
    nlohmann::ordered_json j;
    j["experiment"] = to_string(cfg.experiment);
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.solver.seed;
    j["git_describe"] = git_describe();
    j["wall_seconds"] = wall_seconds;
    j["config"] = serialize(cfg);
    write_file(dir / "manifest.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

// CLI ---------------------------------------------------------------------------------

namespace {

int exit_config = 4;

int run_experiment(ExperimentConfig cfg, int jobs) {
    const auto start = std::chrono::steady_clock::now();
    validate(cfg);
    const auto dir = cfg.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    {
        std::ofstream probe(dir / ".write_test");
        if (ec || !probe) throw ConfigError("output_dir '" + dir.string() + "' is not writable", 0);
    }
    std::filesystem::remove(dir / ".write_test");
    std::cout << std::setprecision(6);
    int code = 0;
    switch (cfg.experiment) {
    case Experiment::invariants: {
        const auto res = run_invariants(cfg.invariants, cfg.leray_corruption);
        write_file(dir / "invariants.csv", [&](std::ostream& os) { write_invariants_csv(os, res); });
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& x : res)
            j.push_back({{"name", x.name}, {"pass", x.pass}, {"measured", x.measured}, {"threshold", x.threshold},
                         {"detail", x.detail}});
        write_file(dir / "invariants.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
        for (const auto& x : res) {
            std::cout << (x.pass ? "PASS " : "FAIL ") << x.name << "  measured=" << x.measured
                      << " threshold=" << x.threshold;
            if (!x.detail.empty()) std::cout << "  (" << x.detail << ")";
            std::cout << '\n';
            if (!x.pass) code = 2;
        }
        break;
    }
    case Experiment::solve: {
        PicardOptions opt;
        opt.on_iteration = [](const PicardState& s) {
            std::cout << "iter " << s.residuals.size() << " residual " << s.residuals.back() << '\n' << std::flush;
        };
        const auto st = picard_solve(initial_velocity(cfg), cfg.solver, opt);
        for (const auto& w : st.warnings) std::cerr << "warning: " << w << '\n';
        write_file(dir / "picard.csv", [&](std::ostream& os) { write_picard_csv(os, st); });
        write_fields(dir, st.solution());
        write_norms(dir / "norms.csv", st.solution(), cfg);
        std::cout << "status " << to_string(st.status) << ", horizon " << st.horizon << '\n';
        if (st.status != PicardStatus::converged) code = 3;
        break;
    }
    case Experiment::taylor_green: {
        const auto r = run_taylor_green(cfg);
        write_file(dir / "picard.csv", [&](std::ostream& os) { write_picard_csv(os, r.picard); });
        write_file(dir / "taylor_green.csv", [&](std::ostream& os) { write_taylor_green_csv(os, r); });
        write_fields(dir, r.picard.solution());
        write_norms(dir / "norms.csv", r.picard.solution(), cfg);
        write_taylor_green_csv(std::cout, r);
        if (r.picard.status != PicardStatus::converged) code = 3;
        break;
    }
    case Experiment::visc_sweep: {
        const auto r = run_visc_sweep(cfg, jobs);
        write_file(dir / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, r); });
        write_file(dir / "sweep_fit.csv", [&](std::ostream& os) {
            os << std::setprecision(17) << "T1,slope,slope_lo,slope_hi,complete,monotone\n"
               << r.T1 << ',' << r.slope << ',' << r.slope_lo << ',' << r.slope_hi << ','
               << (r.complete ? "true" : "false") << ',' << (r.monotone ? "true" : "false") << '\n';
        });
        write_sweep_csv(std::cout, r);
        std::cout << "slope " << r.slope << " [" << r.slope_lo << ", " << r.slope_hi << "]\n";
        if (!r.complete) {
            std::cerr << "sweep aborted: " << r.failure << '\n';
            code = 3;
        }
        break;
    }
    }
    write_manifest(dir, cfg, seconds_since(start));
    return code;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"FBSDE fixed-point Navier-Stokes solver"};
    app.require_subcommand(0, 1);
    bool reference = false;
    app.add_flag("--config-reference", reference, "Print the configuration reference (Markdown) and exit");
    std::string config_path;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    const std::pair<const char*, Experiment> commands[] = {{"solve", Experiment::solve},
                                                           {"taylor-green", Experiment::taylor_green},
                                                           {"visc-sweep", Experiment::visc_sweep},
                                                           {"invariants", Experiment::invariants}};
    std::vector<CLI::App*> subs;
    for (const auto& [name, e] : commands) {
        auto* sub = app.add_subcommand(name, "Run the " + to_string(e) + " experiment");
        sub->add_option("--config", config_path, "INI configuration file")
            ->required(e != Experiment::invariants)
            ->check(CLI::ExistingFile);
        sub->add_option("--jobs", jobs, "Parallel sweep members")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "Override the root seed");
        sub->add_option("--out", out, "Override the output directory");
        subs.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }
    if (reference) {
        std::cout << config_reference_markdown();
        return 0;
    }
    std::optional<Experiment> chosen;
    for (std::size_t i = 0; i < subs.size(); ++i)
        if (subs[i]->parsed()) chosen = commands[i].second;
    if (!chosen) {
        std::cerr << app.help();
        return exit_config;
    }
    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : parse_config(config_path);
        cfg.experiment = *chosen;
        if (seed) cfg.solver.seed = *seed;
        if (out) cfg.output_dir = *out;
        return run_experiment(cfg, jobs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace fbsde
