// pks: command-line front end for the multi-species chemotaxis gradient-flow
// engine. Subcommands: classify, run-jko, run-fv, compare, ot-test.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 concentration stop (informational; output is still written).

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <random>

#include "pks/config.hpp"
#include "pks/diagnostics.hpp"
#include "pks/io.hpp"

namespace fs = std::filesystem;
using namespace pks;

namespace {

int run_classify(const RunConfig& cfg) {
    const InteractionMatrix A = cfg.matrix();
    const auto beta = cfg.masses();
    const RegimeReport rep = classify(A, beta);

    std::printf("regime classification\n");
    std::printf("  %-10s %-22s\n", "subset", "lambda");
    for (const auto& [mask, value] : rep.lambda_values) {
        std::string subset = "{";
        for (int i = 0; i < A.species(); ++i)
            if (mask & (1u << i)) subset += (subset.size() > 1 ? "," : "") + std::to_string(i + 1);
        subset += "}";
        std::printf("  %-10s % .12g%s\n", subset.c_str(), value,
                    mask == rep.witness ? "   <- witness" : "");
    }
    std::printf("\nregime = %s\n", regime_name(rep.regime));
    if (rep.secondary_condition_violated)
        std::printf("note: secondary admissibility condition violated on a null subset\n");

    std::printf("\n# machine-readable\n");
    std::printf("regime = %s\n", regime_name(rep.regime));
    std::printf("witness = %u\n", rep.witness);
    std::printf("tolerance = %.17g\n", rep.tolerance);
    const std::uint32_t full = (1u << A.species()) - 1u;
    std::printf("lambda_full = %.17g\n", rep.lambda_values.at(full));
    const double m2_unit = 1.0;
    if (const auto bound = blowup_time_bound(A, beta, m2_unit))
        std::printf("blowup_bound_per_unit_m2 = %.17g\n", *bound);
    else
        std::printf("blowup_bound_per_unit_m2 = none\n");
    return 0;
}

void write_outputs(const TimeSeries& series, const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    emit_csv(series, cfg.out_dir + "/series.csv");
    for (size_t s = 0; s < series.snapshots.size(); ++s) {
        if (cfg.snapshots_raw) {
            char name[64];
            std::snprintf(name, sizeof name, "/state_%05zu.pks", s);
            write_raw_field(series.snapshots[s], cfg.out_dir + name);
        }
        if (cfg.heatmaps) {
            for (int i = 0; i < series.snapshots[s].species(); ++i) {
                char name[64];
                std::snprintf(name, sizeof name, "/rho_%d_%05zu.pgm", i + 1, s);
                emit_heatmap(series.snapshots[s].values[i], cfg.out_dir + name);
            }
        }
    }
    std::ofstream times(cfg.out_dir + "/snapshots.txt");
    for (size_t s = 0; s < series.snapshot_times.size(); ++s)
        times << s << " " << series.snapshot_times[s] << "\n";
}

int run_solver(const RunConfig& cfg) {
    if (!(cfg.horizon > 0.0)) throw ConfigError("[run] T must be positive");
    const GridSpec grid = cfg.grid();
    const DensityField initial = cfg.initial_state(grid);
    const InteractionMatrix A = cfg.matrix();

    if (boundary_mass_fraction(initial) > 1e-6)
        std::fprintf(stderr, "warning: boundary-adjacent mass fraction %.3g exceeds 1e-6 "
                             "at t=0; enlarge the domain\n",
                     boundary_mass_fraction(initial));

    bool warned_boundary = false;
    const auto sink = [&](const StepRecord& r) {
        if (!warned_boundary && r.boundary_fraction > 1e-3) {
            std::fprintf(stderr, "warning: boundary mass fraction %.3g at t=%.6g "
                                 "exceeds 1e-3; results are truncation-limited\n",
                         r.boundary_fraction, r.t);
            warned_boundary = true;
        }
        std::printf("t=%-12.6g m2=%-14.8g F=%-14.8g max_rho=%-12.6g\n", r.t, r.m2,
                    r.energy.free_energy, r.max_density);
        std::fflush(stdout);
    };

    TimeSeries series;
    if (cfg.kind == SolverKind::Jko) {
        JkoRunOptions opts;
        opts.snapshot_every = cfg.snapshot_every;
        opts.sink = sink;
        series = jko_run(initial, A, cfg.jko, cfg.horizon, opts);
    } else {
        FvRunOptions opts;
        opts.snapshot_every = cfg.snapshot_every;
        opts.sink = sink;
        series = fv_run(initial, A, cfg.fv, cfg.horizon, opts);
    }
    write_outputs(series, cfg);
    std::printf("stop_reason = %s\n", series.stop_reason.c_str());
    std::printf("wrote %s/series.csv (%zu rows)\n", cfg.out_dir.c_str(), series.rows.size());

    if (series.stop_reason == "numerical_failure") return 3;
    if (series.stop_reason.rfind("concentration", 0) == 0) return 4;
    return 0;
}

int run_compare(const std::string& dir_a, const std::string& dir_b) {
    // Rebuild comparable series from raw snapshots plus the snapshot index.
    const auto load = [](const std::string& dir) {
        TimeSeries s;
        std::ifstream times(dir + "/snapshots.txt");
        if (!times) throw ConfigError("no snapshots.txt under " + dir +
                                      " (run with snapshots_raw = true)");
        size_t idx;
        double t;
        while (times >> idx >> t) {
            char name[64];
            std::snprintf(name, sizeof name, "/state_%05zu.pks", idx);
            s.snapshots.push_back(read_raw_field(dir + name));
            s.snapshot_times.push_back(t);
        }
        if (s.snapshots.empty()) throw ConfigError("no snapshots under " + dir);
        return s;
    };
    const TimeSeries a = load(dir_a), b = load(dir_b);
    const CrossValidation cv = cross_validate(a, b);
    std::printf("%-12s %-14s\n", "t", "dw1");
    for (size_t k = 0; k < cv.times.size(); ++k)
        std::printf("%-12.6g %-14.8g\n", cv.times[k], cv.distance[k]);
    std::printf("max_dw1 = %.10g\n", cv.max_distance);
    std::printf("holder_exponent_a = %.4f (constant %.6g)\n", cv.holder_exponent_a,
                cv.holder_constant_a);
    std::printf("holder_exponent_b = %.4f (constant %.6g)\n", cv.holder_exponent_b,
                cv.holder_constant_b);
    return 0;
}

int run_ot_test(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> wdist(0.1, 1.0);
    std::printf("%-10s %-14s %-14s %-12s %-6s\n", "instance", "exact", "entropic",
                "rel_error", "iters");
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const int m = 6 + static_cast<int>(rng() % 30);
        std::vector<Vec2> pa(m), pb(m);
        std::vector<double> wa(m), wb(m);
        double sa = 0, sb = 0;
        for (int i = 0; i < m; ++i) {
            pa[i] = {unif(rng), unif(rng)};
            pb[i] = {unif(rng), unif(rng)};
            wa[i] = wdist(rng);
            wb[i] = wdist(rng);
            sa += wa[i];
            sb += wb[i];
        }
        for (int i = 0; i < m; ++i) wb[i] *= sa / sb;
        const auto mu = DiscreteMeasure::make(pa, wa);
        const auto nu = DiscreteMeasure::make(pb, wb);
        const double exact = exact_w2_squared(mu, nu).squared_cost;
        double diam2 = 0.0;
        for (const auto& p : pa)
            for (const auto& q : pb)
                diam2 = std::max(diam2, (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y));
        const OTResult ent = sinkhorn_w2_squared(mu, nu, 0.01 * diam2);
        const double rel = std::abs(ent.squared_cost - exact) / exact;
        worst = std::max(worst, rel);
        std::printf("%-10d %-14.8g %-14.8g %-12.3g %-6d\n", inst, exact, ent.squared_cost,
                    rel, ent.iterations);
    }
    std::printf("worst relative error = %.3g (threshold 0.01)\n", worst);
    return worst <= 0.01 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-species Patlak-Keller-Segel gradient-flow engine"};
    app.require_subcommand(1);

    std::string config_path, out_dir, dir_a, dir_b;
    std::uint64_t seed = 12345;

    auto* classify_cmd = app.add_subcommand("classify", "classify (A, beta) regime");
    classify_cmd->add_option("--config", config_path, "run configuration")->required();

    auto* jko_cmd = app.add_subcommand("run-jko", "minimizing-movement run");
    jko_cmd->add_option("--config", config_path, "run configuration")->required();
    jko_cmd->add_option("--out", out_dir, "output directory override");

    auto* fv_cmd = app.add_subcommand("run-fv", "finite-volume run");
    fv_cmd->add_option("--config", config_path, "run configuration")->required();
    fv_cmd->add_option("--out", out_dir, "output directory override");

    auto* compare_cmd = app.add_subcommand("compare", "cross-validate two run directories");
    compare_cmd->add_option("dir_a", dir_a, "first output directory")->required();
    compare_cmd->add_option("dir_b", dir_b, "second output directory")->required();

    auto* ot_cmd = app.add_subcommand("ot-test", "entropic-vs-exact transport suite");
    ot_cmd->add_option("--seed", seed, "rng seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (classify_cmd->parsed()) return run_classify(parse_config(config_path));
        if (jko_cmd->parsed() || fv_cmd->parsed()) {
            RunConfig cfg = parse_config(config_path);
            cfg.kind = jko_cmd->parsed() ? SolverKind::Jko : SolverKind::Fv;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            return run_solver(cfg);
        }
        if (compare_cmd->parsed()) return run_compare(dir_a, dir_b);
        if (ot_cmd->parsed()) return run_ot_test(seed);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DimensionError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DegenerateFieldError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
    return 0;
}
