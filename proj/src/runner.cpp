#include "cosguide/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "cosguide/csv.hpp"
#include "cosguide/parallel.hpp"
#include "cosguide/scattering_cache.hpp"

namespace cosguide {

namespace {

constexpr double pi = std::numbers::pi;

std::vector<std::string> csv_comments(const RunConfig& cfg, const std::string& profile_sig) {
    return {"config_hash=" + hex64(cfg.hash()), "profile=" + profile_sig};
}

void write_metadata(const RunConfig& cfg, const std::string& name, const std::string& profile_sig,
                    double seconds, const std::vector<std::string>& extra = {}) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir + "/" + name + "_metadata.txt");
    out << "command=" << name << "\n";
    out << "config_hash=" << hex64(cfg.hash()) << "\n";
    out << "profile=" << profile_sig << "\n";
    out << "seed=" << cfg.seed << "\n";
    out << "elapsed_seconds=" << seconds << "\n"; // timings vary run to run by design
    for (const std::string& line : extra) out << line << "\n";
    out << "--- config ---\n" << cfg.raw.canonical();
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace

RunConfig RunConfig::from(const Config& cfg) {
    RunConfig rc;
    rc.raw = cfg;
    rc.profile_kind = cfg.get("geometry.profile", rc.profile_kind);
    rc.a2 = cfg.get_double("geometry.a2", rc.a2);
    rc.flat_width = cfg.get_double("geometry.flat_width", rc.flat_width);

    rc.count = static_cast<std::size_t>(cfg.get_u64("classical.count", rc.count));
    rc.horizon = cfg.get_double("classical.horizon", rc.horizon);
    rc.seed = cfg.get_u64("classical.seed", rc.seed);
    rc.batches = static_cast<std::size_t>(cfg.get_u64("classical.batches", rc.batches));
    rc.corr_tmax = cfg.get_double("classical.corr_tmax", rc.corr_tmax);
    rc.corr_points = static_cast<std::size_t>(cfg.get_u64("classical.corr_points", rc.corr_points));
    rc.checkpoints = static_cast<std::size_t>(cfg.get_u64("classical.checkpoints", rc.checkpoints));
    rc.transient = cfg.get_double("classical.transient", rc.transient);
    rc.hist_bins = cfg.get_int("classical.hist_bins", rc.hist_bins);
    rc.dump_count = cfg.get_int("classical.dump_count", rc.dump_count);

    rc.kmin_over_pi = cfg.get_double("wave.kmin_over_pi", rc.kmin_over_pi);
    rc.kmax_over_pi = cfg.get_double("wave.kmax_over_pi", rc.kmax_over_pi);
    rc.dk_over_pi = cfg.get_double("wave.dk_over_pi", rc.dk_over_pi);
    rc.n_evan = cfg.get_int("wave.n_evan", rc.n_evan);
    rc.n_slices = cfg.get_int("wave.n_slices", rc.n_slices);
    rc.unimodular_tol = cfg.get_double("wave.unimodular_tol", rc.unimodular_tol);
    rc.tol_inf = cfg.get_double("wave.tol_inf", rc.tol_inf);
    rc.symmetry_tol = cfg.get_double("wave.symmetry_tol", rc.symmetry_tol);
    rc.cache_dir = cfg.get("wave.cache_dir", rc.cache_dir);

    rc.kernel = cfg.get("analysis.kernel", rc.kernel);
    rc.sigma_over_pi = cfg.get_double("analysis.sigma_over_pi", rc.sigma_over_pi);
    rc.fit_kmin_over_pi = cfg.get_double("analysis.fit_kmin_over_pi", rc.fit_kmin_over_pi);
    rc.fit_kmax_over_pi = cfg.get_double("analysis.fit_kmax_over_pi", rc.fit_kmax_over_pi);
    rc.window_centers_over_pi = cfg.get_double_list("analysis.window_centers_over_pi");
    rc.window_points = cfg.get_int("analysis.window_points", rc.window_points);
    rc.window_span_spacings =
        cfg.get_double("analysis.window_span_spacings", rc.window_span_spacings);
    rc.rconv_rmin = cfg.get_double("analysis.rconv_rmin", rc.rconv_rmin);
    rc.rconv_rmax = cfg.get_double("analysis.rconv_rmax", rc.rconv_rmax);
    rc.rconv_rstep = cfg.get_double("analysis.rconv_rstep", rc.rconv_rstep);

    rc.bands_center_over_pi = cfg.get_double("bands.center_over_pi", rc.bands_center_over_pi);
    rc.bands_points = cfg.get_int("bands.points", rc.bands_points);
    rc.bands_dk = cfg.get_double("bands.dk", rc.bands_dk);
    rc.bands_d1 = cfg.get_double("bands.d1", rc.bands_d1);

    rc.threads = cfg.get_int("threads", rc.threads);
    rc.out_dir = cfg.get("out", rc.out_dir);

    if (rc.profile_kind != "cosine" && rc.profile_kind != "flat")
        throw ConfigError("geometry.profile must be 'cosine' or 'flat'");
    if (rc.profile_kind == "cosine" && !(rc.a2 > 0.0))
        throw ConfigError("geometry.a2 must be positive (the channel pinches closed otherwise)");
    if (!(rc.unimodular_tol > 0.0) || !(rc.tol_inf > 0.0) || !(rc.symmetry_tol > 0.0))
        throw ConfigError("wave tolerances must be positive");
    if (!(rc.dk_over_pi > 0.0) || !(rc.kmax_over_pi > rc.kmin_over_pi))
        throw ConfigError("wave k grid is empty");
    if (rc.n_evan < 0) throw ConfigError("wave.n_evan must be >= 0");
    if (rc.count == 0 || !(rc.horizon > 0.0)) throw ConfigError("classical ensemble is empty");
    if (rc.batches < 2) throw ConfigError("classical.batches must be >= 2");
    if (!(rc.sigma_over_pi > 0.0)) throw ConfigError("analysis.sigma_over_pi must be positive");
    if (rc.kernel != "gaussian" && rc.kernel != "boxcar")
        throw ConfigError("analysis.kernel must be 'gaussian' or 'boxcar'");
    return rc;
}

std::unique_ptr<Profile> RunConfig::make_profile() const {
    if (profile_kind == "flat")
        return std::make_unique<FlatProfile>(flat_width);
    return std::make_unique<CosineProfile>(a2);
}

int resolved_slices(const Profile& profile, double k, int requested) {
    int n = requested > 0 ? requested : auto_slices(k, profile.period());
    if (profile.mirror_symmetric() && n % 2) ++n;
    return n;
}

std::vector<double> make_k_grid(const RunConfig& cfg, const Profile& profile) {
    std::vector<double> grid;
    const double w = profile.lead_width();
    const double area = profile.cell_area();
    for (double kp = cfg.kmin_over_pi; kp <= cfg.kmax_over_pi + 1e-12; kp += cfg.dk_over_pi) {
        double k = kp * pi;
        double nearest = std::round(k * w / pi) * pi / w;
        if (nearest >= pi / w - 1e-12 && std::abs(k - nearest) < 1e-9) {
            double shift = 1e-6 * mean_level_spacing(area, k);
            k += (k >= nearest ? shift : -shift);
            if (std::abs(k - nearest) < 1e-9) k = nearest + shift;
        }
        grid.push_back(k);
    }
    return grid;
}

std::vector<double> window_k_grid(const Profile& profile, double k_center, double span_spacings,
                                  int points) {
    const double span = span_spacings * mean_level_spacing(profile.cell_area(), k_center);
    const double w = profile.lead_width();
    std::vector<double> grid;
    grid.reserve(points);
    for (int i = 0; i < points; ++i) {
        double k = k_center + span * (static_cast<double>(i) / (points - 1) - 0.5);
        double nearest = std::round(k * w / pi) * pi / w;
        if (nearest >= pi / w - 1e-12 && std::abs(k - nearest) < 1e-9)
            k += 1e-6 * mean_level_spacing(profile.cell_area(), k_center);
        grid.push_back(k);
    }
    return grid;
}

// ---------------------------------------------------------------------------
// classical

ClassicalResult run_classical(const RunConfig& cfg, bool write_outputs) {
    Stopwatch clock;
    auto profile = cfg.make_profile();
    ClassicalResult res;
    res.profile_sig = profile->signature();

    const auto ics = sample_initial_conditions(*profile, cfg.count, cfg.seed);
    const auto corr_grid = linear_grid(0.0, cfg.corr_tmax, cfg.corr_points);
    const auto moment_grid = linear_grid(0.0, cfg.horizon, cfg.checkpoints);
    const std::size_t nb = std::min(cfg.batches, cfg.count);

    std::vector<EnsembleAccumulator> partial(
        nb, EnsembleAccumulator(corr_grid, moment_grid, nb));
    std::vector<double> xtilde(cfg.count, 0.0);
    std::vector<std::uint64_t> grazing(nb, 0), marked(nb, 0);
    std::vector<double> max_flight(nb, 0.0);

    parallel_for(nb, cfg.threads, [&](std::size_t b) {
        std::size_t lo = b * cfg.count / nb;
        std::size_t hi = (b + 1) * cfg.count / nb;
        for (std::size_t i = lo; i < hi; ++i) {
            TrajectorySample s = sample_trajectory(*profile, ics[i], corr_grid, moment_grid);
            partial[b].add(s, b);
            xtilde[i] = s.dx_at.back() / std::sqrt(cfg.horizon);
            grazing[b] += s.stats.grazing_hits;
            if (s.stats.marked) ++marked[b];
            max_flight[b] = std::max(max_flight[b], s.stats.max_flight);
        }
    });

    EnsembleAccumulator acc(corr_grid, moment_grid, nb);
    for (std::size_t b = 0; b < nb; ++b) {
        acc.merge(partial[b]);
        res.grazing_total += grazing[b];
        res.marked_trajectories += marked[b];
        res.max_flight = std::max(res.max_flight, max_flight[b]);
    }

    res.autocorr = acc.autocorrelation();
    res.moments = acc.moments();

    // Transient cut: ten times the first noise-floor crossing of C(t).
    res.transient_cut = cfg.transient;
    if (!(res.transient_cut > 0.0)) {
        double floor = res.autocorr.noise_floor();
        double t_noise = 0.0;
        for (std::size_t j = 1; j < res.autocorr.t.size(); ++j) {
            if (std::abs(res.autocorr.c[j]) < floor) {
                t_noise = res.autocorr.t[j];
                break;
            }
        }
        res.transient_cut = t_noise > 0.0 ? 10.0 * t_noise : cfg.horizon / 4.0;
        if (res.transient_cut > 0.5 * cfg.horizon) {
            std::cerr << "[cosguide] warning: transient cut " << res.transient_cut
                      << " exceeds half the horizon; clamping\n";
            res.transient_cut = 0.5 * cfg.horizon;
        }
    }

    res.d1 = diffusion_coefficient(res.moments, res.transient_cut);
    if (res.d1.non_gaussian_warning)
        std::cerr << "[cosguide] warning: first- and second-moment diffusion estimates "
                     "disagree beyond 2 combined standard errors (non-Gaussian transport?)\n";
    res.ratio = moment_ratio(res.moments, cfg.horizon);
    res.histogram = fit_gaussian_histogram(xtilde, cfg.hist_bins, true);

    if (write_outputs) {
        std::filesystem::create_directories(cfg.out_dir);
        auto comments = csv_comments(cfg, res.profile_sig);
        {
            CsvWriter csv(cfg.out_dir + "/autocorr.csv", comments, "t,c");
            for (std::size_t j = 0; j < res.autocorr.t.size(); ++j)
                csv.row(res.autocorr.t[j], res.autocorr.c[j]);
        }
        {
            CsvWriter csv(cfg.out_dir + "/moments.csv", comments, "t,m1,m2,d1_t");
            for (std::size_t j = 0; j < res.moments.t.size(); ++j) {
                double t = res.moments.t[j];
                csv.row(t, res.moments.m1[j], res.moments.m2[j],
                        t > 0.0 ? res.moments.m2[j] / t : 0.0);
            }
        }
        {
            CsvWriter csv(cfg.out_dir + "/histogram.csv", comments,
                          "bin_center,density,gaussian_fit");
            for (std::size_t j = 0; j < res.histogram.bin_center.size(); ++j)
                csv.row(res.histogram.bin_center[j], res.histogram.density[j],
                        res.histogram.fit_density[j]);
        }
        {
            CsvWriter csv(cfg.out_dir + "/classical_summary.csv", comments, "key,value");
            csv.row(std::string("d1_second"), res.d1.d1);
            csv.row(std::string("se_second"), res.d1.se);
            csv.row(std::string("d1_first"), res.d1.d1_first);
            csv.row(std::string("se_first"), res.d1.se_first);
            csv.row(std::string("moment_ratio"), res.ratio.value);
            csv.row(std::string("moment_ratio_se"), res.ratio.se);
            csv.row(std::string("transient_cut"), res.transient_cut);
            csv.row(std::string("hist_sigma2"), res.histogram.sigma2);
            csv.row(std::string("hist_skewness"), res.histogram.skewness);
            csv.row(std::string("count"), static_cast<double>(cfg.count));
            csv.row(std::string("horizon"), cfg.horizon);
            csv.row(std::string("seed"), static_cast<double>(cfg.seed));
            csv.row(std::string("non_gaussian_warning"),
                    res.d1.non_gaussian_warning ? 1.0 : 0.0);
        }
        for (int i = 0; i < cfg.dump_count && i < static_cast<int>(ics.size()); ++i) {
            Trajectory tr = evolve(*profile, ics[i], std::min(cfg.horizon, 100.0));
            CsvWriter csv(cfg.out_dir + "/trajectory_" + std::to_string(i) + ".csv", comments,
                          "t,x,y,vx,vy");
            csv.row(tr.initial.t, tr.initial.x, tr.initial.y, tr.initial.vx, tr.initial.vy);
            for (const auto& ev : tr.events) csv.row(ev.t, ev.x, ev.y, ev.vx, ev.vy);
            csv.row(tr.final_state.t, tr.final_state.x, tr.final_state.y, tr.final_state.vx,
                    tr.final_state.vy);
        }
        write_metadata(cfg, "classical", res.profile_sig, clock.seconds(),
                       {"grazing_hits=" + std::to_string(res.grazing_total),
                        "marked_trajectories=" + std::to_string(res.marked_trajectories),
                        "max_flight=" + std::to_string(res.max_flight)});
    }
    return res;
}

// ---------------------------------------------------------------------------
// spectrum

SpectrumPoint solve_point(const Profile& profile, double k, const RunConfig& cfg,
                          const ScatteringCache* cache) {
    SpectrumPoint pt;
    pt.k = k;
    const int slices = resolved_slices(profile, k, cfg.n_slices);

    CellScattering cell;
    bool from_cache = false;
    if (cache) {
        if (auto hit = cache->load(profile.signature(), k, cfg.n_evan, slices)) {
            cell = std::move(*hit);
            from_cache = true;
        }
    }
    if (!from_cache) {
        CellOptions copt;
        copt.n_slices = slices;
        cell = cell_scattering(profile, k, cfg.n_evan, copt);
        if (cache) cache->store(profile.signature(), cell);
    }
    pt.converged = cell.converged;

    BlochOptions bopt;
    bopt.unimodular_tol = cfg.unimodular_tol;
    bopt.tol_inf = cfg.tol_inf;
    bopt.symmetry_tol = cfg.symmetry_tol;
    BlochSpectrum sp = solve_bloch(assemble_pencil(cell), cell.basis, bopt);
    pt.nb = count_modes(sp);
    pt.flags = sp.flags.bits();
    pt.symmetry_residual = sp.symmetry_residual;
    pt.n_positive = sp.n_positive;
    pt.n_negative = sp.n_negative;
    return pt;
}

SpectrumResult run_spectrum(const RunConfig& cfg, bool write_outputs) {
    Stopwatch clock;
    auto profile = cfg.make_profile();
    SpectrumResult res;
    res.profile_sig = profile->signature();

    std::unique_ptr<ScatteringCache> cache;
    if (!cfg.cache_dir.empty()) cache = std::make_unique<ScatteringCache>(cfg.cache_dir);

    const std::vector<double> grid = make_k_grid(cfg, *profile);
    res.points.resize(grid.size());
    parallel_for(grid.size(), cfg.threads,
                 [&](std::size_t i) { res.points[i] = solve_point(*profile, grid[i], cfg, cache.get()); });

    res.series.k = grid;
    res.series.dk = cfg.dk_over_pi * pi;
    res.series.profile_sig = res.profile_sig;
    res.series.cell_area = profile->cell_area();
    res.series.period = profile->period();
    res.series.n_evan = cfg.n_evan;
    res.series.n_slices = cfg.n_slices;
    res.series.unimodular_tol = cfg.unimodular_tol;
    for (const SpectrumPoint& pt : res.points) {
        res.series.nb.push_back(pt.nb);
        res.series.flags.push_back(pt.flags);
        res.all_converged = res.all_converged && pt.converged;
    }

    KernelSpec kernel{cfg.kernel == "boxcar" ? KernelShape::Boxcar : KernelShape::Gaussian,
                      cfg.sigma_over_pi * pi};
    res.smoothed = smooth(res.series, kernel);
    if (res.smoothed.support_warning)
        std::cerr << "[cosguide] warning: fewer than 10 samples under the smoothing kernel\n";

    for (double cp : cfg.window_centers_over_pi) {
        WindowStudy ws;
        ws.k_center = cp * pi;
        ws.k = window_k_grid(*profile, ws.k_center, cfg.window_span_spacings, cfg.window_points);
        std::vector<SpectrumPoint> pts(ws.k.size());
        parallel_for(ws.k.size(), cfg.threads, [&](std::size_t i) {
            pts[i] = solve_point(*profile, ws.k[i], cfg, cache.get());
        });
        for (const SpectrumPoint& pt : pts) {
            ws.nb.push_back(pt.nb);
            res.all_converged = res.all_converged && pt.converged;
        }
        for (double r = cfg.rconv_rmin; r <= cfg.rconv_rmax + 1e-12; r += cfg.rconv_rstep)
            ws.means.push_back(
                windowed_average(ws.k, ws.nb, ws.k_center, r, profile->cell_area()));
        res.windows.push_back(std::move(ws));
    }

    if (write_outputs) {
        std::filesystem::create_directories(cfg.out_dir);
        auto comments = csv_comments(cfg, res.profile_sig);
        {
            CsvWriter csv(cfg.out_dir + "/nb_vs_k.csv", comments, "k,nb,flags");
            for (const SpectrumPoint& pt : res.points) csv.row(pt.k, pt.nb, pt.flags);
        }
        {
            CsvWriter csv(cfg.out_dir + "/spectrum_checks.csv", comments,
                          "k,symmetry_residual,n_positive,n_negative,converged");
            for (const SpectrumPoint& pt : res.points)
                csv.row(pt.k, pt.symmetry_residual, pt.n_positive, pt.n_negative,
                        pt.converged ? 1 : 0);
        }
        {
            CsvWriter csv(cfg.out_dir + "/smoothed.csv", comments, "k,nb_smoothed");
            for (std::size_t i = 0; i < res.smoothed.k.size(); ++i)
                csv.row(res.smoothed.k[i], res.smoothed.value[i]);
        }
        if (!res.windows.empty()) {
            CsvWriter raw(cfg.out_dir + "/windows_nb.csv", comments, "k_center,k,nb");
            CsvWriter conv(cfg.out_dir + "/rconv.csv", comments, "k_center,r,mean,se,count");
            for (const WindowStudy& ws : res.windows) {
                for (std::size_t i = 0; i < ws.k.size(); ++i)
                    raw.row(ws.k_center, ws.k[i], ws.nb[i]);
                for (const WindowedMean& wm : ws.means)
                    conv.row(ws.k_center, wm.r, wm.mean, wm.se, wm.count);
            }
        }
        write_metadata(cfg, "spectrum", res.profile_sig, clock.seconds(),
                       {"points=" + std::to_string(res.points.size()),
                        "all_converged=" + std::string(res.all_converged ? "1" : "0")});
    }

    if (!res.all_converged)
        throw ConvergenceError(
            "spectrum sweep lost far-field unitarity at one or more wavenumbers; "
            "increase wave.n_slices or wave.n_evan");
    return res;
}

// ---------------------------------------------------------------------------
// bands

namespace {

std::optional<std::pair<double, double>> load_classical_d1(const RunConfig& cfg,
                                                           const std::string& profile_sig) {
    const std::string path = cfg.out_dir + "/classical_summary.csv";
    if (!std::filesystem::exists(path)) return std::nullopt;
    CsvTable t = CsvTable::read(path);
    if (t.comment_value("profile") != profile_sig)
        throw ConfigError("classical_summary.csv in '" + cfg.out_dir + "' was produced for profile " +
                          t.comment_value("profile") + " but the configuration selects " +
                          profile_sig);
    double d1 = 0.0, se = 0.0;
    for (const auto& row : t.rows) {
        if (row.size() < 2) continue;
        if (row[0] == "d1_second") d1 = std::stod(row[1]);
        if (row[0] == "se_second") se = std::stod(row[1]);
    }
    if (!(d1 > 0.0)) return std::nullopt;
    return std::make_pair(d1, se);
}

} // namespace

BandsResult run_bands(const RunConfig& cfg, bool write_outputs) {
    Stopwatch clock;
    auto profile = cfg.make_profile();
    BandsResult res;
    res.profile_sig = profile->signature();

    std::unique_ptr<ScatteringCache> cache;
    if (!cfg.cache_dir.empty()) cache = std::make_unique<ScatteringCache>(cfg.cache_dir);

    const double k_center = cfg.bands_center_over_pi * pi;
    std::vector<double> grid(cfg.bands_points);
    const double w = profile->lead_width();
    for (int i = 0; i < cfg.bands_points; ++i) {
        double k = k_center + (i - (cfg.bands_points - 1) / 2.0) * cfg.bands_dk;
        double nearest = std::round(k * w / pi) * pi / w;
        if (nearest >= pi / w - 1e-12 && std::abs(k - nearest) < 1e-9) k += 1e-8;
        grid[i] = k;
    }

    BlochOptions bopt;
    bopt.unimodular_tol = cfg.unimodular_tol;
    bopt.tol_inf = cfg.tol_inf;
    bopt.symmetry_tol = cfg.symmetry_tol;

    std::vector<std::vector<BandPoint>> slots(grid.size());
    std::vector<int> flagged(grid.size(), 0);
    parallel_for(grid.size(), cfg.threads, [&](std::size_t i) {
        const double k = grid[i];
        const int slices = resolved_slices(*profile, k, cfg.n_slices);
        CellScattering cell;
        bool from_cache = false;
        if (cache) {
            if (auto hit = cache->load(profile->signature(), k, cfg.n_evan, slices)) {
                cell = std::move(*hit);
                from_cache = true;
            }
        }
        if (!from_cache) {
            CellOptions copt;
            copt.n_slices = slices;
            cell = cell_scattering(*profile, k, cfg.n_evan, copt);
            if (cache) cache->store(profile->signature(), cell);
        }
        BlochSpectrum sp = solve_bloch(assemble_pencil(cell), cell.basis, bopt);
        if (sp.flags.any()) flagged[i] = 1;
        for (const BlochMode& mode : sp.modes)
            if (mode.cls == BlochClass::Propagating)
                slots[i].push_back({k, mode.theta, mode.flux > 0.0 ? 1 : -1});
    });
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (flagged[i]) res.flagged_k.push_back(grid[i]);
        res.points.insert(res.points.end(), slots[i].begin(), slots[i].end());
    }

    double d1 = cfg.bands_d1;
    if (!(d1 > 0.0)) {
        if (auto loaded = load_classical_d1(cfg, res.profile_sig)) d1 = loaded->first;
    }
    res.slopes = band_slope_statistics(res.points, profile->period(), kSymmetryFactor,
                                       profile->cell_area(), d1);

    if (write_outputs) {
        std::filesystem::create_directories(cfg.out_dir);
        auto comments = csv_comments(cfg, res.profile_sig);
        {
            CsvWriter csv(cfg.out_dir + "/bands.csv", comments, "k,theta,flux_sign");
            for (const BandPoint& p : res.points) csv.row(p.k, p.theta, p.flux_sign);
        }
        {
            CsvWriter csv(cfg.out_dir + "/slopes.csv", comments, "u");
            for (double u : res.slopes.slopes) csv.row(u);
        }
        write_metadata(
            cfg, "bands", res.profile_sig, clock.seconds(),
            {"slope_variance=" + std::to_string(res.slopes.variance),
             "predicted_variance=" + std::to_string(res.slopes.predicted_variance),
             "variance_ratio=" + std::to_string(res.slopes.ratio),
             "kurtosis=" + std::to_string(res.slopes.kurtosis),
             "matched=" + std::to_string(res.slopes.matched),
             "dropped=" + std::to_string(res.slopes.dropped),
             "d1_used=" + std::to_string(d1)});
    }
    return res;
}

// ---------------------------------------------------------------------------
// compare

CompareResult run_compare(const RunConfig& cfg, bool write_outputs) {
    Stopwatch clock;
    auto profile = cfg.make_profile();
    const std::string sig = profile->signature();
    CompareResult res;

    if (auto loaded = load_classical_d1(cfg, sig)) {
        res.d1_classical = loaded->first;
        res.se_classical = loaded->second;
        res.classical_loaded = true;
    } else {
        ClassicalResult cr = run_classical(cfg, write_outputs);
        res.d1_classical = cr.d1.d1;
        res.se_classical = cr.d1.se;
    }

    ModeCountSeries series;
    const std::string nb_path = cfg.out_dir + "/nb_vs_k.csv";
    if (std::filesystem::exists(nb_path)) {
        CsvTable t = CsvTable::read(nb_path);
        if (t.comment_value("profile") != sig)
            throw ConfigError("nb_vs_k.csv in '" + cfg.out_dir + "' was produced for profile " +
                              t.comment_value("profile") + " but the configuration selects " + sig);
        for (const auto& row : t.rows) {
            if (row.size() < 2) continue;
            series.k.push_back(std::stod(row[0]));
            series.nb.push_back(std::stoi(row[1]));
            series.flags.push_back(row.size() > 2 ? std::stoi(row[2]) : 0);
        }
        series.dk = cfg.dk_over_pi * pi;
        series.cell_area = profile->cell_area();
        series.period = profile->period();
        series.profile_sig = sig;
        res.spectrum_loaded = true;
    } else {
        SpectrumResult sr = run_spectrum(cfg, write_outputs);
        series = std::move(sr.series);
    }

    KernelSpec kernel{cfg.kernel == "boxcar" ? KernelShape::Boxcar : KernelShape::Gaussian,
                      cfg.sigma_over_pi * pi};
    SmoothedSeries smoothed = smooth(series, kernel);

    std::vector<double> fk, fv;
    for (std::size_t i = 0; i < smoothed.k.size(); ++i) {
        double kp = smoothed.k[i] / pi;
        if (kp < cfg.fit_kmin_over_pi - 1e-12 || kp > cfg.fit_kmax_over_pi + 1e-12) continue;
        fk.push_back(smoothed.k[i]);
        fv.push_back(smoothed.value[i]);
    }
    res.fit = fit_sqrt_law(fk, fv, kSymmetryFactor, profile->cell_area(), profile->period());
    if (res.fit.rejected)
        std::cerr << "[cosguide] warning: sqrt-law fit rejected: " << res.fit.reason << "\n";
    if (res.d1_classical > 0.0)
        res.rel_diff = std::abs(res.fit.d1_quantum - res.d1_classical) / res.d1_classical;

    if (write_outputs) {
        std::filesystem::create_directories(cfg.out_dir);
        auto comments = csv_comments(cfg, sig);
        CsvWriter csv(cfg.out_dir + "/fit_report.csv", comments,
                      "a,c0,d1_quantum,se_a,se_c0,se_d1,cov_a_c0,residual_rms,n,"
                      "d1_classical,se_classical,rel_diff");
        csv.row(res.fit.a, res.fit.c0, res.fit.d1_quantum, res.fit.se_a, res.fit.se_c0,
                res.fit.se_d1, res.fit.cov_ac0, res.fit.residual_rms, res.fit.n, res.d1_classical,
                res.se_classical, res.rel_diff);
        write_metadata(cfg, "compare", sig, clock.seconds(),
                       {"d1_classical=" + std::to_string(res.d1_classical),
                        "d1_quantum=" + std::to_string(res.fit.d1_quantum),
                        "rel_diff=" + std::to_string(res.rel_diff),
                        "unimodular_tol=" + std::to_string(cfg.unimodular_tol),
                        "n_evan=" + std::to_string(cfg.n_evan)});
    }
    return res;
}

void run_smoke(const RunConfig& base) {
    RunConfig cfg = base;
    cfg.raw.set("smoke", "1");
    cfg.count = std::min<std::size_t>(cfg.count, 1000);
    cfg.horizon = std::min(cfg.horizon, 1000.0);
    cfg.checkpoints = std::min<std::size_t>(cfg.checkpoints, 101);
    cfg.kmax_over_pi = std::min(cfg.kmax_over_pi, 6.0);
    cfg.window_centers_over_pi.clear();
    cfg.fit_kmax_over_pi = cfg.kmax_over_pi;

    ClassicalResult cr = run_classical(cfg, true);
    std::printf("smoke classical: d1=%.4g +- %.2g (ratio %.3f)\n", cr.d1.d1, cr.d1.se,
                cr.ratio.value);
    SpectrumResult sr = run_spectrum(cfg, true);
    std::printf("smoke spectrum: %zu points, max N_B=%d\n", sr.points.size(),
                *std::max_element(sr.series.nb.begin(), sr.series.nb.end()));
    CompareResult cmp = run_compare(cfg, true);
    std::printf("smoke compare: d1_classical=%.4g d1_quantum=%.4g rel_diff=%.3f\n",
                cmp.d1_classical, cmp.fit.d1_quantum, cmp.rel_diff);
}

} // namespace cosguide
