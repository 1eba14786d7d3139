#include "ghbs/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace ghbs {

namespace {

// Seed-derivation tags for independent random streams.
constexpr std::uint64_t kTagSynth = 0x01;
constexpr std::uint64_t kTagGradientBase = 0x1000;
constexpr std::uint64_t kTagBootstrap = 0x02;
constexpr std::uint64_t kTagKde = 0x03;
constexpr std::uint64_t kTagActiveChain = 0x04;
constexpr std::uint64_t kTagInactiveBase = 0x20000;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void run_parallel(long n_tasks, int workers, const std::function<void(long)>& fn) {
    if (workers <= 1 || n_tasks <= 1) {
        for (long i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    const int count = int(std::min<long>(workers, n_tasks));
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const long i = next.fetch_add(1);
                if (i >= n_tasks || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::map<std::string, std::string> read_keyvalue(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw StageError("cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r#");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

}  // namespace

long CsvTable::col(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw StageError("missing CSV column: " + name);
    return it - columns.begin();
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream f(path);
    if (!f) throw StageError("cannot write " + path);
    for (const auto& [k, v] : table.meta) f << "# " << k << " = " << v << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        f << (c ? "," : "") << table.columns[c];
    f << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) f << (c ? "," : "") << fmt(row[c]);
        f << "\n";
    }
    if (!f) throw StageError("write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw StageError("cannot open " + path);
    CsvTable t;
    std::string line;
    bool header_done = false;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                auto trim = [](std::string s) {
                    const auto b = s.find_first_not_of(" \t#");
                    if (b == std::string::npos) return std::string();
                    const auto e = s.find_last_not_of(" \t");
                    return s.substr(b, e - b + 1);
                };
                t.meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
            }
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header_done) {
            t.columns = cells;
            header_done = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(std::stod(c));
        if (row.size() != t.columns.size())
            throw StageError(path + ": ragged row");
        t.rows.push_back(std::move(row));
    }
    return t;
}

ForwardMap make_forward(const PipelineConfig& cfg) {
    const PriorBox box = cfg.prior;
    const ElasticParams ep = cfg.elastic;
    const LoadingSchedule sched = cfg.schedule;
    const std::vector<double> stations = cfg.stations();
    LateralControlOptions lat;
    lat.tol_lat = cfg.tol_lat;
    ReturnMapOptions rmap;
    rmap.tol_yield_rel = cfg.tol_yield_rel;
    return [box, ep, sched, stations, lat, rmap](const Eigen::VectorXd& x_norm) {
        const PlasticParams pp = box.to_physical(x_norm);
        const QoIResponse qoi = qoi_map(pp, ep, sched, stations, lat, rmap);
        const auto stacked = stack_response(qoi);
        return Eigen::Map<const Eigen::VectorXd>(stacked.data(), long(stacked.size()))
            .eval();
    };
}

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& traj,
                          const std::map<std::string, std::string>& meta) {
    CsvTable t;
    t.meta = meta;
    t.columns = {"step", "axial_strain", "vol_strain", "p", "q",
                 "lambda_acc", "alpha", "beta"};
    for (std::size_t i = 0; i < traj.size(); ++i)
        t.rows.push_back({double(i), traj.axial_strain[i], traj.vol_strain[i], traj.p[i],
                          traj.q[i], traj.lambda_acc[i], traj.alpha[i], traj.beta[i]});
    write_csv(path, t);
}

Pipeline::Pipeline(PipelineConfig cfg, std::string outdir)
    : cfg_(std::move(cfg)), outdir_(std::move(outdir)) {
    cfg_.validate();
    hash_ = cfg_.hash();
    fs::create_directories(outdir_);
}

std::string Pipeline::path(const std::string& file) const {
    return (fs::path(outdir_) / file).string();
}

int Pipeline::resolved_workers() const {
    if (cfg_.workers > 0) return cfg_.workers;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? int(hc) : 1;
}

bool Pipeline::stage_done(const std::string& stage) const {
    const std::string mpath = path("manifest.txt");
    if (!fs::exists(mpath)) return false;
    const auto kv = read_keyvalue(mpath);
    const auto it = kv.find(stage);
    return it != kv.end() && it->second == hash_;
}

void Pipeline::mark_done(const std::string& stage) {
    const std::string mpath = path("manifest.txt");
    std::map<std::string, std::string> kv;
    if (fs::exists(mpath)) kv = read_keyvalue(mpath);
    kv[stage] = hash_;
    std::ofstream f(mpath);
    for (const auto& [k, v] : kv) f << k << " = " << v << "\n";
}

void Pipeline::require_done(const std::string& stage) const {
    if (!stage_done(stage)) {
        throw StageError("stage '" + stage +
                         "' has not completed for this config; run it first");
    }
}

// ---------------------------------------------------------------------------
// synth-data

void Pipeline::synth_data() {
    if (stage_done("synth-data")) return;
    const ForwardMap forward = make_forward(cfg_);

    Eigen::VectorXd g;
    try {
        g = forward(cfg_.truth_norm);
    } catch (const std::exception& e) {
        throw StageError(std::string("synth-data: forward model failed at x_true: ") +
                         e.what());
    }

    const auto stations = cfg_.stations();
    const long ns = long(stations.size());
    Eigen::VectorXd sigma(2 * ns);
    for (long i = 0; i < ns; ++i) {
        sigma[i] = std::max(cfg_.noise_level * std::abs(g[i]), cfg_.noise_floor_eps);
        sigma[ns + i] =
            std::max(cfg_.noise_level * std::abs(g[ns + i]), cfg_.noise_floor_sigma);
    }

    // noise.level = 0 keeps sigma at the floors (finite misfit weights) but
    // leaves the data exactly on the forward response.
    Rng rng(hash_combine(cfg_.seed, kTagSynth));
    Eigen::VectorXd d(2 * ns);
    for (long i = 0; i < 2 * ns; ++i) {
        const double eta = rng.normal();
        d[i] = g[i] + (cfg_.noise_level > 0.0 ? sigma[i] * eta : 0.0);
    }

    CsvTable t;
    t.meta["config_hash"] = hash_;
    t.meta["seed"] = std::to_string(cfg_.seed);
    {
        std::ostringstream os;
        for (int i = 0; i < kParamDim; ++i) os << (i ? " " : "") << fmt(cfg_.truth_norm[i]);
        t.meta["x_true_norm"] = os.str();
    }
    t.columns = {"station", "d_eps", "d_sigma", "sigma_eps", "sigma_sigma"};
    for (long i = 0; i < ns; ++i)
        t.rows.push_back({stations[i], d[i], d[ns + i], sigma[i], sigma[ns + i]});
    write_csv(path("dataset.csv"), t);
    mark_done("synth-data");
}

Dataset Pipeline::load_dataset() const {
    const CsvTable t = read_csv(path("dataset.csv"));
    Dataset ds;
    const long cs = t.col("station"), ce = t.col("d_eps"), cq = t.col("d_sigma");
    for (const auto& row : t.rows) {
        ds.stations.push_back(row[cs]);
        ds.d_eps.push_back(row[ce]);
        ds.d_sigma.push_back(row[cq]);
    }
    ds.validate();
    return ds;
}

NoiseModel Pipeline::load_noise() const {
    const CsvTable t = read_csv(path("dataset.csv"));
    const long ce = t.col("sigma_eps"), cq = t.col("sigma_sigma");
    const long n = long(t.rows.size());
    NoiseModel nm;
    nm.sigma.resize(2 * n);
    for (long i = 0; i < n; ++i) {
        nm.sigma[i] = t.rows[i][ce];
        nm.sigma[n + i] = t.rows[i][cq];
    }
    nm.validate();
    return nm;
}

// ---------------------------------------------------------------------------
// gradients

void Pipeline::stage_gradients() {
    if (stage_done("gradients")) return;
    require_done("synth-data");
    const Dataset ds = load_dataset();
    const NoiseModel noise = load_noise();
    const ForwardMap forward = make_forward(cfg_);

    const int N = cfg_.gradient_count;
    std::vector<int> done(N, 0);
    std::vector<std::vector<double>> rows(N);

    // Resume: keep rows from a previous partial run with the same config.
    const std::string gpath = path("gradients.csv");
    if (fs::exists(gpath)) {
        try {
            const CsvTable prev = read_csv(gpath);
            if (prev.meta.count("config_hash") && prev.meta.at("config_hash") == hash_) {
                const long ci = prev.col("index");
                for (const auto& row : prev.rows) {
                    const int idx = int(row[ci]);
                    if (idx >= 0 && idx < N) {
                        rows[idx] = row;
                        done[idx] = 1;
                    }
                }
            }
        } catch (const std::exception&) {
            // Unreadable partial file: recompute everything.
        }
    }

    std::vector<long> todo;
    for (int i = 0; i < N; ++i)
        if (!done[i]) todo.push_back(i);

    std::vector<std::string> failures(N);
    run_parallel(long(todo.size()), resolved_workers(), [&](long t) {
        const long idx = todo[t];
        Rng rng(hash_combine(cfg_.seed, kTagGradientBase + std::uint64_t(idx)));
        Eigen::VectorXd x(kParamDim);
        for (int j = 0; j < kParamDim; ++j) x[j] = rng.uniform(-1.0, 1.0);
        try {
            const MisfitGradientSample s =
                misfit_gradient(x, ds, noise, forward, cfg_.fd_step);
            std::vector<double> row;
            row.push_back(double(idx));
            for (int j = 0; j < kParamDim; ++j) row.push_back(s.x_norm[j]);
            row.push_back(s.f);
            for (int j = 0; j < kParamDim; ++j) row.push_back(s.grad[j]);
            row.push_back(s.clamped_stencil ? 1.0 : 0.0);
            rows[idx] = std::move(row);
            done[idx] = 1;
        } catch (const std::exception& e) {
            failures[idx] = e.what();
        }
    });

    long n_failed = 0;
    {
        std::ofstream ff(path("gradient_failures.txt"));
        for (int i = 0; i < N; ++i) {
            if (!failures[i].empty()) {
                ++n_failed;
                ff << i << ": " << failures[i] << "\n";
            }
        }
    }

    CsvTable t;
    t.meta["config_hash"] = hash_;
    t.meta["seed"] = std::to_string(cfg_.seed);
    t.columns = {"index"};
    for (int j = 0; j < kParamDim; ++j) t.columns.push_back("x" + std::to_string(j + 1));
    t.columns.push_back("f");
    for (int j = 0; j < kParamDim; ++j) t.columns.push_back("g" + std::to_string(j + 1));
    t.columns.push_back("clamped");
    for (int i = 0; i < N; ++i)
        if (done[i]) t.rows.push_back(rows[i]);
    write_csv(gpath, t);

    if (double(n_failed) > cfg_.gradient_max_failure_fraction * double(N)) {
        std::ostringstream os;
        os << "gradients: " << n_failed << " of " << N
           << " samples failed (limit " << cfg_.gradient_max_failure_fraction * 100
           << "%); see gradient_failures.txt";
        throw StageError(os.str());
    }
    mark_done("gradients");
}

std::vector<MisfitGradientSample> Pipeline::load_gradients() const {
    const CsvTable t = read_csv(path("gradients.csv"));
    std::vector<MisfitGradientSample> out;
    const long cf = t.col("f");
    const long cx0 = t.col("x1"), cg0 = t.col("g1"), cc = t.col("clamped");
    for (const auto& row : t.rows) {
        MisfitGradientSample s;
        s.x_norm.resize(kParamDim);
        s.grad.resize(kParamDim);
        for (int j = 0; j < kParamDim; ++j) {
            s.x_norm[j] = row[cx0 + j];
            s.grad[j] = row[cg0 + j];
        }
        s.f = row[cf];
        s.clamped_stencil = row[cc] != 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// subspace

void Pipeline::stage_subspace() {
    if (stage_done("subspace")) return;
    require_done("gradients");
    const auto samples = load_gradients();

    bool degenerate = false;
    SpectrumEstimate sp = estimate_C(samples, &degenerate);
    bootstrap_errors(samples, sp, cfg_.bootstrap_count,
                     hash_combine(cfg_.seed, kTagBootstrap));

    const int k = cfg_.subspace_dim > 0 ? cfg_.subspace_dim : largest_gap_dimension(sp);

    {
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.columns = {"index", "eigenvalue", "boot_lo", "boot_hi"};
        for (long i = 0; i < sp.eigenvalues.size(); ++i)
            t.rows.push_back({double(i + 1), sp.eigenvalues[i],
                              sp.eigenvalue_intervals[i].first,
                              sp.eigenvalue_intervals[i].second});
        write_csv(path("spectrum.csv"), t);
    }
    {
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.columns = {"component"};
        for (int j = 0; j < kParamDim; ++j) t.columns.push_back("w" + std::to_string(j + 1));
        for (int i = 0; i < kParamDim; ++i) {
            std::vector<double> row{double(i + 1)};
            for (int j = 0; j < kParamDim; ++j) row.push_back(sp.eigenvectors(i, j));
            t.rows.push_back(row);
        }
        write_csv(path("eigenvectors.csv"), t);
    }
    {
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.columns = {"k", "mean_distance"};
        for (std::size_t i = 0; i < sp.subspace_errors.size(); ++i)
            t.rows.push_back({double(i + 1), sp.subspace_errors[i]});
        write_csv(path("subspace_errors.csv"), t);
    }
    {
        // Summary-plot coordinates on the first two eigenvectors.
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.columns = {"y1", "y2", "f"};
        for (const auto& s : samples)
            t.rows.push_back({sp.eigenvectors.col(0).dot(s.x_norm),
                              sp.eigenvectors.col(1).dot(s.x_norm), s.f});
        write_csv(path("summary_plot.csv"), t);
    }
    {
        std::ofstream f(path("subspace.txt"));
        f << "config_hash = " << hash_ << "\n";
        f << "k = " << k << "\n";
        f << "k_source = " << (cfg_.subspace_dim > 0 ? "config" : "largest_gap") << "\n";
        f << "degenerate = " << (degenerate ? 1 : 0) << "\n";
        for (long i = 0; i + 1 < sp.eigenvalues.size(); ++i) {
            f << "gap_ratio_" << i + 1 << " = "
              << fmt(sp.eigenvalues[i] / std::max(sp.eigenvalues[i + 1], 1e-300)) << "\n";
        }
    }
    mark_done("subspace");
}

SpectrumEstimate Pipeline::load_spectrum(int* k) const {
    SpectrumEstimate sp;
    {
        const CsvTable t = read_csv(path("spectrum.csv"));
        const long ce = t.col("eigenvalue"), cl = t.col("boot_lo"), ch = t.col("boot_hi");
        sp.eigenvalues.resize(long(t.rows.size()));
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            sp.eigenvalues[long(i)] = t.rows[i][ce];
            sp.eigenvalue_intervals.emplace_back(t.rows[i][cl], t.rows[i][ch]);
        }
    }
    {
        const CsvTable t = read_csv(path("eigenvectors.csv"));
        sp.eigenvectors.resize(kParamDim, kParamDim);
        const long c0 = t.col("w1");
        for (int i = 0; i < kParamDim; ++i)
            for (int j = 0; j < kParamDim; ++j) sp.eigenvectors(i, j) = t.rows[i][c0 + j];
    }
    {
        const CsvTable t = read_csv(path("subspace_errors.csv"));
        const long cd = t.col("mean_distance");
        for (const auto& row : t.rows) sp.subspace_errors.push_back(row[cd]);
    }
    if (k) {
        const auto kv = read_keyvalue(path("subspace.txt"));
        *k = std::stoi(kv.at("k"));
    }
    return sp;
}

// ---------------------------------------------------------------------------
// surrogate

void Pipeline::stage_surrogate() {
    if (stage_done("surrogate")) return;
    require_done("subspace");
    const auto samples = load_gradients();
    int k = 0;
    const SpectrumEstimate sp = load_spectrum(&k);
    const ActiveSubspace as = split(sp, k);

    Eigen::MatrixXd y(long(samples.size()), k);
    Eigen::VectorXd f(long(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        y.row(long(i)) = as.project_active(samples[i].x_norm).transpose();
        f[long(i)] = samples[i].f;
    }
    const FitResult fit = fit_quadratic(y, f);

    {
        std::ofstream out(path("surface.txt"));
        out << "config_hash = " << hash_ << "\n";
        out << "k = " << k << "\n";
        out << "r2 = " << fmt(fit.r2) << "\n";
        out << "rank_deficient = " << (fit.surface.rank_deficient ? 1 : 0) << "\n";
        out << "coefficients =";
        for (long i = 0; i < fit.surface.coefficients.size(); ++i)
            out << " " << fmt(fit.surface.coefficients[i]);
        out << "\n";
    }
    {
        // Fitted-surface grid on the first one or two active coordinates.
        CsvTable t;
        t.meta["config_hash"] = hash_;
        const int grid_n = 41;
        Eigen::VectorXd yc = y.colwise().mean();
        const double lo1 = y.col(0).minCoeff(), hi1 = y.col(0).maxCoeff();
        if (k == 1) {
            t.columns = {"y1", "g"};
            for (int a = 0; a < grid_n; ++a) {
                Eigen::VectorXd yy = yc;
                yy[0] = lo1 + (hi1 - lo1) * a / double(grid_n - 1);
                t.rows.push_back({yy[0], eval_surface(fit.surface, yy)});
            }
        } else {
            const double lo2 = y.col(1).minCoeff(), hi2 = y.col(1).maxCoeff();
            t.columns = {"y1", "y2", "g"};
            for (int a = 0; a < grid_n; ++a)
                for (int b = 0; b < grid_n; ++b) {
                    Eigen::VectorXd yy = yc;
                    yy[0] = lo1 + (hi1 - lo1) * a / double(grid_n - 1);
                    yy[1] = lo2 + (hi2 - lo2) * b / double(grid_n - 1);
                    t.rows.push_back({yy[0], yy[1], eval_surface(fit.surface, yy)});
                }
        }
        write_csv(path("surface_grid.csv"), t);
    }
    mark_done("surrogate");
}

QuadraticSurface Pipeline::load_surface(double* r2) const {
    const auto kv = read_keyvalue(path("surface.txt"));
    QuadraticSurface s;
    s.k = std::stoi(kv.at("k"));
    s.rank_deficient = kv.count("rank_deficient") && kv.at("rank_deficient") == "1";
    std::istringstream is(kv.at("coefficients"));
    std::vector<double> coefs;
    double v;
    while (is >> v) coefs.push_back(v);
    s.coefficients = Eigen::Map<Eigen::VectorXd>(coefs.data(), long(coefs.size()));
    if (s.coefficients.size() != QuadraticSurface::coefficient_count(s.k))
        throw StageError("surface.txt: coefficient count does not match k");
    if (r2) *r2 = std::stod(kv.at("r2"));
    return s;
}

// ---------------------------------------------------------------------------
// mcmc

void Pipeline::stage_mcmc() {
    if (stage_done("mcmc")) return;
    require_done("surrogate");
    int k = 0;
    const SpectrumEstimate sp = load_spectrum(&k);
    const ActiveSubspace as = split(sp, k);
    const QuadraticSurface surface = load_surface();

    // KDE of the prior marginalized onto the active variable.
    Rng kde_rng(hash_combine(cfg_.seed, kTagKde));
    const Eigen::MatrixXd prior_pts = cfg_.prior.sample_prior(kde_rng, int(cfg_.kde_samples));
    const Eigen::MatrixXd y_pts = prior_pts * as.W1;
    const KdeEstimate kde = KdeEstimate::fit(y_pts, cfg_.kde_bandwidth_scale);

    const auto rc = cfg_.resolve_active_chain(k);
    ChainConfig cc;
    cc.n_steps = rc.steps;
    cc.burn_in = rc.burn_in;
    cc.proposal_sd = Eigen::VectorXd::Constant(k, rc.proposal_sd);
    cc.seed = hash_combine(cfg_.seed, kTagActiveChain);
    cc.init = Eigen::VectorXd::Zero(k);

    const ChainResult res = mh_active(surface, kde, cc);

    {
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.meta["seed"] = std::to_string(cfg_.seed);
        t.meta["acceptance_rate"] = fmt(res.acceptance_rate);
        t.meta["ess_min"] = fmt(res.ess_min);
        t.meta["steps"] = std::to_string(rc.steps);
        t.meta["burn_in"] = std::to_string(rc.burn_in);
        for (int d = 0; d < k; ++d) t.columns.push_back("y" + std::to_string(d + 1));
        t.rows.reserve(res.samples.rows());
        for (long i = 0; i < res.samples.rows(); ++i) {
            std::vector<double> row(k);
            for (int d = 0; d < k; ++d) row[d] = res.samples(i, d);
            t.rows.push_back(std::move(row));
        }
        write_csv(path("chain_active.csv"), t);
    }
    {
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.columns = {"lag"};
        for (int d = 0; d < k; ++d) t.columns.push_back("r" + std::to_string(d + 1));
        long max_lag = 0;
        for (const auto& r : res.autocorrelations)
            max_lag = std::max(max_lag, std::min<long>(r.size(), 200));
        for (long j = 0; j < max_lag; ++j) {
            std::vector<double> row{double(j + 1)};
            for (int d = 0; d < k; ++d)
                row.push_back(j < res.autocorrelations[d].size()
                                  ? res.autocorrelations[d][j]
                                  : 0.0);
            t.rows.push_back(std::move(row));
        }
        write_csv(path("autocorr_active.csv"), t);
    }
    {
        // Thinned trace for plotting.
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.columns = {"step"};
        for (int d = 0; d < k; ++d) t.columns.push_back("y" + std::to_string(d + 1));
        const long stride = std::max<long>(1, res.samples.rows() / 10000);
        for (long i = 0; i < res.samples.rows(); i += stride) {
            std::vector<double> row{double(i)};
            for (int d = 0; d < k; ++d) row.push_back(res.samples(i, d));
            t.rows.push_back(std::move(row));
        }
        write_csv(path("trace_active.csv"), t);
    }
    mark_done("mcmc");
}

// ---------------------------------------------------------------------------
// reconstruct

void Pipeline::stage_reconstruct() {
    if (stage_done("reconstruct")) return;
    require_done("mcmc");
    int k = 0;
    const SpectrumEstimate sp = load_spectrum(&k);
    const ActiveSubspace as = split(sp, k);

    const CsvTable chain = read_csv(path("chain_active.csv"));
    const long kept = long(chain.rows.size());
    Eigen::MatrixXd samples(kept, k);
    for (long i = 0; i < kept; ++i)
        for (int d = 0; d < k; ++d) samples(i, d) = chain.rows[i][d];

    double ess_min = double(kept);
    for (int d = 0; d < k; ++d) ess_min = std::min(ess_min, ess(samples.col(d)));
    const long n_y_ess = std::max<long>(1, long(ess_min));

    const auto idx = thin_effective(kept, std::min(n_y_ess, kept));
    Eigen::MatrixXd y_eff(long(idx.size()), k);
    for (std::size_t i = 0; i < idx.size(); ++i) y_eff.row(long(i)) = samples.row(idx[i]);

    const auto rc = cfg_.resolve_active_chain(k);
    std::vector<Eigen::MatrixXd> z_blocks(y_eff.rows());
    if (k < kParamDim) {
        const int nz = kParamDim - k;
        run_parallel(y_eff.rows(), resolved_workers(), [&](long i) {
            ChainConfig zc;
            zc.n_steps = cfg_.inactive_steps;
            zc.burn_in = cfg_.inactive_steps / 10;
            zc.proposal_sd = Eigen::VectorXd::Constant(nz, rc.inactive_proposal_sd);
            zc.seed = hash_combine(cfg_.seed, kTagInactiveBase + std::uint64_t(i));
            z_blocks[i] = inactive_effective_samples(y_eff.row(i).transpose(), as, zc,
                                                     cfg_.inactive_ess);
        });
    }

    const PosteriorSampleSet post = reconstruct(y_eff, z_blocks, as, cfg_.prior);

    {
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.meta["n_y_ess"] = std::to_string(y_eff.rows());
        t.meta["n_z_ess"] = std::to_string(k < kParamDim ? cfg_.inactive_ess : 1);
        for (int j = 0; j < kParamDim; ++j) t.columns.push_back("x" + std::to_string(j + 1));
        for (long i = 0; i < post.samples_norm.rows(); ++i) {
            std::vector<double> row(kParamDim);
            for (int j = 0; j < kParamDim; ++j) row[j] = post.samples_norm(i, j);
            t.rows.push_back(std::move(row));
        }
        write_csv(path("posterior.csv"), t);
    }
    {
        static const char* names[] = {"c", "alpha_res_l", "delta_alpha_res",
                                      "lambda_dot_star", "m_alpha", "beta_star",
                                      "lambda_star", "m_beta"};
        std::ofstream f(path("posterior_stats.txt"));
        f << "config_hash = " << hash_ << "\n";
        f << "k = " << k << "\n";
        f << "n_samples = " << post.samples_norm.rows() << "\n";
        for (int j = 0; j < kParamDim; ++j) {
            f << "mu_post." << names[j] << " = " << fmt(post.mean_physical[j]) << "\n";
            f << "sigma_post." << names[j] << " = " << fmt(post.std_physical[j]) << "\n";
        }
    }
    mark_done("reconstruct");
}

// ---------------------------------------------------------------------------
// report

void Pipeline::stage_report() {
    if (stage_done("report")) return;
    require_done("reconstruct");
    const Dataset ds = load_dataset();
    const NoiseModel noise = load_noise();
    const CsvTable post = read_csv(path("posterior.csv"));
    const long n_post = long(post.rows.size());

    Eigen::VectorXd mean_norm = Eigen::VectorXd::Zero(kParamDim);
    for (const auto& row : post.rows)
        for (int j = 0; j < kParamDim; ++j) mean_norm[j] += row[j];
    mean_norm /= double(n_post);

    const ForwardMap forward = make_forward(cfg_);
    const Eigen::VectorXd g_mean = forward(mean_norm);
    const Eigen::VectorXd d = ds.stacked();
    const long ns = long(ds.stations.size());

    {
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.columns = {"station", "block", "data", "response_mean", "sigma"};
        for (long i = 0; i < 2 * ns; ++i) {
            const long s = i % ns;
            t.rows.push_back({ds.stations[s], double(i / ns), d[i], g_mean[i],
                              noise.sigma[i]});
        }
        write_csv(path("posterior_mean_response.csv"), t);
    }
    {
        // Marginal posterior histograms in physical units, Table-1 ranges.
        CsvTable t;
        t.meta["config_hash"] = hash_;
        t.columns = {"param", "bin_center", "density"};
        const int nbins = 40;
        for (int j = 0; j < kParamDim; ++j) {
            const auto [lo, hi] = cfg_.prior.intervals[j];
            std::vector<long> counts(nbins, 0);
            for (const auto& row : post.rows) {
                const double phys = lo + 0.5 * (row[j] + 1.0) * (hi - lo);
                int b = int((phys - lo) / (hi - lo) * nbins);
                b = std::clamp(b, 0, nbins - 1);
                ++counts[b];
            }
            const double width = (hi - lo) / nbins;
            for (int b = 0; b < nbins; ++b)
                t.rows.push_back({double(j + 1), lo + (b + 0.5) * width,
                                  double(counts[b]) / (double(n_post) * width)});
        }
        write_csv(path("marginals.csv"), t);
    }
    {
        const auto stats = read_keyvalue(path("posterior_stats.txt"));
        const auto chain_meta = read_csv(path("chain_active.csv")).meta;
        double r2 = 0.0;
        load_surface(&r2);
        std::ofstream f(path("report.txt"));
        f << "config_hash = " << hash_ << "\n";
        f << "seed = " << cfg_.seed << "\n";
        f << "subspace_dim = " << stats.at("k") << "\n";
        f << "surrogate_r2 = " << fmt(r2) << "\n";
        f << "active_acceptance_rate = " << chain_meta.at("acceptance_rate") << "\n";
        f << "active_ess_min = " << chain_meta.at("ess_min") << "\n";
        f << "posterior_samples = " << stats.at("n_samples") << "\n";
        for (const auto& [key, val] : stats)
            if (key.rfind("mu_post.", 0) == 0 || key.rfind("sigma_post.", 0) == 0)
                f << key << " = " << val << "\n";
    }
    mark_done("report");
}

void Pipeline::run_all() {
    synth_data();
    stage_gradients();
    stage_subspace();
    stage_surrogate();
    stage_mcmc();
    stage_reconstruct();
    stage_report();
}

}  // namespace ghbs
