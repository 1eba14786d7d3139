#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ghbs/pipeline.hpp"

using namespace ghbs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    explicit TempDir(const std::string& tag) {
        dir = fs::temp_directory_path() / ("ghbs_test_" + tag);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string str() const { return dir.string(); }
};

// Small but complete settings so every stage runs in seconds.
PipelineConfig smoke_config() {
    PipelineConfig c = parse_config(
        "gradients.count = 10\n"
        "bootstrap.count = 40\n"
        "subspace.dim = 2\n"
        "chain.active.steps = 4000\n"
        "chain.active.burn_in = 400\n"
        "chain.active.proposal_cov = 0.02\n"
        "kde.samples = 2000\n"
        "chain.inactive.steps = 400\n"
        "chain.inactive.ess = 5\n"
        "workers = 1\n",
        "smoke");
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("csv round trip preserves values and metadata") {
    TempDir tmp("csv");
    CsvTable t;
    t.meta["config_hash"] = "deadbeef";
    t.meta["seed"] = "42";
    t.columns = {"a", "b"};
    t.rows = {{1.0, -2.5e-17}, {3.141592653589793, 1e300}};
    const std::string path = (tmp.dir / "t.csv").string();
    write_csv(path, t);
    const CsvTable back = read_csv(path);
    CHECK(back.meta.at("config_hash") == "deadbeef");
    CHECK(back.meta.at("seed") == "42");
    REQUIRE(back.columns == t.columns);
    REQUIRE(back.rows.size() == 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(back.rows[i][j] == t.rows[i][j]);  // %.17g is lossless
    CHECK(back.col("b") == 1);
    CHECK_THROWS(back.col("missing"));
}

TEST_CASE("forward map dimension and determinism") {
    const PipelineConfig cfg = parse_config("stations.count = 9\n", "t");
    const ForwardMap fwd = make_forward(cfg);
    const Eigen::VectorXd g = fwd(Eigen::VectorXd::Zero(kParamDim));
    REQUIRE(g.size() == 18);
    const Eigen::VectorXd g2 = fwd(Eigen::VectorXd::Zero(kParamDim));
    CHECK((g - g2).cwiseAbs().maxCoeff() == 0.0);
    // Matches a direct simulation through the same schedule and stations.
    const QoIResponse qoi = qoi_map(cfg.prior.to_physical(Eigen::VectorXd::Zero(kParamDim)),
                                    cfg.elastic, cfg.schedule, cfg.stations());
    for (int i = 0; i < 9; ++i) {
        CHECK(g[i] == qoi.vol_strain[i]);
        CHECK(g[9 + i] == qoi.shear_stress[i]);
    }
}

TEST_CASE("trajectory csv has one row per step plus the initial state") {
    TempDir tmp("traj");
    const TrajectoryRecord traj =
        simulate(PlasticParams{}, ElasticParams{}, LoadingSchedule{});
    const std::string path = (tmp.dir / "traj.csv").string();
    write_trajectory_csv(path, traj, {{"seed", "42"}});
    const CsvTable t = read_csv(path);
    CHECK(t.rows.size() == 1351);
    CHECK(t.columns == std::vector<std::string>{"step", "axial_strain", "vol_strain",
                                                "p", "q", "lambda_acc", "alpha",
                                                "beta"});
}

TEST_CASE("synthetic data: exact at zero noise, reproducible, z-scores sane") {
    SUBCASE("zero noise reproduces the forward response exactly") {
        TempDir tmp("synth0");
        PipelineConfig cfg = smoke_config();
        cfg.noise_level = 0.0;
        Pipeline pipe(cfg, tmp.str());
        pipe.synth_data();
        const Dataset ds = pipe.load_dataset();
        const Eigen::VectorXd g = make_forward(cfg)(cfg.truth_norm);
        CHECK((ds.stacked() - g).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("fixed seed gives an identical dataset") {
        TempDir a("syntha"), b("synthb");
        const PipelineConfig cfg = smoke_config();
        Pipeline pa(cfg, a.str()), pb(cfg, b.str());
        pa.synth_data();
        pb.synth_data();
        CHECK(slurp(pa.path("dataset.csv")) == slurp(pb.path("dataset.csv")));
    }
    SUBCASE("residual z-scores have roughly unit standard deviation") {
        TempDir tmp("synthz");
        const PipelineConfig cfg = smoke_config();  // 23 stations, 46 values
        Pipeline pipe(cfg, tmp.str());
        pipe.synth_data();
        const Dataset ds = pipe.load_dataset();
        const NoiseModel nm = pipe.load_noise();
        const Eigen::VectorXd g = make_forward(cfg)(cfg.truth_norm);
        const Eigen::VectorXd z = (ds.stacked() - g).cwiseQuotient(nm.sigma);
        const double sd = std::sqrt(z.squaredNorm() / double(z.size()));
        CHECK(sd == doctest::Approx(1.0).epsilon(0.2));
    }
}

TEST_CASE("gradient stage: row count, failure log, resume") {
    TempDir tmp("grad");
    PipelineConfig cfg = smoke_config();
    cfg.gradient_count = 8;
    Pipeline pipe(cfg, tmp.str());
    pipe.synth_data();
    pipe.stage_gradients();
    const std::string full = slurp(pipe.path("gradients.csv"));
    const CsvTable t = read_csv(pipe.path("gradients.csv"));
    CHECK(t.rows.size() == 8);
    CHECK(t.columns.size() == 1 + 8 + 1 + 8 + 1);  // index, x, f, g, clamped
    CHECK(fs::exists(pipe.path("gradient_failures.txt")));

    SUBCASE("interrupted run resumes to an identical file") {
        // Drop the last three rows and the completion marker, then rerun.
        CsvTable partial = t;
        partial.rows.resize(5);
        write_csv(pipe.path("gradients.csv"), partial);
        std::ofstream(pipe.path("manifest.txt")) << "synth-data = "
                                                 << t.meta.at("config_hash") << "\n";
        Pipeline again(cfg, tmp.str());
        again.stage_gradients();
        CHECK(slurp(again.path("gradients.csv")) == full);
    }
}

TEST_CASE("stages require their prerequisites") {
    TempDir tmp("prereq");
    Pipeline pipe(smoke_config(), tmp.str());
    CHECK_THROWS_AS(pipe.stage_gradients(), StageError);
    CHECK_THROWS_AS(pipe.stage_subspace(), StageError);
    CHECK_THROWS_AS(pipe.stage_mcmc(), StageError);
}

TEST_CASE("full smoke pipeline: artifacts, idempotence, reproducibility") {
    TempDir tmp("full");
    const PipelineConfig cfg = smoke_config();
    Pipeline pipe(cfg, tmp.str());
    pipe.run_all();

    SUBCASE("summary plot has one row per gradient sample") {
        const CsvTable t = read_csv(pipe.path("summary_plot.csv"));
        CHECK(t.rows.size() == std::size_t(cfg.gradient_count));
    }
    SUBCASE("posterior mean response covers both observation blocks") {
        const CsvTable t = read_csv(pipe.path("posterior_mean_response.csv"));
        CHECK(t.rows.size() == std::size_t(2 * cfg.station_count));
    }
    SUBCASE("spectrum artifacts are dimensioned correctly") {
        CHECK(read_csv(pipe.path("spectrum.csv")).rows.size() == kParamDim);
        CHECK(read_csv(pipe.path("eigenvectors.csv")).rows.size() == kParamDim);
        CHECK(read_csv(pipe.path("subspace_errors.csv")).rows.size() == kParamDim - 1);
    }
    SUBCASE("every csv artifact names the config hash") {
        for (const char* f :
             {"dataset.csv", "gradients.csv", "spectrum.csv", "chain_active.csv",
              "posterior.csv", "posterior_mean_response.csv"}) {
            const CsvTable t = read_csv(pipe.path(f));
            CHECK(t.meta.at("config_hash") == cfg.hash());
        }
    }
    SUBCASE("posterior samples stay inside the normalized box") {
        const CsvTable t = read_csv(pipe.path("posterior.csv"));
        for (const auto& row : t.rows)
            for (double v : row) CHECK(std::abs(v) <= 1.0 + 1e-12);
    }
    SUBCASE("rerun is a no-op (bitwise identical artifacts)") {
        const std::string before = slurp(pipe.path("posterior.csv"));
        Pipeline again(cfg, tmp.str());
        again.run_all();
        CHECK(slurp(pipe.path("posterior.csv")) == before);
    }
    SUBCASE("independent run reproduces every artifact bitwise") {
        TempDir other("full2");
        Pipeline p2(cfg, other.str());
        p2.run_all();
        for (const char* f : {"dataset.csv", "gradients.csv", "spectrum.csv",
                              "surface.txt", "chain_active.csv", "posterior.csv",
                              "posterior_stats.txt", "report.txt"}) {
            CHECK(slurp(pipe.path(f)) == slurp(p2.path(f)));
        }
    }
    SUBCASE("a changed config invalidates completion markers") {
        PipelineConfig changed = cfg;
        changed.seed = 43;
        Pipeline p3(changed, tmp.str());
        CHECK_THROWS_AS(p3.stage_subspace(), StageError);  // gradients stale
    }
}

TEST_CASE("worker parallelism does not change results") {
    TempDir a("w1"), b("w4");
    PipelineConfig c1 = smoke_config();
    PipelineConfig c4 = smoke_config();
    c4.workers = 4;
    Pipeline p1(c1, a.str()), p4(c4, b.str());
    p1.synth_data();
    p1.stage_gradients();
    p4.synth_data();
    p4.stage_gradients();
    CHECK(slurp(p1.path("gradients.csv")) == slurp(p4.path("gradients.csv")));
}

}  // TEST_SUITE
