#pragma once

#include <map>
#include <string>
#include <vector>

#include "ghbs/config.hpp"
#include "ghbs/inverse.hpp"
#include "ghbs/mcmc.hpp"

namespace ghbs {

/// Numeric table with "# key = value" metadata lines, the on-disk format
/// of every staged artifact.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::map<std::string, std::string> meta;

    long col(const std::string& name) const;  ///< throws on missing column
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

/// Forward map induced by a config: normalized point -> physical
/// parameters -> triaxial response at the configured stations.
ForwardMap make_forward(const PipelineConfig& cfg);

/// Staged, restartable pipeline rooted at an output directory. Every
/// stage records its completion in manifest.txt together with the config
/// hash; a completed stage with a matching hash is a no-op.
class Pipeline {
public:
    Pipeline(PipelineConfig cfg, std::string outdir);

    void synth_data();
    void stage_gradients();
    void stage_subspace();
    void stage_surrogate();
    void stage_mcmc();
    void stage_reconstruct();
    void stage_report();
    void run_all();

    const PipelineConfig& config() const { return cfg_; }
    const std::string& outdir() const { return outdir_; }
    std::string path(const std::string& file) const;

    // Loaded artifacts, used by later stages and by tests.
    Dataset load_dataset() const;
    NoiseModel load_noise() const;
    std::vector<MisfitGradientSample> load_gradients() const;
    SpectrumEstimate load_spectrum(int* k = nullptr) const;
    QuadraticSurface load_surface(double* r2 = nullptr) const;

private:
    bool stage_done(const std::string& stage) const;
    void mark_done(const std::string& stage);
    void require_done(const std::string& stage) const;
    int resolved_workers() const;

    PipelineConfig cfg_;
    std::string outdir_;
    std::string hash_;
};

/// Single exploratory forward run; writes the per-step trajectory with
/// columns step, axial_strain, vol_strain, p, q, lambda_acc, alpha, beta.
void write_trajectory_csv(const std::string& path, const TrajectoryRecord& traj,
                          const std::map<std::string, std::string>& meta);

}  // namespace ghbs
