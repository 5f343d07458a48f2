#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace binoracle {

// One release pair: how similar the two binaries are (response already
// squeezed into (0,1)) and what happened between the releases.
struct ReleasePairObservation {
    std::string project;
    double y = 0.0;
    double days = 0.0;
    double commits = 0.0;
    double changed_file_fraction = 0.0;
};

struct TauFit {
    double m = 0.0;
    double tau = 0.0;
};

// Type-7 (linear interpolation) quantile, the convention the calibration
// numbers were computed under. p in [0,1]; data need not be sorted.
double quantile(std::vector<double> values, double p);

// m = median, tau scaled so the 90th percentile maps to similarity 0.1.
TauFit fit_tau(const std::vector<double>& distances);

// s = 1 / (1 + exp((d - m)/tau)); strictly decreasing in d, s(m) = 1/2.
double transform_distance(double d, double m, double tau);

// (y*(n-1) + 0.5)/n: pulls {0,1} endpoints strictly inside the interval.
double squeeze(double y, int64_t n);
std::vector<double> squeeze(std::vector<double> y, int64_t n);

// Standardized design: kept covariate columns (zero-variance ones dropped
// with a warning record), responses, and project indexing.
struct DesignMatrix {
    std::vector<std::string> covariates;     // kept, in declaration order
    std::vector<double> means, sds;          // per kept covariate
    std::vector<std::string> warnings;       // e.g. "ZeroVariance: commits"
    std::vector<std::vector<double>> x;      // row i -> standardized covariates
    std::vector<double> y;
    std::vector<int> project;                // row i -> index into projects
    std::vector<std::string> projects;
    size_t rows() const { return y.size(); }
    size_t cols() const { return covariates.size(); }
};

DesignMatrix standardize(const std::vector<ReleasePairObservation>& obs);

struct SamplerConfig {
    int chains = 4;
    int warmup = 1000;
    int draws = 2000;
    uint64_t seed = 1;
    double prior_scale_global = 1.0;   // Normal(0, s) on alpha_g, beta_g
    double prior_scale_sigma = 1.0;    // half-Normal(s) on deviation scales
    double prior_scale_kappa = 100.0;  // half-Normal(s) on concentration
    double target_accept = 0.3;
    int adapt_batch = 50;
    // test hook: reuse one derived seed for every chain (chains coincide)
    bool identical_chain_seeds = false;
};

struct ParamSummary {
    std::string name;
    double mean = 0.0;
    double hdi_lo = 0.0, hdi_hi = 0.0;
    double rhat = 0.0;
};

struct PosteriorSummary {
    // global parameters on their natural scales:
    // alpha_g, beta_g[<cov>]..., sigma_alpha, sigma[<cov>]..., kappa
    std::vector<ParamSummary> params;
    // raw sampled state per chain: [chain][draw][param], sampling scale
    // (deviation scales and kappa are kept as logs here)
    std::vector<std::vector<std::vector<double>>> chains;
    std::vector<std::string> param_names;
    SamplerConfig config;
    std::vector<std::string> covariates;
    std::vector<std::string> projects;
    std::vector<std::string> warnings;
    double accept_rate = 0.0;

    const ParamSummary& param(const std::string& name) const;
};

// Hierarchical Beta regression: logit(mu_i) = alpha_p(i) + x_i . beta_p(i),
// alpha_p ~ N(alpha_g, sigma_alpha), beta_pj ~ N(beta_gj, sigma_j),
// y_i ~ Beta(mu_i*kappa, (1-mu_i)*kappa). Sampled with componentwise
// adaptive random-walk Metropolis, non-centered, chains run in parallel.
PosteriorSummary fit_model(const DesignMatrix& data, const SamplerConfig& config);

// Split-chain Gelman-Rubin statistic over [chain][draw] matrices.
double rhat(const std::vector<std::vector<double>>& chains);

// Narrowest contiguous interval over the sorted draws holding ceil(mass*n).
std::pair<double, double> hdi(std::vector<double> draws, double mass = 0.95);

struct PpcDecile {
    double q = 0.0;         // which decile (0.1 .. 0.9)
    double observed = 0.0;  // decile of the data
    double sim_lo = 0.0, sim_hi = 0.0, sim_mean = 0.0;
    bool inside = false;    // observed within the simulated band
};

struct PpcReport {
    std::vector<PpcDecile> deciles;
    int draws_used = 0;
    int inside_count = 0;
};

PpcReport posterior_predictive_check(const PosteriorSummary& fit, const DesignMatrix& data,
                                     double rhat_threshold = 1.05);

// File interfaces: delimited text in (header: project, y|distance, days,
// commits, changed_file_fraction), report and draws out.
struct LoadedObservations {
    std::vector<ReleasePairObservation> obs;
    std::optional<TauFit> tau; // set when the file carried raw distances
};

LoadedObservations load_observations(const std::string& path);
std::string fit_report_text(const PosteriorSummary& fit);
void write_draws_csv(const PosteriorSummary& fit, const std::string& path);

} // namespace binoracle
