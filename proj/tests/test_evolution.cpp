#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "binoracle/error.hpp"
#include "binoracle/evolution.hpp"
#include "binoracle/rng.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace binoracle;

namespace {

template <typename F>
std::string error_code_of(F&& call) {
    try {
        call();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

template <typename F>
std::string error_message_of(F&& call) {
    try {
        call();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

struct TempDir {
    std::string path;
    TempDir() {
        char tmpl[] = "/tmp/binoracle-evo-XXXXXX";
        path = mkdtemp(tmpl);
    }
} temp_dir;

std::string write_file(const std::string& name, const std::string& text) {
    std::string full = temp_dir.path + "/" + name;
    std::ofstream(full) << text;
    return full;
}

// Hierarchical generator matching the model: per-project intercepts/slopes
// drawn around the given global values, responses Beta with concentration
// kappa. Raw covariates are affine images of the standard-normal design, so
// re-standardization recovers (almost exactly) the generating coefficients.
std::vector<ReleasePairObservation> synth_pairs(int projects, int pairs_each,
                                                uint64_t seed, double alpha_g,
                                                const double beta_g[3], double kappa,
                                                double sigma_alpha, double sigma_beta) {
    Rng rng(seed);
    std::vector<ReleasePairObservation> obs;
    for (int p = 0; p < projects; ++p) {
        double ap = alpha_g + sigma_alpha * rng.normal();
        double bp[3];
        for (int j = 0; j < 3; ++j) bp[j] = beta_g[j] + sigma_beta * rng.normal();
        for (int i = 0; i < pairs_each; ++i) {
            double x[3] = {rng.normal(), rng.normal(), rng.normal()};
            double eta = ap;
            for (int j = 0; j < 3; ++j) eta += bp[j] * x[j];
            double mu = 1.0 / (1.0 + std::exp(-eta));
            ReleasePairObservation o;
            o.project = "proj" + std::to_string(p);
            o.y = rng.beta(mu * kappa, (1 - mu) * kappa);
            o.days = x[0] * 100 + 300;
            o.commits = x[1] * 40 + 120;
            o.changed_file_fraction = x[2] * 0.1 + 0.3;
            obs.push_back(o);
        }
    }
    return obs;
}

int param_index(const PosteriorSummary& fit, const std::string& name) {
    for (size_t i = 0; i < fit.param_names.size(); ++i) {
        if (fit.param_names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

// pooled draws of one summary parameter on its natural scale
std::vector<double> pooled_natural(const PosteriorSummary& fit, const std::string& name) {
    bool logged = name == "kappa" || name.rfind("sigma", 0) == 0;
    int idx = param_index(fit, logged ? "log_" + name : name);
    REQUIRE(idx >= 0);
    std::vector<double> out;
    for (const auto& chain : fit.chains) {
        for (const auto& draw : chain) {
            out.push_back(logged ? std::exp(draw[idx]) : draw[idx]);
        }
    }
    return out;
}

// one-sample Kolmogorov-Smirnov statistic against U(0,1)
double ks_uniform(std::vector<double> sample) {
    std::sort(sample.begin(), sample.end());
    double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) {
        double hi = (i + 1) / n - sample[i];
        double lo = sample[i] - i / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

} // namespace

TEST_CASE("quantiles interpolate linearly between order statistics") {
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(i);
    CHECK(quantile(grid, 0.5) == 100.0);
    CHECK(quantile(grid, 0.9) == doctest::Approx(180.0).epsilon(1e-12));
    CHECK(quantile(grid, 0.0) == 0.0);
    CHECK(quantile(grid, 1.0) == 200.0);

    CHECK(quantile({4, 2, 1, 3}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({20, 10}, 0.9) == doctest::Approx(19.0));
    CHECK(error_code_of([] { quantile({}, 0.5); }) == "DegenerateQuantiles");
}

TEST_CASE("tau calibration pins the anchor points") {
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(i);
    TauFit t = fit_tau(grid);
    CHECK(t.m == 100.0);
    CHECK(t.tau == doctest::Approx(80.0 / std::log(9.0)).epsilon(1e-12));

    // the anchors hold for any sample by construction
    Rng rng(7);
    std::vector<double> sample;
    for (int i = 0; i < 200; ++i) sample.push_back(std::exp(2.0 + rng.normal()) * 30);
    TauFit f = fit_tau(sample);
    double m = quantile(sample, 0.5), p90 = quantile(sample, 0.9);
    CHECK(transform_distance(m, f.m, f.tau) == 0.5);
    CHECK(transform_distance(p90, f.m, f.tau) == doctest::Approx(0.1).epsilon(1e-12));

    CHECK(error_code_of([] { fit_tau({1, 2, 3, 4, 5, 6, 7, 8, 9}); }) ==
          "DegenerateQuantiles");
    std::vector<double> flat(11, 7.0);
    flat.push_back(100.0); // p90 still sits on the 7s
    CHECK(error_code_of([&] { fit_tau(flat); }) == "DegenerateQuantiles");
}

TEST_CASE("distance transform anchors and monotonicity") {
    CHECK(transform_distance(50.0, 50.0, 12.0) == 0.5);

    // reference calibration: m=142.35, tau=33.44 maps d=215.82 to 0.1
    CHECK(std::fabs(transform_distance(215.82, 142.35, 33.44) - 0.1) < 1e-3);

    double prev = 1.0;
    for (double d = -50; d <= 400; d += 0.5) {
        double s = transform_distance(d, 142.35, 33.44);
        CHECK(s > 0.0);
        CHECK(s < 1.0);
        CHECK(s < prev);
        prev = s;
    }

    CHECK(error_code_of([] { transform_distance(1, 0, 0.0); }) == "NonpositiveTau");
    CHECK(error_code_of([] { transform_distance(1, 0, -3.0); }) == "NonpositiveTau");
}

TEST_CASE("squeeze keeps responses strictly inside the unit interval") {
    CHECK(squeeze(0.0, 100) == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(squeeze(1.0, 100) == doctest::Approx(0.995).epsilon(1e-12));
    for (int64_t n : {2, 3, 17, 100000}) {
        CHECK(squeeze(0.5, n) == doctest::Approx(0.5).epsilon(1e-12));
        for (double y = 0.0; y <= 1.0; y += 0.125) {
            double s = squeeze(y, n);
            CHECK(s > 0.0);
            CHECK(s < 1.0);
        }
    }
    std::vector<double> v = squeeze(std::vector<double>{0.0, 0.5, 1.0}, 10);
    CHECK(v[0] == doctest::Approx(0.05));
    CHECK(v[1] == doctest::Approx(0.5));
    CHECK(v[2] == doctest::Approx(0.95));
}

TEST_CASE("standardize normalizes kept columns and drops flat ones") {
    Rng rng(11);
    std::vector<ReleasePairObservation> obs;
    for (int i = 0; i < 60; ++i) {
        ReleasePairObservation o;
        o.project = i % 2 ? "a" : "b";
        o.y = 0.5;
        o.days = 30 + 200 * rng.uniform();
        o.commits = std::floor(1 + 80 * rng.uniform());
        o.changed_file_fraction = rng.uniform();
        obs.push_back(o);
    }
    DesignMatrix d = standardize(obs);
    REQUIRE(d.cols() == 3);
    CHECK(d.warnings.empty());
    CHECK(d.projects == std::vector<std::string>{"b", "a"});
    for (size_t j = 0; j < 3; ++j) {
        double sum = 0, sumsq = 0;
        for (size_t i = 0; i < d.rows(); ++i) sum += d.x[i][j];
        double mean = sum / d.rows();
        for (size_t i = 0; i < d.rows(); ++i) {
            sumsq += (d.x[i][j] - mean) * (d.x[i][j] - mean);
        }
        CHECK(std::fabs(mean) < 1e-9);
        CHECK(std::fabs(std::sqrt(sumsq / (d.rows() - 1)) - 1.0) < 1e-9);
    }

    // constant columns are dropped with a warning, not an exception
    for (auto& o : obs) o.commits = 5;
    for (auto& o : obs) o.changed_file_fraction = 0.25;
    DesignMatrix d1 = standardize(obs);
    REQUIRE(d1.cols() == 1);
    CHECK(d1.covariates == std::vector<std::string>{"days"});
    REQUIRE(d1.warnings.size() == 2);
    CHECK(d1.warnings[0] == "ZeroVariance: commits");
    CHECK(d1.warnings[1] == "ZeroVariance: changed_file_fraction");

    // noiseless linear response: back-transforming the standardized OLS
    // slope must recover the generating slope and intercept
    for (size_t i = 0; i < obs.size(); ++i) obs[i].y = 0.2 + 0.07 * obs[i].days;
    DesignMatrix d2 = standardize(obs);
    double ybar = 0;
    for (double y : d2.y) ybar += y;
    ybar /= d2.rows();
    double num = 0, den = 0;
    for (size_t i = 0; i < d2.rows(); ++i) {
        num += d2.x[i][0] * (d2.y[i] - ybar);
        den += d2.x[i][0] * d2.x[i][0];
    }
    double slope_std = num / den;
    CHECK(slope_std / d2.sds[0] == doctest::Approx(0.07).epsilon(1e-9));
    CHECK(ybar - slope_std / d2.sds[0] * d2.means[0] == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("split rhat matches closed forms and flags degeneracy") {
    // identical chains whose halves share a mean: B = 0 exactly, so
    // rhat = sqrt((n-1)/n) with n = draws per split half
    std::vector<std::vector<double>> mirrored = {{1, 2, 2, 1}, {1, 2, 2, 1}};
    CHECK(rhat(mirrored) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    // same stationary distribution -> rhat near 1
    std::vector<std::vector<double>> stationary;
    for (int c = 0; c < 4; ++c) {
        Rng rng(100 + c);
        std::vector<double> chain;
        for (int i = 0; i < 10000; ++i) chain.push_back(rng.normal());
        stationary.push_back(std::move(chain));
    }
    CHECK(std::fabs(rhat(stationary) - 1.0) < 0.01);

    // one chain shifted far away -> loud disagreement
    std::vector<std::vector<double>> shifted = stationary;
    for (double& v : shifted[0]) v += 10.0;
    CHECK(rhat(shifted) > 1.1);

    CHECK(error_code_of([] { rhat({{3, 3, 3, 3}, {3, 3, 3, 3}}); }) ==
          "DegenerateVariance");
    CHECK(error_code_of([] { rhat({{1, 2, 3, 4}}); }) == "TooFewDraws");
    CHECK(error_code_of([] { rhat({{1, 2, 3}, {4, 5, 6}}); }) == "TooFewDraws");
}

TEST_CASE("hdi is the narrowest window over sorted draws") {
    Rng rng(5);
    std::vector<double> normal;
    for (int i = 0; i < 20000; ++i) normal.push_back(rng.normal());
    auto [lo, hi] = hdi(normal, 0.95);
    CHECK(std::fabs(lo - quantile(normal, 0.025)) < 0.1);
    CHECK(std::fabs(hi - quantile(normal, 0.975)) < 0.1);

    // exponential: highest density hugs zero
    std::vector<double> expo;
    for (int i = 0; i < 100000; ++i) expo.push_back(-std::log(rng.uniform_open()));
    auto [elo, ehi] = hdi(expo, 0.95);
    CHECK(elo >= 0.0);
    CHECK(elo < 0.01);
    CHECK(std::fabs(ehi - 3.0) < 0.3);

    std::vector<double> small;
    for (int i = 0; i < 500; ++i) small.push_back(rng.uniform());
    auto [flo, fhi] = hdi(small, 1.0);
    CHECK(flo == *std::min_element(small.begin(), small.end()));
    CHECK(fhi == *std::max_element(small.begin(), small.end()));

    // minimality: no same-mass window over the sorted draws is narrower
    auto [mlo, mhi] = hdi(small, 0.95);
    std::vector<double> sorted = small;
    std::sort(sorted.begin(), sorted.end());
    size_t w = 475; // ceil(0.95 * 500)
    double narrowest = 1e300;
    size_t covered = 0;
    for (size_t i = 0; i + w <= sorted.size(); ++i) {
        narrowest = std::min(narrowest, sorted[i + w - 1] - sorted[i]);
    }
    CHECK(mhi - mlo == doctest::Approx(narrowest).epsilon(1e-12));
    for (double v : small) covered += v >= mlo && v <= mhi;
    CHECK(covered >= w);

    std::vector<double> nineteen(19, 0.0);
    CHECK(error_code_of([&] { hdi(nineteen, 0.95); }) == "TooFewDraws");
    CHECK(error_code_of([&] { hdi(small, 0.0); }) == "ParamValidation");
}

TEST_CASE("model recovery on synthetic hierarchical data") {
    const double true_beta[3] = {-0.5, 0.0, 0.3};
    std::vector<ReleasePairObservation> obs =
        synth_pairs(20, 100, 123, 0.0, true_beta, 50.0, 0.2, 0.1);
    DesignMatrix d = standardize(obs);
    REQUIRE(d.cols() == 3);

    SamplerConfig cfg;
    cfg.warmup = 600;
    cfg.draws = 600;
    cfg.seed = 42;
    PosteriorSummary fit = fit_model(d, cfg);

    CHECK(fit.projects.size() == 20);
    CHECK(fit.warnings.empty());
    REQUIRE(fit.chains.size() == 4);
    REQUIRE(fit.chains[0].size() == 600);
    CHECK(fit.param_names.size() == 89); // 3 + 2*3 + 20 + 20*3
    CHECK(fit.chains[0][0].size() == 89);
    CHECK(fit.accept_rate > 0.2);
    CHECK(fit.accept_rate < 0.45);

    CHECK(std::fabs(fit.param("alpha_g").mean - 0.0) <= 0.1);
    CHECK(std::fabs(fit.param("beta_g[days]").mean - -0.5) <= 0.1);
    CHECK(std::fabs(fit.param("beta_g[commits]").mean - 0.0) <= 0.1);
    CHECK(std::fabs(fit.param("beta_g[changed_file_fraction]").mean - 0.3) <= 0.1);
    CHECK(std::fabs(fit.param("kappa").mean - 50.0) < 5.0);

    double tol = 1.0 / std::sqrt(4.0 * 600.0);
    for (const ParamSummary& p : fit.params) {
        CHECK_MESSAGE(p.rhat <= 1.05, p.name);
        CHECK(p.hdi_lo < p.hdi_hi);
        std::vector<double> pool = pooled_natural(fit, p.name);
        size_t inside = 0;
        for (double v : pool) inside += v >= p.hdi_lo && v <= p.hdi_hi;
        CHECK(static_cast<double>(inside) / pool.size() >= 0.95 - tol);
    }

    // data drawn from the model itself sits inside every predictive band
    PpcReport ppc = posterior_predictive_check(fit, d);
    CHECK(ppc.draws_used == 400);
    REQUIRE(ppc.deciles.size() == 9);
    for (int q = 0; q < 9; ++q) {
        CHECK(ppc.deciles[q].q == doctest::Approx((q + 1) / 10.0));
        CHECK(ppc.deciles[q].sim_lo <= ppc.deciles[q].sim_mean);
        CHECK(ppc.deciles[q].sim_mean <= ppc.deciles[q].sim_hi);
    }
    CHECK(ppc.inside_count == 9);

    std::string report = fit_report_text(fit);
    CHECK(report.find("chains 4") != std::string::npos);
    CHECK(report.find("priors: global Normal(0,1)") != std::string::npos);
    CHECK(report.find("alpha_g") != std::string::npos);
    CHECK(report.find("beta_g[days]") != std::string::npos);
    CHECK(report.find("kappa") != std::string::npos);
    CHECK(report.find("warnings: none") != std::string::npos);

    std::string csv = temp_dir.path + "/draws.csv";
    write_draws_csv(fit, csv);
    std::ifstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("chain,draw,alpha_g,", 0) == 0);
    REQUIRE(std::getline(in, line));
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ','); // chain
    CHECK(cell == "0");
    std::getline(row, cell, ','); // draw
    CHECK(cell == "0");
    std::getline(row, cell, ',');
    CHECK(std::stod(cell) == fit.chains[0][0][0]); // %.17g round-trips
    size_t rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4 * 600);
}

TEST_CASE("flat data reduces to a uniform posterior predictive") {
    // mu=0.5, kappa=2 is Beta(1,1); fit the hierarchy to uniform responses
    // and the posterior predictive must look uniform too
    Rng rng(31);
    DesignMatrix d;
    d.projects = {"a", "b"};
    for (int i = 0; i < 2000; ++i) {
        d.y.push_back(rng.uniform_open());
        d.project.push_back(i % 2);
        d.x.emplace_back();
    }

    SamplerConfig cfg;
    cfg.warmup = 400;
    cfg.draws = 500;
    cfg.seed = 11;
    PosteriorSummary fit = fit_model(d, cfg);
    REQUIRE(fit.params.size() == 3); // alpha_g, sigma_alpha, kappa
    CHECK(std::fabs(fit.param("alpha_g").mean) < 0.3);
    CHECK(std::fabs(fit.param("kappa").mean - 2.0) < 0.3);
    for (const ParamSummary& p : fit.params) CHECK(p.rhat <= 1.05);

    int i_alpha = param_index(fit, "alpha_g");
    int i_lsa = param_index(fit, "log_sigma_alpha");
    int i_lk = param_index(fit, "log_kappa");
    int i_za = param_index(fit, "z_alpha[a]");
    int i_zb = param_index(fit, "z_alpha[b]");
    REQUIRE(i_alpha == 0);
    REQUIRE(i_lsa == 1);
    REQUIRE(i_lk == 2);
    REQUIRE(i_za == 3);
    REQUIRE(i_zb == 4);

    // simulate replicated responses across the posterior and test uniformity
    Rng sim(77);
    std::vector<double> rep;
    for (const auto& chain : fit.chains) {
        for (size_t s = 0; s < chain.size(); s += 4) {
            const std::vector<double>& th = chain[s];
            double sa = std::exp(th[i_lsa]), kap = std::exp(th[i_lk]);
            for (int z : {i_za, i_zb}) {
                double mu = 1.0 / (1.0 + std::exp(-(th[i_alpha] + sa * th[z])));
                rep.push_back(sim.beta(mu * kap, (1 - mu) * kap));
            }
        }
    }
    REQUIRE(rep.size() >= 500);
    // Kolmogorov-Smirnov against U(0,1) at alpha = 0.01
    CHECK(ks_uniform(rep) < 1.628 / std::sqrt(static_cast<double>(rep.size())));

    PpcReport ppc = posterior_predictive_check(fit, d);
    CHECK(ppc.inside_count == 9);
}

TEST_CASE("misspecified bimodal data fails the predictive decile check") {
    Rng rng(57);
    std::vector<ReleasePairObservation> obs;
    for (int p = 0; p < 6; ++p) {
        double w = 0.3 + 0.4 * p / 5.0; // project-varying mixture weight
        for (int i = 0; i < 100; ++i) {
            ReleasePairObservation o;
            o.project = "proj" + std::to_string(p);
            o.y = rng.uniform() < w ? rng.beta(20, 2) : rng.beta(2, 20);
            o.days = 30 + 400 * rng.uniform();
            o.commits = std::floor(1 + 200 * rng.uniform());
            o.changed_file_fraction = rng.uniform();
            obs.push_back(o);
        }
    }
    DesignMatrix d = standardize(obs);

    SamplerConfig cfg;
    cfg.warmup = 600;
    cfg.draws = 600;
    cfg.seed = 9;
    PosteriorSummary fit = fit_model(d, cfg);
    for (const ParamSummary& p : fit.params) CHECK(p.rhat <= 1.05);

    // a unimodal Beta cannot reproduce a two-humped response distribution
    PpcReport ppc = posterior_predictive_check(fit, d);
    CHECK(ppc.inside_count < 9);
}

TEST_CASE("fits are reproducible and validate their inputs") {
    const double true_beta[3] = {-0.4, 0.1, 0.2};
    std::vector<ReleasePairObservation> obs =
        synth_pairs(3, 30, 19, 0.1, true_beta, 30.0, 0.2, 0.1);
    DesignMatrix d = standardize(obs);

    SamplerConfig cfg;
    cfg.warmup = 60;
    cfg.draws = 24;
    cfg.seed = 5;
    PosteriorSummary a = fit_model(d, cfg);
    PosteriorSummary b = fit_model(d, cfg);
    CHECK(a.chains == b.chains); // bit-for-bit, not approximately
    CHECK(fit_report_text(a) == fit_report_text(b));

    cfg.identical_chain_seeds = true;
    PosteriorSummary c = fit_model(d, cfg);
    for (size_t i = 1; i < c.chains.size(); ++i) CHECK(c.chains[i] == c.chains[0]);

    SamplerConfig bad = cfg;
    bad.chains = 3;
    CHECK(error_code_of([&] { fit_model(d, bad); }) == "ChainCountTooSmall");
    bad = cfg;
    bad.draws = 0;
    CHECK(error_code_of([&] { fit_model(d, bad); }) == "TooFewDraws");

    std::vector<ReleasePairObservation> lone(obs.begin(), obs.begin() + 30);
    CHECK(error_code_of([&] { fit_model(standardize(lone), cfg); }) ==
          "TooFewProjects");

    DesignMatrix edge = d;
    edge.y[2] = 1.0; // closed endpoint: squeeze was skipped
    CHECK(error_code_of([&] { fit_model(edge, cfg); }) == "NonFiniteLikelihood");
    CHECK(error_message_of([&] { fit_model(edge, cfg); }).find("row 2") !=
          std::string::npos);

    DesignMatrix nan_cov = d;
    nan_cov.x[5][1] = std::nan("");
    CHECK(error_message_of([&] { fit_model(nan_cov, cfg); }).find("row 5") !=
          std::string::npos);
}

TEST_CASE("observations files load in y and distance modes") {
    std::string ypath = write_file("obs_y.csv",
                                   "project,y,days,commits,changed_file_fraction\n"
                                   "zlib,0.62,120,34,0.18\n"
                                   "curl,0.08,410,210,0.55\n"
                                   "zlib,0.35,60,12,0.09\n");
    LoadedObservations ly = load_observations(ypath);
    REQUIRE(ly.obs.size() == 3);
    CHECK(!ly.tau.has_value());
    CHECK(ly.obs[0].project == "zlib");
    CHECK(ly.obs[0].y == doctest::Approx(0.62));
    CHECK(ly.obs[1].days == doctest::Approx(410));
    CHECK(ly.obs[1].commits == doctest::Approx(210));
    CHECK(ly.obs[2].changed_file_fraction == doctest::Approx(0.09));

    // distance mode calibrates tau from the file itself, then squeezes;
    // column order is free
    std::ostringstream dist;
    dist << "days,project,distance,changed_file_fraction,commits\n";
    for (int i = 0; i < 12; ++i) {
        dist << 10 * i << ",p" << i % 3 << "," << 10 * i << ",0.2,5\n";
    }
    LoadedObservations ld = load_observations(write_file("obs_dist.csv", dist.str()));
    REQUIRE(ld.obs.size() == 12);
    REQUIRE(ld.tau.has_value());
    CHECK(ld.tau->m == doctest::Approx(55.0));           // median of 0..110
    CHECK(ld.tau->tau == doctest::Approx(44.0 / std::log(9.0))); // p90 = 99
    for (size_t i = 0; i < 12; ++i) {
        double expect = squeeze(transform_distance(10.0 * i, ld.tau->m, ld.tau->tau), 12);
        CHECK(ld.obs[i].y == doctest::Approx(expect).epsilon(1e-12));
        if (i > 0) CHECK(ld.obs[i].y < ld.obs[i - 1].y);
    }

    CHECK(error_code_of([] { load_observations("/nonexistent/obs.csv"); }) ==
          "ParamValidation");
    CHECK(error_code_of([&] {
              load_observations(write_file("empty.csv", ""));
          }) == "ParamValidation");
    CHECK(error_code_of([&] {
              load_observations(write_file(
                  "missing_col.csv", "project,y,days,changed_file_fraction\na,0.5,1,0.2\n"));
          }) == "ParamValidation");
    std::string bad_number =
        "project,y,days,commits,changed_file_fraction\n"
        "a,0.5,10,3,0.1\n"
        "a,oops,10,3,0.1\n";
    CHECK(error_message_of([&] {
              load_observations(write_file("bad_number.csv", bad_number));
          }).find("line 3") != std::string::npos);
    CHECK(error_code_of([&] {
              load_observations(write_file(
                  "short_row.csv",
                  "project,y,days,commits,changed_file_fraction\na,0.5,10,3\n"));
          }) == "ParamValidation");
}
