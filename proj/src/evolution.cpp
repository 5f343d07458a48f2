#include "binoracle/evolution.hpp"

#include "binoracle/error.hpp"
#include "binoracle/rng.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace binoracle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logistic(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    double e = std::exp(eta);
    return e / (1.0 + e);
}

double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// unbiased (n-1) sample variance
double sample_var(const std::vector<double>& v) {
    double m = sample_mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
}

} // namespace

double quantile(std::vector<double> values, double p) {
    if (values.empty()) fail("DegenerateQuantiles", "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    if (p <= 0) return values.front();
    if (p >= 1) return values.back();
    double h = p * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(h);
    double frac = h - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

TauFit fit_tau(const std::vector<double>& distances) {
    if (distances.size() < 10) {
        fail("DegenerateQuantiles", "need at least 10 distances to calibrate");
    }
    double m = quantile(distances, 0.5);
    double p90 = quantile(distances, 0.9);
    if (!(p90 > m)) {
        fail("DegenerateQuantiles", "90th percentile does not exceed the median");
    }
    return {m, (p90 - m) / std::log(9.0)};
}

double transform_distance(double d, double m, double tau) {
    if (!(tau > 0)) fail("NonpositiveTau", "tau must be positive");
    return 1.0 / (1.0 + std::exp((d - m) / tau));
}

double squeeze(double y, int64_t n) {
    return (y * static_cast<double>(n - 1) + 0.5) / static_cast<double>(n);
}

std::vector<double> squeeze(std::vector<double> y, int64_t n) {
    for (double& v : y) v = squeeze(v, n);
    return y;
}

DesignMatrix standardize(const std::vector<ReleasePairObservation>& obs) {
    DesignMatrix d;
    const char* names[] = {"days", "commits", "changed_file_fraction"};
    auto value_of = [](const ReleasePairObservation& o, int j) {
        return j == 0 ? o.days : j == 1 ? o.commits : o.changed_file_fraction;
    };

    size_t n = obs.size();
    std::vector<int> kept;
    for (int j = 0; j < 3; ++j) {
        std::vector<double> col(n);
        for (size_t i = 0; i < n; ++i) col[i] = value_of(obs[i], j);
        double mean = sample_mean(col);
        double var = n > 1 ? sample_var(col) : 0.0;
        if (!(var > 0)) {
            d.warnings.push_back(std::string("ZeroVariance: ") + names[j]);
            continue;
        }
        kept.push_back(j);
        d.covariates.push_back(names[j]);
        d.means.push_back(mean);
        d.sds.push_back(std::sqrt(var));
    }

    d.x.resize(n);
    d.y.resize(n);
    d.project.resize(n);
    for (size_t i = 0; i < n; ++i) {
        d.y[i] = obs[i].y;
        d.x[i].resize(kept.size());
        for (size_t c = 0; c < kept.size(); ++c) {
            d.x[i][c] = (value_of(obs[i], kept[c]) - d.means[c]) / d.sds[c];
        }
        auto it = std::find(d.projects.begin(), d.projects.end(), obs[i].project);
        if (it == d.projects.end()) {
            d.project[i] = static_cast<int>(d.projects.size());
            d.projects.push_back(obs[i].project);
        } else {
            d.project[i] = static_cast<int>(it - d.projects.begin());
        }
    }
    return d;
}

// ---------------------------------------------------------------- sampler

namespace {

// parameter vector layout for k covariates, P projects
struct Layout {
    int k, P;
    int alpha_g() const { return 0; }
    int beta_g(int j) const { return 1 + j; }
    int log_sigma_alpha() const { return 1 + k; }
    int log_sigma(int j) const { return 2 + k + j; }
    int log_kappa() const { return 2 + 2 * k; }
    int z_alpha(int p) const { return 3 + 2 * k + p; }
    int z_beta(int p, int j) const { return 3 + 2 * k + P + p * k + j; }
    int dim() const { return 3 + 2 * k + P + P * k; }
};

double beta_loglik(double log_y, double log_1my, double mu, double kappa,
                   double lgamma_kappa) {
    double a = mu * kappa;
    double b = (1.0 - mu) * kappa;
    if (!(a > 0) || !(b > 0)) return kNegInf;
    return lgamma_kappa - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * log_y +
           (b - 1.0) * log_1my;
}

struct ChainResult {
    std::vector<std::vector<double>> draws; // draw -> theta
    double accept_rate = 0.0;
};

class ChainRunner {
public:
    ChainRunner(const DesignMatrix& d, const SamplerConfig& cfg, const Layout& lay,
                uint64_t seed)
        : d_(d), cfg_(cfg), lay_(lay), rng_(seed) {
        size_t n = d.rows();
        log_y_.resize(n);
        log_1my_.resize(n);
        for (size_t i = 0; i < n; ++i) {
            log_y_[i] = std::log(d.y[i]);
            log_1my_[i] = std::log1p(-d.y[i]);
        }
        rows_of_.resize(lay.P);
        for (size_t i = 0; i < n; ++i) rows_of_[d.project[i]].push_back(i);

        theta_.assign(lay.dim(), 0.0);
        theta_[lay.log_kappa()] = std::log(10.0);
        scale_.assign(lay.dim(), 0.5);
        iw_scale_.assign(2 * (lay.k + 1), 0.5);

        eta_.resize(n);
        ll_.resize(n);
        rebuild_rows();
    }

    ChainResult run() {
        ChainResult out;
        out.draws.reserve(cfg_.draws);
        int total = cfg_.warmup + cfg_.draws;
        std::vector<int> batch_accepts(lay_.dim(), 0);
        std::vector<int> iw_accepts(iw_scale_.size(), 0);
        int batch_index = 1;
        long long kept_accepts = 0, kept_proposals = 0;

        for (int iter = 0; iter < total; ++iter) {
            bool warm = iter < cfg_.warmup;
            for (int t = 0; t < lay_.dim(); ++t) {
                bool accepted = step(t);
                if (warm) {
                    batch_accepts[t] += accepted;
                } else {
                    kept_accepts += accepted;
                    ++kept_proposals;
                }
            }
            for (size_t mv = 0; mv < iw_scale_.size(); ++mv) {
                if (interweave(static_cast<int>(mv)) && warm) ++iw_accepts[mv];
            }
            if (warm && (iter + 1) % cfg_.adapt_batch == 0) {
                double delta = std::min(0.1, 1.0 / std::sqrt(static_cast<double>(batch_index)));
                for (int t = 0; t < lay_.dim(); ++t) {
                    double rate =
                        static_cast<double>(batch_accepts[t]) / cfg_.adapt_batch;
                    scale_[t] *= std::exp(rate > cfg_.target_accept ? delta : -delta);
                    batch_accepts[t] = 0;
                }
                for (size_t mv = 0; mv < iw_scale_.size(); ++mv) {
                    double rate = static_cast<double>(iw_accepts[mv]) / cfg_.adapt_batch;
                    iw_scale_[mv] *= std::exp(rate > cfg_.target_accept ? delta : -delta);
                    iw_accepts[mv] = 0;
                }
                ++batch_index;
            }
            // reparameterization moves leave eta fixed analytically but not
            // bit-exactly; refresh the caches now and then
            if ((iter + 1) % 128 == 0) rebuild_rows();
            if (!warm) out.draws.push_back(theta_);
        }
        out.accept_rate =
            kept_proposals ? static_cast<double>(kept_accepts) / kept_proposals : 0.0;
        return out;
    }

private:
    const DesignMatrix& d_;
    const SamplerConfig& cfg_;
    Layout lay_;
    Rng rng_;
    std::vector<double> log_y_, log_1my_;
    std::vector<std::vector<size_t>> rows_of_;
    std::vector<double> theta_, scale_, eta_, ll_;
    std::vector<double> iw_scale_;
    std::vector<size_t> all_rows_; // lazily filled scratch

    double sigma_alpha() const { return std::exp(theta_[lay_.log_sigma_alpha()]); }
    double sigma(int j) const { return std::exp(theta_[lay_.log_sigma(j)]); }
    double kappa() const { return std::exp(theta_[lay_.log_kappa()]); }

    double alpha_p(int p) const {
        return theta_[lay_.alpha_g()] + sigma_alpha() * theta_[lay_.z_alpha(p)];
    }
    double beta_pj(int p, int j) const {
        return theta_[lay_.beta_g(j)] + sigma(j) * theta_[lay_.z_beta(p, j)];
    }

    void rebuild_rows() {
        double lgk = std::lgamma(kappa());
        for (size_t i = 0; i < d_.rows(); ++i) {
            int p = d_.project[i];
            double eta = alpha_p(p);
            for (int j = 0; j < lay_.k; ++j) eta += beta_pj(p, j) * d_.x[i][j];
            eta_[i] = eta;
            ll_[i] = beta_loglik(log_y_[i], log_1my_[i], logistic(eta), kappa(), lgk);
        }
    }

    // log prior density of the single coordinate t at value v (additive
    // constants dropped; log-scale coordinates carry their Jacobian)
    double coord_prior(int t, double v) const {
        double sg = cfg_.prior_scale_global;
        if (t == lay_.alpha_g()) return -v * v / (2 * sg * sg);
        if (t >= lay_.beta_g(0) && t < lay_.beta_g(lay_.k)) return -v * v / (2 * sg * sg);
        if (t == lay_.log_sigma_alpha() ||
            (t >= lay_.log_sigma(0) && t < lay_.log_sigma(lay_.k))) {
            double s = cfg_.prior_scale_sigma, x = std::exp(v);
            return -x * x / (2 * s * s) + v;
        }
        if (t == lay_.log_kappa()) {
            double s = cfg_.prior_scale_kappa, x = std::exp(v);
            return -x * x / (2 * s * s) + v;
        }
        return -v * v / 2; // non-centered deviations are standard normal
    }

    // Which rows change when coordinate t moves, and the new eta for row i.
    bool step(int t) {
        double old = theta_[t];
        double v = old + scale_[t] * rng_.normal();

        const std::vector<size_t>* rows = nullptr;
        bool kappa_only = false;
        double d_alpha = 0.0;            // uniform eta shift
        int xcol = -1;                   // eta shift proportional to x[:,xcol]
        double xcoef = 0.0;
        int zproject = -1;

        if (t == lay_.alpha_g()) {
            d_alpha = v - old;
        } else if (t >= lay_.beta_g(0) && t < lay_.beta_g(lay_.k)) {
            xcol = t - lay_.beta_g(0);
            xcoef = v - old;
        } else if (t == lay_.log_sigma_alpha()) {
            // alpha_p shifts by (e^v - e^old) * z_alpha[p]; handled per row
            zproject = -2;
        } else if (t >= lay_.log_sigma(0) && t < lay_.log_sigma(lay_.k)) {
            xcol = t - lay_.log_sigma(0);
            zproject = -3;
        } else if (t == lay_.log_kappa()) {
            kappa_only = true;
        } else if (t >= lay_.z_alpha(0) && t < lay_.z_alpha(lay_.P)) {
            int p = t - lay_.z_alpha(0);
            rows = &rows_of_[p];
            d_alpha = sigma_alpha() * (v - old);
        } else {
            int idx = t - lay_.z_beta(0, 0);
            int p = idx / lay_.k;
            xcol = idx % lay_.k;
            rows = &rows_of_[p];
            xcoef = sigma(xcol) * (v - old);
        }

        double new_kappa = kappa_only ? std::exp(v) : kappa();
        double lgk = std::lgamma(new_kappa);

        auto eta_of = [&](size_t i) -> double {
            if (kappa_only) return eta_[i];
            if (zproject == -2) {
                return eta_[i] + (std::exp(v) - std::exp(old)) *
                                     theta_[lay_.z_alpha(d_.project[i])];
            }
            if (zproject == -3) {
                return eta_[i] + (std::exp(v) - std::exp(old)) *
                                     theta_[lay_.z_beta(d_.project[i], xcol)] *
                                     d_.x[i][xcol];
            }
            if (xcol >= 0) return eta_[i] + xcoef * d_.x[i][xcol];
            return eta_[i] + d_alpha;
        };

        double delta = coord_prior(t, v) - coord_prior(t, old);
        // evaluate affected rows; stash new values for write-back on accept
        static thread_local std::vector<std::pair<size_t, std::pair<double, double>>> updates;
        updates.clear();
        auto eval_row = [&](size_t i) {
            double eta = eta_of(i);
            double ll = beta_loglik(log_y_[i], log_1my_[i], logistic(eta), new_kappa, lgk);
            delta += ll - ll_[i];
            updates.emplace_back(i, std::make_pair(eta, ll));
        };
        if (rows) {
            for (size_t i : *rows) eval_row(i);
        } else {
            for (size_t i = 0; i < d_.rows(); ++i) eval_row(i);
        }

        if (!(delta > kNegInf) || std::log(rng_.uniform_open()) >= delta) return false;
        theta_[t] = v;
        for (const auto& [i, pair] : updates) {
            eta_[i] = pair.first;
            ll_[i] = pair.second;
            // accepted states keep every mu in (0,1) and kappa > 0
            assert(std::isfinite(ll_[i]));
        }
        return true;
    }

    // Likelihood-invariant reparameterization moves along the funnel
    // directions. Move 0..k: shear (g, z) -> (g + d, z - d/sigma), which keeps
    // every per-project coefficient fixed (Jacobian 1, only priors change).
    // Move k+1..2k+1: scale (log sigma, z) -> (log sigma + d, z * e^-d), same
    // invariance, log-Jacobian -d*P.
    bool interweave(int mv) {
        int k = lay_.k;
        double d = iw_scale_[mv] * rng_.normal();
        double accept;
        int g_idx, z0, stride;
        if (mv <= k) {
            if (mv == 0) {
                g_idx = lay_.alpha_g();
                z0 = lay_.z_alpha(0);
                stride = 1;
            } else {
                g_idx = lay_.beta_g(mv - 1);
                z0 = lay_.z_beta(0, mv - 1);
                stride = k;
            }
            double sigma = std::exp(
                theta_[mv == 0 ? lay_.log_sigma_alpha() : lay_.log_sigma(mv - 1)]);
            double g = theta_[g_idx], gn = g + d;
            double sg = cfg_.prior_scale_global;
            accept = (g * g - gn * gn) / (2 * sg * sg);
            double shift = d / sigma;
            for (int p = 0; p < lay_.P; ++p) {
                double z = theta_[z0 + p * stride], zn = z - shift;
                accept += (z * z - zn * zn) / 2;
            }
            if (!(accept > kNegInf) || std::log(rng_.uniform_open()) >= accept) return false;
            theta_[g_idx] = gn;
            for (int p = 0; p < lay_.P; ++p) theta_[z0 + p * stride] -= shift;
            return true;
        }
        int j = mv - (k + 1); // j == 0 is sigma_alpha, then per-covariate
        if (j == 0) {
            g_idx = lay_.log_sigma_alpha();
            z0 = lay_.z_alpha(0);
            stride = 1;
        } else {
            g_idx = lay_.log_sigma(j - 1);
            z0 = lay_.z_beta(0, j - 1);
            stride = k;
        }
        double th = theta_[g_idx], thn = th + d;
        double s = cfg_.prior_scale_sigma;
        double x = std::exp(th), xn = std::exp(thn);
        accept = (x * x - xn * xn) / (2 * s * s) + d; // half-normal + log-scale prior
        double factor = std::exp(-d);
        for (int p = 0; p < lay_.P; ++p) {
            double z = theta_[z0 + p * stride], zn = z * factor;
            accept += (z * z - zn * zn) / 2;
        }
        accept += -d * lay_.P; // log |det J| of z -> z * e^-d
        if (!(accept > kNegInf) || std::log(rng_.uniform_open()) >= accept) return false;
        theta_[g_idx] = thn;
        for (int p = 0; p < lay_.P; ++p) theta_[z0 + p * stride] *= factor;
        return true;
    }
};

std::vector<double> pick_column(const std::vector<std::vector<std::vector<double>>>& chains,
                                int param, bool exp_transform) {
    std::vector<double> out;
    for (const auto& chain : chains) {
        for (const auto& draw : chain) {
            out.push_back(exp_transform ? std::exp(draw[param]) : draw[param]);
        }
    }
    return out;
}

std::vector<std::vector<double>> per_chain_column(
    const std::vector<std::vector<std::vector<double>>>& chains, int param,
    bool exp_transform) {
    std::vector<std::vector<double>> out;
    for (const auto& chain : chains) {
        std::vector<double> col;
        col.reserve(chain.size());
        for (const auto& draw : chain) {
            col.push_back(exp_transform ? std::exp(draw[param]) : draw[param]);
        }
        out.push_back(std::move(col));
    }
    return out;
}

} // namespace

const ParamSummary& PosteriorSummary::param(const std::string& name) const {
    for (const ParamSummary& p : params) {
        if (p.name == name) return p;
    }
    fail("UnknownName", "no parameter named " + name);
}

PosteriorSummary fit_model(const DesignMatrix& data, const SamplerConfig& config) {
    if (config.chains < 4) {
        fail("ChainCountTooSmall", "need at least 4 chains, got " +
                                       std::to_string(config.chains));
    }
    if (config.draws < 1) fail("TooFewDraws", "need at least one kept draw");
    if (data.projects.size() < 2) {
        fail("TooFewProjects", "hierarchical model needs at least 2 projects");
    }
    for (size_t i = 0; i < data.rows(); ++i) {
        bool bad = !(data.y[i] > 0.0) || !(data.y[i] < 1.0) || !std::isfinite(data.y[i]);
        for (double x : data.x[i]) bad = bad || !std::isfinite(x);
        if (bad) {
            fail("NonFiniteLikelihood",
                 "row " + std::to_string(i) + ": y=" + std::to_string(data.y[i]) +
                     " must lie strictly in (0,1) with finite covariates");
        }
    }

    Layout lay{static_cast<int>(data.cols()), static_cast<int>(data.projects.size())};

    SplitMix64 seeder(config.seed);
    std::vector<uint64_t> chain_seeds;
    for (int c = 0; c < config.chains; ++c) chain_seeds.push_back(seeder.next());
    if (config.identical_chain_seeds) {
        std::fill(chain_seeds.begin(), chain_seeds.end(), chain_seeds.front());
    }

    std::vector<ChainResult> results(config.chains);
    std::vector<std::thread> workers;
    for (int c = 0; c < config.chains; ++c) {
        workers.emplace_back([&, c] {
            ChainRunner runner(data, config, lay, chain_seeds[c]);
            results[c] = runner.run();
        });
    }
    for (auto& w : workers) w.join();

    PosteriorSummary fit;
    fit.config = config;
    fit.covariates = data.covariates;
    fit.projects = data.projects;
    fit.warnings = data.warnings;
    for (const ChainResult& r : results) {
        fit.chains.push_back(r.draws);
        fit.accept_rate += r.accept_rate / config.chains;
    }

    fit.param_names.assign(lay.dim(), "");
    fit.param_names[lay.alpha_g()] = "alpha_g";
    for (int j = 0; j < lay.k; ++j) {
        fit.param_names[lay.beta_g(j)] = "beta_g[" + data.covariates[j] + "]";
        fit.param_names[lay.log_sigma(j)] = "log_sigma[" + data.covariates[j] + "]";
    }
    fit.param_names[lay.log_sigma_alpha()] = "log_sigma_alpha";
    fit.param_names[lay.log_kappa()] = "log_kappa";
    for (int p = 0; p < lay.P; ++p) {
        fit.param_names[lay.z_alpha(p)] = "z_alpha[" + data.projects[p] + "]";
        for (int j = 0; j < lay.k; ++j) {
            fit.param_names[lay.z_beta(p, j)] =
                "z_beta[" + data.projects[p] + "][" + data.covariates[j] + "]";
        }
    }

    auto summarize = [&](const std::string& name, int param, bool exp_transform) {
        std::vector<double> pooled = pick_column(fit.chains, param, exp_transform);
        auto [lo, hi] = hdi(pooled, 0.95);
        fit.params.push_back({name, sample_mean(pooled), lo, hi,
                              rhat(per_chain_column(fit.chains, param, exp_transform))});
    };
    summarize("alpha_g", lay.alpha_g(), false);
    for (int j = 0; j < lay.k; ++j) {
        summarize("beta_g[" + data.covariates[j] + "]", lay.beta_g(j), false);
    }
    summarize("sigma_alpha", lay.log_sigma_alpha(), true);
    for (int j = 0; j < lay.k; ++j) {
        summarize("sigma[" + data.covariates[j] + "]", lay.log_sigma(j), true);
    }
    summarize("kappa", lay.log_kappa(), true);
    return fit;
}

double rhat(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) fail("TooFewDraws", "rhat needs at least 2 chains");
    size_t len = chains.front().size();
    for (const auto& c : chains) len = std::min(len, c.size());
    if (len < 4) fail("TooFewDraws", "rhat needs at least 4 draws per chain");

    size_t n = len / 2;
    std::vector<double> means, vars;
    for (const auto& c : chains) {
        for (int half = 0; half < 2; ++half) {
            std::vector<double> seq(c.begin() + half * n, c.begin() + (half + 1) * n);
            means.push_back(sample_mean(seq));
            vars.push_back(sample_var(seq));
        }
    }
    double w = sample_mean(vars);
    if (!(w > 0)) fail("DegenerateVariance", "all within-sequence variance is zero");
    double nn = static_cast<double>(n);
    double b_over_n = sample_var(means); // = B/n
    double var_plus = (nn - 1.0) / nn * w + b_over_n;
    return std::sqrt(var_plus / w);
}

std::pair<double, double> hdi(std::vector<double> draws, double mass) {
    if (draws.size() < 20) fail("TooFewDraws", "hdi needs at least 20 draws");
    if (!(mass > 0.0) || mass > 1.0) fail("ParamValidation", "mass must be in (0,1]");
    std::sort(draws.begin(), draws.end());
    size_t n = draws.size();
    size_t w = static_cast<size_t>(
        std::ceil(mass * static_cast<double>(n) - 1e-12));
    w = std::max<size_t>(w, 2);
    w = std::min(w, n);
    size_t best = 0;
    double best_width = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + w <= n; ++i) {
        double width = draws[i + w - 1] - draws[i];
        if (width < best_width) {
            best_width = width;
            best = i;
        }
    }
    return {draws[best], draws[best + w - 1]};
}

PpcReport posterior_predictive_check(const PosteriorSummary& fit, const DesignMatrix& data,
                                     double rhat_threshold) {
    size_t total_draws = 0;
    for (const auto& c : fit.chains) total_draws += c.size();
    if (total_draws == 0) fail("TooFewDraws", "fit holds no draws");
    for (const ParamSummary& p : fit.params) {
        if (!(p.rhat <= rhat_threshold)) {
            fail("NotConverged", p.name + " has rhat " + std::to_string(p.rhat));
        }
    }

    Layout lay{static_cast<int>(data.cols()), static_cast<int>(data.projects.size())};
    std::vector<const std::vector<double>*> pool;
    for (const auto& c : fit.chains) {
        for (const auto& draw : c) pool.push_back(&draw);
    }
    size_t use = std::min<size_t>(pool.size(), 400);
    size_t stride = pool.size() / use;

    Rng rng(fit.config.seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<std::vector<double>> sim_deciles(9);
    for (size_t s = 0; s < use; ++s) {
        const std::vector<double>& th = *pool[s * stride];
        double sig_a = std::exp(th[lay.log_sigma_alpha()]);
        double kap = std::exp(th[lay.log_kappa()]);
        std::vector<double> y_rep(data.rows());
        for (size_t i = 0; i < data.rows(); ++i) {
            int p = data.project[i];
            double eta = th[lay.alpha_g()] + sig_a * th[lay.z_alpha(p)];
            for (int j = 0; j < lay.k; ++j) {
                double beta = th[lay.beta_g(j)] +
                              std::exp(th[lay.log_sigma(j)]) * th[lay.z_beta(p, j)];
                eta += beta * data.x[i][j];
            }
            double mu = logistic(eta);
            y_rep[i] = rng.beta(mu * kap, (1.0 - mu) * kap);
        }
        for (int q = 1; q <= 9; ++q) {
            sim_deciles[q - 1].push_back(quantile(y_rep, q / 10.0));
        }
    }

    PpcReport report;
    report.draws_used = static_cast<int>(use);
    for (int q = 1; q <= 9; ++q) {
        PpcDecile d;
        d.q = q / 10.0;
        d.observed = quantile(data.y, d.q);
        d.sim_lo = quantile(sim_deciles[q - 1], 0.025);
        d.sim_hi = quantile(sim_deciles[q - 1], 0.975);
        d.sim_mean = sample_mean(sim_deciles[q - 1]);
        d.inside = d.observed >= d.sim_lo && d.observed <= d.sim_hi;
        report.inside_count += d.inside;
        report.deciles.push_back(d);
    }
    return report;
}

// ---------------------------------------------------------------- file io

LoadedObservations load_observations(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("ParamValidation", "cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) fail("ParamValidation", "empty observations file");

    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ',')) {
            size_t a = field.find_first_not_of(" \t\r");
            size_t b = field.find_last_not_of(" \t\r");
            out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
        }
        return out;
    };

    std::vector<std::string> cols = split(header);
    auto col = [&](const std::string& name) -> int {
        auto it = std::find(cols.begin(), cols.end(), name);
        return it == cols.end() ? -1 : static_cast<int>(it - cols.begin());
    };
    int c_project = col("project"), c_y = col("y"), c_dist = col("distance");
    int c_days = col("days"), c_commits = col("commits"), c_frac = col("changed_file_fraction");
    if (c_project < 0 || (c_y < 0 && c_dist < 0) || c_days < 0 || c_commits < 0 ||
        c_frac < 0) {
        fail("ParamValidation",
             "header must name project, y or distance, days, commits, "
             "changed_file_fraction");
    }

    LoadedObservations loaded;
    std::vector<double> distances;
    std::string line;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<std::string> f = split(line);
        if (f.size() != cols.size()) {
            fail("ParamValidation", "line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(cols.size()) + " fields");
        }
        ReleasePairObservation o;
        o.project = f[c_project];
        try {
            o.days = std::stod(f[c_days]);
            o.commits = std::stod(f[c_commits]);
            o.changed_file_fraction = std::stod(f[c_frac]);
            if (c_y >= 0) {
                o.y = std::stod(f[c_y]);
            } else {
                distances.push_back(std::stod(f[c_dist]));
            }
        } catch (const std::exception&) {
            fail("ParamValidation", "line " + std::to_string(lineno) + ": bad number");
        }
        loaded.obs.push_back(std::move(o));
    }

    if (c_dist >= 0) {
        TauFit t = fit_tau(distances);
        int64_t n = static_cast<int64_t>(loaded.obs.size());
        for (size_t i = 0; i < loaded.obs.size(); ++i) {
            loaded.obs[i].y = squeeze(transform_distance(distances[i], t.m, t.tau), n);
        }
        loaded.tau = t;
    }
    return loaded;
}

std::string fit_report_text(const PosteriorSummary& fit) {
    std::ostringstream out;
    char buf[160];
    out << "hierarchical beta regression fit\n";
    snprintf(buf, sizeof buf, "chains %d  warmup %d  draws %d  seed %llu\n",
             fit.config.chains, fit.config.warmup, fit.config.draws,
             static_cast<unsigned long long>(fit.config.seed));
    out << buf;
    snprintf(buf, sizeof buf,
             "priors: global Normal(0,%g)  sigma halfNormal(%g)  kappa halfNormal(%g)\n",
             fit.config.prior_scale_global, fit.config.prior_scale_sigma,
             fit.config.prior_scale_kappa);
    out << buf;
    out << "covariates:";
    for (const auto& c : fit.covariates) out << " " << c;
    out << "\nprojects: " << fit.projects.size() << "\n";
    snprintf(buf, sizeof buf, "acceptance rate: %.3f\n", fit.accept_rate);
    out << buf;
    if (fit.warnings.empty()) {
        out << "warnings: none\n";
    } else {
        for (const auto& w : fit.warnings) out << "warning: " << w << "\n";
    }
    snprintf(buf, sizeof buf, "%-32s %12s %12s %12s %8s\n", "parameter", "mean",
             "hdi95_lo", "hdi95_hi", "rhat");
    out << buf;
    for (const ParamSummary& p : fit.params) {
        snprintf(buf, sizeof buf, "%-32s %12.6f %12.6f %12.6f %8.4f\n", p.name.c_str(),
                 p.mean, p.hdi_lo, p.hdi_hi, p.rhat);
        out << buf;
    }
    return out.str();
}

void write_draws_csv(const PosteriorSummary& fit, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("ParamValidation", "cannot write " + path);
    out << "chain,draw";
    for (const auto& name : fit.param_names) out << "," << name;
    out << "\n";
    char buf[32];
    for (size_t c = 0; c < fit.chains.size(); ++c) {
        for (size_t d = 0; d < fit.chains[c].size(); ++d) {
            out << c << "," << d;
            for (double v : fit.chains[c][d]) {
                snprintf(buf, sizeof buf, ",%.17g", v);
                out << buf;
            }
            out << "\n";
        }
    }
}

} // namespace binoracle
