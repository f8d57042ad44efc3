// Acceptance checks. Usage: acceptance <1..8|all>
// Prints one PASS/FAIL line per criterion (details indented beneath it) and
// exits non-zero when any requested criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "duprate/analysis.hpp"
#include "duprate/csv.hpp"
#include "duprate/estimators.hpp"
#include "duprate/graph.hpp"
#include "duprate/intervals.hpp"
#include "duprate/io.hpp"
#include "duprate/likelihood.hpp"
#include "duprate/sim_engine.hpp"
#include "duprate/stats.hpp"

namespace fs = std::filesystem;
using namespace duprate;
using intervals::ObservationRecord;

namespace {

const std::string kFixtures = DUPRATE_FIXTURES;
const std::string kCli = DUPRATE_CLI;

// Collects sub-check lines; the criterion passes when every check does.
struct Report {
    bool ok = true;
    std::vector<std::string> lines;

    void check(bool pass, const std::string& what) {
        ok = ok && pass;
        lines.push_back(std::string(pass ? "ok   " : "FAIL ") + what);
    }
    void note(const std::string& what) { lines.push_back("     " + what); }
};

std::string num(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << v;
    return s.str();
}

// ---- 1: simulator table --------------------------------------------------

constexpr double kHorizon = 300.0;
constexpr double kReportRate = 2.0;
constexpr double kDeathRate = 0.065;
constexpr double kDeathScale = 100.0;

// Two-dimensional type vectors; the reporting rate does not depend on them.
std::vector<double> theta_of(int k) {
    const double c = k - 2;
    return {c / 2.0, (c * c - 2.0) / 2.0};
}

sim::SimConfig table_config(const std::vector<double>& incident_rates, std::uint64_t seed) {
    sim::SimConfig cfg;
    cfg.horizon = kHorizon;
    cfg.seed = seed;
    for (std::size_t k = 0; k < incident_rates.size(); ++k) {
        sim::TypeSpec t;
        t.index = static_cast<int>(k);
        t.covariates = theta_of(static_cast<int>(k));
        t.incident_log_rate = std::log(incident_rates[k]);
        t.report_log_rate = std::log(kReportRate);
        t.death_base_rate = kDeathRate;
        t.death_scale = kDeathScale;
        cfg.types.push_back(t);
    }
    return cfg;
}

std::vector<ObservationRecord> observe(const std::vector<sim::IncidentTrace>& traces,
                                       const intervals::IntervalPolicy& policy) {
    intervals::BuildOptions opts;
    opts.policy = policy;
    opts.inputs.labels = {"type"};
    opts.standardize = false;
    return intervals::build_observations(io::traces_to_reports(traces), opts).records;
}

std::map<int, std::vector<ObservationRecord>> by_type(const std::vector<ObservationRecord>& records) {
    std::map<int, std::vector<ObservationRecord>> out;
    for (const auto& r : records) out[std::stoi(r.labels.at("type"))].push_back(r);
    return out;
}

const intervals::IntervalPolicy& correct_policy() {
    // Ends at death (closure) or at the end of the simulated window.
    static const auto p = intervals::IntervalPolicy::chicago(kHorizon, kHorizon, 0.0);
    return p;
}

Report criterion1() {
    Report rep;
    const std::vector<double> rates{1, 2, 3, 4, 5};
    const std::vector<double> published_naive{1.201, 2.394, 3.589, 4.788, 5.999};
    constexpr int kReplicates = 300;
    const auto cfg = table_config(rates, 20240501);

    std::vector<std::vector<double>> naive(5), mle(5), last(5);
    std::vector<double> regression0;
    for (int r = 0; r < kReplicates; ++r) {
        const auto traces = sim::simulate_system(cfg, r);
        auto correct = observe(traces, correct_policy());
        const auto wrong = by_type(observe(traces, intervals::IntervalPolicy::last_report(0.0)));
        const auto groups = by_type(correct);
        for (int k = 0; k < 5; ++k) {
            naive[k].push_back(estimators::naive_rate(sim::summarize(traces, k).reports, kHorizon));
            mle[k].push_back(estimators::mle_rate(groups.at(k)).rate);
            last[k].push_back(estimators::mle_rate(wrong.at(k)).rate);
        }
        for (auto& rec : correct) {
            const auto th = theta_of(std::stoi(rec.labels.at("type")));
            rec.covariates = {{"theta1", th[0]}, {"theta2", th[1]}};
        }
        estimators::ModelSpec spec;
        spec.design.covariates = {"theta1", "theta2"};
        spec.flat_priors = true;
        const auto fit = estimators::fit_model(spec, correct);
        const auto th = theta_of(0);
        regression0.push_back(std::exp(fit.estimate("Intercept") + fit.estimate("theta1") * th[0] +
                                       fit.estimate("theta2") * th[1]));
    }

    for (int k = 0; k < 5; ++k) {
        const double n = stats::mean(naive[k]), m = stats::mean(mle[k]), l = stats::mean(last[k]);
        rep.check(std::abs(n / published_naive[k] - 1.0) <= 0.05,
                  "Lambda=" + num(rates[k], 0) + " naive mean " + num(n) + " vs " + num(published_naive[k], 3) + " (+-5%)");
        rep.check(m >= 1.9 && m <= 2.1, "Lambda=" + num(rates[k], 0) + " MLE mean " + num(m) + " in [1.9, 2.1]");
        rep.check(l >= 7.5 && l <= 10.5,
                  "Lambda=" + num(rates[k], 0) + " last-report MLE mean " + num(l) + " in [7.5, 10.5]");
    }
    const double sd_reg = stats::sd(regression0), sd_mle = stats::sd(mle[0]);
    rep.check(sd_reg < sd_mle, "Lambda=1 regression sd " + num(sd_reg) + " < MLE sd " + num(sd_mle) +
                                   " (regression mean " + num(stats::mean(regression0)) + ")");
    rep.note(std::to_string(kReplicates) + " replicates");
    return rep;
}

// ---- 2: contextualized delays ---------------------------------------------

Report criterion2() {
    Report rep;
    const auto fit = io::read_coefficients(kFixtures + "/published_coefficients.csv");
    const auto cfg = io::load_json(kFixtures + "/contextualize.json")["contextualize"];
    const auto stats = io::parse_standardization(cfg["standardization"]);
    const std::vector<double> published{2.2, 4.3, 15.9, 30.7, 111.3, 221.2};
    for (std::size_t i = 0; i < published.size(); ++i) {
        const auto& p = cfg["profiles"][i];
        const auto profile = io::parse_profile(p, "profiles[" + std::to_string(i) + "]");
        const double d = analysis::expected_delay(fit, profile, &stats).mean_delay;
        rep.check(std::abs(d / published[i] - 1.0) <= 0.02,
                  p["name"].get<std::string>() + ": " + num(d) + " vs " + num(published[i], 1) + " (+-2%)");
    }
    return rep;
}

// ---- 3: cumulative association ---------------------------------------------

Report criterion3() {
    Report rep;
    const std::vector<double> coefs{-0.014, 0.058, -0.047, 0.042, 0.086};
    const std::vector<double> profile{1, -1, 0.5, -0.5, 0.5};
    const double score = analysis::cumulative_association(coefs, profile);
    rep.check(std::abs(score - -0.0735) <= 1e-6, "score " + num(score, 8) + " vs -0.0735 (+-1e-6)");
    return rep;
}

// ---- 4: identification ------------------------------------------------------

Report criterion4() {
    Report rep;
    const std::vector<double> rates{1, 2, 3, 4, 5};
    const auto cfg = table_config(rates, 777);
    const auto traces = sim::simulate_system(cfg, 0);
    const auto groups = by_type(observe(traces, correct_policy()));
    std::vector<double> naive;
    std::vector<estimators::RateEstimate> mle;
    for (int k = 0; k < 5; ++k) {
        naive.push_back(estimators::naive_rate(sim::summarize(traces, k).reports, kHorizon));
        mle.push_back(estimators::mle_rate(groups.at(k)));
        rep.note("Lambda=" + num(rates[k], 0) + " naive " + num(naive[k]) + " MLE " + num(mle[k].rate) + " (se " +
                 num(mle[k].standard_error) + ")");
    }
    const auto [lo, hi] = std::minmax_element(naive.begin(), naive.end());
    rep.check(*hi / *lo > 2.0, "naive range ratio " + num(*hi / *lo) + " > 2");
    double worst = 0.0;
    for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b) {
            const double se = std::hypot(mle[a].standard_error, mle[b].standard_error);
            worst = std::max(worst, std::abs(mle[a].rate - mle[b].rate) / se);
        }
    rep.check(worst <= 3.0, "largest pairwise MLE gap " + num(worst, 2) + " standard errors (<= 3)");
    return rep;
}

// ---- 5: observed-incident rate ---------------------------------------------

Report criterion5() {
    Report rep;
    struct Case {
        std::string name;
        double incident_rate, report_rate;
        sim::DurationDistribution lifetime;
    };
    const std::vector<Case> cases{
        {"point mass T=1", 2.0, 2.0, sim::DurationDistribution::point_mass(1.0)},
        {"point mass T=0.3", 5.0, 1.0, sim::DurationDistribution::point_mass(0.3)},
        {"exponential mean 1", 1.0, 2.0, sim::DurationDistribution::exponential(1.0)},
        {"exponential mean 4", 3.0, 0.5, sim::DurationDistribution::exponential(0.25)},
    };
    std::uint64_t seed = 5150;
    for (const auto& c : cases) {
        const double oracle = sim::steady_state_observed_rate(c.incident_rate, c.report_rate, c.lifetime);
        const auto est = sim::simulate_observed_incident_rate(c.incident_rate, c.report_rate, c.lifetime, 20000.0,
                                                              100.0, seed++);
        const double z = (est.rate - oracle) / est.standard_error;
        rep.check(std::abs(z) <= 3.0, c.name + ": simulated " + num(est.rate) + " vs " + num(oracle) + " (z=" +
                                          num(z, 2) + ")");
    }
    return rep;
}

// ---- 6: numerical suite ----------------------------------------------------

likelihood::CountData random_counts(std::mt19937_64& rng, int n, int p) {
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.2, 3.0);
    likelihood::CountData d;
    d.X.resize(n, p);
    d.counts.resize(n);
    d.log_exposure.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) d.X(i, j) = j == 0 ? 1.0 : 0.7 * z(rng);
        d.log_exposure(i) = std::log(u(rng));
        d.counts(i) = rng() % 3 == 0 ? 0 : std::poisson_distribution<int>(1.5)(rng);
    }
    return d;
}

// Worst relative gap between analytic and central-difference derivatives.
template <typename F>
double fd_error(F f, const Eigen::VectorXd& x, bool check_hessian) {
    const auto e = f(x, check_hessian);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(x(k)));
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        const auto ep = f(xp, false), em = f(xm, false);
        const double g = (ep.value - em.value) / (2 * h);
        worst = std::max(worst, std::abs(g - e.gradient(k)) / std::max(1.0, std::abs(g)));
        if (check_hessian) {
            const Eigen::VectorXd col = (ep.gradient - em.gradient) / (2 * h);
            for (Eigen::Index j = 0; j < x.size(); ++j)
                worst = std::max(worst, std::abs(col(j) - e.hessian(j, k)) / std::max(1.0, std::abs(col(j))));
        }
    }
    return worst;
}

graph::SpatialGraph random_graph(std::mt19937_64& rng, int n) {
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i) labels.push_back("r" + std::to_string(i));
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 1; i < n; ++i) edges.emplace_back(labels[rng() % i], labels[i]);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng() % 4 == 0) edges.emplace_back(labels[i], labels[j]);
    return graph::SpatialGraph::from_edges(labels, edges);
}

Report criterion6() {
    Report rep;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z;
    double fd_pois = 0, fd_zip = 0, fd_pen = 0, zip_gap = 0, shift_gap = 0, sum_gap = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 1 + int(rng() % 5);
        const auto data = random_counts(rng, 60, p);
        Eigen::VectorXd beta(p);
        for (auto& b : beta) b = 0.5 * z(rng);
        fd_pois = std::max(fd_pois, fd_error([&](const Eigen::VectorXd& x, bool h) {
            return likelihood::poisson_loglik(x, data, h);
        }, beta, true));
        Eigen::VectorXd params(p + 1);
        params << beta, 1.5 * z(rng);
        fd_zip = std::max(fd_zip, fd_error([&](const Eigen::VectorXd& x, bool h) {
            return likelihood::zip_loglik(x, data, h);
        }, params, true));

        params(p) = -std::numeric_limits<double>::infinity();
        zip_gap = std::max(zip_gap, std::abs(likelihood::zip_loglik(params, data, false).value -
                                             likelihood::poisson_loglik(beta, data, false).value));

        const int n = 2 + int(rng() % 9);
        graph::PenaltySpec pen{"tract", random_graph(rng, n), 0.5 + 0.05 * double(rng() % 100)};
        Eigen::VectorXd b(n);
        for (auto& v : b) v = z(rng);
        fd_pen = std::max(fd_pen, fd_error([&](const Eigen::VectorXd& x, bool) {
            const auto pv = graph::graph_penalty(std::span(x.data(), x.size()), pen.graph.labels(), pen);
            return likelihood::Evaluation{pv.value, pv.gradient, {}};
        }, b, false));
        Eigen::VectorXd moved = b.array() + 10.0 * z(rng);
        const double v0 = graph::graph_penalty(std::span(b.data(), b.size()), pen.graph.labels(), pen).value;
        const double v1 = graph::graph_penalty(std::span(moved.data(), moved.size()), pen.graph.labels(), pen).value;
        shift_gap = std::max(shift_gap, std::abs(v1 - v0));

        // Sum-zero factors: reconstructed levels of every fit sum to zero.
        std::vector<ObservationRecord> recs;
        const int levels = 2 + int(rng() % 6);
        for (int i = 0; i < 40; ++i) {
            ObservationRecord r;
            r.incident_id = std::to_string(i);
            r.end = 0.5 + double(rng() % 8) / 4.0;
            r.m_tilde = rng() % 4;
            r.labels["region"] = "g" + std::to_string(i % levels);
            r.labels["kind"] = i % 3 ? "a" : "b";
            recs.push_back(r);
        }
        estimators::ModelSpec spec;
        spec.design.factors = {{"region", design::Encoding::SumZero, {}, {}},
                               {"kind", design::Encoding::SumZero, {}, {}}};
        spec.zero_inflation = trial % 2 == 1;
        const auto fit = estimators::fit_model(spec, recs);
        for (const auto& block : fit.layout.blocks) {
            if (block.kind != design::Block::Kind::Factor) continue;
            double s = 0.0;
            for (std::size_t k = 0; k < block.full_size; ++k) s += fit.coefficients[block.full_offset + k].estimate;
            sum_gap = std::max(sum_gap, std::abs(s));
        }
    }
    rep.check(fd_pois < 1e-6, "Poisson gradient/Hessian vs finite differences: " + num(fd_pois, 10) + " < 1e-6");
    rep.check(fd_zip < 1e-6, "ZIP gradient/Hessian vs finite differences: " + num(fd_zip, 10) + " < 1e-6");
    rep.check(fd_pen < 1e-6, "graph penalty gradient vs finite differences: " + num(fd_pen, 10) + " < 1e-6");
    rep.check(zip_gap <= 1e-12, "ZIP at gamma=0 minus Poisson: " + num(zip_gap, 15) + " <= 1e-12");
    rep.check(shift_gap <= 1e-12, "graph penalty under a common shift: " + num(shift_gap, 15) + " <= 1e-12");
    rep.check(sum_gap <= 1e-8, "sum-zero coefficient sums: " + num(sum_gap, 12) + " <= 1e-8");
    rep.note("100 random instances each");
    return rep;
}

// ---- 7: simulate, build, fit -----------------------------------------------

sim::ReportLogSpec recovery_spec(std::size_t incidents, std::uint64_t seed) {
    sim::ReportLogSpec s;
    s.incidents = incidents;
    s.intercept = -1.0;
    s.covariate_names = {"x1", "x2", "x3", "x4", "x5", "x6"};
    s.covariate_coefs = {0.3, -0.2, 0.1, 0.5, -0.4, 0.05};
    s.zero_inflation = 0.4;
    s.span_days = 365.0;
    s.inspection_rate = 0.2;
    s.workorder_rate = 0.5;
    s.seed = seed;
    return s;
}

estimators::FitResult recovery_fit(const sim::ReportLogSpec& s) {
    intervals::BuildOptions opts;
    opts.policy = intervals::IntervalPolicy::nyc(100.0, 0.1);
    opts.inputs.covariates = s.covariate_names;
    opts.standardize = false;
    const auto built = intervals::build_observations(io::synthetic_to_reports(sim::simulate_report_log(s), s), opts);
    estimators::ModelSpec spec;
    spec.design.covariates = s.covariate_names;
    spec.zero_inflation = true;
    return estimators::fit_model(spec, built.records);
}

std::vector<std::pair<std::string, double>> truth_of(const sim::ReportLogSpec& s) {
    std::vector<std::pair<std::string, double>> t{{"Intercept", s.intercept}};
    for (std::size_t k = 0; k < s.covariate_names.size(); ++k) t.emplace_back(s.covariate_names[k], s.covariate_coefs[k]);
    t.emplace_back(estimators::kZeroInflationName, s.zero_inflation);
    return t;
}

Report criterion7() {
    Report rep;
    const auto big = recovery_spec(50000, 70000);
    const auto fit = recovery_fit(big);
    for (const auto& [name, value] : truth_of(big)) {
        const auto* c = fit.find(name);
        const double z = (c->estimate - value) / c->sd;
        rep.check(std::abs(z) <= 3.0, name + ": " + num(c->estimate) + " (sd " + num(c->sd) + ") vs " + num(value, 3) +
                                          ", z=" + num(z, 2));
    }

    constexpr int kReplicates = 500;
    std::size_t covered = 0, total = 0;
    for (int r = 0; r < kReplicates; ++r) {
        const auto small = recovery_spec(400, 71000 + r);
        const auto f = recovery_fit(small);
        for (const auto& [name, value] : truth_of(small)) {
            const auto* c = f.find(name);
            covered += c->lower <= value && value <= c->upper;
            ++total;
        }
    }
    const double coverage = double(covered) / double(total);
    rep.check(coverage >= 0.93 && coverage <= 0.97,
              "95% Laplace coverage " + num(coverage) + " over " + std::to_string(kReplicates) + " replicates x " +
                  std::to_string(total / kReplicates) + " parameters, in [0.93, 0.97]");
    return rep;
}

// ---- 8: CLI determinism ----------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& args, const fs::path& out) {
    const std::string cmd = "'" + kCli + "' " + args + " --out '" + out.string() + "' 2>/dev/null";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

// Runs the whole pipeline into `root`; returns false when a command fails.
bool pipeline(const fs::path& root, Report& rep) {
    const auto cfg = root / "config.json";
    std::ofstream(cfg) << R"({
  "seed": 42,
  "simulate": {"horizon_days": 60, "replicates": 2, "death_base_rate": 0.065, "death_scale": 100,
               "write_reports": true,
               "types": [{"incident_rate": 1, "report_rate": 2}, {"incident_rate": 3, "report_rate": 2}]},
  "report_log": {"incidents": 400, "intercept": -1.0, "covariates": {"x1": 0.3, "x2": -0.2},
                 "factors": {"borough": {"Bronx": 0.1, "Queens": -0.1, "Manhattan": 0.3}},
                 "zero_inflation": 0.3},
  "calibrate": {"target_fraction": 0.187, "report_rate": 2, "horizon_days": 60, "replicates": 2,
                "tolerance": 0.02},
  "build": {"variant": "nyc", "covariates": ["x1", "x2"], "labels": ["borough"]},
  "fit": {"covariates": ["x1", "x2"], "factors": [{"name": "borough"}], "zero_inflation": true},
  "sample": {"chains": 2, "warmup": 200, "draws": 200},
  "ppc": {"draws": 20},
  "validate": {"bins": 5},
  "delays": {"group_by": "borough"},
  "contextualize": {"window_days": 10, "profiles": [
      {"name": "queens", "levels": {"borough": "Queens"}, "covariates": {"x1": 1.0, "x2": 0.0}, "standardized": true}]}
})";
    {
        std::ofstream pairs(root / "pairs.csv");
        pairs << "predicted,observed\n";
        for (int i = 0; i < 40; ++i) pairs << 1.0 + i * 0.25 << ',' << 1.0 + ((i * 7) % 40) * 0.25 << '\n';
    }
    const std::string c = "--config '" + cfg.string() + "'";
    const auto o = [&](const char* sub) { return root / sub; };
    const std::string obs = " --observations '" + (o("build") / "observations.csv").string() + "'";
    const std::string fit = " --fit '" + (o("fit") / "coefficients.csv").string() + "'";
    const std::vector<std::pair<std::string, std::string>> steps{
        {"simulate", "simulate " + c},
        {"calibrate", "calibrate " + c},
        {"build", "build " + c + " --reports '" + (o("simulate") / "reports.csv").string() + "'"},
        {"fit", "fit " + c + obs},
        {"sample", "sample " + c + obs},
        {"ppc", "ppc " + c + obs + fit},
        {"validate", "validate " + c + " --pairs '" + (root / "pairs.csv").string() + "'"},
        {"delays", "delays " + c + obs + fit},
        {"contextualize", "contextualize " + c + fit},
    };
    bool ok = true;
    for (const auto& [name, args] : steps) {
        const int status = run(args, o(name.c_str()));
        if (status != 0) {
            rep.check(false, name + " exited with status " + std::to_string(status) + " in " + root.string());
            ok = false;
        }
    }
    return ok;
}

std::map<std::string, std::string> digests(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = io::sha256_hex(slurp(e.path()));
    return out;
}

Report criterion8() {
    Report rep;
    const auto base = fs::temp_directory_path() / ("duprate_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(base);
    const auto a = base / "a", b = base / "b";
    fs::create_directories(a);
    fs::create_directories(b);
    if (!pipeline(a, rep) || !pipeline(b, rep)) return rep;
    const auto da = digests(a), db = digests(b);
    rep.check(da.size() == db.size() && da.size() > 10, std::to_string(da.size()) + " output files per run");
    std::map<std::string, std::pair<int, int>> per_command;
    for (const auto& [path, hash] : da) {
        if (path == "config.json" || path == "pairs.csv") continue;
        const std::string command = path.substr(0, path.find('/'));
        auto it = db.find(path);
        const bool same = it != db.end() && it->second == hash;
        auto& [n, match] = per_command[command];
        ++n;
        match += same;
        if (!same) rep.note("differs: " + path);
    }
    for (const auto& [command, counts] : per_command)
        rep.check(counts.first == counts.second,
                  command + ": " + std::to_string(counts.second) + "/" + std::to_string(counts.first) +
                      " files byte-identical (SHA-256)");
    fs::remove_all(base);
    return rep;
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<std::string, std::function<Report()>>> criteria{
        {1, {"simulator table: naive bias, MLE and regression recovery", criterion1}},
        {2, {"contextualized delays from published coefficients", criterion2}},
        {3, {"cumulative association worked example", criterion3}},
        {4, {"identification: naive varies with incident rate, MLE does not", criterion4}},
        {5, {"steady-state observed-incident rate", criterion5}},
        {6, {"numerical correctness suite", criterion6}},
        {7, {"simulate, build, fit round trip and interval coverage", criterion7}},
        {8, {"CLI determinism", criterion8}},
    };
    const std::string which = argc > 1 ? argv[1] : "all";
    std::vector<int> selected;
    if (which == "all") {
        for (const auto& [k, _] : criteria) selected.push_back(k);
    } else {
        const int k = std::atoi(which.c_str());
        if (!criteria.count(k)) {
            std::cerr << "usage: acceptance <1..8|all>\n";
            return 2;
        }
        selected.push_back(k);
    }
    bool all_ok = true;
    for (int k : selected) {
        const auto& [title, fn] = criteria.at(k);
        Report rep;
        try {
            rep = fn();
        } catch (const std::exception& e) {
            rep.check(false, std::string("exception: ") + e.what());
        }
        std::cout << (rep.ok ? "PASS" : "FAIL") << " criterion " << k << ": " << title << '\n';
        for (const auto& line : rep.lines) std::cout << "    " << line << '\n';
        all_ok = all_ok && rep.ok;
    }
    return all_ok ? 0 : 1;
}
