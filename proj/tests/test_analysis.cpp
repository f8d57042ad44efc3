#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "duprate/analysis.hpp"

using namespace duprate;
using namespace duprate::analysis;
using duprate::estimators::FitResult;
using duprate::intervals::ObservationRecord;

namespace {

FitResult fit_of(std::vector<std::pair<std::string, double>> coefs,
                 std::map<std::string, std::string> refs = {}, std::optional<double> gamma = {}) {
    FitResult f;
    for (auto& [n, v] : coefs) f.coefficients.push_back({n, v});
    f.reference_levels = std::move(refs);
    if (gamma) {
        f.zero_inflation = gamma;
        f.coefficients.push_back({estimators::kZeroInflationName, *gamma});
    }
    return f;
}

// Zero-inflated Poisson base model fitted to the NYC data.
FitResult published_fit() {
    return fit_of({{"Intercept", -3.229},
                   {"category[Hazard]", 1.418},
                   {"category[Illegal Tree Damage]", 0.224},
                   {"category[Prune]", -0.087},
                   {"category[Remove Tree]", 0.034},
                   {"category[Root/Sewer/Sidewalk]", -1.589},
                   {"borough[Bronx]", -0.051},
                   {"borough[Brooklyn]", -0.382},
                   {"borough[Manhattan]", 0.438},
                   {"borough[Queens]", -0.249},
                   {"borough[Staten Island]", 0.245},
                   {"condition[Dead]", -0.338},
                   {"condition[Fair]", -0.168},
                   {"condition[Good/Excellent]", -0.274},
                   {"risk", 0.240},
                   {"log_dbh", -0.035}},
                  {{"condition", "Poor"}}, 0.661);
}

intervals::StandardizationStats published_stats() {
    intervals::StandardizationStats s;
    s.entries.push_back({"risk", 6.4915, 2.1788, false});
    return s;
}

CovariateProfile tree(const std::string& category, const std::string& condition, double risk,
                      const std::string& borough) {
    CovariateProfile p;
    p.levels = {{"category", category}, {"condition", condition}, {"borough", borough}};
    p.covariates = {{"risk", (risk - 6.4915) / 2.1788}, {"log_dbh", 0.0}};
    p.standardized = true;
    return p;
}

double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = double(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

double median_oracle(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("expected delay") {
    const auto fit = published_fit();
    SUBCASE("published worked example: hazard in Manhattan") {
        const auto d = expected_delay(fit, tree("Hazard", "Poor", 12, "Manhattan"), nullptr);
        CHECK(std::abs(d.mean_delay - 2.2) < 0.05);
        // Same value with the raw risk score and the standardization stats.
        auto raw = tree("Hazard", "Poor", 12, "Manhattan");
        raw.standardized = false;
        raw.covariates = {{"risk", 12.0}, {"log_dbh", 0.0}};
        intervals::StandardizationStats stats = published_stats();
        stats.entries.push_back({"log_dbh", 0.0, 1.0, false});
        CHECK(expected_delay(fit, raw, &stats).mean_delay == doctest::Approx(d.mean_delay).epsilon(1e-12));
        CHECK(d.rate * d.mean_delay == doctest::Approx(1.0));
    }
    SUBCASE("root damage in Queens") {
        const auto d = expected_delay(fit, tree("Root/Sewer/Sidewalk", "Fair", 5, "Queens"), nullptr);
        CHECK(std::abs(d.mean_delay - 221.2) < 2.0);
    }
    SUBCASE("zero coefficients give one day") {
        const auto zero = fit_of({{"Intercept", 0.0}, {"x", 0.0}});
        CovariateProfile p;
        p.covariates = {{"x", 3.0}};
        p.standardized = true;
        CHECK(expected_delay(zero, p, nullptr).mean_delay == 1.0);
    }
    SUBCASE("unseen level and missing covariates fail") {
        CHECK_THROWS_AS(expected_delay(fit, tree("Hazard", "Poor", 12, "Atlantis"), nullptr), AnalysisError);
        auto p = tree("Hazard", "Poor", 12, "Queens");
        p.covariates.erase("risk");
        CHECK_THROWS_AS(expected_delay(fit, p, nullptr), AnalysisError);
    }
    SUBCASE("delay decreases in a covariate with a positive coefficient") {
        double prev = std::numeric_limits<double>::infinity();
        for (double risk = 0; risk <= 12; risk += 1) {
            const double d = expected_delay(fit, tree("Prune", "Dead", risk, "Bronx"), nullptr).mean_delay;
            CHECK(d < prev);
            prev = d;
        }
    }
    SUBCASE("window adds the truncated mean") {
        const auto d = expected_delay(fit, tree("Hazard", "Poor", 12, "Manhattan"), nullptr, 10.0);
        REQUIRE(d.conditional_mean);
        CHECK(*d.conditional_mean == doctest::Approx(conditional_mean_delay(d.rate, 10.0)));
    }
}

TEST_CASE("conditional mean delay") {
    CHECK(conditional_mean_delay(0.1, 10.0) == doctest::Approx(4.180).epsilon(1e-3));
    CHECK(conditional_mean_delay(1e6, 10.0) < 1e-5);
    CHECK(conditional_mean_delay(1e-14, 10.0) == 5.0);
    CHECK(conditional_mean_delay(1e-9, 10.0) == doctest::Approx(5.0).epsilon(1e-8));

    // Inverse-CDF sampling of the truncated exponential.
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double lambda = 0.1, W = 10.0, mass = 1.0 - std::exp(-lambda * W);
    double sum = 0.0;
    const int n = 10'000'000;
    for (int i = 0; i < n; ++i) sum += -std::log1p(-u(rng) * mass) / lambda;
    CHECK(std::abs(sum / n - conditional_mean_delay(lambda, W)) < 4e-3);
    CHECK(std::abs(conditional_mean_delay_mc(lambda, W, 1'000'000, 3) - conditional_mean_delay(lambda, W)) < 1e-2);

    double prev = std::numeric_limits<double>::infinity();
    for (double l : {0.001, 0.01, 0.1, 0.5, 1.0, 5.0, 50.0}) {
        for (double w : {0.1, 1.0, 10.0, 100.0}) {
            // Beyond l * w of about 30 the gap to 1/l is below one ulp.
            if (l * w < 30.0)
                CHECK(conditional_mean_delay(l, w) < std::min(1.0 / l, w));
            else
                CHECK(conditional_mean_delay(l, w) <= std::min(1.0 / l, w));
        }
        const double v = conditional_mean_delay(l, 10.0);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("cumulative association") {
    const std::vector<double> coefs{-0.014, 0.058, -0.047, 0.042, 0.086};
    const std::vector<double> profile{1, -1, 0.5, -0.5, 0.5};
    CHECK(std::abs(cumulative_association(coefs, profile) - -0.0735) < 1e-6);
    CHECK(cumulative_association(coefs, std::vector<double>(5, 0.0)) == 0.0);
    CHECK_THROWS(cumulative_association(coefs, std::vector<double>(4, 1.0)));

    std::mt19937_64 rng(18);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p(5);
        double oracle = 0.0;
        for (std::size_t k = 0; k < 5; ++k) {
            p[k] = z(rng);
            oracle += coefs[k] * p[k];
        }
        CHECK(std::abs(cumulative_association(coefs, p) - oracle) < 1e-12);
    }

    const auto fit = fit_of({{"Intercept", 1.0}, {"a", 0.5}, {"b", -2.0}});
    CHECK(cumulative_association(fit, {{"a", 2.0}, {"b", 1.0}}) == doctest::Approx(-1.0));
    CHECK_THROWS(cumulative_association(fit, {{"zzz", 1.0}}));
}

TEST_CASE("posterior predictive check") {
    std::vector<ObservationRecord> recs;
    std::mt19937_64 rng(19);
    for (int i = 0; i < 300; ++i) {
        ObservationRecord r;
        r.end = 0.5 + (i % 5);
        r.m_tilde = std::poisson_distribution<int>(r.end * 0.8)(rng);
        recs.push_back(r);
    }
    SUBCASE("certain zero inflation predicts only zeros") {
        const auto c = posterior_predictive(fit_of({{"Intercept", 0.0}}, {}, 1.0), recs, 10, 1);
        CHECK(c.predicted[0] == recs.size() * 10);
    }
    SUBCASE("histogram totals and means") {
        const auto fit = fit_of({{"Intercept", std::log(0.8)}}, {}, 0.2);
        const auto c = posterior_predictive(fit, recs, 200, 2, 6);
        CHECK(std::accumulate(c.predicted.begin(), c.predicted.end(), std::uint64_t{0}) == recs.size() * 200);
        CHECK(std::accumulate(c.observed.begin(), c.observed.end(), std::uint64_t{0}) == recs.size());
        CHECK(c.predicted.size() == 7);
        CHECK(c.simulated_mean == doctest::Approx(c.analytic_mean).epsilon(0.02));
        CHECK(c.analytic_mean == doctest::Approx(0.8 * 0.8 * 2.5).epsilon(1e-12));
        const auto again = posterior_predictive(fit, recs, 200, 2, 6);
        CHECK(again.predicted == c.predicted);
    }
}

TEST_CASE("binned validation") {
    std::mt19937_64 rng(20);
    std::normal_distribution<double> z;
    const std::size_t n = 20000;
    std::vector<double> pred(n), obs(n);
    for (std::size_t i = 0; i < n; ++i) pred[i] = z(rng);

    SUBCASE("identical values") {
        const auto b = binned_validation(pred, pred, 30);
        CHECK(b.bin_correlation == doctest::Approx(1.0).epsilon(1e-12));
        for (const auto& bin : b.bins) CHECK(bin.mean_predicted == doctest::Approx(bin.mean_observed));
    }
    SUBCASE("additive noise of equal variance") {
        for (std::size_t i = 0; i < n; ++i) obs[i] = pred[i] + z(rng);
        const auto b = binned_validation(pred, obs, 30);
        CHECK(std::abs(b.individual_correlation - 1.0 / std::sqrt(2.0)) < 0.02);
        CHECK(b.individual_correlation == doctest::Approx(pearson_oracle(pred, obs)).epsilon(1e-10));
        CHECK(b.bin_correlation > b.individual_correlation);
        std::vector<double> bp, bo;
        std::size_t total = 0;
        for (const auto& bin : b.bins) {
            bp.push_back(bin.mean_predicted);
            bo.push_back(bin.mean_observed);
            total += bin.count;
            CHECK(std::isfinite(bin.mean_observed));
        }
        CHECK(total == n);
        CHECK(b.bin_correlation == doctest::Approx(pearson_oracle(bp, bo)).epsilon(1e-10));

        // Permuting the pairs leaves every bin unchanged.
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<double> pp(n), po(n);
        for (std::size_t i = 0; i < n; ++i) {
            pp[i] = pred[idx[i]];
            po[i] = obs[idx[i]];
        }
        const auto shuffled = binned_validation(pp, po, 30);
        for (std::size_t k = 0; k < b.bins.size(); ++k) {
            CHECK(shuffled.bins[k].mean_predicted == b.bins[k].mean_predicted);
            CHECK(shuffled.bins[k].mean_observed == b.bins[k].mean_observed);
        }
    }
    SUBCASE("anti-sorted pairs") {
        for (std::size_t i = 0; i < n; ++i) obs[i] = -pred[i];
        CHECK(binned_validation(pred, obs, 30).bin_correlation == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("too many bins") {
        CHECK_THROWS(binned_validation(std::vector<double>{1, 2}, std::vector<double>{1, 2}, 3));
    }
}

TEST_CASE("end-to-end delays") {
    auto make = [](const std::string& group, double reporting_rate, double insp, double wo) {
        ObservationRecord r;
        r.start = 100.0;
        r.end = 101.0;
        r.labels["borough"] = group;
        r.covariates["x"] = std::log(reporting_rate);
        r.inspection = r.start + insp;
        r.workorder_done = *r.inspection + wo;
        return r;
    };
    const auto fit = fit_of({{"Intercept", 0.0}, {"x", 1.0}});

    SUBCASE("unit delays") {
        std::vector recs{make("A", 1.0, 1.0, 1.0), make("A", 1.0, 1.0, 1.0)};
        const auto res = end_to_end_delays(recs, fit, {});
        REQUIRE(res.groups.size() == 1);
        CHECK(res.groups[0].total == doctest::Approx(3.0));
        for (const auto& row : res.relative) CHECK(row.relative_pct == doctest::Approx(0.0));
    }
    SUBCASE("two groups against sort-based medians") {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> u(0.1, 20.0);
        std::vector<ObservationRecord> recs;
        std::map<std::string, std::vector<double>> rep, ins, tot;
        std::vector<double> city_tot;
        for (int i = 0; i < 41; ++i) {
            const std::string g = i % 3 ? "Queens" : "Manhattan";
            const double rate = 1.0 / u(rng), a = u(rng), b = u(rng);
            recs.push_back(make(g, rate, a, b));
            rep[g].push_back(1.0 / rate);
            ins[g].push_back(a);
            tot[g].push_back(1.0 / rate + a + b);
            city_tot.push_back(1.0 / rate + a + b);
        }
        auto missing = make("Queens", 1.0, 1.0, 1.0);
        missing.workorder_done.reset();
        recs.push_back(missing);
        const auto res = end_to_end_delays(recs, fit, {"borough", {"Manhattan", "Queens", "Bronx"}, false});
        CHECK(res.excluded == 1);
        REQUIRE(res.groups.size() == 2);
        REQUIRE(res.warnings.size() == 1);
        CHECK(res.warnings[0].find("Bronx") != std::string::npos);
        for (const auto& g : res.groups) {
            CHECK(g.reporting == doctest::Approx(median_oracle(rep[g.group])).epsilon(1e-12));
            CHECK(g.inspection == doctest::Approx(median_oracle(ins[g.group])).epsilon(1e-12));
            CHECK(g.total == doctest::Approx(median_oracle(tot[g.group])).epsilon(1e-12));
        }
        const double city = median_oracle(city_tot);
        CHECK(res.citywide.total == doctest::Approx(city).epsilon(1e-12));
        for (const auto& row : res.relative)
            if (row.component == "total")
                CHECK(row.relative_pct == doctest::Approx(100.0 * (row.median_days - city) / city).epsilon(1e-12));
        // Imputation keeps the record with an infinite work-order delay.
        const auto imputed = end_to_end_delays(recs, fit, {"borough", {}, true});
        CHECK(imputed.excluded == 0);
    }
}
