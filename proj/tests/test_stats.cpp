#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "hedlm/eval.hpp"
#include "hedlm/special_functions.hpp"
#include "test_util.hpp"

using namespace hedlm;
using doctest::Approx;

namespace {

eval::ScoreTable table3() {
    return eval::load_score_table(testutil::data_path("table3_macro_f1.csv"));
}

std::vector<double> method_column(const eval::ScoreTable& t, const std::string& name) {
    for (std::size_t j = 0; j < t.methods.size(); ++j) {
        if (t.methods[j] == name) {
            std::vector<double> col;
            for (const auto& row : t.scores) col.push_back(row[j]);
            return col;
        }
    }
    throw std::runtime_error("no method " + name);
}

// Simpson quadrature used as the independent CDF oracle.
double simpson(const std::function<double(double)>& f, double lo, double hi, int steps) {
    const double h = (hi - lo) / steps;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < steps; ++i) acc += f(lo + h * i) * ((i % 2 == 1) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double t_pdf(double x, double df) {
    const double c = std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
                     std::sqrt(df * std::numbers::pi);
    return c * std::pow(1.0 + x * x / df, -(df + 1.0) / 2.0);
}

double chi2_pdf(double x, double df) {
    if (x <= 0.0) return 0.0;
    return std::exp((df / 2.0 - 1.0) * std::log(x) - x / 2.0 - std::lgamma(df / 2.0) -
                    (df / 2.0) * std::log(2.0));
}

// Brute-force exact Wilcoxon over all 2^n sign assignments.
double wilcoxon_enumeration(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    }
    if (d.empty()) return 1.0;
    const std::size_t n = d.size();

    // mean ranks of |d|
    std::vector<double> ad(n);
    for (std::size_t i = 0; i < n; ++i) ad[i] = std::fabs(d[i]);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return ad[x] < ad[y]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && ad[idx[j + 1]] == ad[idx[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = mean_rank;
        i = j + 1;
    }
    double w_obs = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (d[t] < 0) w_obs += rank[t];
    }

    long le = 0, ge = 0;
    const long total = 1L << n;
    for (long mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            if (mask & (1L << t)) w += rank[t];
        }
        if (w <= w_obs + 1e-12) ++le;
        if (w >= w_obs - 1e-12) ++ge;
    }
    const double ple = static_cast<double>(le) / total;
    const double pge = static_cast<double>(ge) / total;
    return std::min(1.0, 2.0 * std::min(ple, pge));
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("macro F1 basics") {
    eval::ConfusionMatrix perfect{5, 0, 0, 5};
    CHECK(eval::macro_f1(perfect) == Approx(1.0));

    eval::ConfusionMatrix hand{3, 2, 1, 4};
    CHECK(eval::macro_f1(hand) == Approx(0.696969696969697).epsilon(1e-9));

    eval::ConfusionMatrix wrong{0, 5, 5, 0};
    CHECK(eval::macro_f1(wrong) == Approx(0.0));

    eval::ConfusionMatrix empty;
    CHECK_THROWS_AS(eval::macro_f1(empty), Error);
}

TEST_CASE("macro F1 is invariant under a simultaneous class swap") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<long> counts(0, 30);
    for (int trial = 0; trial < 200; ++trial) {
        eval::ConfusionMatrix cm{counts(rng), counts(rng), counts(rng), counts(rng)};
        if (cm.total() == 0) continue;
        eval::ConfusionMatrix swapped{cm.tn, cm.fn, cm.fp, cm.tp};
        CHECK(eval::macro_f1(cm) == Approx(eval::macro_f1(swapped)).epsilon(1e-12));
    }
}

TEST_CASE("confusion accumulation treats Fatigue as positive") {
    eval::ConfusionMatrix cm;
    cm.add(Label::Fatigue, Label::Fatigue);
    cm.add(Label::Fatigue, Label::NonFatigue);
    cm.add(Label::NonFatigue, Label::Fatigue);
    cm.add(Label::NonFatigue, Label::NonFatigue);
    CHECK(cm.tp == 1);
    CHECK(cm.fn == 1);
    CHECK(cm.fp == 1);
    CHECK(cm.tn == 1);
}

TEST_CASE("friedman reproduces the 19x5 fixture statistic") {
    const auto t = table3();
    REQUIRE(t.users.size() == 19);
    REQUIRE(t.methods.size() == 5);
    const auto result = eval::friedman(t.scores);
    CHECK(result.chi_square == Approx(54.554090).epsilon(1e-5));
    CHECK(result.p_chi_square < 1e-4);
    CHECK(result.p_chi_square == Approx(4.029e-11).epsilon(1e-2));
    CHECK(result.iman_davenport_f == Approx(45.788386).epsilon(1e-5));
}

TEST_CASE("friedman: identical columns give statistic 0, p 1") {
    eval::Matrix m = {{1.0, 1.0, 1.0}, {2.0, 2.0, 2.0}, {0.5, 0.5, 0.5}};
    const auto result = eval::friedman(m);
    CHECK(result.chi_square == Approx(0.0));
    CHECK(result.p_chi_square == Approx(1.0));
}

TEST_CASE("friedman matches manual rank arithmetic on a 3x3 matrix") {
    // Ranks: rows (1,2,3),(1,3,2),(2,1,3) -> column rank sums 4,6,8.
    // chi2 = 12/(3*3*4) * (16+36+64) - 3*3*4 = 8/3.
    eval::Matrix m = {{10.0, 20.0, 30.0}, {1.0, 3.0, 2.0}, {5.0, 4.0, 6.0}};
    const auto result = eval::friedman(m);
    CHECK(result.chi_square == Approx(8.0 / 3.0).epsilon(1e-12));
    CHECK(result.p_chi_square == Approx(std::exp(-4.0 / 3.0)).epsilon(1e-9));
}

TEST_CASE("friedman is invariant under strictly increasing row transforms") {
    const auto t = table3();
    const auto base = eval::friedman(t.scores);
    eval::Matrix transformed = t.scores;
    for (auto& row : transformed) {
        for (auto& v : row) v = std::exp(v / 100.0);
    }
    const auto after = eval::friedman(transformed);
    CHECK(after.chi_square == Approx(base.chi_square).epsilon(1e-12));
}

TEST_CASE("friedman rejects degenerate shapes") {
    CHECK_THROWS_AS(eval::friedman(eval::Matrix{{1.0, 2.0}}), Error);
    CHECK_THROWS_AS(eval::friedman(eval::Matrix{{1.0}, {2.0}}), Error);
    CHECK_THROWS_AS(eval::friedman(eval::Matrix{{1.0, 2.0}, {1.0}}), Error);
}

TEST_CASE("studentized range tail matches frozen reference values") {
    // Reference values from an independent implementation of the range
    // distribution (infinite df).
    CHECK(stats::studentized_range_sf(2.0, 3) == Approx(0.333499325040).epsilon(1e-6));
    CHECK(stats::studentized_range_sf(3.5, 4) == Approx(0.063876333857).epsilon(1e-6));
    CHECK(stats::studentized_range_sf(4.7155, 5) == Approx(0.007626857561).epsilon(1e-6));
    CHECK(stats::studentized_range_sf(6.0, 5) == Approx(0.000214242614).epsilon(1e-4));
    CHECK(stats::studentized_range_sf(1.0, 2) == Approx(0.479500122187).epsilon(1e-6));
    CHECK(stats::studentized_range_sf(8.0, 6) == Approx(2.30524e-7).epsilon(1e-3));
    CHECK(stats::studentized_range_sf(0.0, 4) == Approx(1.0));
}

TEST_CASE("nemenyi reproduces the fixture pairwise p-values") {
    const auto t = table3();
    const auto p = eval::nemenyi(t.scores);
    // Columns: ml, random, distance, paramA, paramB.
    CHECK(p[1][2] == Approx(0.007625).epsilon(0.10));
    CHECK(p[1][2] == Approx(0.007625081).epsilon(1e-3));
    CHECK(p[0][3] < 1e-6);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(p[i][i] == Approx(1.0));
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(p[i][j] == Approx(p[j][i]));
            CHECK(p[i][j] >= 0.0);
            CHECK(p[i][j] <= 1.0);
        }
    }
}

TEST_CASE("nemenyi is symmetric on random matrices") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(0.0, 100.0);
    eval::Matrix m(8, std::vector<double>(4));
    for (auto& row : m) {
        for (auto& v : row) v = dist(rng);
    }
    const auto p = eval::nemenyi(m);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) CHECK(p[i][j] == Approx(p[j][i]));
    }
}

TEST_CASE("cliffs delta basics and fixture values") {
    const std::vector<double> c5(4, 5.0);
    CHECK(eval::cliffs_delta(c5, c5) == Approx(0.0));

    const std::vector<double> low = {1.0, 2.0}, high = {3.0, 4.0};
    CHECK(eval::cliffs_delta(high, low) == Approx(1.0));
    CHECK(eval::cliffs_delta(low, high) == Approx(-1.0));

    const auto t = table3();
    const auto ml = method_column(t, "ml");
    const auto random = method_column(t, "random");
    const auto distance = method_column(t, "distance");
    const auto pa = method_column(t, "hedlm_param_a");
    const auto pb = method_column(t, "hedlm_param_b");
    CHECK(eval::cliffs_delta(random, ml) == Approx(0.2742382271).epsilon(1e-6));
    CHECK(eval::cliffs_delta(distance, ml) == Approx(0.5623268698).epsilon(1e-6));
    CHECK(eval::cliffs_delta(pa, pb) == Approx(0.0415512465).epsilon(1e-6));

    CHECK_THROWS_AS(eval::cliffs_delta(std::vector<double>{}, low), Error);
}

TEST_CASE("cliffs delta is antisymmetric and bounded") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(0.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(7), b(9);
        for (auto& v : a) v = dist(rng);
        for (auto& v : b) v = dist(rng);
        const double ab = eval::cliffs_delta(a, b);
        CHECK(ab == Approx(-eval::cliffs_delta(b, a)).epsilon(1e-12));
        CHECK(std::fabs(ab) <= 1.0);
    }
}

TEST_CASE("paired t on the fixture and the degenerate conventions") {
    const auto t = table3();
    const auto pa = method_column(t, "hedlm_param_a");
    const auto random = method_column(t, "random");
    const auto result = eval::paired_t(pa, random);
    CHECK(result.t == Approx(5.26434982).epsilon(1e-6));
    CHECK(result.p == Approx(5.2579556e-05).epsilon(1e-5));
    // Within 50% of the published rounded value.
    CHECK(result.p > 0.00004 * 0.5);
    CHECK(result.p < 0.00004 * 1.5);

    const std::vector<double> same = {1.0, 2.0, 3.0};
    CHECK(eval::paired_t(same, same).p == Approx(1.0));

    const std::vector<double> a = {2, 3, 4, 5, 6}, b = {1, 2, 3, 4, 5};
    CHECK(eval::paired_t(a, b).p < 1e-12);  // constant shift, sd = 0

    CHECK_THROWS_AS(eval::paired_t(a, same), Error);
    CHECK_THROWS_AS(eval::paired_t(std::vector<double>{1.0}, std::vector<double>{2.0}), Error);
}

TEST_CASE("wilcoxon exact values on the fixture") {
    const auto t = table3();
    const auto pa = method_column(t, "hedlm_param_a");
    const auto pb = method_column(t, "hedlm_param_b");
    const auto random = method_column(t, "random");
    const auto distance = method_column(t, "distance");

    CHECK(eval::wilcoxon_signed_rank_p(pb, distance) == Approx(0.07987594604492188).epsilon(1e-9));
    CHECK(eval::wilcoxon_signed_rank_p(pa, distance) == Approx(0.00400543212890625).epsilon(1e-9));
    CHECK(eval::wilcoxon_signed_rank_p(pa, random) == Approx(3.814697265625e-06).epsilon(1e-9));
}

TEST_CASE("wilcoxon small-sample conventions") {
    const std::vector<double> a = {2.0, 3.0, 4.0}, b = {1.0, 1.0, 1.0};
    CHECK(eval::wilcoxon_signed_rank_p(a, b) == Approx(0.25).epsilon(1e-12));  // 2/2^3

    const std::vector<double> same = {1.0, 2.0, 3.0};
    CHECK(eval::wilcoxon_signed_rank_p(same, same) == Approx(1.0));

    CHECK_THROWS_AS(eval::wilcoxon_signed_rank_p(a, std::vector<double>{1.0}), Error);
}

TEST_CASE("wilcoxon DP matches full enumeration for n <= 10") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> size(2, 10);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = size(rng);
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            // One decimal place so tied |d| occur regularly.
            a[i] = std::round(dist(rng) * 10.0) / 10.0;
            b[i] = std::round(dist(rng) * 10.0) / 10.0;
        }
        bool all_zero = true;
        for (int i = 0; i < n; ++i) all_zero = all_zero && a[i] == b[i];
        if (all_zero) continue;
        CHECK(eval::wilcoxon_signed_rank_p(a, b) ==
              Approx(wilcoxon_enumeration(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon normal-approximation branch behaves sanely") {
    std::vector<double> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
        a[i] = i + ((i % 2 == 0) ? 2.0 : 1.0);
        b[i] = i;
    }
    CHECK(eval::wilcoxon_signed_rank_p(a, b) < 1e-5);

    for (int i = 0; i < 30; ++i) b[i] = a[i] + ((i % 2 == 0) ? 0.5 : -0.5);
    CHECK(eval::wilcoxon_signed_rank_p(a, b) > 0.5);
}

TEST_CASE("mean and sd reproduce the fixture footer under the sample convention") {
    const auto t = table3();
    const auto pa = eval::mean_sd(method_column(t, "hedlm_param_a"));
    CHECK(pa.mean == Approx(69.13).epsilon(0.0002));
    CHECK(pa.sd == Approx(10.71).epsilon(0.002));
    const auto random = eval::mean_sd(method_column(t, "random"));
    CHECK(random.mean == Approx(59.30).epsilon(0.0002));
    CHECK(random.sd == Approx(10.13).epsilon(0.002));

    CHECK(eval::mean_sd(std::vector<double>{4.2}).sd == Approx(0.0));
    CHECK(eval::mean_sd(std::vector<double>{3.0, 3.0, 3.0}).sd == Approx(0.0));
    CHECK_THROWS_AS(eval::mean_sd(std::vector<double>{}), Error);
}

TEST_CASE("student t and chi-square tails match a quadrature oracle within 1e-8") {
    for (const double df : {2.0, 2.5, 7.0, 19.0}) {
        for (const double t : {0.5, 1.0, 2.0, 3.0}) {
            const double cdf_quadrature = 0.5 + simpson([&](double x) { return t_pdf(x, df); }, 0.0, t, 4000);
            CHECK(1.0 - stats::student_t_sf(t, df) == Approx(cdf_quadrature).epsilon(1e-8));
        }
    }
    for (const int df : {2, 4, 9, 19}) {
        for (const double x : {0.5, 2.0, 10.0, 30.0}) {
            const double cdf_quadrature =
                simpson([&](double v) { return chi2_pdf(v, df); }, 1e-12, x, 20000);
            CHECK(1.0 - stats::chi_square_sf(x, df) == Approx(cdf_quadrature).epsilon(1e-8));
        }
    }
}

TEST_CASE("tail identities for low degrees of freedom") {
    // t with 1 df: cdf = 1/2 + atan(t)/pi.
    CHECK(stats::student_t_sf(1.5, 1.0) == Approx(0.1871670418109988).epsilon(1e-10));
    // chi-square with 1 df: sf(x) = 2 * normal_sf(sqrt(x)).
    CHECK(stats::chi_square_sf(4.0, 1) == Approx(0.04550026389635839).epsilon(1e-10));
    // t with 2 df: sf = (1 - t/sqrt(2+t^2))/2.
    const double t = 1.75;
    CHECK(stats::student_t_sf(t, 2.0) ==
          Approx(0.5 * (1.0 - t / std::sqrt(2.0 + t * t))).epsilon(1e-10));
}

TEST_CASE("stats report builds, serializes, and round-trips") {
    const auto t = table3();
    const auto report = eval::build_stats_report(t);
    CHECK(report.sd_convention == "sample");
    CHECK(report.friedman.chi_square == Approx(54.554090).epsilon(1e-5));

    const std::string json_text = eval::to_json(report);
    const auto parsed = eval::stats_report_from_json(json_text);
    CHECK(parsed.friedman.chi_square == Approx(report.friedman.chi_square).epsilon(1e-12));
    CHECK(parsed.table.methods == report.table.methods);
    CHECK(parsed.nemenyi_p[1][2] == Approx(report.nemenyi_p[1][2]).epsilon(1e-12));
    CHECK(parsed.per_method.size() == 5);

    const std::string text = eval::to_text(report);
    CHECK(text.find("Friedman chi-square = 54.5541") != std::string::npos);
    CHECK(text.find("Nemenyi post-hoc p-values") != std::string::npos);
    CHECK(text.find("(Mean +- SD)") != std::string::npos);

    CHECK_THROWS_AS(eval::stats_report_from_json("not json"), Error);
}

TEST_CASE("two identical method columns make every pairwise test inert") {
    eval::ScoreTable t;
    t.users = {"a", "b", "c"};
    t.methods = {"m1", "m2"};
    t.scores = {{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}};
    const auto report = eval::build_stats_report(t);
    CHECK(report.friedman.chi_square == Approx(0.0));
    CHECK(report.friedman.p_chi_square == Approx(1.0));
    CHECK(report.t_p[0][1] == Approx(1.0));
    CHECK(report.wilcoxon_p[0][1] == Approx(1.0));
    CHECK(report.nemenyi_p[0][1] == Approx(1.0));
    CHECK(report.cliffs[0][1] == Approx(0.0));
}

TEST_CASE("score table loader rejects malformed input") {
    const std::string dir = HEDLM_BINARY_DIR;
    const std::string bad_header = dir + "/bad_header.csv";
    testutil::write_file(bad_header, "subject,ml,random\n1,2,3\n");
    CHECK_THROWS_AS(eval::load_score_table(bad_header), Error);

    const std::string bad_cell = dir + "/bad_cell.csv";
    testutil::write_file(bad_cell, "user_id,ml,random\n1,2,x\n2,3,4\n");
    CHECK_THROWS_AS(eval::load_score_table(bad_cell), Error);

    const std::string ragged = dir + "/ragged.csv";
    testutil::write_file(ragged, "user_id,ml,random\n1,2\n2,3,4\n");
    CHECK_THROWS_AS(eval::load_score_table(ragged), Error);
}

}  // TEST_SUITE
