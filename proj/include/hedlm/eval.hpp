#pragma once

#include <span>
#include <string>
#include <vector>

#include "hedlm/types.hpp"

namespace hedlm::eval {

/// Fatigue is the positive class throughout.
struct ConfusionMatrix {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;

    void add(Label truth, Label predicted);
    long total() const { return tp + fp + fn + tn; }
};

/// Unweighted mean of the per-class F1 scores; a class with P + R = 0
/// contributes 0. Throws on an empty matrix.
double macro_f1(const ConfusionMatrix& cm);

using Matrix = std::vector<std::vector<double>>;  // subjects x methods

struct FriedmanResult {
    double chi_square = 0.0;
    double p_chi_square = 1.0;
    // The Iman-Davenport F refinement is reported alongside the chi-square so
    // either reading of a published "F-statistic" can be checked.
    double iman_davenport_f = 0.0;
    double p_iman_davenport = 1.0;
    std::vector<double> avg_ranks;
};

/// Within-row average ranks (ties share the mean rank) with the standard tie
/// correction; p from chi-square with k-1 degrees of freedom.
FriedmanResult friedman(const Matrix& scores);

/// Pairwise p-values from the studentized range distribution (k groups,
/// infinite df). Symmetric with unit diagonal.
Matrix nemenyi(const Matrix& scores);

/// (#{a_i > b_j} - #{a_i < b_j}) / (|a| * |b|).
double cliffs_delta(std::span<const double> a, std::span<const double> b);

struct PairedTResult {
    double t = 0.0;
    double p = 1.0;  // two-sided
};

/// t = mean(d) / (sd(d)/sqrt(n)) with sample sd. All-zero differences give
/// p = 1; a nonzero constant shift gives p = 0 (reported below 1e-12).
PairedTResult paired_t(std::span<const double> a, std::span<const double> b);

/// Two-sided signed-rank p. Zero differences are dropped, tied |d| share mean
/// ranks. Exact by dynamic programming over the rank-sum distribution for
/// n <= 25; normal approximation with tie correction above.
double wilcoxon_signed_rank_p(std::span<const double> a, std::span<const double> b);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

/// Arithmetic mean and sample standard deviation (n-1); a single value has
/// sd 0.
MeanSd mean_sd(std::span<const double> column);

struct ScoreTable {
    std::vector<std::string> users;
    std::vector<std::string> methods;
    Matrix scores;  // users x methods
};

/// CSV with header `user_id,<method>,...` and one row per subject.
ScoreTable load_score_table(const std::string& csv_path);

struct StatsReport {
    ScoreTable table;
    FriedmanResult friedman;
    Matrix nemenyi_p;
    Matrix cliffs;  // cliffs[i][j] = delta(method_i, method_j)
    Matrix t_p;
    Matrix wilcoxon_p;
    std::vector<MeanSd> per_method;
    std::string sd_convention = "sample";
};

StatsReport build_stats_report(const ScoreTable& table);

std::string to_json(const StatsReport& report);
StatsReport stats_report_from_json(const std::string& json_text);
std::string to_text(const StatsReport& report);

}  // namespace hedlm::eval
