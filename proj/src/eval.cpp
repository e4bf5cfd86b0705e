#include "hedlm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "hedlm/special_functions.hpp"

namespace hedlm::eval {

void ConfusionMatrix::add(Label truth, Label predicted) {
    if (truth == Label::Fatigue) {
        (predicted == Label::Fatigue) ? ++tp : ++fn;
    } else {
        (predicted == Label::Fatigue) ? ++fp : ++tn;
    }
}

double macro_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw Error("eval", "macro F1 of an empty confusion matrix");

    auto f1 = [](long tp, long fp, long fn) {
        const double p = (tp + fp > 0) ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double r = (tp + fn > 0) ? static_cast<double>(tp) / (tp + fn) : 0.0;
        if (p + r == 0.0) return 0.0;
        return 2.0 * p * r / (p + r);
    };
    // Fatigue as positive, then NonFatigue as positive.
    return 0.5 * (f1(cm.tp, cm.fp, cm.fn) + f1(cm.tn, cm.fn, cm.fp));
}

namespace {

// Within-row ranks, ties sharing the mean rank. Also accumulates sum(t^3 - t)
// over tie groups for the Friedman correction.
std::vector<double> row_ranks(const std::vector<double>& row, double& tie_term) {
    const std::size_t k = row.size();
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });

    std::vector<double> ranks(k);
    std::size_t i = 0;
    while (i < k) {
        std::size_t j = i;
        while (j + 1 < k && row[idx[j + 1]] == row[idx[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = mean_rank;
        const double tlen = static_cast<double>(j - i + 1);
        tie_term += tlen * tlen * tlen - tlen;
        i = j + 1;
    }
    return ranks;
}

void check_matrix(const Matrix& scores) {
    if (scores.size() < 2) throw Error("eval", "need at least 2 subjects");
    if (scores.front().size() < 2) throw Error("eval", "need at least 2 methods");
    for (const auto& row : scores) {
        if (row.size() != scores.front().size()) throw Error("eval", "ragged score matrix");
        for (double v : row) {
            if (!std::isfinite(v)) throw Error("eval", "non-finite score in matrix");
        }
    }
}

std::vector<double> average_ranks(const Matrix& scores, double& tie_term) {
    const std::size_t n = scores.size();
    const std::size_t k = scores.front().size();
    std::vector<double> rank_sums(k, 0.0);
    tie_term = 0.0;
    for (const auto& row : scores) {
        const auto ranks = row_ranks(row, tie_term);
        for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];
    }
    for (double& r : rank_sums) r /= static_cast<double>(n);
    return rank_sums;
}

std::vector<double> column(const Matrix& scores, std::size_t j) {
    std::vector<double> col;
    col.reserve(scores.size());
    for (const auto& row : scores) col.push_back(row[j]);
    return col;
}

}  // namespace

FriedmanResult friedman(const Matrix& scores) {
    check_matrix(scores);
    const double n = static_cast<double>(scores.size());
    const double k = static_cast<double>(scores.front().size());

    double tie_term = 0.0;
    const auto avg = average_ranks(scores, tie_term);

    double ssbn = 0.0;
    for (double r : avg) {
        const double sum = r * n;
        ssbn += sum * sum;
    }
    const double correction = 1.0 - tie_term / (n * k * (k * k - 1.0));

    FriedmanResult result;
    result.avg_ranks = avg;
    if (correction <= 0.0) {
        // Every row fully tied: no evidence of differences.
        result.chi_square = 0.0;
        result.p_chi_square = 1.0;
        result.iman_davenport_f = 0.0;
        result.p_iman_davenport = 1.0;
        return result;
    }
    double chi = (12.0 / (k * n * (k + 1.0)) * ssbn - 3.0 * n * (k + 1.0)) / correction;
    chi = std::max(0.0, chi);
    result.chi_square = chi;
    result.p_chi_square = stats::chi_square_sf(chi, static_cast<int>(k) - 1);

    const double denom = n * (k - 1.0) - chi;
    if (denom <= 0.0) {
        result.iman_davenport_f = std::numeric_limits<double>::infinity();
        result.p_iman_davenport = 0.0;
    } else {
        result.iman_davenport_f = (n - 1.0) * chi / denom;
        result.p_iman_davenport =
            stats::f_sf(result.iman_davenport_f, k - 1.0, (k - 1.0) * (n - 1.0));
    }
    return result;
}

Matrix nemenyi(const Matrix& scores) {
    check_matrix(scores);
    const double n = static_cast<double>(scores.size());
    const std::size_t k = scores.front().size();

    double tie_term = 0.0;
    const auto avg = average_ranks(scores, tie_term);
    const double se = std::sqrt(static_cast<double>(k) * (k + 1.0) / (12.0 * n));

    Matrix p(k, std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double q = std::fabs(avg[i] - avg[j]) / se;
            const double pv = stats::studentized_range_sf(q, static_cast<int>(k));
            p[i][j] = pv;
            p[j][i] = pv;
        }
    }
    return p;
}

double cliffs_delta(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error("eval", "cliffs_delta requires non-empty samples");
    long gt = 0, lt = 0;
    for (double x : a) {
        for (double y : b) {
            if (x > y) ++gt;
            else if (x < y) ++lt;
        }
    }
    return static_cast<double>(gt - lt) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

PairedTResult paired_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("eval", "paired_t requires equal-length samples");
    if (a.size() < 2) throw Error("eval", "paired_t requires at least 2 pairs");
    const std::size_t n = a.size();

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    PairedTResult result;
    if (sd == 0.0) {
        // Degenerate spread: identical samples are indistinguishable (p = 1);
        // a nonzero constant shift is infinitely significant.
        result.t = (mean == 0.0) ? 0.0
                                 : std::copysign(std::numeric_limits<double>::infinity(), mean);
        result.p = (mean == 0.0) ? 1.0 : 0.0;
        return result;
    }
    result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    result.p = std::min(1.0, 2.0 * stats::student_t_sf(std::fabs(result.t), static_cast<double>(n - 1)));
    return result;
}

double wilcoxon_signed_rank_p(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("eval", "wilcoxon requires equal-length samples");
    if (a.size() < 2) throw Error("eval", "wilcoxon requires at least 2 pairs");

    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) return 1.0;
    const std::size_t n = diffs.size();

    std::vector<double> abs_diffs(n);
    for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
    double tie_term = 0.0;
    const auto ranks = row_ranks(abs_diffs, tie_term);

    double w_neg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] < 0.0) w_neg += ranks[i];
    }

    if (n <= 25) {
        // Exact two-sided p by dynamic programming over the signed-rank sum
        // distribution. Ranks are doubled so mean ranks stay integral.
        std::vector<long> doubled(n);
        long total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            doubled[i] = std::lround(2.0 * ranks[i]);
            total += doubled[i];
        }
        std::vector<double> dist(static_cast<std::size_t>(total) + 1, 0.0);
        dist[0] = 1.0;
        for (long r : doubled) {
            for (long s = total; s >= r; --s) {
                dist[s] += dist[s - r];
            }
        }
        const double denom = std::pow(2.0, static_cast<double>(n));
        const long w2 = std::lround(2.0 * w_neg);
        double ple = 0.0, pge = 0.0;
        for (long s = 0; s <= total; ++s) {
            if (s <= w2) ple += dist[s];
            if (s >= w2) pge += dist[s];
        }
        ple /= denom;
        pge /= denom;
        return std::min(1.0, 2.0 * std::min(ple, pge));
    }

    const double dn = static_cast<double>(n);
    const double mean = dn * (dn + 1.0) / 4.0;
    const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (w_neg - mean) / std::sqrt(var);
    return std::min(1.0, 2.0 * stats::normal_sf(std::fabs(z)));
}

MeanSd mean_sd(std::span<const double> column) {
    if (column.empty()) throw Error("eval", "mean_sd of empty column");
    MeanSd result;
    for (double v : column) result.mean += v;
    result.mean /= static_cast<double>(column.size());
    if (column.size() == 1) return result;
    double ss = 0.0;
    for (double v : column) {
        const double d = v - result.mean;
        ss += d * d;
    }
    result.sd = std::sqrt(ss / static_cast<double>(column.size() - 1));
    return result;
}

ScoreTable load_score_table(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw Error("eval", "cannot open score table '" + csv_path + "'");

    ScoreTable table;
    std::string line;
    if (!std::getline(in, line)) throw Error("eval", "score table is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::stringstream ss(line);
        std::string field;
        bool first = true;
        while (std::getline(ss, field, ',')) {
            if (first) {
                if (field != "user_id") throw Error("eval", "score table must start with a user_id column");
                first = false;
            } else {
                table.methods.push_back(field);
            }
        }
    }
    if (table.methods.size() < 2) throw Error("eval", "score table needs at least 2 method columns");

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> values;
        bool first = true;
        while (std::getline(ss, field, ',')) {
            if (first) {
                table.users.push_back(field);
                first = false;
                continue;
            }
            try {
                values.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw Error("eval", "score table row " + std::to_string(row) + ": bad number '" +
                                        field + "'");
            }
        }
        if (values.size() != table.methods.size()) {
            throw Error("eval", "score table row " + std::to_string(row) + ": expected " +
                                    std::to_string(table.methods.size()) + " scores");
        }
        table.scores.push_back(std::move(values));
    }
    if (table.scores.size() < 2) throw Error("eval", "score table needs at least 2 subjects");
    return table;
}

StatsReport build_stats_report(const ScoreTable& table) {
    check_matrix(table.scores);
    StatsReport report;
    report.table = table;
    report.friedman = friedman(table.scores);
    report.nemenyi_p = nemenyi(table.scores);

    const std::size_t k = table.methods.size();
    report.cliffs.assign(k, std::vector<double>(k, 0.0));
    report.t_p.assign(k, std::vector<double>(k, 1.0));
    report.wilcoxon_p.assign(k, std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < k; ++i) {
        const auto ci = column(table.scores, i);
        report.per_method.push_back(mean_sd(ci));
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const auto cj = column(table.scores, j);
            report.cliffs[i][j] = cliffs_delta(ci, cj);
            if (j > i) {
                const auto t = paired_t(ci, cj);
                const double w = wilcoxon_signed_rank_p(ci, cj);
                report.t_p[i][j] = report.t_p[j][i] = t.p;
                report.wilcoxon_p[i][j] = report.wilcoxon_p[j][i] = w;
            }
        }
    }
    return report;
}

}  // namespace hedlm::eval
