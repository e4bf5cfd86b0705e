#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hedlm/eval.hpp"

namespace hedlm::eval {

using nlohmann::json;

namespace {

std::string fmt(double v, const char* spec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void append_matrix_table(std::ostringstream& out, const std::string& title,
                         const std::vector<std::string>& methods, const Matrix& m,
                         const char* cell_spec) {
    out << title << "\n";
    std::size_t width = 12;
    for (const auto& name : methods) width = std::max(width, name.size() + 2);
    out << std::string(width, ' ');
    for (const auto& name : methods) {
        out << name << std::string(width - name.size(), ' ');
    }
    out << "\n";
    for (std::size_t i = 0; i < methods.size(); ++i) {
        out << methods[i] << std::string(width - methods[i].size(), ' ');
        for (std::size_t j = 0; j < methods.size(); ++j) {
            const std::string cell = fmt(m[i][j], cell_spec);
            out << cell << std::string(width > cell.size() ? width - cell.size() : 1, ' ');
        }
        out << "\n";
    }
    out << "\n";
}

}  // namespace

std::string to_json(const StatsReport& report) {
    json doc;
    doc["users"] = report.table.users;
    doc["methods"] = report.table.methods;
    doc["scores"] = report.table.scores;
    doc["friedman"] = {{"chi_square", report.friedman.chi_square},
                       {"p_chi_square", report.friedman.p_chi_square},
                       {"iman_davenport_f", report.friedman.iman_davenport_f},
                       {"p_iman_davenport", report.friedman.p_iman_davenport},
                       {"avg_ranks", report.friedman.avg_ranks}};
    doc["nemenyi_p"] = report.nemenyi_p;
    doc["cliffs_delta"] = report.cliffs;
    doc["paired_t_p"] = report.t_p;
    doc["wilcoxon_p"] = report.wilcoxon_p;
    json per_method = json::array();
    for (std::size_t i = 0; i < report.per_method.size(); ++i) {
        per_method.push_back({{"method", report.table.methods[i]},
                              {"mean", report.per_method[i].mean},
                              {"sd", report.per_method[i].sd}});
    }
    doc["mean_sd"] = per_method;
    doc["sd_convention"] = report.sd_convention;
    return doc.dump(2);
}

StatsReport stats_report_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error("eval", std::string("stats report is not valid JSON: ") + e.what());
    }
    StatsReport report;
    try {
        report.table.users = doc.at("users").get<std::vector<std::string>>();
        report.table.methods = doc.at("methods").get<std::vector<std::string>>();
        report.table.scores = doc.at("scores").get<Matrix>();
        const auto& fr = doc.at("friedman");
        report.friedman.chi_square = fr.at("chi_square").get<double>();
        report.friedman.p_chi_square = fr.at("p_chi_square").get<double>();
        report.friedman.iman_davenport_f = fr.at("iman_davenport_f").get<double>();
        report.friedman.p_iman_davenport = fr.at("p_iman_davenport").get<double>();
        report.friedman.avg_ranks = fr.at("avg_ranks").get<std::vector<double>>();
        report.nemenyi_p = doc.at("nemenyi_p").get<Matrix>();
        report.cliffs = doc.at("cliffs_delta").get<Matrix>();
        report.t_p = doc.at("paired_t_p").get<Matrix>();
        report.wilcoxon_p = doc.at("wilcoxon_p").get<Matrix>();
        for (const auto& entry : doc.at("mean_sd")) {
            report.per_method.push_back({entry.at("mean").get<double>(), entry.at("sd").get<double>()});
        }
        report.sd_convention = doc.at("sd_convention").get<std::string>();
    } catch (const json::exception& e) {
        throw Error("eval", std::string("stats report JSON is missing fields: ") + e.what());
    }
    return report;
}

std::string to_text(const StatsReport& report) {
    std::ostringstream out;
    const auto& methods = report.table.methods;

    out << "Macro F1 per subject\n";
    std::size_t width = 12;
    for (const auto& name : methods) width = std::max(width, name.size() + 2);
    out << "user_id     ";
    for (const auto& name : methods) out << name << std::string(width - name.size(), ' ');
    out << "\n";
    for (std::size_t i = 0; i < report.table.users.size(); ++i) {
        const auto& user = report.table.users[i];
        out << user << std::string(user.size() < 12 ? 12 - user.size() : 1, ' ');
        for (std::size_t j = 0; j < methods.size(); ++j) {
            const std::string cell = fmt(report.table.scores[i][j], "%.2f");
            out << cell << std::string(width > cell.size() ? width - cell.size() : 1, ' ');
        }
        out << "\n";
    }
    out << "(Mean +- SD)";
    for (std::size_t j = 0; j < methods.size(); ++j) {
        const std::string cell =
            fmt(report.per_method[j].mean, "%.2f") + "+-" + fmt(report.per_method[j].sd, "%.2f");
        out << cell << std::string(width > cell.size() ? width - cell.size() : 1, ' ');
    }
    out << "\n[sd convention: " << report.sd_convention << "]\n\n";

    out << "Friedman chi-square = " << fmt(report.friedman.chi_square, "%.4f")
        << ", p = " << fmt(report.friedman.p_chi_square, "%.3e")
        << "  (Iman-Davenport F = " << fmt(report.friedman.iman_davenport_f, "%.4f")
        << ", p = " << fmt(report.friedman.p_iman_davenport, "%.3e") << ")\n";
    out << "Average ranks:";
    for (std::size_t j = 0; j < methods.size(); ++j) {
        out << " " << methods[j] << "=" << fmt(report.friedman.avg_ranks[j], "%.4f");
    }
    out << "\n\n";

    append_matrix_table(out, "Nemenyi post-hoc p-values", methods, report.nemenyi_p, "%.6f");
    append_matrix_table(out, "Cliff's delta (row vs column)", methods, report.cliffs, "%+.3f");

    out << "Pairwise tests (two-sided p)\n";
    for (std::size_t i = 0; i < methods.size(); ++i) {
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
            out << methods[i] << " vs " << methods[j] << ": t-test p = " << fmt(report.t_p[i][j], "%.5f")
                << ", Wilcoxon p = " << fmt(report.wilcoxon_p[i][j], "%.5f") << "\n";
        }
    }
    return out.str();
}

}  // namespace hedlm::eval
