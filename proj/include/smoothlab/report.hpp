#pragma once

// EstimateReport: the uniform result record for every inequality experiment.
// Rows hold per-sample values, `constants` holds fitted constants and the
// thresholds they were judged against, so the pass flag can be re-derived
// from the CSV alone.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace smoothlab {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct EstimateReport {
    std::string experiment;
    std::vector<std::string> columns;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> rows;
    std::map<std::string, double> constants;
    std::map<std::string, std::string> environment;
    bool pass = false;
    int excluded = 0;

    void add_row(std::string label, std::vector<double> values) {
        row_labels.push_back(std::move(label));
        rows.push_back(std::move(values));
    }

    void write_csv(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);  // binary: byte-stable line endings
        if (!out) throw std::runtime_error("cannot open " + path.string());
        out << "# experiment: " << experiment << "\n";
        out << "# pass: " << (pass ? "true" : "false") << "\n";
        out << "# excluded: " << excluded << "\n";
        for (const auto& [k, v] : constants) out << "# constant " << k << " = " << format_double(v) << "\n";
        for (const auto& [k, v] : environment) out << "# env " << k << " = " << v << "\n";
        out << "label";
        for (const auto& c : columns) out << "," << c;
        out << "\n";
        for (size_t i = 0; i < rows.size(); ++i) {
            out << row_labels[i];
            for (double v : rows[i]) out << "," << format_double(v);
            out << "\n";
        }
    }

    std::string summary_json() const {
        nlohmann::ordered_json j;
        j["experiment"] = experiment;
        j["pass"] = pass;
        j["excluded"] = excluded;
        j["rows"] = rows.size();
        nlohmann::ordered_json jc;
        for (const auto& [k, v] : constants) jc[k] = v;
        j["constants"] = jc;
        nlohmann::ordered_json je;
        for (const auto& [k, v] : environment) je[k] = v;
        j["environment"] = je;
        return j.dump(2) + "\n";
    }

    void write_summary_json(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + path.string());
        out << summary_json();
    }
};

}  // namespace smoothlab
