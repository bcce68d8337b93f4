#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covbalance/harness.hpp"

namespace covbalance {

/// Shortest decimal form that round-trips a double exactly.
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Canonical flat serialization of a run configuration; the summary file
/// stores it verbatim so every default is visible, and hashes it.
inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out << "problem.kind=" << c.problem.kind << ";problem.losses=" << c.problem.losses
        << ";problem.dim=" << c.problem.dim << ";problem.noise=" << format_g17(c.problem.noise)
        << ";problem.gen_seed=" << c.problem.gen_seed
        << ";problem.trend=" << format_g17(c.problem.trend)
        << ";problem.scales=" << c.problem.scales << ";problem.sides=" << c.problem.sides
        << ";problem.designated=" << c.problem.designated << ";problem.base=" << c.problem.base
        << ";problem.target=" << c.problem.target << ";problem.width=" << c.problem.width
        << ";problem.height=" << c.problem.height;
    out << ";strategy.kind=" << c.strategy.kind
        << ";strategy.variant=" << to_string(c.strategy.variant) << ";strategy.decay="
        << (c.strategy.decay.is_full_history() ? std::string("full")
                                               : format_g17(c.strategy.decay.factor()))
        << ";strategy.temperature=" << format_g17(c.strategy.temperature)
        << ";strategy.weights=";
    for (std::size_t i = 0; i < c.strategy.fixed_weights.size(); ++i) {
        if (i > 0) out << "|";
        out << format_g17(c.strategy.fixed_weights[i]);
    }
    out << ";optimizer.kind=" << c.optimizer.kind
        << ";optimizer.lr=" << format_g17(c.optimizer.lr)
        << ";optimizer.momentum=" << format_g17(c.optimizer.momentum)
        << ";optimizer.beta1=" << format_g17(c.optimizer.beta1)
        << ";optimizer.beta2=" << format_g17(c.optimizer.beta2)
        << ";optimizer.epsilon=" << format_g17(c.optimizer.epsilon);
    out << ";run.iterations=" << c.iterations << ";run.seed=" << c.seed
        << ";run.record_every=" << c.record_every << ";run.experiment=" << c.experiment;
    return out.str();
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char byte : data) {
        hash ^= byte;
        hash *= 1099511628211ull;
    }
    return hash;
}

inline std::string config_hash(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize_config(c))));
    return buf;
}

namespace detail {

inline bool needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\n") != std::string::npos;
}

inline std::string csv_escape(const std::string& field) {
    if (!needs_quoting(field)) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

}  // namespace detail

/// Path of a run's trajectory file: <out>/<experiment>/<label>_<seed>.csv.
inline std::filesystem::path record_csv_path(const std::filesystem::path& out_dir,
                                             const RunRecord& rec) {
    return out_dir / rec.config.experiment /
           (rec.label + "_" + std::to_string(rec.config.seed) + ".csv");
}

/// Writes one run's trajectory. Column order: step, one loss_<name> per
/// loss, one weight_<name> per loss (the weights as applied), objective,
/// dist_to_opt, then weight_norm_<name> columns when the applied weights
/// are unnormalized. Values are %.17g so parsing recovers them exactly.
inline std::filesystem::path write_record_csv(const RunRecord& rec,
                                              const std::filesystem::path& out_dir) {
    const std::filesystem::path path = record_csv_path(out_dir, rec);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("csv: cannot open " + path.string() + " for writing");
    }

    out << "step";
    for (const auto& n : rec.loss_names) out << ",loss_" << n;
    for (const auto& n : rec.loss_names) out << ",weight_" << n;
    out << ",objective,dist_to_opt";
    if (!rec.weights_normalized) {
        for (const auto& n : rec.loss_names) out << ",weight_norm_" << n;
    }
    out << "\n";

    for (std::size_t r = 0; r < rec.row_count(); ++r) {
        out << rec.steps[r];
        for (double v : rec.losses[r]) out << "," << format_g17(v);
        for (double v : rec.weights[r]) out << "," << format_g17(v);
        out << "," << format_g17(rec.objectives[r]) << "," << format_g17(rec.dist_to_opt[r]);
        if (!rec.weights_normalized) {
            for (double v : rec.normalized_weights[r]) out << "," << format_g17(v);
        }
        out << "\n";
    }
    if (!out) {
        throw std::runtime_error("csv: write failed for " + path.string());
    }
    return path;
}

/// Summary table, one row per run; `path` is created or truncated.
inline void write_summary_csv(const std::vector<RunRecord>& records,
                              const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("csv: cannot open " + path.string() + " for writing");
    }
    out << "experiment,strategy,seed,config_hash,valid,iterations,final_objective,"
           "final_dist_to_opt,final_losses,config\n";
    for (const auto& rec : records) {
        std::string losses;
        for (std::size_t i = 0; i < rec.final_losses.size(); ++i) {
            if (i > 0) losses += ";";
            losses += format_g17(rec.final_losses[i]);
        }
        out << detail::csv_escape(rec.config.experiment) << "," << rec.label << ","
            << rec.config.seed << "," << config_hash(rec.config) << ","
            << (rec.valid ? 1 : 0) << "," << rec.config.iterations << ","
            << format_g17(rec.final_objective) << "," << format_g17(rec.final_dist) << ","
            << losses << "," << detail::csv_escape(serialize_config(rec.config)) << "\n";
    }
    if (!out) {
        throw std::runtime_error("csv: write failed for " + path.string());
    }
}

/// Parsed CSV with cells kept as raw text, so numeric fields can be
/// re-emitted or converted without losing a digit.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("csv: cannot open " + path.string());
    }
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    CsvTable table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool header_done = false;
    auto end_field = [&] {
        record.push_back(field);
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        if (!header_done) {
            table.columns = record;
            header_done = true;
        } else {
            if (record.size() != table.columns.size()) {
                throw std::runtime_error("csv: ragged row in " + path.string());
            }
            table.rows.push_back(record);
        }
        record.clear();
    };
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char ch = content[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\n') {
            end_record();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    if (!field.empty() || !record.empty()) end_record();
    if (!header_done) {
        throw std::runtime_error("csv: empty file " + path.string());
    }
    return table;
}

/// strtod over the whole cell; throws on non-numeric text.
inline double cell_value(const std::string& cell) {
    if (cell.empty()) {
        throw std::runtime_error("csv: empty numeric cell");
    }
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) {
        throw std::runtime_error("csv: not a number: '" + cell + "'");
    }
    return v;
}

/// Long-format plot data from previously emitted CSVs: one row per (file,
/// series, x, value), cells copied verbatim. Files with a step column use
/// it as x; otherwise the row index serves.
inline void export_plot_data(const std::vector<std::filesystem::path>& inputs,
                             const std::filesystem::path& out_path) {
    std::filesystem::create_directories(out_path.parent_path());
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("csv: cannot open " + out_path.string() + " for writing");
    }
    out << "source,series,x,value\n";
    for (const auto& input : inputs) {
        const CsvTable table = parse_csv(input);
        std::size_t x_col = table.columns.size();
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (table.columns[c] == "step") x_col = c;
        }
        const std::string source = input.filename().string();
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const std::string x =
                x_col < table.columns.size() ? table.rows[r][x_col] : std::to_string(r);
            for (std::size_t c = 0; c < table.columns.size(); ++c) {
                if (c == x_col) continue;
                out << detail::csv_escape(source) << "," << detail::csv_escape(table.columns[c])
                    << "," << x << "," << detail::csv_escape(table.rows[r][c]) << "\n";
            }
        }
    }
    if (!out) {
        throw std::runtime_error("csv: write failed for " + out_path.string());
    }
}

}  // namespace covbalance
