#include "heiv/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "heiv/model.hpp"

namespace heiv {

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, int row, const std::string& column) {
    const std::string text = strip(raw);
    if (text.empty()) throw ParseError(row, column, "empty cell");
    size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ParseError(row, column, "not a number: '" + text + "'");
    }
    if (used != text.size())
        throw ParseError(row, column, "trailing characters in '" + text + "'");
    if (!std::isfinite(value)) throw ParseError(row, column, "value is not finite");
    return value;
}

}  // namespace

std::vector<std::string> csv_header(int v, int m) {
    std::vector<std::string> names;
    for (int j = 1; j <= v; ++j) names.push_back("Y" + std::to_string(j));
    for (int j = 1; j <= m; ++j) names.push_back("X" + std::to_string(j));
    for (const auto& [r, c] : vech_pairs(v))
        names.push_back("TY_" + std::to_string(c + 1) + "_" + std::to_string(r + 1));
    for (const auto& [r, c] : vech_pairs(m))
        names.push_back("TX_" + std::to_string(c + 1) + "_" + std::to_string(r + 1));
    return names;
}

Dataset parse_csv(std::istream& in, int v, int m) {
    if (v < 1 || m < 1) throw DimensionMismatch("csv schema requires v >= 1 and m >= 1");
    const auto expected = csv_header(v, m);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(0, expected[0], "missing header row");
    const auto header = split_row(line);
    if (header.size() != expected.size())
        throw ParseError(0, expected[std::min(header.size(), expected.size() - 1)],
                         "header has " + std::to_string(header.size()) + " columns, expected " +
                             std::to_string(expected.size()));
    for (size_t c = 0; c < expected.size(); ++c) {
        if (strip(header[c]) != expected[c])
            throw ParseError(0, expected[c],
                             "unexpected header name '" + strip(header[c]) + "'");
    }

    const int q1 = v + m;
    const int ty_len = v * (v + 1) / 2, tx_len = m * (m + 1) / 2;
    Dataset data;
    data.dims.v = v;
    data.dims.m = m;

    int row = 0;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;  // blank lines tolerated
        ++row;
        const auto cells = split_row(line);
        if (cells.size() != expected.size())
            throw ParseError(row, expected[std::min(cells.size(), expected.size() - 1)],
                             "row has " + std::to_string(cells.size()) + " columns, expected " +
                                 std::to_string(expected.size()));
        Observation obs;
        obs.z.resize(q1);
        for (int c = 0; c < q1; ++c)
            obs.z(c) = parse_cell(cells[static_cast<size_t>(c)], row, expected[static_cast<size_t>(c)]);
        Eigen::VectorXd ty(ty_len), tx(tx_len);
        for (int c = 0; c < ty_len; ++c)
            ty(c) = parse_cell(cells[static_cast<size_t>(q1 + c)], row,
                               expected[static_cast<size_t>(q1 + c)]);
        for (int c = 0; c < tx_len; ++c)
            tx(c) = parse_cell(cells[static_cast<size_t>(q1 + ty_len + c)], row,
                               expected[static_cast<size_t>(q1 + ty_len + c)]);
        obs.tau_y = unvech(ty, v);
        obs.tau_x = unvech(tx, m);
        if (!is_psd(obs.tau_y))
            throw ParseError(row, expected[static_cast<size_t>(q1)],
                             "tau_y block is not positive semidefinite");
        if (!is_psd(obs.tau_x))
            throw ParseError(row, expected[static_cast<size_t>(q1 + ty_len)],
                             "tau_x block is not positive semidefinite");
        data.observations.push_back(std::move(obs));
    }
    data.dims.n = static_cast<int>(data.observations.size());
    if (data.dims.n < 2) throw ParseError(data.dims.n, expected[0], "need at least 2 data rows");
    return data;
}

Dataset read_csv(const std::string& path, int v, int m) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "file", "cannot open '" + path + "'");
    return parse_csv(in, v, m);
}

std::string format_csv(const Dataset& data) {
    data.validate();
    const auto names = csv_header(data.dims.v, data.dims.m);
    std::string out;
    for (size_t c = 0; c < names.size(); ++c) {
        out += names[c];
        out += (c + 1 < names.size()) ? ',' : '\n';
    }
    char buf[64];
    for (const auto& obs : data.observations) {
        Eigen::VectorXd rowvals(obs.z.size() + vech(obs.tau_y).size() + vech(obs.tau_x).size());
        rowvals << obs.z, vech(obs.tau_y), vech(obs.tau_x);
        for (Eigen::Index c = 0; c < rowvals.size(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", rowvals(c));
            out += buf;
            out += (c + 1 < rowvals.size()) ? ',' : '\n';
        }
    }
    return out;
}

void write_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw ParseError(0, "file", "cannot open '" + path + "' for writing");
    out << format_csv(data);
}

}  // namespace heiv
