#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "statedet/error.hpp"
#include "statedet/series.hpp"

namespace statedet {
namespace {

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t begin = 0;
  while (true) {
    std::size_t comma = line.find(',', begin);
    std::string_view cell = line.substr(begin, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - begin);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
      cell.remove_suffix(1);
    }
    cells.push_back(cell);
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return cells;
}

bool parse_double(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

bool parse_label(std::string_view cell, Label& out) {
  if (cell.empty()) return false;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::string where(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

RawCsv read_raw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  RawCsv raw;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (view.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto cells = split_row(view);
    bool first = raw.header.empty() && raw.rows.empty();
    if (first) {
      width = cells.size();
      bool numeric = true;
      for (auto c : cells) {
        double v;
        if (!parse_double(c, v)) numeric = false;
      }
      if (!numeric) {
        for (auto c : cells) raw.header.emplace_back(c);
        continue;
      }
    }
    if (cells.size() != width) {
      throw ParseError("ragged CSV in '" + path.string() + "': row " + std::to_string(line_no) +
                       " has " + std::to_string(cells.size()) + " columns, expected " +
                       std::to_string(width));
    }
    raw.rows.emplace_back(cells.begin(), cells.end());
    raw.line_numbers.push_back(line_no);
  }
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  if (raw.rows.empty()) throw ParseError("no data rows in '" + path.string() + "'");
  return raw;
}

MultivariateTimeSeries build(const RawCsv& raw, bool has_label_column,
                             const std::filesystem::path& path) {
  const std::size_t width = raw.rows.front().size();
  const std::size_t dims = has_label_column ? width - 1 : width;
  if (dims == 0) throw ParseError("'" + path.string() + "' has no value columns");
  const std::size_t length = raw.rows.size();
  Matrix values(dims, length);
  std::vector<Label> labels;
  if (has_label_column) labels.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    const auto& row = raw.rows[t];
    for (std::size_t n = 0; n < dims; ++n) {
      double v;
      if (!parse_double(row[n], v)) {
        throw ParseError("non-numeric cell '" + row[n] + "' at " +
                         where(raw.line_numbers[t], n + 1) + " of '" + path.string() + "'");
      }
      values(n, t) = v;
    }
    if (has_label_column) {
      Label l;
      if (!parse_label(row[dims], l) || l < 0) {
        throw ParseError("invalid label '" + row[dims] + "' at " +
                         where(raw.line_numbers[t], dims + 1) + " of '" + path.string() + "'");
      }
      labels[t] = l;
    }
  }
  if (has_label_column) return MultivariateTimeSeries(std::move(values), std::move(labels));
  return MultivariateTimeSeries(std::move(values));
}

}  // namespace

MultivariateTimeSeries load_csv(const std::filesystem::path& path, bool has_label_column) {
  return build(read_raw(path), has_label_column, path);
}

MultivariateTimeSeries load_csv(const std::filesystem::path& path) {
  RawCsv raw = read_raw(path);
  bool labelled = !raw.header.empty() && raw.header.back() == "label";
  return build(raw, labelled, path);
}

void save_csv(const MultivariateTimeSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (std::size_t n = 0; n < series.dims(); ++n) {
    if (n) out << ',';
    out << 'x' << n;
  }
  if (series.has_labels()) out << ",label";
  out << '\n';
  char buf[64];
  for (std::size_t t = 0; t < series.length(); ++t) {
    for (std::size_t n = 0; n < series.dims(); ++n) {
      if (n) out << ',';
      auto res = std::to_chars(buf, buf + sizeof buf, series.values()(n, t));
      out.write(buf, res.ptr - buf);
    }
    if (series.has_labels()) out << ',' << (*series.labels())[t];
    out << '\n';
  }
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

std::vector<Label> load_labels(const std::filesystem::path& path) {
  RawCsv raw = read_raw(path);
  std::size_t col = raw.rows.front().size() - 1;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    if (raw.header[c] == "label" || raw.header[c] == "state") {
      col = c;
      break;
    }
  }
  std::vector<Label> labels(raw.rows.size());
  for (std::size_t t = 0; t < raw.rows.size(); ++t) {
    if (!parse_label(raw.rows[t][col], labels[t]) || labels[t] < 0) {
      throw ParseError("invalid label '" + raw.rows[t][col] + "' at " +
                       where(raw.line_numbers[t], col + 1) + " of '" + path.string() + "'");
    }
  }
  return labels;
}

void save_states(const StateSequence& states, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "t,state\n";
  for (std::size_t t = 0; t < states.size(); ++t) out << t << ',' << states.states[t] << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace statedet
