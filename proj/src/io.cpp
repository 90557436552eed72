#include "bip/io.hpp"

#include "bip/error.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace bip::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"') {
      if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else {
        quoted = !quoted;
      }
    } else if (c == ',' && !quoted) {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(std::move(cell));
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last)
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  return v;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return {buf.data(), ptr};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabeledMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  LabeledMatrix out;
  if (!std::getline(in, line)) throw ValidationError(path.string() + " is empty");
  auto header = split_line(line);
  if (header.size() < 2) throw ValidationError(path.string() + ": header needs an id column and at least one feature");
  out.col_names.assign(header.begin() + 1, header.end());
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
    out.row_ids.push_back(cells[0]);
    for (std::size_t k = 1; k < cells.size(); ++k) values.push_back(parse_double(cells[k], path, lineno));
  }
  const auto n = static_cast<Index>(out.row_ids.size());
  const auto p = static_cast<Index>(out.col_names.size());
  out.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), n, p);
  return out;
}

std::string matrix_csv(const Matrix& values, const std::vector<std::string>& row_ids,
                       const std::vector<std::string>& col_names, const std::string& corner) {
  std::string out = quote(corner);
  for (const auto& c : col_names) out += ',' + quote(c);
  out += '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    out += quote(i < static_cast<Index>(row_ids.size()) ? row_ids[static_cast<std::size_t>(i)] : std::to_string(i + 1));
    for (Index j = 0; j < values.cols(); ++j) out += ',' + format_double(values(i, j));
    out += '\n';
  }
  return out;
}

ViewGroups read_groups_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& feature_names) {
  std::map<std::string, Index> feature_index;
  for (std::size_t j = 0; j < feature_names.size(); ++j) feature_index[feature_names[j]] = static_cast<Index>(j);
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::string> names;
  std::map<std::string, Index> group_index;
  std::vector<std::pair<Index, Index>> pairs;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != 2)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected feature,group");
    if (lineno == 1 && cells[0] == "feature" && cells[1] == "group") continue;
    auto f = feature_index.find(cells[0]);
    if (f == feature_index.end())
      throw ValidationError(path.string() + ": unknown feature '" + cells[0] + "'");
    auto [g, inserted] = group_index.try_emplace(cells[1], static_cast<Index>(names.size()));
    if (inserted) names.push_back(cells[1]);
    pairs.emplace_back(f->second, g->second);
  }
  if (names.empty()) throw ValidationError(path.string() + " defines no groups");
  Eigen::MatrixXi P = Eigen::MatrixXi::Zero(static_cast<Index>(feature_names.size()), static_cast<Index>(names.size()));
  for (auto [j, k] : pairs) P(j, k) = 1;
  return ViewGroups::from_membership(std::move(P), std::move(names));
}

std::string groups_csv(const ViewGroups& groups, const std::vector<std::string>& feature_names) {
  std::string out = "feature,group\n";
  for (Index j = 0; j < groups.membership.rows(); ++j)
    for (Index k : groups.groups_of[static_cast<std::size_t>(j)])
      out += quote(feature_names[static_cast<std::size_t>(j)]) + ',' +
             quote(groups.names[static_cast<std::size_t>(k)]) + '\n';
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ValidationError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace bip::io
