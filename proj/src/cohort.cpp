#include "thalbench/cohort.hpp"

#include "thalbench/error.hpp"
#include "thalbench/format.hpp"
#include "thalbench/textio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace thalbench {
namespace {

constexpr std::array<std::string_view, 6> kFixedColumns{"subject_id", "group", "age", "sex", "education_years",
                                                         "etiv_mm3"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) return out;
    line.remove_prefix(comma + 1);
  }
}

double parse_double(std::string_view cell, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (r.ec != std::errc() || r.ptr != cell.data() + cell.size() || !std::isfinite(v))
    throw FormatError("line " + std::to_string(line) + ": column " + std::string(column) + ": not a finite number '" +
                      std::string(cell) + "'");
  return v;
}

}  // namespace

std::string_view group_name(Group g) { return kGroupNames[static_cast<std::size_t>(g)]; }

std::optional<Group> parse_group(std::string_view name) {
  for (int g = 0; g < kGroupCount; ++g)
    if (kGroupNames[g] == name) return static_cast<Group>(g);
  return std::nullopt;
}

double Subject::whole_thalamus(std::optional<Hemisphere> hemisphere) const {
  double sum = 0.0;
  for (Label c = 1; c <= kNucleusCount; ++c)
    if (!hemisphere || NucleusId::from_code(c).hemisphere == *hemisphere) sum += volumes[c - 1];
  return sum;
}

std::size_t CohortTable::count(Group g) const {
  return static_cast<std::size_t>(
      std::count_if(subjects.begin(), subjects.end(), [g](const Subject& s) { return s.group == g; }));
}

CohortTable parse_cohort_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = text.substr(0, nl);
    if (!trim(line).empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  if (lines.empty()) throw FormatError("cohort CSV is empty");

  const auto header = split(lines[0]);
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (!index.emplace(header[i], i).second) throw FormatError("duplicate column '" + std::string(header[i]) + "'");
  auto column = [&](std::string_view name) {
    const auto it = index.find(name);
    if (it == index.end()) throw FormatError("cohort CSV is missing column '" + std::string(name) + "'");
    return it->second;
  };
  std::array<std::size_t, 6> fixed{};
  for (std::size_t i = 0; i < fixed.size(); ++i) fixed[i] = column(kFixedColumns[i]);
  std::array<std::size_t, kNucleusCount> nuclei{};
  for (Label c = 1; c <= kNucleusCount; ++c) nuclei[c - 1] = column(nucleus_column(c));

  CohortTable table;
  std::set<std::string> ids;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split(lines[li]);
    const std::size_t line_no = li + 1;
    if (cells.size() != header.size())
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " cells, found " + std::to_string(cells.size()));
    Subject s;
    s.id = std::string(cells[fixed[0]]);
    if (s.id.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty subject_id");
    if (!ids.insert(s.id).second) throw FormatError("duplicate subject_id '" + s.id + "'");
    const auto g = parse_group(cells[fixed[1]]);
    if (!g) throw FormatError("line " + std::to_string(line_no) + ": unknown group '" + std::string(cells[fixed[1]]) + "'");
    s.group = *g;
    s.age = parse_double(cells[fixed[2]], line_no, "age");
    if (cells[fixed[3]] == "F")
      s.sex = Sex::F;
    else if (cells[fixed[3]] == "M")
      s.sex = Sex::M;
    else
      throw FormatError("line " + std::to_string(line_no) + ": sex must be F or M");
    s.education_years = parse_double(cells[fixed[4]], line_no, "education_years");
    s.etiv_mm3 = parse_double(cells[fixed[5]], line_no, "etiv_mm3");
    for (Label c = 1; c <= kNucleusCount; ++c) {
      s.volumes[c - 1] = parse_double(cells[nuclei[c - 1]], line_no, nucleus_column(c));
      if (s.volumes[c - 1] < 0.0) throw FormatError("line " + std::to_string(line_no) + ": negative volume");
    }
    table.subjects.push_back(std::move(s));
  }
  return table;
}

CohortTable read_cohort_csv(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return parse_cohort_csv(text);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_cohort_csv(const CohortTable& table) {
  std::string out;
  for (std::size_t i = 0; i < kFixedColumns.size(); ++i) {
    if (i) out += ',';
    out += kFixedColumns[i];
  }
  for (Label c = 1; c <= kNucleusCount; ++c) out += ',' + nucleus_column(c);
  out += '\n';
  for (const auto& s : table.subjects) {
    out += s.id;
    out += ',';
    out += group_name(s.group);
    out += ',' + format_number(s.age);
    out += s.sex == Sex::F ? ",F," : ",M,";
    out += format_number(s.education_years) + ',' + format_number(s.etiv_mm3);
    for (double v : s.volumes) out += ',' + format_number(v);
    out += '\n';
  }
  return out;
}

void write_cohort_csv(const CohortTable& table, const std::filesystem::path& path) {
  write_text_file(path, format_cohort_csv(table));
}

std::vector<std::size_t> rows_in(const CohortTable& table, std::span<const Group> groups) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < table.subjects.size(); ++i)
    if (std::find(groups.begin(), groups.end(), table.subjects[i].group) != groups.end()) rows.push_back(i);
  return rows;
}

Eigen::MatrixXd covariate_matrix(const CohortTable& table, std::span<const std::size_t> rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& s = table.subjects[rows[i]];
    x.row(static_cast<Eigen::Index>(i)) << s.age, s.sex == Sex::M ? 1.0 : 0.0, s.education_years, s.etiv_mm3;
  }
  return x;
}

}  // namespace thalbench
