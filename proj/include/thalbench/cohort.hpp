#pragma once

#include "thalbench/harmonize.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thalbench {

enum class Group : std::uint8_t { HC, EMCI, LMCI, AD };
inline constexpr int kGroupCount = 4;
inline constexpr std::array<std::string_view, kGroupCount> kGroupNames{"HC", "EMCI", "LMCI", "AD"};

std::string_view group_name(Group g);
std::optional<Group> parse_group(std::string_view name);

enum class Sex : std::uint8_t { F, M };

/// One cohort row. Volumes are indexed by harmonized code - 1.
struct Subject {
  std::string id;
  Group group = Group::HC;
  double age = 0.0;
  Sex sex = Sex::F;
  double education_years = 0.0;
  double etiv_mm3 = 0.0;
  std::array<double, kNucleusCount> volumes{};

  double whole_thalamus(std::optional<Hemisphere> hemisphere = std::nullopt) const;
  bool operator==(const Subject&) const = default;
};

struct CohortTable {
  std::vector<Subject> subjects;

  std::size_t size() const { return subjects.size(); }
  std::size_t count(Group g) const;
  bool operator==(const CohortTable&) const = default;
};

/// Header: subject_id,group,age,sex,education_years,etiv_mm3 then the 20
/// nucleus columns L_AV..R_MD-Pf. Columns are located by name; extra
/// columns are ignored. Throws FormatError on missing columns or bad cells.
CohortTable parse_cohort_csv(std::string_view text);
CohortTable read_cohort_csv(const std::filesystem::path& path);
std::string format_cohort_csv(const CohortTable& table);
void write_cohort_csv(const CohortTable& table, const std::filesystem::path& path);

/// Rows of `table` in the given groups, in table order.
std::vector<std::size_t> rows_in(const CohortTable& table, std::span<const Group> groups);

/// n x 4 covariates (age, sex as 0=F/1=M, education, eTIV) for the given rows.
Eigen::MatrixXd covariate_matrix(const CohortTable& table, std::span<const std::size_t> rows);

}  // namespace thalbench
