#pragma once

#include "thalbench/volume.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace thalbench {

/// The ten nuclei of the unified nomenclature, in code order.
enum class Nucleus : std::uint8_t { AV, VA, VLa, VLp, VPL, Pul, LGN, MGN, CM, MDPf };
enum class Hemisphere : std::uint8_t { L, R };

inline constexpr int kNucleiPerHemisphere = 10;
inline constexpr int kNucleusCount = 20;

inline constexpr std::array<std::string_view, kNucleiPerHemisphere> kNucleusNames{
    "AV", "VA", "VLa", "VLp", "VPL", "Pul", "LGN", "MGN", "CM", "MD-Pf"};

/// A nucleus in one hemisphere. Encoded as 1-10 (left) and 11-20 (right)
/// in harmonized volumes.
struct NucleusId {
  Nucleus nucleus = Nucleus::AV;
  Hemisphere hemisphere = Hemisphere::L;

  Label code() const {
    return static_cast<Label>(nucleus) + 1 + (hemisphere == Hemisphere::R ? kNucleiPerHemisphere : 0);
  }
  static NucleusId from_code(Label code);
  std::string name() const;  // e.g. "L_MD-Pf"

  bool operator==(const NucleusId&) const = default;
};

std::optional<Nucleus> parse_nucleus(std::string_view name);
/// Column name for harmonized code 1..20, e.g. "L_AV".
std::string nucleus_column(Label code);

/// Source label -> harmonized nucleus, or DROP (std::nullopt).
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  const std::map<Label, std::optional<NucleusId>>& entries() const { return entries_; }

  /// Throws InputError if the source label is already present.
  void add(Label source, std::optional<NucleusId> target);
  /// Target code for a source label: 0 for DROP or unmapped.
  Label target_code(Label source) const;
  bool contains(Label source) const { return entries_.contains(source); }

 private:
  std::string name_;
  std::map<Label, std::optional<NucleusId>> entries_;
};

struct DropTally {
  /// Voxels per source label that were mapped to background, split by cause.
  std::map<Label, std::int64_t> dropped;
  std::map<Label, std::int64_t> unmapped;
};

struct RemapResult {
  LabelVolume volume;
  DropTally tally;
};

LabelMap parse_label_map(std::string_view text);
LabelMap load_label_map(const std::filesystem::path& path);

/// Identity on codes 1..20.
LabelMap identity_label_map();
/// Shipped maps: "freesurfer", "krauth", "identity".
LabelMap builtin_label_map(std::string_view name);
/// Accepts "builtin:<name>", a bare builtin name, or a file path.
LabelMap resolve_label_map(std::string_view spec);

RemapResult remap(const LabelVolume& v, const LabelMap& m);

}  // namespace thalbench
