#include "doctest.h"

#include "thalbench/error.hpp"
#include "thalbench/harmonize.hpp"

#include <random>
#include <set>

using namespace thalbench;

namespace {

std::vector<Label> sources_for(const LabelMap& m, const std::string& column) {
  std::vector<Label> out;
  for (const auto& [src, tgt] : m.entries())
    if (tgt && tgt->name() == column) out.push_back(src);
  return out;
}

}  // namespace

TEST_CASE("nucleus codes") {
  CHECK(NucleusId{Nucleus::AV, Hemisphere::L}.code() == 1);
  CHECK(NucleusId{Nucleus::MDPf, Hemisphere::L}.code() == 10);
  CHECK(NucleusId{Nucleus::AV, Hemisphere::R}.code() == 11);
  CHECK(NucleusId{Nucleus::MDPf, Hemisphere::R}.code() == 20);
  std::set<std::string> names;
  for (Label c = 1; c <= 20; ++c) {
    CHECK(NucleusId::from_code(c).code() == c);
    names.insert(nucleus_column(c));
  }
  CHECK(names.size() == 20);
  CHECK(nucleus_column(10) == "L_MD-Pf");
  CHECK_THROWS_AS(NucleusId::from_code(21), DomainError);
}

TEST_CASE("builtin freesurfer map mirrors the combination table") {
  const auto fs = builtin_label_map("freesurfer");
  CHECK(fs.name() == "freesurfer");
  CHECK(sources_for(fs, "L_VA") == std::vector<Label>{8125, 8126});  // VApc + VAmc
  CHECK(sources_for(fs, "L_Pul") == std::vector<Label>{8119, 8120, 8121, 8122});
  CHECK(sources_for(fs, "R_MD-Pf") == std::vector<Label>{8212, 8213, 8218});  // MDl, MDm, Pf
  CHECK(sources_for(fs, "L_AV").size() == 1);
  // Lateral dorsal and centrolateral are outside the unified scheme.
  CHECK(fs.contains(8108));
  CHECK(fs.target_code(8108) == 0);
  CHECK(fs.target_code(8105) == 0);
}

TEST_CASE("builtin krauth map") {
  const auto kr = builtin_label_map("krauth");
  CHECK(sources_for(kr, "L_Pul").size() == 4);
  CHECK(sources_for(kr, "L_VLp").size() == 3);  // VLpd, VLpv, VLp
  CHECK(sources_for(kr, "R_MD-Pf").size() == 4);
  CHECK(sources_for(kr, "L_LGN").size() == 2);
  CHECK(sources_for(kr, "L_VPL").size() == 2);
  for (Label c = 1; c <= 20; ++c) CHECK_FALSE(sources_for(kr, nucleus_column(c)).empty());
}

TEST_CASE("label map parse errors") {
  CHECK_THROWS_AS(parse_label_map("# scheme: x\n7\tAV\tL\n7\tVA\tL\n"), FormatError);
  CHECK_THROWS_AS(parse_label_map("# scheme: x\n7\tXYZ\tL\n"), FormatError);
  CHECK_THROWS_AS(parse_label_map("# scheme: x\n7\tAV\tM\n"), FormatError);
  CHECK_THROWS_AS(parse_label_map("7\tAV\tL\n"), FormatError);
  CHECK_THROWS_AS(parse_label_map("# scheme: x\nseven\tAV\tL\n"), FormatError);
  CHECK_THROWS_AS(parse_label_map("# scheme: x\n# covers: L_AV,L_VA\n7\tAV\tL\n"), FormatError);

  const auto ok = parse_label_map("# scheme: tiny\n# covers: L_AV\n7\tAV\tL\t# comment\n8\tDROP\n\n");
  CHECK(ok.name() == "tiny");
  CHECK(ok.target_code(7) == 1);
  CHECK(ok.contains(8));
  CHECK_THROWS_AS(load_label_map("/nonexistent/map.tsv"), InputError);
  CHECK_THROWS_AS(resolve_label_map("builtin:nope"), InputError);
}

TEST_CASE("remap merges MDl, MDm and Pf into MD-Pf") {
  const auto fs = builtin_label_map("freesurfer");
  LabelVolume v(VolumeGeometry({4, 1, 1}, {1, 1, 1}), std::vector<Label>{8112, 8113, 8118, 0});
  const auto r = remap(v, fs);
  const Label md_pf = NucleusId{Nucleus::MDPf, Hemisphere::L}.code();
  CHECK(voxel_set(r.volume, md_pf).size() == 3);
  CHECK(r.volume.labels()[3] == 0);
}

TEST_CASE("remap drops omitted structures and tallies them") {
  const auto kr = builtin_label_map("krauth");
  // 122 = left Hb, 123 = left MTT, 101 = left AV; 999 is unknown to the map.
  LabelVolume v(VolumeGeometry({5, 1, 1}, {1, 1, 1}), std::vector<Label>{122, 123, 101, 999, 999});
  const auto r = remap(v, kr);
  CHECK(r.volume.labels()[0] == 0);
  CHECK(r.volume.labels()[1] == 0);
  CHECK(r.volume.labels()[2] == 1);
  CHECK(r.tally.dropped.at(122) == 1);
  CHECK(r.tally.dropped.at(123) == 1);
  CHECK(r.tally.unmapped.at(999) == 2);
}

TEST_CASE("remap properties on random volumes") {
  std::mt19937 rng(3);
  const auto fs = builtin_label_map("freesurfer");
  std::vector<Label> pool;
  for (const auto& [src, tgt] : fs.entries()) pool.push_back(src);
  pool.push_back(0);
  pool.push_back(12345);

  for (int trial = 0; trial < 20; ++trial) {
    const VolumeGeometry g({8, 7, 6}, {1, 1, 1});
    std::vector<Label> labels(g.voxel_count());
    for (auto& l : labels) l = pool[rng() % pool.size()];
    const LabelVolume v(g, labels);
    const auto r = remap(v, fs);

    // Codes stay in {0} U {1..20}.
    for (auto l : r.volume.labels()) CHECK(l <= 20);
    // Merging conserves voxel counts.
    for (Label c = 1; c <= 20; ++c) {
      std::int64_t expected = 0;
      for (auto src : sources_for(fs, nucleus_column(c))) expected += label_voxel_count(v, src);
      CHECK(label_voxel_count(r.volume, c) == expected);
    }
    // Identity is idempotent on harmonized volumes.
    const auto again = remap(r.volume, identity_label_map());
    CHECK(again.volume == r.volume);
    CHECK(again.tally.dropped.empty());
    CHECK(again.tally.unmapped.empty());
  }
}

TEST_CASE("remap handles large sparse source labels") {
  auto m = parse_label_map("# scheme: wide\n4000000\tCM\tR\n");
  LabelVolume v(VolumeGeometry({3, 1, 1}, {1, 1, 1}), std::vector<Label>{4000000, 5000000, 0});
  const auto r = remap(v, m);
  CHECK(r.volume.labels()[0] == NucleusId{Nucleus::CM, Hemisphere::R}.code());
  CHECK(r.tally.unmapped.at(5000000) == 1);
}
