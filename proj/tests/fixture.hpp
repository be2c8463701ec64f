#pragma once

// On-disk benchmark datasets and cohort tables built from phantoms.

#include "thalbench/harmonize.hpp"
#include "thalbench/nifti.hpp"
#include "thalbench/phantom.hpp"
#include "thalbench/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace fixture {

namespace fs = std::filesystem;
using namespace thalbench;

inline fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "thalbench-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline LabelVolume shift_all(const LabelVolume& v, Index3 offset) {
  LabelVolume out = v;
  for (Label c = 1; c <= kNucleusCount; ++c) out = phantom::perturb(out, phantom::Translate{offset}, c);
  return out;
}

inline LabelVolume erode_all(const LabelVolume& v) {
  LabelVolume out = v;
  for (Label c = 1; c <= kNucleusCount; ++c) out = phantom::perturb(out, phantom::Erode{1}, c);
  return out;
}

// Codes 1..20 become 500 + code; one stray voxel carries label 999, which
// the custom map drops.
inline LabelVolume encode_custom(const LabelVolume& v) {
  std::vector<Label> labels(v.labels().begin(), v.labels().end());
  for (auto& l : labels)
    if (l) l += 500;
  labels.front() = 999;
  return LabelVolume(v.geometry(), std::move(labels), v.orientation());
}

inline std::string custom_map_tsv() {
  std::string s = "# scheme: offset500\n";
  for (Label c = 1; c <= kNucleusCount; ++c) {
    const auto id = NucleusId::from_code(c);
    s += std::to_string(500 + c) + "\t" + std::string(kNucleusNames[static_cast<int>(id.nucleus)]) + "\t" +
         (id.hemisphere == Hemisphere::L ? "L" : "R") + "\n";
  }
  return s + "999\tDROP\tL\n";
}

struct Options {
  int subjects = 4;
  bool mni = true;
};

/// Methods: "exact" (copy of the reference), "shifted" (every nucleus moved
/// one voxel along x), "eroded" (one 6-connected erosion) and "custom"
/// (the reference stored with labels 501..520 plus a dropped stray label).
/// Returns the manifest path.
inline fs::path write_benchmark(const fs::path& dir, const Options& opt = {}) {
  const std::vector<std::string> methods{"exact", "shifted", "eroded", "custom"};
  for (const auto& m : methods) fs::create_directories(dir / m);
  fs::create_directories(dir / "reference");
  write_text_file(dir / "offset500.tsv", custom_map_tsv());

  nlohmann::ordered_json j;
  j["reference"]["label_map"] = "identity";
  for (const auto& m : methods) {
    nlohmann::ordered_json mj;
    mj["name"] = m;
    mj["label_map"] = m == "custom" ? "offset500.tsv" : "identity";
    j["methods"].push_back(mj);
  }

  // MNI-space inputs are the template itself passed through each method,
  // i.e. perfectly registered subjects.
  const auto tmpl = phantom::gen_phantom_volume(phantom::default_thalamus_phantom(0, 0.0));
  if (opt.mni) {
    fs::create_directories(dir / "mni");
    nifti::write_volume(tmpl, dir / "reference" / "mni.nii");
    j["reference"]["mni_space"] = "reference/mni.nii";
    nifti::write_volume(tmpl, dir / "mni" / "exact.nii");
    nifti::write_volume(shift_all(tmpl, Index3(1, 0, 0)), dir / "mni" / "shifted.nii");
    nifti::write_volume(erode_all(tmpl), dir / "mni" / "eroded.nii");
    nifti::write_volume(encode_custom(tmpl), dir / "mni" / "custom.nii");
  }

  for (int s = 0; s < opt.subjects; ++s) {
    const std::string id = "sub-" + std::to_string(s + 1);
    const auto ref = phantom::gen_phantom_volume(phantom::default_thalamus_phantom(1000 + s, 1.0));
    const std::string file = id + ".nii";
    nifti::write_volume(ref, dir / "reference" / file);
    j["reference"]["subject_space"][id] = "reference/" + file;
    nifti::write_volume(ref, dir / "exact" / file);
    nifti::write_volume(shift_all(ref, Index3(1, 0, 0)), dir / "shifted" / file);
    nifti::write_volume(erode_all(ref), dir / "eroded" / file);
    nifti::write_volume(encode_custom(ref), dir / "custom" / file);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      j["methods"][m]["subject_space"][id] = methods[m] + "/" + file;
      if (opt.mni) j["methods"][m]["mni_space"][id] = "mni/" + methods[m] + ".nii";
    }
  }
  const auto manifest = dir / "manifest.json";
  write_text_file(manifest, j.dump(2) + "\n");
  return manifest;
}

inline phantom::CohortSpec planted_cohort(std::uint64_t seed, int n = 100) {
  phantom::CohortSpec spec;
  spec.seed = seed;
  spec.counts = {n, n, n, n};
  for (Hemisphere h : {Hemisphere::L, Hemisphere::R})
    spec.factors[static_cast<int>(Group::AD)][NucleusId{Nucleus::Pul, h}.code() - 1] = 0.9;
  return spec;
}

/// Byte-level comparison of two directory trees (names and contents).
inline bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb || fa.empty()) return false;
  for (const auto& f : fa)
    if (read_text_file(a / f) != read_text_file(b / f)) return false;
  return true;
}

}  // namespace fixture
