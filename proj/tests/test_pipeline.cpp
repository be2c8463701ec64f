#include <doctest.h>

#include "fixture.hpp"
#include "thalbench/error.hpp"
#include "thalbench/pipeline.hpp"

#include <json.hpp>

using namespace thalbench;
namespace fs = std::filesystem;

TEST_CASE("manifest parsing") {
  const auto ok = R"({
    "reference": {"subject_space": {"b": "ref/b.nii", "a": "/abs/a.nii"}, "mni_space": "ref/mni.nii"},
    "methods": [
      {"name": "m1", "subject_space": {"a": "a1.nii", "b": "b1.nii"}, "mni_space": {"a": "x.nii"}},
      {"name": "m2", "label_map": "freesurfer", "subject_space": {"a": "a2.nii", "b": "b2.nii"},
       "mni_space": {"a": "y.nii"}}
    ]})";
  const auto m = parse_manifest(ok, "/data");
  CHECK(m.subjects == std::vector<std::string>{"a", "b"});
  CHECK(m.has_mni());
  CHECK(m.reference.subject_space.at("a") == fs::path("/abs/a.nii"));
  CHECK(m.reference.subject_space.at("b") == fs::path("/data/ref/b.nii"));
  CHECK(m.methods[1].label_map == "freesurfer");
  CHECK(m.methods[0].label_map == "identity");
  CHECK(m.base_dir == fs::path("/data"));

  CHECK_THROWS_AS(parse_manifest("{", "."), FormatError);
  CHECK_THROWS_AS(parse_manifest(R"({"reference": {"subject_space": {"a": "x"}}, "methods": [], "extra": 1})", "."),
                  FormatError);
  CHECK_THROWS_AS(parse_manifest(R"({"reference": {"subject_space": {"a": "x"}}, "methods": []})", "."), InputError);
  // A method missing a subject.
  CHECK_THROWS_AS(parse_manifest(R"({"reference": {"subject_space": {"a": "x", "b": "y"}},
                                     "methods": [{"name": "m", "subject_space": {"a": "z"}}]})",
                                 "."),
                  InputError);
  // Duplicate names.
  CHECK_THROWS_AS(parse_manifest(R"({"reference": {"subject_space": {"a": "x"}},
                                     "methods": [{"name": "m", "subject_space": {"a": "z"}},
                                                 {"name": "m", "subject_space": {"a": "w"}}]})",
                                 "."),
                  InputError);
  // MNI reference without MNI method inputs.
  CHECK_THROWS_AS(parse_manifest(R"({"reference": {"subject_space": {"a": "x"}, "mni_space": "m.nii"},
                                     "methods": [{"name": "m", "subject_space": {"a": "z"}}]})",
                                 "."),
                  InputError);
  CHECK(file_stem("HIPS THOMAS/v2") == "HIPS_THOMAS_v2");
  CHECK_THROWS_AS(file_stem(""), InputError);
}

TEST_CASE("benchmark on phantoms: the exact copy ranks first everywhere") {
  const auto dir = fixture::scratch("pipeline-basic");
  const auto manifest = fixture::write_benchmark(dir / "data");
  BenchmarkConfig cfg;
  const auto rep = run_benchmark(load_manifest(manifest), cfg);
  REQUIRE(rep.methods == std::vector<std::string>{"exact", "shifted", "eroded", "custom"});
  REQUIRE(rep.subjects.size() == 4);

  for (int c = 0; c < kNucleusCount; ++c) {
    REQUIRE(rep.dice_ranks[c]);
    REQUIRE(rep.ahd_ranks[c]);
    CHECK(rep.dice_ranks[c]->ranks[0] == 1);
    CHECK(rep.dice_ranks[c]->ranks[3] == 1);
    CHECK(rep.ahd_ranks[c]->ranks[0] == 1);
    CHECK(rep.dice_ranks[c]->means[0] == 1.0);
    CHECK(rep.dice_ranks[c]->means[1] < 1.0);
    for (std::size_t s = 0; s < rep.subjects.size(); ++s) {
      CHECK(rep.metrics[0][s].nuclei[c].distance->ahd == 0.0);
      // A one-voxel shift moves every boundary point by at most one voxel.
      CHECK(rep.metrics[1][s].nuclei[c].distance->ahd <= 1.0);
    }
    REQUIRE(rep.best[c]);
    // exact and custom are indistinguishable in both spaces.
    CHECK(rep.best[c]->outcome == bench::BestOutcome::kJoint);
    CHECK(rep.best[c]->winners == std::vector<int>{0, 3});
  }
  CHECK(rep.drop_tallies.size() == 5);
  CHECK(rep.drop_tallies[3].dropped.at(999) == 4);
  CHECK(rep.drop_tallies[0].dropped.empty());
  CHECK(rep.mni.size() == 4);
  CHECK(rep.mni[0].atlas_subjects == 4);
  for (int i = 0; i < kNucleusCount; ++i) CHECK(rep.mni[0].matrix.dice(i, i) == rep.mni[3].matrix.dice(i, i));
  CHECK(rep.dice_anova.size() == 10);
  for (const auto& a : rep.dice_anova) {
    REQUIRE(a.result);
    CHECK(a.result->a.df_num_uncorrected == 3.0);
  }
  CHECK(rep.warnings.empty());

  emit_report(rep, dir / "out");
  for (const char* f : {"report.json", "subject_metrics.csv", "ranks_dice.csv", "ranks_ahd.csv", "pairwise_dice.csv",
                        "rank_summary.csv", "agreement.csv", "best_method.csv", "anova.csv", "mni_dice_exact.csv",
                        "mni_ahd_custom.svg", "mni_dice_shifted.svg"})
    CHECK_MESSAGE(fs::exists(dir / "out" / f), f);
  const auto j = nlohmann::json::parse(read_text_file(dir / "out" / "report.json"));
  CHECK(j.at("version") == kReportVersion);
  CHECK(j.at("metadata").at("atlas_threshold") == 0.25);
  CHECK(j.at("metadata").at("computation_spaces").size() == 2);
  const auto csv = read_text_file(dir / "out" / "subject_metrics.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 4 * 20);
}

TEST_CASE("benchmark output is identical across worker counts and reruns") {
  const auto dir = fixture::scratch("pipeline-determinism");
  const auto manifest = load_manifest(fixture::write_benchmark(dir / "data", {3, true}));
  BenchmarkConfig cfg;
  emit_report(run_benchmark(manifest, cfg), dir / "w1");
  cfg.workers = 4;
  emit_report(run_benchmark(manifest, cfg), dir / "w4");
  emit_report(run_benchmark(manifest, cfg), dir / "w4b");
  CHECK(fixture::same_tree(dir / "w1", dir / "w4"));
  CHECK(fixture::same_tree(dir / "w4", dir / "w4b"));
}

TEST_CASE("single subject skips ranking; missing MNI skips atlas work") {
  const auto dir = fixture::scratch("pipeline-single");
  const auto rep = run_benchmark(load_manifest(fixture::write_benchmark(dir / "data", {1, false})), {});
  for (int c = 0; c < kNucleusCount; ++c) {
    CHECK_FALSE(rep.dice_ranks[c]);
    CHECK_FALSE(rep.best[c]);
  }
  CHECK(rep.mni.empty());
  CHECK(rep.warnings.size() == 2);
  CHECK(rep.metrics[1][0].nuclei[0].overlap.dice < 1.0);
  emit_report(rep, dir / "out");
  CHECK(fs::exists(dir / "out" / "subject_metrics.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "mni_dice_exact.svg"));

  BenchmarkReport empty;
  CHECK_THROWS_AS(emit_report(empty, dir / "empty"), InputError);
}

TEST_CASE("benchmark input errors") {
  const auto dir = fixture::scratch("pipeline-errors");
  const auto path = fixture::write_benchmark(dir / "data", {2, false});
  auto m = load_manifest(path);
  BenchmarkConfig cfg;
  cfg.threshold = 0.0;
  CHECK_THROWS_AS(run_benchmark(m, cfg), InputError);
  auto one = m;
  one.methods.resize(1);
  CHECK_THROWS_AS(run_benchmark(one, {}), InputError);
  fs::remove(dir / "data" / "shifted" / "sub-2.nii");
  CHECK_THROWS_AS(run_benchmark(m, {}), InputError);

  // A segmentation on a different grid.
  auto small = phantom::default_thalamus_phantom(0, 0.0);
  small.geometry = VolumeGeometry({50, 50, 32}, small.geometry.spacing);
  nifti::write_volume(phantom::gen_phantom_volume(small), dir / "data" / "shifted" / "sub-2.nii");
  CHECK_THROWS_AS(run_benchmark(m, {}), GeometryMismatch);
}

TEST_CASE("clinical pipeline") {
  const auto dir = fixture::scratch("pipeline-clinical");
  ClinicalConfig cfg;
  cfg.draws = 20'000;
  const std::vector<std::pair<std::string, CohortTable>> cohorts{
      {"planted", phantom::gen_cohort(fixture::planted_cohort(1))},
      {"null", phantom::gen_cohort(phantom::CohortSpec{})}};
  const auto rep = run_clinical(cohorts, cfg);
  REQUIRE(rep.cohorts.size() == 2);
  CHECK(rep.cohorts[0].auc.size() == 6);
  const Label lpul = NucleusId{Nucleus::Pul, Hemisphere::L}.code();
  CHECK(rep.cohorts[0].effects.nuclei[lpul - 1].comparisons[2].shown);

  emit_clinical_report(rep, dir / "a");
  cfg.workers = 4;
  emit_clinical_report(run_clinical(cohorts, cfg), dir / "b");
  CHECK(fixture::same_tree(dir / "a", dir / "b"));
  for (const char* f : {"effects.csv", "auc.csv", "roc_curves.csv", "clinical_report.json", "effects_planted.svg"})
    CHECK_MESSAGE(fs::exists(dir / "a" / f), f);

  auto missing = cohorts[0].second;
  std::erase_if(missing.subjects, [](const Subject& s) { return s.group == Group::EMCI; });
  CHECK_THROWS_AS(run_clinical({{"x", missing}}, cfg), InputError);
  CHECK_THROWS_AS(run_clinical({{"x", cohorts[0].second}, {"x", cohorts[1].second}}, cfg), InputError);
  CHECK_THROWS_AS(run_clinical({}, cfg), InputError);
}
