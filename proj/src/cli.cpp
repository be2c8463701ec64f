#include "thalbench/cli.hpp"

#include "thalbench/error.hpp"
#include "thalbench/harmonize.hpp"
#include "thalbench/nifti.hpp"
#include "thalbench/parallel.hpp"
#include "thalbench/phantom.hpp"
#include "thalbench/pipeline.hpp"
#include "thalbench/textio.hpp"

#include <CLI11.hpp>

#include <ostream>
#include <set>

namespace thalbench::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  // shared
  fs::path out;
  std::size_t workers = default_workers();
  std::optional<std::uint64_t> seed;
  double alpha = 0.05;
  // harmonize
  std::string label_map;
  std::vector<fs::path> inputs;
  // evaluate
  fs::path manifest;
  double threshold = kDefaultAtlasThreshold;
  int family_size = 6;
  std::string units = "voxels";
  // clinical
  std::vector<std::string> cohorts;
  std::int64_t draws = 1'000'000;
  bool raw_d = false;
  // phantom
  fs::path spec;
};

int cmd_harmonize(const Options& o, std::ostream& out) {
  const auto map = resolve_label_map(o.label_map);
  std::set<fs::path> names;
  for (const auto& in : o.inputs)
    if (!names.insert(in.filename()).second)
      throw InputError("two inputs share the file name " + in.filename().string());
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw InputError("cannot create output directory " + o.out.string() + ": " + ec.message());

  std::vector<DropTally> tallies(o.inputs.size());
  parallel_for(o.inputs.size(), o.workers, [&](std::size_t i) {
    auto r = remap(nifti::read_volume(o.inputs[i]), map);
    nifti::write_volume(r.volume, o.out / o.inputs[i].filename());
    tallies[i] = std::move(r.tally);
  });

  std::string csv = "file,source_label,cause,voxels\n";
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    const auto name = o.inputs[i].filename().string();
    for (const auto& [cause, m] : {std::pair{"dropped", &tallies[i].dropped}, std::pair{"unmapped", &tallies[i].unmapped}})
      for (const auto& [label, n] : *m)
        csv += name + "," + std::to_string(label) + "," + cause + "," + std::to_string(n) + "\n";
  }
  write_text_file(o.out / "drop_tally.csv", csv);
  out << "harmonized " << o.inputs.size() << " volume(s) with label map " << map.name() << " into " << o.out.string()
      << "\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  BenchmarkConfig cfg;
  cfg.threshold = o.threshold;
  cfg.alpha = o.alpha;
  cfg.family_size = o.family_size;
  if (o.seed) cfg.seed = *o.seed;
  cfg.workers = o.workers;
  cfg.units = o.units == "mm" ? DistanceUnits::kMillimetres : DistanceUnits::kVoxels;
  cfg.validate();
  const auto manifest = load_manifest(o.manifest);
  const auto report = run_benchmark(manifest, cfg);
  emit_report(report, o.out);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  out << "evaluated " << report.methods.size() << " methods on " << report.subjects.size() << " subject(s); report in "
      << o.out.string() << "\n";
  return kExitOk;
}

int cmd_clinical(const Options& o, std::ostream& out) {
  ClinicalConfig cfg;
  cfg.alpha = o.alpha;
  if (o.seed) cfg.seed = *o.seed;
  cfg.draws = o.draws;
  cfg.workers = o.workers;
  cfg.adjusted_d = !o.raw_d;
  cfg.validate();
  std::vector<std::pair<std::string, CohortTable>> cohorts;
  for (const auto& arg : o.cohorts) {
    const auto eq = arg.find('=');
    const fs::path path = eq == std::string::npos ? arg : arg.substr(eq + 1);
    const std::string name = eq == std::string::npos ? path.stem().string() : arg.substr(0, eq);
    if (name.empty()) throw InputError("empty cohort name in '" + arg + "'");
    cohorts.emplace_back(name, read_cohort_csv(path));
  }
  const auto report = run_clinical(cohorts, cfg);
  emit_clinical_report(report, o.out);
  out << "analysed " << report.cohorts.size() << " cohort(s); report in " << o.out.string() << "\n";
  return kExitOk;
}

int cmd_phantom(const Options& o, std::ostream& out) {
  const auto text = read_text_file(o.spec);
  if (phantom::spec_type(text) == "phantom") {
    auto spec = phantom::parse_phantom_spec(text);
    if (o.seed) spec.seed = *o.seed;
    nifti::write_volume(phantom::gen_phantom_volume(spec), o.out);
    out << "wrote phantom volume " << o.out.string() << "\n";
  } else {
    auto spec = phantom::parse_cohort_spec(text);
    if (o.seed) spec.seed = *o.seed;
    write_cohort_csv(phantom::gen_cohort(spec), o.out);
    out << "wrote synthetic cohort " << o.out.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Benchmark thalamic nuclei segmentations and analyse nucleus volumes", "thalbench"};
  app.require_subcommand(1);

  auto add_workers = [&](CLI::App* c) {
    c->add_option("--workers", o.workers, "Worker threads (default: THALBENCH_WORKERS or hardware threads)")
        ->check(CLI::PositiveNumber);
  };

  auto* h = app.add_subcommand("harmonize", "Remap label volumes to the unified 20-nucleus codes");
  h->add_option("--label-map", o.label_map, "Builtin map name (identity, freesurfer, krauth) or TSV path")
      ->required();
  h->add_option("--out", o.out, "Output directory")->required();
  h->add_option("inputs", o.inputs, "Input NIfTI files")->required()->check(CLI::ExistingFile);
  add_workers(h);

  auto* e = app.add_subcommand("evaluate", "Score segmentation methods against a reference");
  e->add_option("--manifest", o.manifest, "Manifest JSON")->required();
  e->add_option("--threshold", o.threshold, "Atlas binarization threshold")->capture_default_str();
  e->add_option("--alpha", o.alpha, "Significance level")->capture_default_str();
  e->add_option("--family-size", o.family_size, "Bonferroni family size")->capture_default_str();
  e->add_option("--seed", o.seed, "Seed recorded in the report");
  e->add_option("--units", o.units, "Distance units")->capture_default_str()->check(CLI::IsMember({"voxels", "mm"}));
  e->add_option("--out", o.out, "Output directory")->required();
  add_workers(e);

  auto* c = app.add_subcommand("clinical", "Atrophy effect maps and discrimination AUC for cohort tables");
  c->add_option("--cohort", o.cohorts, "Cohort CSV as [name=]path; repeatable")->required();
  c->add_option("--alpha", o.alpha, "Significance level")->capture_default_str();
  c->add_option("--seed", o.seed, "Monte Carlo seed");
  c->add_option("--draws", o.draws, "Monte Carlo draws for Dunnett p-values")->capture_default_str();
  c->add_flag("--raw-d", o.raw_d, "Report unadjusted Cohen's d as the headline effect");
  c->add_option("--out", o.out, "Output directory")->required();
  add_workers(c);

  auto* p = app.add_subcommand("phantom", "Generate a phantom volume or a synthetic cohort from a spec");
  p->add_option("--spec", o.spec, "Phantom or cohort spec JSON")->required();
  p->add_option("--seed", o.seed, "Override the spec seed");
  p->add_option("--out", o.out, "Output NIfTI file (phantom) or CSV file (cohort)")->required();

  std::vector<std::string> storage{"thalbench"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (h->parsed()) return cmd_harmonize(o, out);
    if (e->parsed()) return cmd_evaluate(o, out, err);
    if (c->parsed()) return cmd_clinical(o, out);
    return cmd_phantom(o, out);
  } catch (const InputError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace thalbench::cli
