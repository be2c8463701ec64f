#include "thalbench/pipeline.hpp"

#include "thalbench/error.hpp"
#include "thalbench/format.hpp"
#include "thalbench/nifti.hpp"
#include "thalbench/parallel.hpp"
#include "thalbench/svg.hpp"
#include "thalbench/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace thalbench {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_num(double v) { return std::isnan(v) ? "NA" : format_number(v); }

// JSON has no NaN or infinity; those become null and a separate field (such
// as a t-test outcome) carries the meaning.
ojson jnum(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

template <typename... Cells>
std::string csv_row(const Cells&... cells) {
  std::string out;
  ((out += (out.empty() ? "" : ",") + std::string(cells)), ...);
  return out + "\n";
}

std::string_view outcome_name(stats::TTestOutcome o) {
  switch (o) {
    case stats::TTestOutcome::kRegular: return "regular";
    case stats::TTestOutcome::kInfiniteT: return "infinite_t";
    case stats::TTestOutcome::kAllZero: return "all_zero";
  }
  return "?";
}

std::string_view units_name(DistanceUnits u) { return u == DistanceUnits::kVoxels ? "voxels" : "mm"; }

// Manifest parsing ----------------------------------------------------------

void check_keys(const ojson& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + " must be an object");
  for (const auto& [key, val] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw FormatError("unknown key '" + key + "' in " + where);
}

std::map<std::string, fs::path> path_map(const ojson& j, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + " must map subject ids to file paths");
  std::map<std::string, fs::path> out;
  for (const auto& [key, val] : j.items()) {
    if (key.empty()) throw FormatError(where + " has an empty subject id");
    if (!val.is_string()) throw FormatError(where + "." + key + " must be a path string");
    out.emplace(key, val.get<std::string>());
  }
  return out;
}

std::string label_map_field(const ojson& j) {
  if (!j.contains("label_map")) return "identity";
  if (!j.at("label_map").is_string()) throw FormatError("label_map must be a string");
  return j.at("label_map").get<std::string>();
}

fs::path resolve_path(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

// Label maps given as relative file paths resolve against the manifest.
LabelMap resolve_map(const std::string& spec, const fs::path& base) {
  if (spec.starts_with("builtin:") || spec == "identity" || spec == "freesurfer" || spec == "krauth")
    return resolve_label_map(spec);
  return load_label_map(resolve_path(spec, base));
}


// Benchmark helpers -----------------------------------------------------------

void merge_tally(DropTally& into, const DropTally& from) {
  for (const auto& [k, v] : from.dropped) into.dropped[k] += v;
  for (const auto& [k, v] : from.unmapped) into.unmapped[k] += v;
}

LabelVolume load_harmonized(const fs::path& path, const LabelMap& map, DropTally& tally) {
  auto r = remap(nifti::read_volume(path), map);
  merge_tally(tally, r.tally);
  return std::move(r.volume);
}

std::vector<std::string> nucleus_labels() {
  std::vector<std::string> out;
  for (Label c = 1; c <= kNucleusCount; ++c) out.push_back(nucleus_column(c));
  return out;
}

ojson rank_row_json(const bench::RankRow& row, const std::vector<std::string>& methods, Label code) {
  ojson j;
  j["nucleus"] = nucleus_column(code);
  j["methods"] = ojson::array();
  for (std::size_t m = 0; m < methods.size(); ++m)
    j["methods"].push_back({{"method", methods[m]}, {"mean", jnum(row.means[static_cast<Eigen::Index>(m)])},
                            {"rank", row.ranks[m]}});
  j["pairs"] = ojson::array();
  for (const auto& p : row.pairs)
    j["pairs"].push_back({{"a", methods[p.a]},
                          {"b", methods[p.b]},
                          {"t", jnum(p.test.t)},
                          {"df", p.test.df},
                          {"p_raw", p.test.p_raw},
                          {"p_adjusted", p.test.p_adjusted},
                          {"mean_diff", p.test.mean_diff},
                          {"outcome", outcome_name(p.test.outcome)},
                          {"better", p.better < 0 ? ojson(nullptr) : ojson(methods[p.better])}});
  return j;
}

ojson anova_effect_json(const stats::AnovaEffect& e) {
  return {{"F", jnum(e.F)},           {"df_num", e.df_num},   {"df_den", e.df_den},
          {"df_num_uncorrected", e.df_num_uncorrected},       {"df_den_uncorrected", e.df_den_uncorrected},
          {"epsilon", e.epsilon},     {"p", e.p},             {"ges", jnum(e.ges)},
          {"ss", e.ss},               {"ss_error", e.ss_error}};
}

ojson anova_json(const std::vector<NucleusAnova>& rows) {
  ojson arr = ojson::array();
  for (const auto& a : rows) {
    ojson j{{"nucleus", std::string(kNucleusNames[static_cast<int>(a.nucleus)])}, {"subjects", a.subjects_used}};
    if (a.result) {
      j["method"] = anova_effect_json(a.result->a);
      j["hemisphere"] = anova_effect_json(a.result->b);
      j["method_x_hemisphere"] = anova_effect_json(a.result->ab);
    } else {
      j["skipped"] = true;
    }
    arr.push_back(j);
  }
  return arr;
}

}  // namespace

std::string file_stem(std::string_view name) {
  if (name.empty()) throw InputError("empty name");
  std::string out;
  for (char c : name)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

bool Manifest::has_mni() const { return reference.mni_space.contains(""); }

Manifest parse_manifest(std::string_view json_text, const fs::path& base_dir) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  check_keys(j, {"reference", "methods", "description"}, "manifest");
  if (!j.contains("reference") || !j.contains("methods")) throw FormatError("manifest needs reference and methods");

  Manifest m;
  m.base_dir = base_dir;
  const auto& ref = j.at("reference");
  check_keys(ref, {"name", "label_map", "subject_space", "mni_space"}, "reference");
  m.reference.name = ref.contains("name") ? ref.at("name").get<std::string>() : "reference";
  m.reference.label_map = label_map_field(ref);
  if (!ref.contains("subject_space")) throw FormatError("reference needs subject_space");
  m.reference.subject_space = path_map(ref.at("subject_space"), "reference.subject_space");
  if (m.reference.subject_space.empty()) throw InputError("manifest lists no subjects");
  if (ref.contains("mni_space")) {
    if (!ref.at("mni_space").is_string()) throw FormatError("reference.mni_space must be a single path");
    m.reference.mni_space.emplace("", ref.at("mni_space").get<std::string>());
  }
  for (const auto& [id, path] : m.reference.subject_space) m.subjects.push_back(id);

  const auto& methods = j.at("methods");
  if (!methods.is_array()) throw FormatError("methods must be an array");
  std::set<std::string> names, stems;
  for (const auto& mj : methods) {
    check_keys(mj, {"name", "label_map", "subject_space", "mni_space"}, "method");
    MethodInputs mi;
    if (!mj.contains("name") || !mj.at("name").is_string()) throw FormatError("every method needs a name");
    mi.name = mj.at("name").get<std::string>();
    if (!names.insert(mi.name).second) throw InputError("duplicate method name '" + mi.name + "'");
    if (!stems.insert(file_stem(mi.name)).second)
      throw InputError("method names '" + mi.name + "' and another map to the same file name");
    mi.label_map = label_map_field(mj);
    if (!mj.contains("subject_space")) throw FormatError("method " + mi.name + " needs subject_space");
    mi.subject_space = path_map(mj.at("subject_space"), mi.name + ".subject_space");
    for (const auto& id : m.subjects)
      if (!mi.subject_space.contains(id)) throw InputError("method " + mi.name + " is missing subject " + id);
    for (const auto& [id, path] : mi.subject_space)
      if (!m.reference.subject_space.contains(id))
        throw InputError("method " + mi.name + " lists subject " + id + " that the reference lacks");
    if (mj.contains("mni_space")) mi.mni_space = path_map(mj.at("mni_space"), mi.name + ".mni_space");
    if (m.has_mni() && mi.mni_space.empty())
      throw InputError("reference has an MNI-space atlas but method " + mi.name + " has no MNI-space inputs");
    m.methods.push_back(std::move(mi));
  }
  if (m.methods.empty()) throw InputError("manifest lists no methods");

  // Resolve file paths against the manifest directory.
  auto resolve_all = [&](MethodInputs& mi) {
    for (auto& [id, p] : mi.subject_space) p = resolve_path(p, base_dir);
    for (auto& [id, p] : mi.mni_space) p = resolve_path(p, base_dir);
  };
  resolve_all(m.reference);
  for (auto& mi : m.methods) resolve_all(mi);
  return m;
}

Manifest load_manifest(const fs::path& path) {
  const auto text = read_text_file(path);
  return parse_manifest(text, path.parent_path());
}

void BenchmarkConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InputError("threshold must lie in (0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (family_size < 1) throw InputError("family size must be >= 1");
  if (workers < 1) throw InputError("workers must be >= 1");
}

BenchmarkReport run_benchmark(const Manifest& manifest, const BenchmarkConfig& config) {
  config.validate();
  if (manifest.methods.size() < 2) throw InputError("evaluation needs at least two methods");

  BenchmarkReport rep;
  rep.config = config;
  rep.subjects = manifest.subjects;
  const auto nm = manifest.methods.size(), ns = manifest.subjects.size();

  const LabelMap ref_map = resolve_map(manifest.reference.label_map, manifest.base_dir);
  std::vector<LabelMap> maps;
  for (const auto& mi : manifest.methods) {
    rep.methods.push_back(mi.name);
    rep.method_label_maps.push_back(mi.label_map);
    maps.push_back(resolve_map(mi.label_map, manifest.base_dir));
  }
  rep.reference_label_map = manifest.reference.label_map;

  std::vector<LabelVolume> refs(ns);
  std::vector<DropTally> ref_tallies(ns);
  parallel_for(ns, config.workers, [&](std::size_t s) {
    refs[s] = load_harmonized(manifest.reference.subject_space.at(manifest.subjects[s]), ref_map, ref_tallies[s]);
  });

  rep.metrics.assign(nm, std::vector<SubjectMetrics>(ns));
  std::vector<DropTally> tallies(nm * ns);
  parallel_for(nm * ns, config.workers, [&](std::size_t k) {
    const std::size_t m = k / ns, s = k % ns;
    const auto seg =
        load_harmonized(manifest.methods[m].subject_space.at(manifest.subjects[s]), maps[m], tallies[k]);
    try {
      rep.metrics[m][s].nuclei = nucleus_metrics(seg, refs[s], config.units);
    } catch (const GeometryMismatch& e) {
      throw GeometryMismatch("method " + manifest.methods[m].name + ", subject " + manifest.subjects[s] + ": " +
                             e.what());
    }
  });
  rep.drop_tallies.assign(nm + 1, {});
  for (std::size_t k = 0; k < nm * ns; ++k) merge_tally(rep.drop_tallies[k / ns], tallies[k]);
  for (const auto& t : ref_tallies) merge_tally(rep.drop_tallies[nm], t);

  rep.dice_ranks.assign(kNucleusCount, std::nullopt);
  rep.ahd_ranks.assign(kNucleusCount, std::nullopt);
  if (ns < 2) {
    rep.warnings.push_back("only one subject: ranking and ANOVA skipped");
  } else {
    for (int c = 0; c < kNucleusCount; ++c) {
      Eigen::MatrixXd dice_values(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(nm));
      std::vector<Eigen::Index> complete;
      for (std::size_t s = 0; s < ns; ++s) {
        bool all = true;
        for (std::size_t m = 0; m < nm; ++m) {
          const auto& nmx = rep.metrics[m][s].nuclei[c];
          dice_values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(m)) = nmx.overlap.dice;
          all = all && nmx.distance.has_value();
        }
        if (all) complete.push_back(static_cast<Eigen::Index>(s));
      }
      rep.dice_ranks[c] = bench::rank_methods(dice_values, bench::Direction::kHigherIsBetter, config.family_size,
                                              config.alpha);
      if (complete.size() >= 2) {
        Eigen::MatrixXd ahd_values(static_cast<Eigen::Index>(complete.size()), static_cast<Eigen::Index>(nm));
        for (std::size_t r = 0; r < complete.size(); ++r)
          for (std::size_t m = 0; m < nm; ++m)
            ahd_values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) =
                rep.metrics[m][static_cast<std::size_t>(complete[r])].nuclei[c].distance->ahd;
        rep.ahd_ranks[c] =
            bench::rank_methods(ahd_values, bench::Direction::kLowerIsBetter, config.family_size, config.alpha);
        if (complete.size() < ns)
          rep.warnings.push_back(nucleus_column(c + 1) + ": AHD ranking uses " + std::to_string(complete.size()) +
                                 " of " + std::to_string(ns) + " subjects (absent structures)");
      } else {
        rep.warnings.push_back(nucleus_column(c + 1) + ": AHD ranking skipped (absent structures)");
      }
    }
  }

  // Method x hemisphere ANOVA per nucleus.
  auto anova_for = [&](bool use_ahd) {
    std::vector<NucleusAnova> out;
    for (int n = 0; n < kNucleiPerHemisphere; ++n) {
      NucleusAnova a;
      a.nucleus = static_cast<Nucleus>(n);
      std::vector<std::size_t> rows;
      for (std::size_t s = 0; s < ns; ++s) {
        bool ok = true;
        for (std::size_t m = 0; m < nm; ++m)
          for (int h = 0; h < 2; ++h) ok = ok && (!use_ahd || rep.metrics[m][s].nuclei[n + 10 * h].distance);
        if (ok) rows.push_back(s);
      }
      a.subjects_used = rows.size();
      if (rows.size() >= 2) {
        stats::RepeatedMeasures2 d(Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(2 * nm)),
                                   static_cast<int>(nm), 2);
        for (std::size_t r = 0; r < rows.size(); ++r)
          for (std::size_t m = 0; m < nm; ++m)
            for (int h = 0; h < 2; ++h) {
              const auto& x = rep.metrics[m][rows[r]].nuclei[n + 10 * h];
              d(static_cast<Eigen::Index>(r), static_cast<int>(m), h) = use_ahd ? x.distance->ahd : x.overlap.dice;
            }
        a.result = stats::rm_anova_2way(d);
      } else if (ns >= 2) {
        rep.warnings.push_back(std::string(use_ahd ? "AHD" : "Dice") + " ANOVA for " +
                               std::string(kNucleusNames[n]) + " skipped (fewer than two complete subjects)");
      }
      out.push_back(a);
    }
    return out;
  };
  rep.dice_anova = anova_for(false);
  rep.ahd_anova = anova_for(true);

  rep.best.assign(kNucleusCount, std::nullopt);
  if (manifest.has_mni()) {
    DropTally unused;
    const auto ref_mni = load_harmonized(manifest.reference.mni_space.at(""), ref_map, unused);
    for (std::size_t m = 0; m < nm; ++m) {
      const auto& files = manifest.methods[m].mni_space;
      std::vector<LabelVolume> group(files.size());
      std::vector<DropTally> t(files.size());
      std::vector<fs::path> paths;
      for (const auto& [id, p] : files) paths.push_back(p);
      parallel_for(paths.size(), config.workers,
                   [&](std::size_t i) { group[i] = load_harmonized(paths[i], maps[m], t[i]); });
      const auto atlas = build_prob_atlas(group);
      const auto bin = binarize_atlas(atlas, config.threshold);
      MethodMni mm;
      mm.atlas_subjects = atlas.n_subjects();
      try {
        mm.matrix = cross_nucleus_matrix(bin, ref_mni, config.units, config.workers);
      } catch (const GeometryMismatch& e) {
        throw GeometryMismatch("method " + manifest.methods[m].name + " MNI atlas: " + e.what());
      }
      rep.mni.push_back(mm);
    }
    for (int c = 0; c < kNucleusCount; ++c) {
      if (!rep.dice_ranks[c]) continue;
      std::vector<double> mni_dice;
      for (const auto& mm : rep.mni) mni_dice.push_back(mm.matrix.dice(c, c));
      rep.best[c] = bench::select_best(*rep.dice_ranks[c], mni_dice);
    }
  } else {
    rep.warnings.push_back("no MNI-space inputs: atlas metrics and best-method selection skipped");
  }
  return rep;
}

void emit_report(const BenchmarkReport& rep, const fs::path& dir) {
  if (rep.methods.empty()) throw InputError("report has no methods");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());

  const auto nm = rep.methods.size(), ns = rep.subjects.size();
  const auto labels = nucleus_labels();

  // Per-subject metrics.
  {
    std::string csv =
        csv_row("method", "subject", "nucleus", "dice", "intersection", "size_seg", "size_ref", "d_seg_ref",
                "d_ref_seg", "ahd");
    for (std::size_t m = 0; m < nm; ++m)
      for (std::size_t s = 0; s < ns; ++s)
        for (int c = 0; c < kNucleusCount; ++c) {
          const auto& x = rep.metrics[m][s].nuclei[c];
          const auto d = x.distance.value_or(DistanceResult{kNaN, kNaN, kNaN});
          csv += csv_row(csv_field(rep.methods[m]), csv_field(rep.subjects[s]), labels[c], csv_num(x.overlap.dice),
                         std::to_string(x.overlap.intersection_count), std::to_string(x.overlap.size_x),
                         std::to_string(x.overlap.size_y), csv_num(d.d_ab), csv_num(d.d_ba), csv_num(d.ahd));
        }
    write_text_file(dir / "subject_metrics.csv", csv);
  }

  // Rank tables and summaries.
  ojson ranks_json = ojson::object();
  std::string summary_csv = csv_row("metric", "method", "hemisphere", "mean_rank", "sd_population", "sd_sample");
  ojson summary_json = ojson::array();
  for (const auto& [metric, table] : {std::pair{"dice", &rep.dice_ranks}, std::pair{"ahd", &rep.ahd_ranks}}) {
    std::string csv = csv_row("nucleus", "method", "mean", "rank");
    std::string pairs = csv_row("nucleus", "method_a", "method_b", "t", "df", "p_raw", "p_adjusted", "mean_diff",
                                "outcome", "better");
    ojson arr = ojson::array();
    for (int c = 0; c < kNucleusCount; ++c) {
      const auto& row = (*table)[c];
      if (!row) continue;
      for (std::size_t m = 0; m < nm; ++m)
        csv += csv_row(labels[c], csv_field(rep.methods[m]), csv_num(row->means[static_cast<Eigen::Index>(m)]),
                       std::to_string(row->ranks[m]));
      for (const auto& p : row->pairs)
        pairs += csv_row(labels[c], csv_field(rep.methods[p.a]), csv_field(rep.methods[p.b]), csv_num(p.test.t),
                         csv_num(p.test.df), csv_num(p.test.p_raw), csv_num(p.test.p_adjusted),
                         csv_num(p.test.mean_diff), std::string(outcome_name(p.test.outcome)),
                         p.better < 0 ? std::string("") : csv_field(rep.methods[p.better]));
      arr.push_back(rank_row_json(*row, rep.methods, static_cast<Label>(c + 1)));
    }
    write_text_file(dir / (std::string("ranks_") + metric + ".csv"), csv);
    write_text_file(dir / (std::string("pairwise_") + metric + ".csv"), pairs);
    ranks_json[metric] = arr;

    for (std::size_t m = 0; m < nm; ++m)
      for (int h = 0; h < 2; ++h) {
        std::vector<int> ranks;
        for (int n = 0; n < kNucleiPerHemisphere; ++n)
          if ((*table)[n + 10 * h]) ranks.push_back((*table)[n + 10 * h]->ranks[m]);
        if (ranks.empty()) continue;
        const auto s = bench::summarize_ranks(ranks);
        const char* hemi = h == 0 ? "L" : "R";
        summary_csv += csv_row(std::string(metric), csv_field(rep.methods[m]), std::string(hemi), csv_num(s.mean),
                               csv_num(s.sd_population), csv_num(s.sd_sample));
        summary_json.push_back({{"metric", metric},
                                {"method", rep.methods[m]},
                                {"hemisphere", hemi},
                                {"nuclei", ranks.size()},
                                {"mean_rank", s.mean},
                                {"sd_population", s.sd_population},
                                {"sd_sample", jnum(s.sd_sample)}});
      }
  }
  write_text_file(dir / "rank_summary.csv", summary_csv);

  // ANOVA.
  {
    std::string csv = csv_row("metric", "nucleus", "effect", "F", "df_num", "df_den", "epsilon", "p", "ges",
                              "subjects");
    for (const auto& [metric, rows] : {std::pair{"dice", &rep.dice_anova}, std::pair{"ahd", &rep.ahd_anova}})
      for (const auto& a : *rows) {
        if (!a.result) continue;
        for (const auto& [effect, e] : {std::pair{"method", &a.result->a}, std::pair{"hemisphere", &a.result->b},
                                        std::pair{"method_x_hemisphere", &a.result->ab}})
          csv += csv_row(std::string(metric), std::string(kNucleusNames[static_cast<int>(a.nucleus)]),
                         std::string(effect), csv_num(e->F), csv_num(e->df_num), csv_num(e->df_den),
                         csv_num(e->epsilon), csv_num(e->p), csv_num(e->ges), std::to_string(a.subjects_used));
      }
    write_text_file(dir / "anova.csv", csv);
  }

  // Agreement: subject-space mean Dice and, when available, MNI-space Dice.
  ojson agreement_json = ojson::array();
  {
    std::string csv = csv_row("method", "nucleus", "space", "dice", "class");
    for (std::size_t m = 0; m < nm; ++m)
      for (int c = 0; c < kNucleusCount; ++c) {
        double mean = 0.0;
        for (std::size_t s = 0; s < ns; ++s) mean += rep.metrics[m][s].nuclei[c].overlap.dice;
        mean /= static_cast<double>(ns);
        mean = std::clamp(mean, 0.0, 1.0);
        const auto cls = bench::agreement_name(bench::classify_agreement(mean));
        csv += csv_row(csv_field(rep.methods[m]), labels[c], "subject_mean", csv_num(mean), std::string(cls));
        ojson j{{"method", rep.methods[m]}, {"nucleus", labels[c]}, {"subject_mean_dice", mean},
                {"subject_class", cls}};
        if (!rep.mni.empty()) {
          const double d = rep.mni[m].matrix.dice(c, c);
          const auto mcls = bench::agreement_name(bench::classify_agreement(d));
          csv += csv_row(csv_field(rep.methods[m]), labels[c], "mni", csv_num(d), std::string(mcls));
          j["mni_dice"] = d;
          j["mni_class"] = mcls;
        }
        agreement_json.push_back(j);
      }
    write_text_file(dir / "agreement.csv", csv);
  }

  // Best-method map.
  ojson best_json = ojson::array();
  {
    std::string csv = csv_row("nucleus", "outcome", "winners", "mni_best");
    for (int c = 0; c < kNucleusCount; ++c) {
      const auto& b = rep.best[c];
      if (!b) continue;
      std::string winners;
      ojson wj = ojson::array();
      for (int w : b->winners) {
        winners += (winners.empty() ? "" : ";") + rep.methods[w];
        wj.push_back(rep.methods[w]);
      }
      csv += csv_row(labels[c], std::string(bench::best_outcome_name(b->outcome)), csv_field(winners),
                     csv_field(rep.methods[b->mni_best]));
      best_json.push_back({{"nucleus", labels[c]},
                           {"outcome", bench::best_outcome_name(b->outcome)},
                           {"winners", wj},
                           {"mni_best", rep.methods[b->mni_best]},
                           {"trace", b->trace}});
    }
    write_text_file(dir / "best_method.csv", csv);
  }

  // MNI matrices and heatmaps.
  ojson mni_json = ojson::array();
  for (std::size_t m = 0; m < rep.mni.size(); ++m) {
    const auto& mx = rep.mni[m].matrix;
    const auto stem = file_stem(rep.methods[m]);
    for (const auto& [kind, mat] : {std::pair{"dice", &mx.dice}, std::pair{"ahd", &mx.ahd}}) {
      std::string csv = "segmentation\\reference";
      for (const auto& l : labels) csv += "," + l;
      csv += "\n";
      for (int i = 0; i < kNucleusCount; ++i) {
        csv += labels[i];
        for (int j = 0; j < kNucleusCount; ++j) csv += "," + csv_num((*mat)(i, j));
        csv += "\n";
      }
      write_text_file(dir / ("mni_" + std::string(kind) + "_" + stem + ".csv"), csv);
    }
    svg::HeatmapStyle dice_style;
    write_text_file(dir / ("mni_dice_" + stem + ".svg"),
                    svg::heatmap(mx.dice, labels, labels,
                                 rep.methods[m] + ": MNI-space Dice (rows segmentation, columns reference)",
                                 dice_style));
    svg::HeatmapStyle ahd_style;
    ahd_style.vmin = 0.0;
    ahd_style.vmax = 20.0;
    ahd_style.digits = 1;
    ahd_style.reverse = true;
    write_text_file(dir / ("mni_ahd_" + stem + ".svg"),
                    svg::heatmap(mx.ahd, labels, labels,
                                 rep.methods[m] + ": MNI-space AHD in " + std::string(units_name(rep.config.units)) +
                                     " (rows segmentation, columns reference)",
                                 ahd_style));
    ojson dj = ojson::array(), aj = ojson::array();
    for (int i = 0; i < kNucleusCount; ++i) {
      ojson drow = ojson::array(), arow = ojson::array();
      for (int j = 0; j < kNucleusCount; ++j) {
        drow.push_back(mx.dice(i, j));
        arow.push_back(jnum(mx.ahd(i, j)));
      }
      dj.push_back(drow);
      aj.push_back(arow);
    }
    mni_json.push_back({{"method", rep.methods[m]},
                        {"atlas_subjects", rep.mni[m].atlas_subjects},
                        {"dice", dj},
                        {"ahd", aj}});
  }

  // Master JSON report.
  ojson j;
  j["version"] = kReportVersion;
  j["kind"] = "benchmark";
  ojson meta;
  meta["tool"] = "thalbench";
  meta["computation_spaces"] = rep.mni.empty() ? ojson::array({"subject"}) : ojson::array({"subject", "mni"});
  meta["distance_units"] = units_name(rep.config.units);
  meta["atlas_threshold"] = rep.config.threshold;
  meta["alpha"] = rep.config.alpha;
  meta["bonferroni_family_size"] = rep.config.family_size;
  meta["seed"] = rep.config.seed;
  meta["ranking"] = "competition ranking from Bonferroni-adjusted paired t-tests";
  meta["rank_sd_note"] =
      "rank SD is reported with both population (n) and sample (n-1) denominators; published SD values may "
      "match neither";
  meta["reference_label_map"] = rep.reference_label_map;
  meta["methods"] = ojson::array();
  for (std::size_t m = 0; m < nm; ++m)
    meta["methods"].push_back({{"name", rep.methods[m]}, {"label_map", rep.method_label_maps[m]}});
  meta["subjects"] = rep.subjects;
  j["metadata"] = meta;

  ojson drops = ojson::array();
  for (std::size_t k = 0; k < rep.drop_tallies.size(); ++k) {
    auto obj = [](const std::map<Label, std::int64_t>& m) {
      ojson o = ojson::object();
      for (const auto& [l, n] : m) o[std::to_string(l)] = n;
      return o;
    };
    drops.push_back({{"source", k < nm ? rep.methods[k] : std::string("reference")},
                     {"dropped", obj(rep.drop_tallies[k].dropped)},
                     {"unmapped", obj(rep.drop_tallies[k].unmapped)}});
  }
  j["label_drops"] = drops;

  ojson subj = ojson::array();
  for (std::size_t m = 0; m < nm; ++m)
    for (int c = 0; c < kNucleusCount; ++c) {
      double dsum = 0.0, asum = 0.0;
      std::size_t an = 0;
      for (std::size_t s = 0; s < ns; ++s) {
        const auto& x = rep.metrics[m][s].nuclei[c];
        dsum += x.overlap.dice;
        if (x.distance) {
          asum += x.distance->ahd;
          ++an;
        }
      }
      subj.push_back({{"method", rep.methods[m]},
                      {"nucleus", labels[c]},
                      {"mean_dice", dsum / static_cast<double>(ns)},
                      {"mean_ahd", an ? ojson(asum / static_cast<double>(an)) : ojson(nullptr)},
                      {"ahd_subjects", an}});
    }
  j["subject_space_summary"] = subj;
  j["ranks"] = ranks_json;
  j["rank_summary"] = summary_json;
  j["anova"] = {{"dice", anova_json(rep.dice_anova)}, {"ahd", anova_json(rep.ahd_anova)}};
  j["agreement"] = agreement_json;
  j["best_method"] = best_json;
  j["mni"] = mni_json;
  j["warnings"] = rep.warnings;
  j["files"] = {"subject_metrics.csv", "ranks_dice.csv", "ranks_ahd.csv", "pairwise_dice.csv", "pairwise_ahd.csv",
                "rank_summary.csv",    "anova.csv",      "agreement.csv", "best_method.csv"};
  write_text_file(dir / "report.json", j.dump(2) + "\n");
}

// Clinical pipeline -----------------------------------------------------------

void ClinicalConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (draws < 1000) throw InputError("Monte Carlo draws must be >= 1000");
  if (workers < 1) throw InputError("workers must be >= 1");
}

ClinicalReport run_clinical(const std::vector<std::pair<std::string, CohortTable>>& cohorts,
                            const ClinicalConfig& config) {
  config.validate();
  if (cohorts.empty()) throw InputError("no cohorts given");
  ClinicalReport rep;
  rep.config = config;
  std::set<std::string> stems;
  for (const auto& [name, table] : cohorts) {
    if (!stems.insert(file_stem(name)).second) throw InputError("duplicate cohort name '" + name + "'");
    for (int g = 0; g < kGroupCount; ++g)
      if (table.count(static_cast<Group>(g)) < 2)
        throw InputError("cohort " + name + ": group " + std::string(kGroupNames[g]) +
                         " is missing or has fewer than two subjects");
    CohortAnalysis a;
    a.name = name;
    a.subjects = table.size();
    const Group treatments[] = {Group::EMCI, Group::LMCI, Group::AD};
    bench::EffectOptions opts;
    opts.alpha = config.alpha;
    opts.dunnett = {config.draws, config.seed, config.workers};
    opts.adjusted_d = config.adjusted_d;
    opts.workers = config.workers;
    a.effects = bench::atrophy_effect_map(table, Group::HC, treatments, opts);
    for (Group t : treatments)
      for (auto mode : {bench::FeatureMode::kNuclei, bench::FeatureMode::kWholeThalamus})
        a.auc.push_back(bench::discrimination_auc(table, Group::HC, t, mode));
    rep.cohorts.push_back(std::move(a));
  }
  return rep;
}

void emit_clinical_report(const ClinicalReport& rep, const fs::path& dir) {
  if (rep.cohorts.empty()) throw InputError("report has no cohorts");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto labels = nucleus_labels();

  std::string effects = csv_row("cohort", "nucleus", "comparison", "ancova_F", "ancova_df_group",
                                "ancova_df_residual", "ancova_p", "estimate", "se", "t", "p_dunnett", "d_adjusted",
                                "d_raw", "d", "shown");
  std::string auc = csv_row("cohort", "control", "target", "mode", "auc", "n_control", "n_target", "converged");
  std::string roc = csv_row("cohort", "target", "mode", "threshold", "sensitivity", "specificity");
  ojson cohorts_json = ojson::array();

  for (const auto& a : rep.cohorts) {
    const auto& em = a.effects;
    Eigen::MatrixXd shown_d = Eigen::MatrixXd::Constant(kNucleusCount, static_cast<Eigen::Index>(em.treatments.size()), kNaN);
    ojson nuclei = ojson::array();
    for (const auto& ne : em.nuclei) {
      ojson comps = ojson::array();
      for (std::size_t k = 0; k < ne.comparisons.size(); ++k) {
        const auto& c = ne.comparisons[k];
        const std::string cmp = std::string(group_name(em.control)) + "-" + std::string(group_name(c.treatment));
        effects += csv_row(csv_field(a.name), labels[ne.code - 1], cmp, csv_num(ne.f), csv_num(ne.df_group),
                           csv_num(ne.df_residual), csv_num(ne.p_ancova), csv_num(c.estimate), csv_num(c.se),
                           csv_num(c.t), csv_num(c.p_dunnett), csv_num(c.d_adjusted), csv_num(c.d_raw), csv_num(c.d),
                           std::string(c.shown ? "true" : "false"));
        if (c.shown) shown_d(ne.code - 1, static_cast<Eigen::Index>(k)) = c.d;
        comps.push_back({{"comparison", cmp},
                         {"estimate", jnum(c.estimate)},
                         {"se", jnum(c.se)},
                         {"t", jnum(c.t)},
                         {"p_dunnett", c.p_dunnett},
                         {"d_adjusted", jnum(c.d_adjusted)},
                         {"d_raw", jnum(c.d_raw)},
                         {"d", jnum(c.d)},
                         {"shown", c.shown}});
      }
      nuclei.push_back({{"nucleus", labels[ne.code - 1]},
                        {"ancova", {{"F", jnum(ne.f)}, {"df_group", ne.df_group}, {"df_residual", ne.df_residual},
                                    {"p", ne.p_ancova}}},
                        {"adjusted_means", ne.adjusted_means},
                        {"comparisons", comps}});
    }

    ojson auc_json = ojson::array();
    for (const auto& r : a.auc) {
      const auto mode = bench::feature_mode_name(r.mode);
      auc += csv_row(csv_field(a.name), std::string(group_name(r.control)), std::string(group_name(r.target)),
                     std::string(mode), csv_num(r.auc), std::to_string(r.n_control), std::to_string(r.n_target),
                     std::string(r.converged ? "true" : "false"));
      for (const auto& p : r.curve)
        roc += csv_row(csv_field(a.name), std::string(group_name(r.target)), std::string(mode), csv_num(p.threshold),
                       csv_num(p.sensitivity), csv_num(p.specificity));
      auc_json.push_back({{"control", group_name(r.control)},
                          {"target", group_name(r.target)},
                          {"mode", mode},
                          {"auc", r.auc},
                          {"n_control", r.n_control},
                          {"n_target", r.n_target},
                          {"converged", r.converged},
                          {"coefficients", std::vector<double>(r.coefficients.data(),
                                                               r.coefficients.data() + r.coefficients.size())}});
    }

    std::vector<std::string> cols;
    for (Group t : em.treatments) cols.push_back(std::string(group_name(em.control)) + "-" + std::string(group_name(t)));
    svg::HeatmapStyle style;
    style.vmin = -2.0;
    style.vmax = 2.0;
    write_text_file(dir / ("effects_" + file_stem(a.name) + ".svg"),
                    svg::heatmap(shown_d, labels, cols,
                                 a.name + ": Cohen's d (control minus group), grey where not significant", style));

    cohorts_json.push_back({{"name", a.name},
                            {"subjects", a.subjects},
                            {"dunnett", {{"critical_value", em.critical_value},
                                         {"df", em.df},
                                         {"draws", em.draws},
                                         {"seed", em.seed}}},
                            {"effects", nuclei},
                            {"auc", auc_json}});
  }
  write_text_file(dir / "effects.csv", effects);
  write_text_file(dir / "auc.csv", auc);
  write_text_file(dir / "roc_curves.csv", roc);

  ojson j;
  j["version"] = kReportVersion;
  j["kind"] = "clinical";
  j["metadata"] = {{"tool", "thalbench"},
                   {"alpha", rep.config.alpha},
                   {"seed", rep.config.seed},
                   {"dunnett_draws", rep.config.draws},
                   {"control_group", "HC"},
                   {"covariates", {"age", "sex", "education_years", "etiv_mm3"}},
                   {"cohens_d", rep.config.adjusted_d ? "covariate_adjusted" : "raw"},
                   {"cohens_d_sign", "control minus group; positive means smaller volumes in the group"},
                   {"significance_gate", "ANCOVA group p < alpha and Dunnett familywise p < alpha"},
                   {"auc_adjustment", "residualized on age and eTIV with control-group coefficients"},
                   {"auc_evaluation", "in-sample; no cross-validation"},
                   {"whole_thalamus", "sum of all 20 nucleus volumes"}};
  j["cohorts"] = cohorts_json;
  j["files"] = {"effects.csv", "auc.csv", "roc_curves.csv"};
  write_text_file(dir / "clinical_report.json", j.dump(2) + "\n");
}

}  // namespace thalbench
