#include "thalbench/phantom.hpp"

#include "thalbench/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace thalbench::phantom {
namespace {

using nlohmann::json;

constexpr std::array<std::array<int, 3>, 6> kFaceNeighbours{
    {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

template <typename Fn>
void for_each_neighbour(const VolumeGeometry& g, std::int64_t x, std::int64_t y, std::int64_t z, Fn&& fn) {
  for (const auto& d : kFaceNeighbours) {
    const Index3 n(x + d[0], y + d[1], z + d[2]);
    fn(n, g.contains(n));
  }
}

LabelVolume translate(const LabelVolume& v, const Index3& offset, Label label) {
  const auto& g = v.geometry();
  LabelVolume out = v;
  const auto src = voxel_set(v, label);
  for (auto i : src.linear()) out.labels()[i] = 0;
  for (std::size_t k = 0; k < src.size(); ++k) {
    const Index3 to = src.coord(k) + offset;
    if (!g.contains(to)) throw DomainError("translation moves label " + std::to_string(label) + " out of the grid");
    Label& dst = out.labels()[g.linear_index(to)];
    if (dst != 0) throw DomainError("translation of label " + std::to_string(label) + " collides with label " +
                                    std::to_string(dst));
    dst = label;
  }
  return out;
}

LabelVolume dilate(const LabelVolume& v, int k, Label label) {
  const auto& g = v.geometry();
  LabelVolume out = v;
  for (int it = 0; it < k; ++it) {
    std::vector<std::int64_t> grow;
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
      for (std::int64_t y = 0; y < g.dims[1]; ++y)
        for (std::int64_t x = 0; x < g.dims[0]; ++x) {
          if (out.at(x, y, z) != label) continue;
          for_each_neighbour(g, x, y, z, [&](const Index3& n, bool inside) {
            if (!inside) return;
            const Label l = out.at(n[0], n[1], n[2]);
            if (l == 0)
              grow.push_back(g.linear_index(n));
            else if (l != label)
              throw DomainError("dilation of label " + std::to_string(label) + " collides with label " +
                                std::to_string(l));
          });
        }
    for (auto i : grow) out.labels()[i] = label;
  }
  return out;
}

LabelVolume erode(const LabelVolume& v, int k, Label label) {
  const auto& g = v.geometry();
  LabelVolume out = v;
  for (int it = 0; it < k; ++it) {
    std::vector<std::int64_t> shrink;
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
      for (std::int64_t y = 0; y < g.dims[1]; ++y)
        for (std::int64_t x = 0; x < g.dims[0]; ++x) {
          if (out.at(x, y, z) != label) continue;
          bool boundary = false;
          for_each_neighbour(g, x, y, z, [&](const Index3& n, bool inside) {
            boundary = boundary || !inside || out.at(n[0], n[1], n[2]) != label;
          });
          if (boundary) shrink.push_back(g.linear_index(x, y, z));
        }
    for (auto i : shrink) out.labels()[i] = 0;
  }
  return out;
}

// JSON helpers. Every nlohmann error is rethrown as FormatError.

Label parse_label(const json& j) {
  if (j.is_number_unsigned()) {
    const auto l = j.get<std::uint64_t>();
    if (l == 0 || l > 65535) throw FormatError("label out of range 1..65535");
    return static_cast<Label>(l);
  }
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    for (Label c = 1; c <= kNucleusCount; ++c)
      if (nucleus_column(c) == name) return c;
    throw FormatError("unknown nucleus '" + name + "'");
  }
  throw FormatError("label must be a positive integer or nucleus name");
}

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected an array of three numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v[0], v[1], v[2]}); }

// A number fills every nucleus; an object overrides entries of `out`.
std::array<double, kNucleusCount> nucleus_values(const json& j, std::array<double, kNucleusCount> out) {
  if (j.is_number()) {
    out.fill(j.get<double>());
    return out;
  }
  if (!j.is_object()) throw FormatError("expected a number or an object keyed by nucleus");
  for (const auto& [key, val] : j.items()) out[parse_label(json(key)) - 1] = val.get<double>();
  return out;
}

json nucleus_object(const std::array<double, kNucleusCount>& values) {
  json j = json::object();
  for (Label c = 1; c <= kNucleusCount; ++c) j[nucleus_column(c)] = values[c - 1];
  return j;
}

json parse_document(std::string_view text) {
  try {
    auto j = json::parse(text);
    if (!j.is_object()) throw FormatError("spec must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid spec: ") + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  for (const auto& [key, val] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw FormatError("unknown key '" + key + "' in " + std::string(what));
}

}  // namespace

LabelVolume gen_phantom_volume(const PhantomSpec& spec) {
  const auto& g = spec.geometry;
  if (!(spec.jitter >= 0.0) || !std::isfinite(spec.jitter)) throw DomainError("jitter must be finite and >= 0");
  LabelVolume v(g);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (const auto& shape : spec.shapes) {
    if (shape.label == 0) throw DomainError("phantom shape label must be nonzero");
    if (!(shape.semi_axes.array() > 0.0).all() || !shape.semi_axes.allFinite() || !shape.center.allFinite())
      throw DomainError("phantom shape needs finite center and positive semi-axes");
    Eigen::Vector3d c = shape.center;
    if (spec.jitter > 0.0)
      for (int a = 0; a < 3; ++a) c[a] += spec.jitter * unit(rng);
    const Eigen::Vector3d& r = shape.semi_axes;
    std::array<std::int64_t, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(c[a] - r[a])));
      hi[a] = std::min<std::int64_t>(g.dims[a] - 1, static_cast<std::int64_t>(std::ceil(c[a] + r[a])));
    }
    for (auto z = lo[2]; z <= hi[2]; ++z)
      for (auto y = lo[1]; y <= hi[1]; ++y)
        for (auto x = lo[0]; x <= hi[0]; ++x) {
          const double dx = (x - c[0]) / r[0], dy = (y - c[1]) / r[1], dz = (z - c[2]) / r[2];
          if (dx * dx + dy * dy + dz * dz > 1.0) continue;
          Label& dst = v.at(x, y, z);
          if (dst != 0 && dst != shape.label)
            throw DomainError("phantom shapes for labels " + std::to_string(dst) + " and " +
                              std::to_string(shape.label) + " overlap");
          dst = shape.label;
        }
  }
  for (const auto& p : spec.perturbations) v = perturb(v, p.op, p.label);
  return v;
}

PhantomSpec default_thalamus_phantom(std::uint64_t seed, double jitter) {
  PhantomSpec spec;
  spec.geometry = VolumeGeometry({48, 50, 32}, {1.0, 1.0, 1.0});
  spec.seed = seed;
  spec.jitter = jitter;
  for (Label code = 1; code <= kNucleusCount; ++code) {
    const int i = static_cast<int>((code - 1) % kNucleiPerHemisphere);
    const double x = code <= kNucleiPerHemisphere ? 12.0 : 36.0;
    Ellipsoid e;
    e.label = code;
    e.center = {x, 5.0 + (i % 5) * 10.0, 7.0 + (i / 5) * 15.0};
    e.semi_axes = {3.0 + (i % 3) * 0.75, 2.5 + (i % 2) * 1.0, 3.0 + (i % 4) * 0.5};
    spec.shapes.push_back(e);
  }
  return spec;
}

LabelVolume perturb(const LabelVolume& v, const Perturbation& op, Label label) {
  if (label == 0) throw DomainError("cannot perturb the background");
  return std::visit(
      [&](const auto& o) -> LabelVolume {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Translate>) {
          return translate(v, o.offset, label);
        } else {
          if (o.k < 1) throw DomainError("morphology iterations must be >= 1");
          if constexpr (std::is_same_v<T, Dilate>)
            return dilate(v, o.k, label);
          else
            return erode(v, o.k, label);
        }
      },
      op);
}

std::array<double, kNucleusCount> CohortSpec::default_baseline() {
  // mm3 per nucleus, same for both hemispheres.
  constexpr std::array<double, kNucleiPerHemisphere> per{150, 400, 200, 800, 500, 1800, 150, 120, 250, 1000};
  std::array<double, kNucleusCount> out{};
  for (int i = 0; i < kNucleusCount; ++i) out[i] = per[i % kNucleiPerHemisphere];
  return out;
}

std::array<std::array<double, kNucleusCount>, kGroupCount> CohortSpec::unit_factors() {
  std::array<std::array<double, kNucleusCount>, kGroupCount> out{};
  for (auto& row : out) row.fill(1.0);
  return out;
}

void CohortSpec::validate() const {
  for (int c : counts)
    if (c < 2) throw DomainError("every group needs at least two subjects");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw DomainError("noise_sd must be finite and >= 0");
  for (double b : baseline)
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("baseline volumes must be positive");
  for (const auto& row : factors)
    for (double f : row)
      if (!(f > 0.0) || !std::isfinite(f)) throw DomainError("atrophy factors must be positive");
  for (double e : {effects.age, effects.sex, effects.education, effects.etiv})
    if (!std::isfinite(e)) throw DomainError("covariate effects must be finite");
}

CohortTable gen_cohort(const CohortSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> age(55.0, 90.0), education(8.0, 20.0);
  std::normal_distribution<double> etiv(1.5e6, 1.5e5), noise(0.0, 1.0);
  std::bernoulli_distribution male(0.5);

  CohortTable t;
  int serial = 0;
  for (int g = 0; g < kGroupCount; ++g)
    for (int i = 0; i < spec.counts[g]; ++i) {
      Subject s;
      char id[32];
      std::snprintf(id, sizeof id, "sub-%04d", ++serial);
      s.id = id;
      s.group = static_cast<Group>(g);
      s.age = age(rng);
      s.sex = male(rng) ? Sex::M : Sex::F;
      s.education_years = education(rng);
      s.etiv_mm3 = etiv(rng);
      const double linear = spec.effects.age * (s.age - 72.5) + spec.effects.sex * (s.sex == Sex::M ? 1.0 : 0.0) +
                            spec.effects.education * (s.education_years - 14.0) +
                            spec.effects.etiv * (s.etiv_mm3 - 1.5e6) / 1.5e5;
      const double scale = std::exp(linear);
      for (int n = 0; n < kNucleusCount; ++n)
        s.volumes[n] = spec.baseline[n] * spec.factors[g][n] * scale * (1.0 + spec.noise_sd * noise(rng));
      t.subjects.push_back(std::move(s));
    }
  return t;
}

std::string spec_type(std::string_view json_text) {
  const auto j = parse_document(json_text);
  return guarded([&] {
    if (!j.contains("type")) throw FormatError("spec has no \"type\"");
    const auto type = j.at("type").get<std::string>();
    if (type != "phantom" && type != "cohort") throw FormatError("spec type must be \"phantom\" or \"cohort\"");
    return type;
  });
}

PhantomSpec parse_phantom_spec(std::string_view json_text) {
  const auto j = parse_document(json_text);
  return guarded([&] {
    check_keys(j, {"type", "geometry", "shapes", "seed", "jitter", "perturbations"}, "phantom spec");
    if (j.value("type", "phantom") != "phantom") throw FormatError("not a phantom spec");
    PhantomSpec spec;
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.jitter = j.value("jitter", 0.0);
    const auto& shapes = j.at("shapes");
    if (shapes.is_string()) {
      if (shapes.get<std::string>() != "default") throw FormatError("\"shapes\" must be a list or \"default\"");
      const auto def = default_thalamus_phantom(spec.seed, spec.jitter);
      spec.shapes = def.shapes;
      spec.geometry = def.geometry;
    } else {
      for (const auto& s : shapes) {
        check_keys(s, {"label", "center", "semi_axes"}, "shape");
        spec.shapes.push_back({parse_label(s.at("label")), vec3(s.at("center")), vec3(s.at("semi_axes"))});
      }
    }
    if (j.contains("geometry")) {
      const auto& g = j.at("geometry");
      check_keys(g, {"dims", "spacing"}, "geometry");
      const auto d = g.at("dims").get<std::array<std::int64_t, 3>>();
      const auto sp = g.value("spacing", std::array<double, 3>{1.0, 1.0, 1.0});
      spec.geometry = VolumeGeometry(d, sp);
    } else if (!shapes.is_string()) {
      throw FormatError("phantom spec needs \"geometry\"");
    }
    for (const auto& p : j.value("perturbations", json::array())) {
      check_keys(p, {"label", "op", "offset", "k"}, "perturbation");
      LabelPerturbation lp;
      lp.label = parse_label(p.at("label"));
      const auto op = p.at("op").get<std::string>();
      if (op == "translate") {
        const auto o = p.at("offset").get<std::array<std::int64_t, 3>>();
        lp.op = Translate{Index3(o[0], o[1], o[2])};
      } else if (op == "dilate") {
        lp.op = Dilate{p.value("k", 1)};
      } else if (op == "erode") {
        lp.op = Erode{p.value("k", 1)};
      } else {
        throw FormatError("unknown perturbation op '" + op + "'");
      }
      spec.perturbations.push_back(lp);
    }
    return spec;
  });
}

CohortSpec parse_cohort_spec(std::string_view json_text) {
  const auto j = parse_document(json_text);
  return guarded([&] {
    check_keys(j, {"type", "counts", "baseline", "factors", "covariate_effects", "noise_sd", "seed"}, "cohort spec");
    if (j.value("type", "cohort") != "cohort") throw FormatError("not a cohort spec");
    CohortSpec spec;
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.noise_sd = j.value("noise_sd", spec.noise_sd);
    if (j.contains("counts")) {
      const auto& c = j.at("counts");
      if (c.is_number_integer()) {
        spec.counts.fill(c.get<int>());
      } else {
        for (const auto& [key, val] : c.items()) {
          const auto g = parse_group(key);
          if (!g) throw FormatError("unknown group '" + key + "'");
          spec.counts[static_cast<int>(*g)] = val.get<int>();
        }
      }
    }
    if (j.contains("baseline")) spec.baseline = nucleus_values(j.at("baseline"), spec.baseline);
    if (j.contains("factors")) {
      for (const auto& [key, val] : j.at("factors").items()) {
        const auto g = parse_group(key);
        if (!g) throw FormatError("unknown group '" + key + "'");
        auto& row = spec.factors[static_cast<int>(*g)];
        row = nucleus_values(val, row);
      }
    }
    if (j.contains("covariate_effects")) {
      const auto& e = j.at("covariate_effects");
      check_keys(e, {"age", "sex", "education", "etiv"}, "covariate_effects");
      spec.effects.age = e.value("age", 0.0);
      spec.effects.sex = e.value("sex", 0.0);
      spec.effects.education = e.value("education", 0.0);
      spec.effects.etiv = e.value("etiv", 0.0);
    }
    spec.validate();
    return spec;
  });
}

std::string phantom_spec_json(const PhantomSpec& spec) {
  json j;
  j["type"] = "phantom";
  j["geometry"] = {{"dims", spec.geometry.dims}, {"spacing", spec.geometry.spacing}};
  j["seed"] = spec.seed;
  j["jitter"] = spec.jitter;
  j["shapes"] = json::array();
  for (const auto& s : spec.shapes)
    j["shapes"].push_back({{"label", s.label}, {"center", vec3_json(s.center)}, {"semi_axes", vec3_json(s.semi_axes)}});
  j["perturbations"] = json::array();
  for (const auto& p : spec.perturbations) {
    json pj{{"label", p.label}};
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, Translate>) {
            pj["op"] = "translate";
            pj["offset"] = {o.offset[0], o.offset[1], o.offset[2]};
          } else {
            pj["op"] = std::is_same_v<T, Dilate> ? "dilate" : "erode";
            pj["k"] = o.k;
          }
        },
        p.op);
    j["perturbations"].push_back(pj);
  }
  return j.dump(2) + "\n";
}

std::string cohort_spec_json(const CohortSpec& spec) {
  json j;
  j["type"] = "cohort";
  j["seed"] = spec.seed;
  j["noise_sd"] = spec.noise_sd;
  j["counts"] = json::object();
  for (int g = 0; g < kGroupCount; ++g) j["counts"][std::string(kGroupNames[g])] = spec.counts[g];
  j["baseline"] = nucleus_object(spec.baseline);
  j["factors"] = json::object();
  for (int g = 0; g < kGroupCount; ++g) j["factors"][std::string(kGroupNames[g])] = nucleus_object(spec.factors[g]);
  j["covariate_effects"] = {{"age", spec.effects.age},
                            {"sex", spec.effects.sex},
                            {"education", spec.effects.education},
                            {"etiv", spec.effects.etiv}};
  return j.dump(2) + "\n";
}

}  // namespace thalbench::phantom
