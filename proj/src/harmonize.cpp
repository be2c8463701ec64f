#include "thalbench/harmonize.hpp"

#include "thalbench/error.hpp"

#include "builtin_label_maps.inc"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace thalbench {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto tab = s.find('\t', start);
    const auto end = tab == std::string_view::npos ? s.size() : tab;
    const auto f = trim(s.substr(start, end - start));
    if (!f.empty()) out.push_back(f);
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

NucleusId NucleusId::from_code(Label code) {
  if (code < 1 || code > kNucleusCount) throw DomainError("not a harmonized nucleus code: " + std::to_string(code));
  const auto idx = (code - 1) % kNucleiPerHemisphere;
  return {static_cast<Nucleus>(idx), code > kNucleiPerHemisphere ? Hemisphere::R : Hemisphere::L};
}

std::string NucleusId::name() const {
  return std::string(hemisphere == Hemisphere::L ? "L_" : "R_") +
         std::string(kNucleusNames[static_cast<int>(nucleus)]);
}

std::string nucleus_column(Label code) { return NucleusId::from_code(code).name(); }

std::optional<Nucleus> parse_nucleus(std::string_view name) {
  for (int i = 0; i < kNucleiPerHemisphere; ++i)
    if (kNucleusNames[i] == name) return static_cast<Nucleus>(i);
  // Accept the table's lowercase spelling of VLa as well.
  if (name == "Vla") return Nucleus::VLa;
  return std::nullopt;
}

void LabelMap::add(Label source, std::optional<NucleusId> target) {
  if (!entries_.emplace(source, target).second)
    throw FormatError("duplicate source label " + std::to_string(source) + " in label map '" + name_ + "'");
}

Label LabelMap::target_code(Label source) const {
  const auto it = entries_.find(source);
  if (it == entries_.end() || !it->second) return 0;
  return it->second->code();
}

LabelMap parse_label_map(std::string_view text) {
  LabelMap map;
  bool have_name = false;
  std::optional<std::set<Label>> covers;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto where = [&] { return "label map line " + std::to_string(line_no) + ": "; };

    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto body = trim(t.substr(1));
      if (body.starts_with("scheme:")) {
        map = LabelMap(std::string(trim(body.substr(7))));
        have_name = true;
      } else if (body.starts_with("covers:")) {
        const auto list = trim(body.substr(7));
        covers.emplace();
        if (list == "all") {
          for (Label c = 1; c <= kNucleusCount; ++c) covers->insert(c);
        } else {
          std::stringstream ss{std::string(list)};
          std::string item;
          while (std::getline(ss, item, ',')) {
            const auto it = trim(item);
            if (it.size() < 3 || (it[0] != 'L' && it[0] != 'R') || it[1] != '_')
              throw FormatError(where() + "bad coverage entry '" + std::string(it) + "'");
            const auto n = parse_nucleus(it.substr(2));
            if (!n) throw FormatError(where() + "unknown nucleus '" + std::string(it.substr(2)) + "'");
            covers->insert(NucleusId{*n, it[0] == 'L' ? Hemisphere::L : Hemisphere::R}.code());
          }
        }
      }
      continue;
    }
    if (!have_name) throw FormatError(where() + "missing '# scheme: <name>' header before rows");

    const auto content = trim(t.substr(0, t.find('#')));
    const auto fields = split_fields(content);
    if (fields.size() < 2 || fields.size() > 3)
      throw FormatError(where() + "expected source_label<TAB>nucleus<TAB>hemisphere");
    Label source = 0;
    const auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), source);
    if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size())
      throw FormatError(where() + "bad source label '" + std::string(fields[0]) + "'");

    if (fields[1] == "DROP") {
      if (fields.size() == 3 && fields[2] != "L" && fields[2] != "R")
        throw FormatError(where() + "unknown hemisphere '" + std::string(fields[2]) + "'");
      map.add(source, std::nullopt);
      continue;
    }
    const auto nucleus = parse_nucleus(fields[1]);
    if (!nucleus) throw FormatError(where() + "unknown nucleus '" + std::string(fields[1]) + "'");
    if (fields.size() != 3) throw FormatError(where() + "missing hemisphere");
    Hemisphere h;
    if (fields[2] == "L")
      h = Hemisphere::L;
    else if (fields[2] == "R")
      h = Hemisphere::R;
    else
      throw FormatError(where() + "unknown hemisphere '" + std::string(fields[2]) + "'");
    map.add(source, NucleusId{*nucleus, h});
  }
  if (!have_name) throw FormatError("label map has no '# scheme: <name>' header");

  if (covers) {
    std::set<Label> present;
    for (const auto& [src, tgt] : map.entries())
      if (tgt) present.insert(tgt->code());
    for (auto c : *covers)
      if (!present.contains(c))
        throw FormatError("label map '" + map.name() + "' declares coverage of " + nucleus_column(c) +
                          " but no source label maps to it");
  }
  return map;
}

LabelMap load_label_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open label map " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_label_map(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

LabelMap identity_label_map() {
  LabelMap m("identity");
  for (Label c = 1; c <= kNucleusCount; ++c) m.add(c, NucleusId::from_code(c));
  return m;
}

LabelMap builtin_label_map(std::string_view name) {
  if (name == "identity") return identity_label_map();
  if (name == "freesurfer") return parse_label_map(builtin::kFreesurferMap);
  if (name == "krauth") return parse_label_map(builtin::kKrauthMap);
  throw InputError("unknown builtin label map '" + std::string(name) + "'");
}

LabelMap resolve_label_map(std::string_view spec) {
  if (spec.starts_with("builtin:")) return builtin_label_map(spec.substr(8));
  if (spec == "identity" || spec == "freesurfer" || spec == "krauth") return builtin_label_map(spec);
  return load_label_map(std::filesystem::path(spec));
}

RemapResult remap(const LabelVolume& v, const LabelMap& m) {
  const auto in = v.labels();
  std::vector<Label> out(in.size());
  std::map<Label, std::int64_t> counts;

  constexpr Label kDenseLimit = 1u << 20;
  const Label max_label = v.max_label();
  if (max_label < kDenseLimit) {
    std::vector<Label> lut(static_cast<std::size_t>(max_label) + 1, 0);
    for (const auto& [src, tgt] : m.entries())
      if (src <= max_label && tgt) lut[src] = tgt->code();
    std::vector<std::int64_t> dense(lut.size(), 0);
    for (std::size_t i = 0; i < in.size(); ++i) {
      out[i] = lut[in[i]];
      ++dense[in[i]];
    }
    for (Label src = 0; src < dense.size(); ++src)
      if (dense[src] > 0) counts[src] = dense[src];
  } else {
    std::unordered_map<Label, Label> lut;
    for (std::size_t i = 0; i < in.size(); ++i) {
      auto it = lut.find(in[i]);
      if (it == lut.end()) it = lut.emplace(in[i], m.target_code(in[i])).first;
      out[i] = it->second;
      ++counts[in[i]];
    }
  }

  RemapResult r{LabelVolume(v.geometry(), std::move(out), v.orientation()), {}};
  for (const auto& [src, n] : counts) {
    if (src == 0 || m.target_code(src) != 0) continue;
    (m.contains(src) ? r.tally.dropped : r.tally.unmapped)[src] = n;
  }
  return r;
}

}  // namespace thalbench
