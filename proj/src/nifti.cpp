#include "thalbench/nifti.hpp"

#include "thalbench/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace thalbench::nifti {
namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

// Field offsets within the 348-byte header.
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffQuatern = 256;
constexpr std::size_t kOffQoffset = 268;
constexpr std::size_t kOffSrow = 280;
constexpr std::size_t kOffMagic = 344;

bool host_is_little() { return std::endian::native == std::endian::little; }

template <typename T>
T byteswap_value(T v) {
  std::array<std::uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), &v, sizeof(T));
  std::reverse(raw.begin(), raw.end());
  std::memcpy(&v, raw.data(), sizeof(T));
  return v;
}

class Reader {
 public:
  Reader(const std::uint8_t* data, bool swap) : data_(data), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    T v;
    std::memcpy(&v, data_ + offset, sizeof(T));
    return swap_ ? byteswap_value(v) : v;
  }

 private:
  const std::uint8_t* data_;
  bool swap_;
};

class Writer {
 public:
  Writer(std::uint8_t* data, bool swap) : data_(data), swap_(swap) {}

  template <typename T>
  void put(std::size_t offset, T v) const {
    if (swap_) v = byteswap_value(v);
    std::memcpy(data_ + offset, &v, sizeof(T));
  }

 private:
  std::uint8_t* data_;
  bool swap_;
};

int bytes_per_voxel(Datatype dt) {
  switch (dt) {
    case Datatype::kUint8: return 1;
    case Datatype::kInt16:
    case Datatype::kUint16: return 2;
    case Datatype::kInt32:
    case Datatype::kFloat32: return 4;
  }
  return 0;
}

bool is_supported(std::int16_t code) {
  switch (code) {
    case 2: case 4: case 8: case 16: case 512: return true;
    default: return false;
  }
}

Label checked_integer_label(std::int64_t v) {
  if (v < 0) throw FormatError("negative label value " + std::to_string(v));
  return static_cast<Label>(v);
}

Label checked_float_label(float f) {
  const double v = f;
  if (!std::isfinite(v)) throw FormatError("non-finite label value");
  const double r = std::nearbyint(v);
  if (std::fabs(v - r) > kFloatLabelTolerance)
    throw FormatError("label value " + std::to_string(v) + " is not within 1e-3 of an integer");
  if (r < 0.0) throw FormatError("negative label value");
  if (r > static_cast<double>(std::numeric_limits<Label>::max()))
    throw FormatError("label value out of range");
  return static_cast<Label>(r);
}

Label max_for(Datatype dt) {
  switch (dt) {
    case Datatype::kUint8: return 255;
    case Datatype::kInt16: return 32767;
    default: return kMaxWritableLabel;
  }
}

}  // namespace

LabelVolume decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("file shorter than a NIfTI-1 header");

  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data(), 4);
  bool swap;
  if (sizeof_hdr == 348)
    swap = false;
  else if (byteswap_value(sizeof_hdr) == 348)
    swap = true;
  else
    throw FormatError("malformed header: sizeof_hdr is not 348");
  const Reader r(bytes.data(), swap);

  const char* magic = reinterpret_cast<const char*>(bytes.data() + kOffMagic);
  if (std::memcmp(magic, "ni1\0", 4) == 0)
    throw FormatError("paired .hdr/.img NIfTI files are not supported");
  if (std::memcmp(magic, "n+1\0", 4) != 0) throw FormatError("malformed header: bad magic");

  const auto ndim = r.get<std::int16_t>(kOffDim);
  if (ndim < 1 || ndim > 7) throw FormatError("malformed header: dim[0] out of range");
  std::array<std::int64_t, 3> dims{1, 1, 1};
  for (int a = 0; a < std::min<int>(ndim, 3); ++a) {
    dims[a] = r.get<std::int16_t>(kOffDim + 2 * (a + 1));
    if (dims[a] < 1) throw FormatError("malformed header: non-positive dimension");
  }
  for (int a = 3; a < ndim; ++a)
    if (r.get<std::int16_t>(kOffDim + 2 * (a + 1)) != 1)
      throw FormatError("image has non-singleton dimensions beyond 3D");

  const auto code = r.get<std::int16_t>(kOffDatatype);
  if (!is_supported(code)) throw FormatError("unsupported datatype code " + std::to_string(code));
  const auto dt = static_cast<Datatype>(code);
  const int bpv = bytes_per_voxel(dt);
  if (r.get<std::int16_t>(kOffBitpix) != 8 * bpv)
    throw FormatError("malformed header: bitpix inconsistent with datatype");

  std::array<double, 3> spacing{};
  for (int a = 0; a < 3; ++a) {
    const double p = a < ndim ? r.get<float>(kOffPixdim + 4 * (a + 1)) : 1.0;
    if (!std::isfinite(p) || p == 0.0) throw FormatError("malformed header: invalid pixdim");
    spacing[a] = std::fabs(p);
  }

  const float vox_offset = r.get<float>(kOffVoxOffset);
  if (!(vox_offset >= static_cast<float>(kHeaderSize)) || vox_offset != std::floor(vox_offset))
    throw FormatError("malformed header: invalid vox_offset");

  Orientation o;
  o.qform_code = r.get<std::int16_t>(kOffQformCode);
  o.sform_code = r.get<std::int16_t>(kOffSformCode);
  o.qfac = r.get<float>(kOffPixdim);
  for (int i = 0; i < 3; ++i) {
    o.quatern[i] = r.get<float>(kOffQuatern + 4 * i);
    o.qoffset[i] = r.get<float>(kOffQoffset + 4 * i);
  }
  for (int i = 0; i < 12; ++i) o.srow[i] = r.get<float>(kOffSrow + 4 * i);

  const VolumeGeometry geometry(dims, spacing);
  const auto n = static_cast<std::size_t>(geometry.voxel_count());
  const auto offset = static_cast<std::size_t>(vox_offset);
  if (bytes.size() < offset || (bytes.size() - offset) / bpv < n)
    throw FormatError("file truncated: image data shorter than header declares");

  std::vector<Label> labels(n);
  const std::uint8_t* p = bytes.data() + offset;
  const Reader data(p, swap);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = i * bpv;
    switch (dt) {
      case Datatype::kUint8: labels[i] = p[off]; break;
      case Datatype::kInt16: labels[i] = checked_integer_label(data.get<std::int16_t>(off)); break;
      case Datatype::kUint16: labels[i] = data.get<std::uint16_t>(off); break;
      case Datatype::kInt32: labels[i] = checked_integer_label(data.get<std::int32_t>(off)); break;
      case Datatype::kFloat32: labels[i] = checked_float_label(data.get<float>(off)); break;
    }
  }
  return LabelVolume(geometry, std::move(labels), o);
}

std::vector<std::uint8_t> encode(const LabelVolume& v, const WriteOptions& opts) {
  const Label max_label = v.max_label();
  if (max_label > kMaxWritableLabel)
    throw DomainError("label " + std::to_string(max_label) + " exceeds writable maximum 65535");
  const Datatype dt = opts.datatype.value_or(max_label <= 255 ? Datatype::kUint8 : Datatype::kUint16);
  if (max_label > max_for(dt))
    throw DomainError("label " + std::to_string(max_label) + " does not fit the requested datatype");

  const auto& g = v.geometry();
  for (auto d : g.dims)
    if (d > std::numeric_limits<std::int16_t>::max())
      throw DomainError("dimension exceeds NIfTI-1 limit of 32767");

  bool little = host_is_little();
  if (opts.byte_order == ByteOrder::kLittle) little = true;
  if (opts.byte_order == ByteOrder::kBig) little = false;
  const bool swap = little != host_is_little();

  const int bpv = bytes_per_voxel(dt);
  const auto n = static_cast<std::size_t>(g.voxel_count());
  std::vector<std::uint8_t> out(kDataOffset + n * bpv, 0);
  const Writer w(out.data(), swap);
  w.put<std::int32_t>(0, 348);
  out[38] = 'r';
  w.put<std::int16_t>(kOffDim, 3);
  for (int a = 0; a < 3; ++a) w.put<std::int16_t>(kOffDim + 2 * (a + 1), static_cast<std::int16_t>(g.dims[a]));
  for (int a = 4; a < 8; ++a) w.put<std::int16_t>(kOffDim + 2 * a, 1);
  w.put<std::int16_t>(kOffDatatype, static_cast<std::int16_t>(dt));
  w.put<std::int16_t>(kOffBitpix, static_cast<std::int16_t>(8 * bpv));

  const auto& o = v.orientation();
  w.put<float>(kOffPixdim, o.qfac);
  for (int a = 0; a < 3; ++a) w.put<float>(kOffPixdim + 4 * (a + 1), static_cast<float>(g.spacing[a]));
  w.put<float>(kOffVoxOffset, static_cast<float>(kDataOffset));
  out[kOffXyztUnits] = 2;  // mm
  w.put<std::int16_t>(kOffQformCode, o.qform_code);
  w.put<std::int16_t>(kOffSformCode, o.sform_code);
  for (int i = 0; i < 3; ++i) {
    w.put<float>(kOffQuatern + 4 * i, o.quatern[i]);
    w.put<float>(kOffQoffset + 4 * i, o.qoffset[i]);
  }
  for (int i = 0; i < 12; ++i) w.put<float>(kOffSrow + 4 * i, o.srow[i]);
  std::memcpy(out.data() + kOffMagic, "n+1\0", 4);

  const Writer data(out.data() + kDataOffset, swap);
  const auto labels = v.labels();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = i * bpv;
    switch (dt) {
      case Datatype::kUint8: out[kDataOffset + off] = static_cast<std::uint8_t>(labels[i]); break;
      case Datatype::kInt16: data.put<std::int16_t>(off, static_cast<std::int16_t>(labels[i])); break;
      case Datatype::kUint16: data.put<std::uint16_t>(off, static_cast<std::uint16_t>(labels[i])); break;
      case Datatype::kInt32: data.put<std::int32_t>(off, static_cast<std::int32_t>(labels[i])); break;
      case Datatype::kFloat32: data.put<float>(off, static_cast<float>(labels[i])); break;
    }
  }
  return out;
}

LabelVolume read_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_volume(const LabelVolume& v, const std::filesystem::path& path, const WriteOptions& opts) {
  const auto bytes = encode(v, opts);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for " + path.string());
}

}  // namespace thalbench::nifti
