#include "rc4d/container.hpp"

#include <bit>
#include <fstream>
#include <unistd.h>

namespace rc4d {

static_assert(std::endian::native == std::endian::little, "container payloads are written in host byte order");

namespace fs = std::filesystem;

namespace {

Role parse_role(std::string const &s, std::string const &key)
{
  for (Role r : {Role::image_series, Role::kspace, Role::angles, Role::timestamps, Role::bins, Role::waveform}) {
    if (role_name(r) == s) return r;
  }
  throw ValidationError(key, "invalid manifest key '" + key + "': unknown role '" + s + "'");
}

DType parse_dtype(std::string const &s, std::string const &key)
{
  for (DType d : {DType::f32, DType::f64, DType::c64, DType::i32}) {
    if (dtype_name(d) == s) return d;
  }
  throw ValidationError(key, "invalid manifest key '" + key + "': unknown dtype '" + s + "'");
}

Payload make_payload(DType d, std::size_t n)
{
  switch (d) {
  case DType::f32: return std::vector<float>(n);
  case DType::f64: return std::vector<double>(n);
  case DType::c64: return std::vector<std::complex<float>>(n);
  case DType::i32: return std::vector<std::int32_t>(n);
  }
  throw Error("unreachable dtype");
}

std::pair<char const *, std::size_t> bytes_of(Payload const &p)
{
  return std::visit(
    [](auto const &v) {
      return std::pair<char const *, std::size_t>{reinterpret_cast<char const *>(v.data()),
                                                  v.size() * sizeof(typename std::decay_t<decltype(v)>::value_type)};
    },
    p);
}

std::pair<char *, std::size_t> bytes_of(Payload &p)
{
  return std::visit(
    [](auto &v) {
      return std::pair<char *, std::size_t>{reinterpret_cast<char *>(v.data()),
                                            v.size() * sizeof(typename std::decay_t<decltype(v)>::value_type)};
    },
    p);
}

void write_text(fs::path const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("failed to write " + path.string());
}

nlohmann::json const &field(nlohmann::json const &obj, char const *name, std::string const &path)
{
  std::string const key = path.empty() ? name : path + "." + name;
  if (!obj.is_object() || !obj.contains(name)) throw ValidationError(key, "invalid manifest key '" + key + "': missing");
  return obj.at(name);
}

std::string string_field(nlohmann::json const &obj, char const *name, std::string const &path)
{
  auto const &v = field(obj, name, path);
  std::string const key = path.empty() ? name : path + "." + name;
  if (!v.is_string()) throw ValidationError(key, "invalid manifest key '" + key + "': expected a string");
  return v.get<std::string>();
}

} // namespace

std::string role_name(Role r)
{
  switch (r) {
  case Role::image_series: return "image_series";
  case Role::kspace: return "kspace";
  case Role::angles: return "angles";
  case Role::timestamps: return "timestamps";
  case Role::bins: return "bins";
  case Role::waveform: return "waveform";
  }
  return "?";
}

std::string dtype_name(DType d)
{
  switch (d) {
  case DType::f32: return "f32";
  case DType::f64: return "f64";
  case DType::c64: return "c64";
  case DType::i32: return "i32";
  }
  return "?";
}

std::size_t dtype_size(DType d)
{
  switch (d) {
  case DType::f32: return 4;
  case DType::f64: return 8;
  case DType::c64: return 8;
  case DType::i32: return 4;
  }
  return 0;
}

std::size_t Array::element_count() const noexcept
{
  return std::visit([](auto const &v) { return v.size(); }, data);
}

Array const *Container::find(std::string const &name) const noexcept
{
  for (auto const &a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

Array const &Container::get(std::string const &name) const
{
  if (auto const *a = find(name)) return *a;
  throw ValidationError(name, "container has no array named '" + name + "'");
}

void Container::put(Array a)
{
  std::size_t expected = 1;
  for (auto s : a.shape) {
    if (s < 0) throw Error("negative array extent");
    expected *= static_cast<std::size_t>(s);
  }
  if (expected != a.element_count()) throw Error("array '" + a.name + "' shape does not match its data");
  for (auto &existing : arrays) {
    if (existing.name == a.name) {
      existing = std::move(a);
      return;
    }
  }
  arrays.push_back(std::move(a));
}

void Container::erase(std::string const &name)
{
  std::erase_if(arrays, [&](Array const &a) { return a.name == name; });
}

Array const *Container::series_array(std::string const &preferred) const noexcept
{
  if (auto const *a = find(preferred); a && a->role == Role::image_series && a->shape.size() == 3) return a;
  for (auto const &a : arrays) {
    if (a.role == Role::image_series && a.shape.size() == 3) return &a;
  }
  return nullptr;
}

nlohmann::json manifest(Container const &c)
{
  nlohmann::json m;
  m["format_version"] = container_format_version;
  m["arrays"] = nlohmann::json::array();
  for (auto const &a : c.arrays) {
    m["arrays"].push_back({{"name", a.name},
                           {"role", role_name(a.role)},
                           {"dtype", dtype_name(a.dtype())},
                           {"shape", a.shape},
                           {"file", a.file()},
                           {"byte_order", "LE"},
                           {"layout", "C"}});
  }
  m["provenance"] = c.provenance;
  m["documents"] = nlohmann::json::array();
  for (auto const &[name, doc] : c.documents) m["documents"].push_back(name + ".json");
  return m;
}

void write_container(Container const &c, fs::path const &dir)
{
  fs::path const target = fs::absolute(dir).lexically_normal();
  fs::path const parent = target.parent_path();
  fs::create_directories(parent);
  auto const     tag = std::to_string(::getpid());
  fs::path const tmp = parent / (target.filename().string() + ".tmp-" + tag);
  fs::remove_all(tmp);
  fs::create_directory(tmp);

  for (auto const &a : c.arrays) {
    auto const [ptr, len] = bytes_of(a.data);
    std::ofstream out(tmp / a.file(), std::ios::binary);
    out.write(ptr, static_cast<std::streamsize>(len));
    if (!out) throw Error("failed to write " + (tmp / a.file()).string());
  }
  for (auto const &[name, doc] : c.documents) write_text(tmp / (name + ".json"), doc.dump(2) + "\n");
  write_text(tmp / "manifest.json", manifest(c).dump(2) + "\n");

  if (fs::exists(target)) {
    fs::path const old = parent / (target.filename().string() + ".old-" + tag);
    fs::remove_all(old);
    fs::rename(target, old);
    fs::rename(tmp, target);
    fs::remove_all(old);
  }
  else {
    fs::rename(tmp, target);
  }
}

Container read_container(fs::path const &dir)
{
  fs::path const mpath = dir / "manifest.json";
  std::ifstream  in(mpath);
  if (!in) throw ValidationError("manifest.json", "cannot open " + mpath.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  }
  catch (nlohmann::json::parse_error const &e) {
    throw ValidationError("manifest.json", std::string("manifest is not valid JSON: ") + e.what());
  }

  auto const &version = field(m, "format_version", "");
  if (!version.is_number_integer() || version.get<int>() != container_format_version) {
    throw ValidationError("format_version", "invalid manifest key 'format_version': expected 1");
  }

  Container   c;
  auto const &arrays = field(m, "arrays", "");
  if (!arrays.is_array()) throw ValidationError("arrays", "invalid manifest key 'arrays': expected a list");
  for (std::size_t i = 0; i < arrays.size(); i++) {
    std::string const path = "arrays[" + std::to_string(i) + "]";
    auto const       &e = arrays[i];
    Array             a;
    a.name = string_field(e, "name", path);
    a.role = parse_role(string_field(e, "role", path), path + ".role");
    DType const dtype = parse_dtype(string_field(e, "dtype", path), path + ".dtype");
    if (string_field(e, "byte_order", path) != "LE") {
      throw ValidationError(path + ".byte_order", "invalid manifest key '" + path + ".byte_order': only LE is supported");
    }
    if (string_field(e, "layout", path) != "C") {
      throw ValidationError(path + ".layout", "invalid manifest key '" + path + ".layout': only C order is supported");
    }
    auto const &shape = field(e, "shape", path);
    if (!shape.is_array()) throw ValidationError(path + ".shape", "invalid manifest key '" + path + ".shape': expected a list");
    std::size_t count = 1;
    for (auto const &s : shape) {
      if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
        throw ValidationError(path + ".shape", "invalid manifest key '" + path + ".shape': extents must be non-negative integers");
      }
      a.shape.push_back(s.get<std::int64_t>());
      count *= static_cast<std::size_t>(a.shape.back());
    }
    std::string const file = string_field(e, "file", path);
    if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
      throw ValidationError(path + ".file", "invalid manifest key '" + path + ".file': must be a plain file name");
    }
    fs::path const fpath = dir / file;
    if (!fs::exists(fpath)) throw ValidationError(path + ".file", "invalid manifest key '" + path + ".file': " + file + " not found");
    if (fs::file_size(fpath) != count * dtype_size(dtype)) {
      throw ValidationError(path + ".shape", "invalid manifest key '" + path + ".shape': payload length of " + file +
                                               " does not match shape and dtype");
    }
    a.data = make_payload(dtype, count);
    auto [ptr, len] = bytes_of(a.data);
    std::ifstream bin(fpath, std::ios::binary);
    bin.read(ptr, static_cast<std::streamsize>(len));
    if (!bin && len > 0) throw Error("failed to read " + fpath.string());
    c.arrays.push_back(std::move(a));
  }

  if (m.contains("provenance")) {
    if (!m["provenance"].is_object()) throw ValidationError("provenance", "invalid manifest key 'provenance': expected an object");
    c.provenance = m["provenance"];
  }
  if (m.contains("documents")) {
    auto const &docs = m["documents"];
    if (!docs.is_array()) throw ValidationError("documents", "invalid manifest key 'documents': expected a list");
    for (std::size_t i = 0; i < docs.size(); i++) {
      std::string const key = "documents[" + std::to_string(i) + "]";
      if (!docs[i].is_string()) throw ValidationError(key, "invalid manifest key '" + key + "': expected a file name");
      auto const name = docs[i].get<std::string>();
      if (name.size() < 6 || name.substr(name.size() - 5) != ".json" || name.find('/') != std::string::npos) {
        throw ValidationError(key, "invalid manifest key '" + key + "': expected <name>.json");
      }
      std::ifstream din(dir / name);
      if (!din) throw ValidationError(key, "invalid manifest key '" + key + "': " + name + " not found");
      try {
        c.documents[name.substr(0, name.size() - 5)] = nlohmann::json::parse(din);
      }
      catch (nlohmann::json::parse_error const &) {
        throw ValidationError(key, "invalid manifest key '" + key + "': " + name + " is not valid JSON");
      }
    }
  }
  return c;
}

Array series_to_array(std::string name, ImageSeries const &s)
{
  if (!s.consistent()) throw Error("image series frames differ in shape");
  Array a;
  a.name = std::move(name);
  a.role = Role::image_series;
  a.shape = {s.n_frames(), s.height(), s.width()};
  std::vector<float> v;
  v.reserve(static_cast<std::size_t>(s.n_frames()) * static_cast<std::size_t>(s.width()) * static_cast<std::size_t>(s.height()));
  for (auto const &f : s.frames) {
    for (double x : f.values()) v.push_back(static_cast<float>(x));
  }
  a.data = std::move(v);
  return a;
}

ImageSeries array_to_series(Array const &a)
{
  if (a.role != Role::image_series || a.shape.size() != 3) {
    throw ValidationError(a.name, "array '" + a.name + "' is not a [frames, height, width] image series");
  }
  auto const &v = a.as<float>();
  int const   frames = static_cast<int>(a.shape[0]);
  int const   h = static_cast<int>(a.shape[1]);
  int const   w = static_cast<int>(a.shape[2]);
  ImageSeries s;
  std::size_t k = 0;
  for (int f = 0; f < frames; f++) {
    RealImage img(w, h);
    for (std::size_t i = 0; i < img.size(); i++) img[i] = v[k++];
    s.frames.push_back(std::move(img));
  }
  return s;
}

} // namespace rc4d
