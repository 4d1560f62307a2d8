#include "fieldio/raw.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "core/error.hpp"

namespace flint {

namespace {

constexpr char kMagic[4] = {'F', 'L', 'G', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
  buf.push_back(static_cast<char>((v >> 16) & 0xff));
  buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& buf, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(buf, bits);
}

class Reader {
public:
  Reader(const char* data, std::size_t n, const std::string& path)
      : p_(data), end_(data + n), path_(path) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(*p_++);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint8_t>(p_[0]) |
                      (static_cast<std::uint8_t>(p_[1]) << 8) |
                      (static_cast<std::uint8_t>(p_[2]) << 16) |
                      (static_cast<std::uint8_t>(p_[3]) << 24);
    p_ += 4;
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  void need(std::size_t n) {
    if (static_cast<std::size_t>(end_ - p_) < n)
      throw DataError(path_ + ": truncated payload");
  }
  bool at_end() const { return p_ == end_; }

private:
  const char* p_;
  const char* end_;
  std::string path_;
};

}  // namespace

void write_raw(const Field& field, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);

  const std::vector<int>* dims = nullptr;
  int comps = 0;
  if (std::holds_alternative<Grid>(field)) {
    dims = &std::get<Grid>(field).dims;
    comps = 1;
  } else {
    const auto& f = std::get<FlowGrid>(field);
    dims = &f.dims;
    comps = f.rank();
  }
  buf.push_back(static_cast<char>(dims->size()));
  buf.push_back(static_cast<char>(comps));
  for (int d : *dims) put_u32(buf, static_cast<std::uint32_t>(d));

  if (std::holds_alternative<Grid>(field)) {
    for (double v : std::get<Grid>(field).values) put_f32(buf, static_cast<float>(v));
  } else {
    for (const auto& c : std::get<FlowGrid>(field).components)
      for (double v : c) put_f32(buf, static_cast<float>(v));
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError(path + ": cannot open for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw DataError(path + ": write failed");
}

Field read_raw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path + ": cannot open");
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  Reader r(buf.data(), buf.size(), path);
  r.need(4);
  char magic[4];
  for (int i = 0; i < 4; ++i) magic[i] = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError(path + ": bad magic");

  const int rank = r.u8();
  const int comps = r.u8();
  if (rank < 2 || rank > 3) throw DataError(path + ": unsupported rank " + std::to_string(rank));
  if (comps != 1 && comps != rank)
    throw DataError(path + ": component count " + std::to_string(comps) +
                    " invalid for rank " + std::to_string(rank));

  std::vector<int> dims(rank);
  std::size_t cells = 1;
  for (int a = 0; a < rank; ++a) {
    std::uint32_t e = r.u32();
    if (e == 0 || e > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
      throw DataError(path + ": extent overflow on axis " + std::to_string(a));
    dims[a] = static_cast<int>(e);
    if (cells > (static_cast<std::size_t>(1) << 40) / e)
      throw DataError(path + ": extent overflow");
    cells *= e;
  }

  if (comps == 1) {
    Grid g;
    g.dims = dims;
    g.values.resize(cells);
    r.need(4 * cells);
    for (auto& v : g.values) v = r.f32();
    return g;
  }
  FlowGrid f;
  f.dims = dims;
  f.components.assign(comps, std::vector<double>(cells));
  r.need(4 * cells * comps);
  for (auto& c : f.components)
    for (auto& v : c) v = r.f32();
  return f;
}

Grid read_raw_grid(const std::string& path) {
  Field f = read_raw(path);
  if (!std::holds_alternative<Grid>(f)) throw DataError(path + ": expected a scalar field");
  return std::get<Grid>(std::move(f));
}

FlowGrid read_raw_flow(const std::string& path) {
  Field f = read_raw(path);
  if (!std::holds_alternative<FlowGrid>(f)) throw DataError(path + ": expected a vector field");
  return std::get<FlowGrid>(std::move(f));
}

}  // namespace flint
