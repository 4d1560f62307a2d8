#include "net/model_params.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace flint {

ag::NodePtr ModelParams::add(const std::string& name, Tensor t) {
  if (index_.count(name)) throw DataError("duplicate parameter name: " + name);
  ag::NodePtr n = ag::param(std::move(t));
  index_[name] = entries_.size();
  entries_.emplace_back(name, n);
  return n;
}

const ag::NodePtr& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("unknown parameter: " + name);
  return entries_[it->second].second;
}

std::vector<ag::NodePtr> ModelParams::nodes() const {
  std::vector<ag::NodePtr> out;
  out.reserve(entries_.size());
  for (const auto& [_, n] : entries_) out.push_back(n);
  return out;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, node] : entries_) n += node->value.size();
  return n;
}

void ModelParams::zero_grads() const {
  for (const auto& [_, node] : entries_) node->zero_grad();
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

std::string Checkpoint::meta_value(const std::string& key, const std::string& fallback) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return fallback;
}

namespace {

constexpr char kMagic[4] = {'F', 'L', 'C', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  return static_cast<std::uint8_t>(p[0]) | (static_cast<std::uint8_t>(p[1]) << 8) |
         (static_cast<std::uint8_t>(p[2]) << 16) | (static_cast<std::uint8_t>(p[3]) << 24);
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ostringstream index;
  std::size_t offset = 0;  // in floats
  for (const auto& [name, t] : ck.tensors) {
    if (name.find_first_of(" \n") != std::string::npos)
      throw DataError("tensor name contains whitespace: " + name);
    index << "t " << name << " " << t.shape.rank();
    for (int d : t.shape.d) index << " " << d;
    index << " " << offset << "\n";
    offset += t.size();
  }
  for (const auto& [k, v] : ck.meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
      throw DataError("malformed meta entry: " + k);
    index << "m " << k << " " << v << "\n";
  }

  std::string buf;
  buf.append(kMagic, 4);
  const std::string idx = index.str();
  put_u32(buf, static_cast<std::uint32_t>(idx.size()));
  buf += idx;
  for (const auto& [_, t] : ck.tensors)
    for (double v : t.v) {
      float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(buf, bits);
    }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError(path + ": cannot open for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw DataError(path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path + ": cannot open");
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw DataError(path + ": bad magic");
  const std::uint32_t idx_len = get_u32(buf.data() + 4);
  if (buf.size() < 8 + idx_len) throw DataError(path + ": truncated index");
  const std::string idx = buf.substr(8, idx_len);
  const char* payload = buf.data() + 8 + idx_len;
  const std::size_t payload_floats = (buf.size() - 8 - idx_len) / 4;

  Checkpoint ck;
  std::istringstream lines(idx);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "t") {
      std::string name;
      int rank = 0;
      ls >> name >> rank;
      if (!ls || rank < 1 || rank > 5) throw DataError(path + ": malformed index line: " + line);
      std::vector<int> dims(rank);
      for (int& d : dims) ls >> d;
      std::size_t offset = 0;
      ls >> offset;
      if (!ls) throw DataError(path + ": malformed index line: " + line);
      Tensor t{Shape(dims)};
      if (offset + t.size() > payload_floats) throw DataError(path + ": truncated payload");
      for (std::size_t i = 0; i < t.size(); ++i) {
        std::uint32_t bits = get_u32(payload + 4 * (offset + i));
        float f;
        std::memcpy(&f, &bits, 4);
        t[i] = f;
      }
      ck.tensors.emplace_back(name, std::move(t));
    } else if (tag == "m") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ck.meta.emplace_back(key, value);
    } else {
      throw DataError(path + ": unknown index tag in line: " + line);
    }
  }
  return ck;
}

Checkpoint params_to_checkpoint(const ModelParams& params) {
  Checkpoint ck;
  for (const auto& [name, node] : params.entries()) ck.tensors.emplace_back(name, node->value);
  return ck;
}

ModelParams params_from_checkpoint(const Checkpoint& ck) {
  ModelParams p;
  for (const auto& [name, t] : ck.tensors)
    if (name.rfind("meta/", 0) != 0) p.add(name, t);
  return p;
}

}  // namespace flint
