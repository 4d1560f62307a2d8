#include "fieldio/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "fieldio/raw.hpp"

namespace fs = std::filesystem;

namespace flint {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_ensemble(const EnsembleSet& es, const std::string& dir,
                    const std::string& manifest_name) {
  es.validate();
  fs::create_directories(dir);
  std::ostringstream manifest;
  for (std::size_t m = 0; m < es.members.size(); ++m) {
    const Member& mem = es.members[m];
    std::ostringstream line;
    for (double p : mem.sim_params) line << fmt_double(p) << ",";
    for (std::size_t t = 0; t < mem.timesteps.size(); ++t) {
      char name[64];
      std::snprintf(name, sizeof(name), "m%03zu_t%05zu.flg", m, t);
      write_raw(mem.timesteps[t], (fs::path(dir) / name).string());
      line << name << (t + 1 < mem.timesteps.size() || !mem.flows.empty() ? "," : "");
    }
    for (std::size_t t = 0; t < mem.flows.size(); ++t) {
      char name[64];
      std::snprintf(name, sizeof(name), "m%03zu_t%05zu_flow.flg", m, t);
      write_raw(mem.flows[t], (fs::path(dir) / name).string());
      line << "flow:" << name << (t + 1 < mem.flows.size() ? "," : "");
    }
    manifest << line.str() << "\n";
  }
  std::ofstream os(fs::path(dir) / manifest_name, std::ios::trunc);
  if (!os) throw DataError(dir + ": cannot write manifest");
  os << manifest.str();
}

EnsembleSet read_ensemble(const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw DataError(manifest_path + ": cannot open manifest");
  const fs::path base = fs::path(manifest_path).parent_path();

  EnsembleSet es;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    Member mem;
    std::istringstream ls(line);
    std::string tok;
    bool in_params = true;
    while (std::getline(ls, tok, ',')) {
      if (tok.empty()) continue;
      if (in_params) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end && *end == '\0') {
          mem.sim_params.push_back(v);
          continue;
        }
        in_params = false;
      }
      if (tok.rfind("flow:", 0) == 0) {
        mem.flows.push_back(read_raw_flow((base / tok.substr(5)).string()));
      } else {
        mem.timesteps.push_back(read_raw_grid((base / tok).string()));
      }
    }
    if (mem.timesteps.empty())
      throw DataError(manifest_path + ": line " + std::to_string(lineno) +
                      " has no scalar fields");
    es.members.push_back(std::move(mem));
  }
  if (es.members.empty()) throw DataError(manifest_path + ": no members");
  es.validate();
  return es;
}

}  // namespace flint
