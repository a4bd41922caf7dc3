#include "spincav/io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spincav/errors.hpp"

namespace spincav {

std::string git_blob_sha1(const std::string& content) {
  const std::string head = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(ctx, head.data(), head.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) && EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw SpincavError("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    const unsigned char c = md[i];
    out += hex[c >> 4];
    out += hex[c & 15];
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw SpincavError("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw SpincavError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SpincavError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string spectrum_csv(const SpectrumMap& map) {
  std::string out = "axis1,axis2,re,im,db,converged\n";
  const auto& a1 = map.grid.axis1.values;
  const auto& a2 = map.grid.axis2.values;
  char buf[256];
  for (std::size_t j2 = 0; j2 < a2.size(); ++j2) {
    for (std::size_t j1 = 0; j1 < a1.size(); ++j1) {
      const std::size_t i = j2 * a1.size() + j1;
      const Complex v = map.values[i];
      const double db = map.db(i);
      char dbs[40];
      if (std::isfinite(db)) {
        std::snprintf(dbs, sizeof dbs, "%.6f", db);
      } else {
        std::snprintf(dbs, sizeof dbs, "%s", db < 0 ? "-inf" : "nan");
      }
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12e,%.12e,%s,%d\n", a1[j1], a2[j2], v.real(), v.imag(),
                    dbs, map.converged[i] ? 1 : 0);
      out += buf;
    }
  }
  return out;
}

nlohmann::json spectrum_sidecar(const SpectrumMap& map, const std::string& csv_name,
                                const std::string& csv_content) {
  nlohmann::json j;
  j["format"] = "spincav-spectrum";
  j["version"] = kSpectrumCsvVersion;
  j["tool_version"] = kToolVersion;
  j["csv"] = csv_name;
  j["csv_sha1"] = git_blob_sha1(csv_content);
  j["columns"] = {"axis1", "axis2", "re", "im", "db", "converged"};
  j["axis1"] = {{"name", map.grid.axis1.name}, {"unit", map.grid.axis1.unit}, {"points", map.grid.axis1.values.size()}};
  j["axis2"] = {{"name", map.grid.axis2.name}, {"unit", map.grid.axis2.unit}, {"points", map.grid.axis2.values.size()}};
  j["cells"] = map.values.size();
  j["failed_cells"] = map.failures();
  j["provenance"] = map.provenance;
  return j;
}

void RunManifest::add_map(const SpectrumMap& map) {
  cells += map.values.size();
  failed_cells += map.failures();
  for (const std::string& s : map.status) ++status_counts[s];
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["tool_version"] = tool_version;
  j["wall_time_s"] = wall_time_s;
  j["convergence"] = {{"cells", cells}, {"failed_cells", failed_cells}, {"status_counts", status_counts}};
  j["outputs"] = outputs;
  if (!extra.empty()) j["extra"] = extra;
  return j;
}

std::string canonical_json(const nlohmann::json& j) { return j.dump(); }

}  // namespace spincav
