#include "nosac/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "nosac/errors.hpp"

namespace nosac {

namespace {

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace

std::string git_blob_hash_bytes(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string git_blob_hash(const std::filesystem::path& file) { return git_blob_hash_bytes(read_all(file)); }

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void RunManifest::add_artifact(const std::filesystem::path& root, const std::filesystem::path& file) {
  ArtifactRecord r;
  r.path = std::filesystem::relative(file, root).generic_string();
  r.bytes = std::filesystem::file_size(file);
  r.hash = git_blob_hash(file);
  artifacts.push_back(std::move(r));
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"bytes", a.bytes}, {"hash", a.hash}});
  return {{"command", command}, {"args", args},           {"config", config},   {"master_seed", master_seed},
          {"seeds", seeds},     {"artifacts", arts}, {"timings", timings}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.args = j.at("args");
    m.config = j.at("config");
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    for (const auto& a : j.at("artifacts")) {
      m.artifacts.push_back({a.at("path").get<std::string>(), a.at("bytes").get<std::uint64_t>(),
                             a.at("hash").get<std::string>()});
    }
    m.timings = j.at("timings").get<std::map<std::string, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

void RunManifest::write(const std::filesystem::path& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }

RunManifest RunManifest::read(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_all(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
}

} // namespace nosac
