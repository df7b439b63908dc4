#pragma once

// Transactional artifact directory: every file written through it is hashed,
// commit() writes manifest.json, and destruction without commit() removes
// whatever this run created.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "dynareg/error.hpp"
#include "dynareg/experiment/config.hpp"

namespace dynareg::experiment {

namespace fs = std::filesystem;

inline std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("sha256: digest computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(digest[i]);
  }
  return hex.str();
}

struct Artifact {
  std::string path;  // relative to the output directory, '/' separated
  std::string sha256;
  std::size_t bytes = 0;
};

inline constexpr const char* kManifestName = "manifest.json";

class OutputDirectory {
 public:
  explicit OutputDirectory(fs::path root) : root_(std::move(root)) {
    make_dirs(root_);
  }

  OutputDirectory(const OutputDirectory&) = delete;
  OutputDirectory& operator=(const OutputDirectory&) = delete;

  ~OutputDirectory() {
    if (!committed_) rollback();
  }

  const fs::path& root() const { return root_; }
  const std::vector<Artifact>& artifacts() const { return artifacts_; }

  void write(const std::string& relative, const std::string& content) {
    require(!committed_, "OutputDirectory: already committed");
    const fs::path target = root_ / relative;
    make_dirs(target.parent_path());
    // Record before writing so a half-written file is still rolled back.
    files_.push_back(target);
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw Error("cannot write artifact " + target.string());
    artifacts_.push_back({relative, sha256_hex(content), content.size()});
  }

  /// Writes manifest.json listing every artifact and the resolved config.
  json commit(const json& config) {
    json list = json::array();
    for (const Artifact& a : artifacts_) {
      list.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    }
    const json manifest = {{"config", config}, {"artifacts", list}};
    const std::string text = manifest.dump(2) + "\n";
    const fs::path target = root_ / kManifestName;
    files_.push_back(target);
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) throw Error("cannot write " + target.string());
    committed_ = true;
    return manifest;
  }

  void rollback() noexcept {
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
    // Directories are removed innermost first, and only if this run made them
    // and they ended up empty.
    for (auto it = created_.rbegin(); it != created_.rend(); ++it) {
      if (fs::is_empty(*it, ec)) fs::remove(*it, ec);
    }
    files_.clear();
    created_.clear();
    artifacts_.clear();
  }

 private:
  static void require(bool ok, const char* msg) {
    if (!ok) throw Error(msg);
  }

  void make_dirs(const fs::path& dir) {
    if (dir.empty()) return;
    std::vector<fs::path> missing;
    for (fs::path p = dir; !p.empty() && !fs::exists(p); p = p.parent_path()) {
      missing.push_back(p);
      if (p == p.parent_path()) break;
    }
    for (auto it = missing.rbegin(); it != missing.rend(); ++it) {
      std::error_code ec;
      if (!fs::create_directory(*it, ec) && ec) {
        throw Error("cannot create directory " + it->string() + ": " +
                    ec.message());
      }
      created_.push_back(*it);
    }
    if (!fs::is_directory(dir)) {
      throw Error("output path " + dir.string() + " is not a directory");
    }
  }

  fs::path root_;
  std::vector<fs::path> files_;
  std::vector<fs::path> created_;
  std::vector<Artifact> artifacts_;
  bool committed_ = false;
};

}  // namespace dynareg::experiment
