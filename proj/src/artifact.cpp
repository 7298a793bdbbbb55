#include "newsrisk/artifact.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "newsrisk/errors.hpp"

namespace newsrisk {

namespace {

std::string to_hex(const unsigned char* data, unsigned int len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xF]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  return to_hex(digest, len);
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

void ArtifactHeader::add_input(const std::string& path) {
  inputs.emplace_back(std::filesystem::path(path).filename().string(), file_sha256(path));
}

std::string ArtifactHeader::config_hash() const { return sha256_hex(config.dump()).substr(0, 16); }

void write_header(std::ostream& out, const ArtifactHeader& header) {
  out << "# newsrisk " << kToolVersion << ' ' << header.command << " config=" << header.config_hash() << '\n';
  out << "# config " << header.config.dump() << '\n';
  for (const auto& [name, digest] : header.inputs) out << "# input " << name << " sha256=" << digest << '\n';
}

void write_artifact(const std::string& path, const ArtifactHeader& header,
                    const std::function<void(std::ostream&)>& body) {
  std::ostringstream content;
  write_header(content, header);
  body(content);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content.str();
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into '" + path + "'");
  }
}

}  // namespace newsrisk
