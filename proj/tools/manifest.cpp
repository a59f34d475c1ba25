#include "manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "stainkit/errors.hpp"
#include "stainkit/version.hpp"

namespace stainkit::cli {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

RunManifest::RunManifest(std::string command, std::string arguments_json)
    : command_(std::move(command)),
      arguments_json_(std::move(arguments_json)),
      config_digest_(sha256_hex(arguments_json_)),
      started_(std::chrono::system_clock::now()),
      clock_start_(std::chrono::steady_clock::now()) {}

void RunManifest::write(const std::filesystem::path& manifest_path) const {
  namespace fs = std::filesystem;
  const fs::path base = fs::absolute(manifest_path).parent_path();
  std::vector<std::string> outputs;
  for (const auto& p : outputs_) outputs.push_back(fs::absolute(p).lexically_relative(base).generic_string());
  std::sort(outputs.begin(), outputs.end());

  const std::time_t t = std::chrono::system_clock::to_time_t(started_);
  std::tm utc{};
  gmtime_r(&t, &utc);
  std::ostringstream stamp;
  stamp << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  const double duration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start_).count();

  nlohmann::ordered_json doc;
  doc["command"] = command_;
  doc["arguments"] = nlohmann::ordered_json::parse(arguments_json_);
  doc["config_digest"] = "sha256:" + config_digest_;
  doc["seed"] = seed_ ? nlohmann::ordered_json(*seed_) : nlohmann::ordered_json(nullptr);
  doc["inputs"] = inputs_;
  doc["outputs"] = outputs;
  doc["version"] = kVersion;
  doc["started_at"] = stamp.str();
  doc["duration_seconds"] = duration;

  fs::create_directories(base);
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace stainkit::cli
