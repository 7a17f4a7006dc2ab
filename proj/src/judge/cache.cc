#include "pink/judge/cache.h"

#include <mutex>

#include "pink/error.h"
#include "pink/io.h"

namespace pink::judge {

GradeCache::GradeCache(std::optional<std::filesystem::path> directory)
    : directory_(std::move(directory)) {
  if (directory_) std::filesystem::create_directories(*directory_);
}

std::optional<nlohmann::json> GradeCache::Get(const std::string& key) const {
  {
    std::shared_lock lock(mutex_);
    auto it = memory_.find(key);
    if (it != memory_.end()) return it->second;
  }
  if (!directory_) return std::nullopt;
  const auto path = *directory_ / (key + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto entry = nlohmann::json::parse(io::ReadFile(path), nullptr, false);
  // A corrupt file is treated as a miss and overwritten by the next Put.
  if (entry.is_discarded()) return std::nullopt;
  std::unique_lock lock(mutex_);
  return memory_.emplace(key, std::move(entry)).first->second;
}

bool GradeCache::Put(const std::string& key, const nlohmann::json& entry) {
  std::unique_lock lock(mutex_);
  if (memory_.contains(key)) return false;
  if (directory_) {
    const auto path = *directory_ / (key + ".json");
    if (std::filesystem::exists(path)) {
      auto existing = nlohmann::json::parse(io::ReadFile(path), nullptr, false);
      if (!existing.is_discarded()) {
        memory_.emplace(key, std::move(existing));
        return false;
      }
    }
    io::WriteFileAtomic(path, entry.dump(2) + "\n");
  }
  memory_.emplace(key, entry);
  return true;
}

}  // namespace pink::judge
