#ifndef PINK_JUDGE_CACHE_H_
#define PINK_JUDGE_CACHE_H_

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>

#include "json.hpp"

namespace pink::judge {

// Content-addressed store of judge replies. Entries live in memory and, when a
// directory is given, as {key}.json files written with temp-then-rename.
// Inserts are first-writer-wins, so a key's bytes never change once stored.
class GradeCache {
 public:
  explicit GradeCache(std::optional<std::filesystem::path> directory = std::nullopt);

  std::optional<nlohmann::json> Get(const std::string& key) const;
  // Returns false if the key was already present (the existing entry wins).
  bool Put(const std::string& key, const nlohmann::json& entry);

  const std::optional<std::filesystem::path>& directory() const {
    return directory_;
  }

 private:
  std::optional<std::filesystem::path> directory_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::string, nlohmann::json> memory_;
};

}  // namespace pink::judge

#endif  // PINK_JUDGE_CACHE_H_
