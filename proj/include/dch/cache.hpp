#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>

#include "dch/common.hpp"
#include "dch/io.hpp"

namespace dch {

// Bumping this invalidates every cached stage at once; per-stage keys chain
// the upstream keys and the config section each stage actually reads.
constexpr const char* kCacheEpoch = "1";

inline std::string cache_key(std::initializer_list<std::string> parts) {
  uint64_t h = fnv1a64(std::string(kCacheEpoch));
  for (const std::string& p : parts) {
    h = fnv1a64("|", 1, h);
    h = fnv1a64(p, h);
  }
  return hex64(h);
}

// DCH_CACHE_ROOT overrides the per-run location so repeated runs from
// different output directories can still share stage results.
inline std::filesystem::path cache_root_for(const std::string& out_dir) {
  if (const char* env = std::getenv("DCH_CACHE_ROOT"); env && *env)
    return std::filesystem::path(env);
  return std::filesystem::path(out_dir) / "cache";
}

struct CacheStore {
  std::filesystem::path root;
  bool enabled = false;
  mutable std::atomic<int> hits{0}, misses{0};

  std::filesystem::path entry(const std::string& stage, const std::string& key,
                              const char* ext) const {
    return root / (stage + "-" + key + ext);
  }

  std::optional<std::string> fetch(const std::string& stage, const std::string& key,
                                   const char* ext = ".json") const {
    if (!enabled) return std::nullopt;
    std::filesystem::path p = entry(stage, key, ext);
    if (!std::filesystem::exists(p)) {
      ++misses;
      return std::nullopt;
    }
    ++hits;
    return read_file(p);
  }

  void put(const std::string& stage, const std::string& key, const std::string& data,
           const char* ext = ".json") const {
    if (!enabled) return;
    atomic_write(entry(stage, key, ext), data);
  }

  bool has(const std::string& stage, const std::string& key, const char* ext) const {
    return enabled && std::filesystem::exists(entry(stage, key, ext));
  }
};

}  // namespace dch
