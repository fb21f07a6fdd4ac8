#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "n2i/noise.hpp"
#include "n2i/trainer.hpp"
#include "n2i/unet.hpp"
#include "n2i/unroll.hpp"

namespace n2i {

// Flat UTF-8 key=value configuration with dotted section prefixes
// (noise.sigma=25). '#' starts a comment; blank lines are ignored.
// Command-line flags override file keys.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text);
  static KvConfig parse_file(const std::filesystem::path& path);
  std::string serialize() const;

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Replaces an existing key in place or appends.
  void set(const std::string& key, const std::string& value);

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Typed sections. Serialization uses the documented key names
// (noise.kind, noise.sigma, ..., unroll.iterations, train.mode, net.depth).
NoiseSpec noise_from_config(const KvConfig& cfg, const std::string& prefix = "noise");
void noise_to_config(const NoiseSpec& spec, KvConfig& cfg,
                     const std::string& prefix = "noise");

UnrollConfig unroll_from_config(const KvConfig& cfg);
void unroll_to_config(const UnrollConfig& ucfg, KvConfig& cfg);

UNetConfig net_from_config(const KvConfig& cfg);
void net_to_config(const UNetConfig& ncfg, KvConfig& cfg);

TrainConfig train_from_config(const KvConfig& cfg);
void train_to_config(const TrainConfig& tcfg, KvConfig& cfg);

}  // namespace n2i
