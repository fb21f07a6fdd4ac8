#include "n2i/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "n2i/errors.hpp"
#include "n2i/image_io.hpp"

namespace n2i {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.set(key, value);
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::filesystem::path& path) {
  return parse(read_file_bytes(path));
}

std::string KvConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

bool KvConfig::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == key; });
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string KvConfig::get_or(const std::string& key, const std::string& fallback) const {
  auto v = get(key);
  return v ? *v : fallback;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    double d = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " is not a number: " + *v);
  }
}

int KvConfig::get_int(const std::string& key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    int i = std::stoi(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " is not an integer: " + *v);
  }
}

uint64_t KvConfig::get_u64(const std::string& key, uint64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    unsigned long long u = std::stoull(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return static_cast<uint64_t>(u);
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " is not an unsigned integer: " + *v);
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config: " + key + " is not a boolean: " + *v);
}

void KvConfig::set(const std::string& key, const std::string& value) {
  for (auto& e : entries_) {
    if (e.first == key) {
      e.second = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

NoiseSpec noise_from_config(const KvConfig& cfg, const std::string& prefix) {
  NoiseSpec spec;
  std::string kind = cfg.get_or(prefix + ".kind", "none");
  spec.kind = noise_kind_from_string(kind);
  spec.sigma = cfg.get_double(prefix + ".sigma", spec.sigma);
  spec.sigma_min = cfg.get_double(prefix + ".sigma_min", spec.sigma_min);
  spec.sigma_max = cfg.get_double(prefix + ".sigma_max", spec.sigma_max);
  spec.p = cfg.get_double(prefix + ".p", spec.p);
  spec.lambda = cfg.get_double(prefix + ".lambda", spec.lambda);
  spec.band_lo = cfg.get_int(prefix + ".band_lo", spec.band_lo);
  spec.band_hi = cfg.get_int(prefix + ".band_hi", spec.band_hi);
  spec.energy = cfg.get_double(prefix + ".energy", spec.energy);
  spec.seed = cfg.get_u64(prefix + ".seed", spec.seed);
  if (spec.kind == NoiseKind::mixture) {
    // noise.components = comma-separated kinds; stage i reads noise.<i>.* keys
    auto list = cfg.get(prefix + ".components");
    if (!list) throw ConfigError("config: mixture requires " + prefix + ".components");
    std::istringstream ss(*list);
    std::string item;
    int idx = 0;
    while (std::getline(ss, item, ',')) {
      std::string sub = prefix + "." + std::to_string(idx++);
      NoiseSpec comp = noise_from_config(cfg, sub);
      comp.kind = noise_kind_from_string(item);
      spec.components.push_back(comp);
    }
  }
  spec.validate();
  return spec;
}

void noise_to_config(const NoiseSpec& spec, KvConfig& cfg, const std::string& prefix) {
  cfg.set(prefix + ".kind", to_string(spec.kind));
  switch (spec.kind) {
    case NoiseKind::none:
      break;
    case NoiseKind::gaussian:
      cfg.set(prefix + ".sigma", std::to_string(spec.sigma));
      break;
    case NoiseKind::blind_gaussian:
      cfg.set(prefix + ".sigma_min", std::to_string(spec.sigma_min));
      cfg.set(prefix + ".sigma_max", std::to_string(spec.sigma_max));
      break;
    case NoiseKind::bernoulli:
      cfg.set(prefix + ".p", std::to_string(spec.p));
      break;
    case NoiseKind::poisson:
      cfg.set(prefix + ".lambda", std::to_string(spec.lambda));
      break;
    case NoiseKind::colored:
      cfg.set(prefix + ".band_lo", std::to_string(spec.band_lo));
      cfg.set(prefix + ".band_hi", std::to_string(spec.band_hi));
      cfg.set(prefix + ".energy", std::to_string(spec.energy));
      break;
    case NoiseKind::mixture: {
      std::string kinds;
      for (size_t i = 0; i < spec.components.size(); ++i) {
        if (i) kinds += ",";
        kinds += to_string(spec.components[i].kind);
        noise_to_config(spec.components[i], cfg, prefix + "." + std::to_string(i));
      }
      cfg.set(prefix + ".components", kinds);
      break;
    }
  }
  cfg.set(prefix + ".seed", std::to_string(spec.seed));
}

UnrollConfig unroll_from_config(const KvConfig& cfg) {
  UnrollConfig u;
  u.iterations = cfg.get_int("unroll.iterations", u.iterations);
  u.df_variant = df_variant_from_string(
      cfg.get_or("unroll.df_variant", to_string(u.df_variant)));
  u.fill.kind = fill_kind_from_string(cfg.get_or("unroll.fill", to_string(u.fill.kind)));
  u.fill.radius = cfg.get_int("unroll.fill_radius", u.fill.radius);
  u.cg_tol = cfg.get_double("unroll.cg_tol", u.cg_tol);
  u.cg_max_iter = cfg.get_int("unroll.cg_max_iter", u.cg_max_iter);
  u.validate();
  return u;
}

void unroll_to_config(const UnrollConfig& u, KvConfig& cfg) {
  cfg.set("unroll.iterations", std::to_string(u.iterations));
  cfg.set("unroll.df_variant", to_string(u.df_variant));
  cfg.set("unroll.fill", to_string(u.fill.kind));
  cfg.set("unroll.fill_radius", std::to_string(u.fill.radius));
  cfg.set("unroll.cg_tol", std::to_string(u.cg_tol));
  cfg.set("unroll.cg_max_iter", std::to_string(u.cg_max_iter));
}

UNetConfig net_from_config(const KvConfig& cfg) {
  UNetConfig n;
  n.depth = cfg.get_int("net.depth", n.depth);
  n.base_channels = cfg.get_int("net.base_channels", n.base_channels);
  n.kernel = cfg.get_int("net.kernel", n.kernel);
  n.in_channels = cfg.get_int("net.in_channels", n.in_channels);
  n.batch_norm = cfg.get_bool("net.batch_norm", n.batch_norm);
  return n;
}

void net_to_config(const UNetConfig& n, KvConfig& cfg) {
  cfg.set("net.depth", std::to_string(n.depth));
  cfg.set("net.base_channels", std::to_string(n.base_channels));
  cfg.set("net.kernel", std::to_string(n.kernel));
  cfg.set("net.in_channels", std::to_string(n.in_channels));
  cfg.set("net.batch_norm", n.batch_norm ? "true" : "false");
}

TrainConfig train_from_config(const KvConfig& cfg) {
  TrainConfig t;
  t.mode = train_mode_from_string(cfg.get_or("train.mode", to_string(t.mode)));
  t.epochs = cfg.get_int("train.epochs", t.epochs);
  t.batch_size = cfg.get_int("train.batch_size", t.batch_size);
  t.learning_rate = cfg.get_double("train.learning_rate", t.learning_rate);
  t.density = cfg.get_double("train.density", t.density);
  t.mask_mode = mask_mode_from_string(cfg.get_or("mask.mode", to_string(t.mask_mode)));
  t.noise = noise_from_config(cfg, "noise");
  if (cfg.has("noise2.kind")) t.noise2 = noise_from_config(cfg, "noise2");
  t.seed = cfg.get_u64("seed", t.seed);
  t.checkpoint_every = cfg.get_int("train.checkpoint_every", t.checkpoint_every);
  t.mu_init = cfg.get_double("train.mu_init", t.mu_init);
  t.net = net_from_config(cfg);
  t.unroll = unroll_from_config(cfg);
  return t;
}

void train_to_config(const TrainConfig& t, KvConfig& cfg) {
  cfg.set("train.mode", to_string(t.mode));
  cfg.set("train.epochs", std::to_string(t.epochs));
  cfg.set("train.batch_size", std::to_string(t.batch_size));
  cfg.set("train.learning_rate", std::to_string(t.learning_rate));
  cfg.set("train.density", std::to_string(t.density));
  cfg.set("mask.mode", to_string(t.mask_mode));
  noise_to_config(t.noise, cfg, "noise");
  if (t.noise2) noise_to_config(*t.noise2, cfg, "noise2");
  cfg.set("seed", std::to_string(t.seed));
  cfg.set("train.checkpoint_every", std::to_string(t.checkpoint_every));
  cfg.set("train.mu_init", std::to_string(t.mu_init));
  net_to_config(t.net, cfg);
  unroll_to_config(t.unroll, cfg);
}

}  // namespace n2i
