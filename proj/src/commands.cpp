#include "n2i/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "n2i/checkpoint.hpp"
#include "n2i/errors.hpp"
#include "n2i/image_io.hpp"
#include "n2i/regularizer.hpp"
#include "n2i/rng.hpp"
#include "n2i/synthdata.hpp"
#include "n2i/trainer.hpp"

namespace n2i {

namespace fs = std::filesystem;

namespace {

fs::path require_dir(const KvConfig& cfg, const std::string& key) {
  auto v = cfg.get(key);
  if (!v || v->empty()) throw ConfigError("missing required key: " + key);
  return fs::path(*v);
}

fs::path make_out_dir(const KvConfig& cfg) {
  fs::path out = require_dir(cfg, "out");
  fs::create_directories(out);
  return out;
}

std::string with_suffix(const std::string& filename, const std::string& suffix) {
  fs::path p(filename);
  return (p.stem().string() + suffix + p.extension().string());
}

struct NamedImages {
  std::vector<std::string> names;
  std::vector<Image> images;
};

NamedImages load_folder(const fs::path& dir) {
  NamedImages out;
  for (const auto& p : list_images(dir)) {
    out.names.push_back(p.filename().string());
    out.images.push_back(load_image(p));
  }
  return out;
}

}  // namespace

void cmd_synth(const KvConfig& cfg) {
  fs::path out = make_out_dir(cfg);
  uint64_t seed = cfg.get_u64("seed", 1);
  NoiseSpec noise = noise_from_config(cfg);

  NamedImages inputs;
  int generate = cfg.get_int("synth.generate", 0);
  if (generate > 0) {
    Dataset ds = synthetic_corpus(
        generate, cfg.get_int("synth.height", 64), cfg.get_int("synth.width", 64),
        cfg.get_int("synth.channels", 1), cfg.get_double("synth.peak", 255.0),
        derive_seed(seed, "synth-corpus"));
    inputs.names = ds.names;
    inputs.images = std::move(ds.items);
  } else {
    inputs = load_folder(require_dir(cfg, "in"));
  }
  if (inputs.images.empty()) throw ConfigError("synth: no input images");

  bool write_clean = cfg.get_bool("synth.write_clean", true);
  fs::path noisy_dir = out / "noisy";
  fs::create_directories(noisy_dir);
  if (write_clean) fs::create_directories(out / "clean");

  std::string manifest = "filename seed sigma\n";
  char buf[256];
  for (size_t i = 0; i < inputs.images.size(); ++i) {
    NoiseSpec spec = noise;
    spec.seed = derive_seed(seed, "synth", i);
    CorruptInfo info;
    Image noisy = corrupt(inputs.images[i], spec, &info);
    save_image(noisy, noisy_dir / inputs.names[i]);
    if (write_clean) save_image(inputs.images[i], out / "clean" / inputs.names[i]);
    std::snprintf(buf, sizeof(buf), "%s %llu %.12g\n", inputs.names[i].c_str(),
                  static_cast<unsigned long long>(spec.seed), info.drawn_sigma);
    manifest += buf;
  }
  atomic_write_bytes(out / "manifest.txt", manifest);
  std::cout << "synth: wrote " << inputs.images.size() << " images to "
            << noisy_dir.string() << "\n";
}

void cmd_train(const KvConfig& cfg) {
  fs::path out = make_out_dir(cfg);
  Dataset ds = load_dataset(require_dir(cfg, "in"));
  if (ds.items.empty()) throw ConfigError("train: input folder has no images");

  int patch = cfg.get_int("train.patch_size", 0);
  if (patch > 0) {
    int stride = cfg.get_int("train.patch_stride", patch);
    Dataset patched;
    patched.provenance = ds.provenance;
    patched.patch_size = patch;
    for (const auto& img : ds.items)
      for (auto& p : extract_patches(img, patch, stride))
        patched.items.push_back(std::move(p));
    ds = std::move(patched);
  }
  if (cfg.get_bool("train.augment", true)) {
    Dataset augmented;
    augmented.provenance = ds.provenance;
    augmented.patch_size = ds.patch_size;
    for (const auto& img : ds.items)
      for (auto& a : augment_eightfold(img)) augmented.items.push_back(std::move(a));
    ds = std::move(augmented);
  }

  TrainConfig tcfg = train_from_config(cfg);
  if (!cfg.has("net.in_channels")) tcfg.net.in_channels = ds.items.front().channels;
  tcfg.checkpoint_dir = out.string();

  TrainResult res = train(ds, tcfg);
  atomic_write_bytes(out / "train_log.txt", format_train_log(res.log));
  save_params(out / "model.n2ickpt", res.params);
  const EpochRecord& last = res.log.epochs.back();
  std::cout << "train: mode " << to_string(tcfg.mode) << ", " << ds.items.size()
            << " items, final loss " << last.loss << ", psnr " << last.psnr
            << ", checkpoint " << (out / "model.n2ickpt").string() << "\n";
}

void cmd_denoise(const KvConfig& cfg) {
  fs::path out = make_out_dir(cfg);
  NamedImages inputs = load_folder(require_dir(cfg, "in"));
  if (inputs.images.empty()) throw ConfigError("denoise: no input images");

  UnrollConfig ucfg = unroll_from_config(cfg);
  NoiseSpec noise = noise_from_config(cfg);
  bool colored = noise.kind == NoiseKind::colored;

  std::string reg_kind = cfg.get_or("reg.kind", "unet");
  NetParams params;
  if (reg_kind == "unet") {
    params = load_params(require_dir(cfg, "checkpoint"));
  } else if (reg_kind != "dct_shrink") {
    throw ConfigError("denoise: unknown reg.kind: " + reg_kind);
  }
  for (size_t i = 0; i < inputs.images.size(); ++i) {
    const Image& noisy = inputs.images[i];
    ColoredCovariance cov;
    if (colored)
      cov = ColoredCovariance::band_pass(noisy.height, noisy.width, noise.band_lo,
                                         noise.band_hi, noise.energy);
    Image denoised;
    if (reg_kind == "dct_shrink") {
      // checkpoint-free classical inference
      DctShrinkRegularizer reg(cfg.get_double("reg.tau", 0.1));
      double mu = cfg.get_double("reg.mu", 0.25);
      UnrollConfig icfg = ucfg;
      icfg.df_variant = colored ? DfVariant::colored_cg : DfVariant::full_image;
      Tensor y = to_chw(noisy);
      scale(y, 1.0 / noisy.peak);
      Tensor x = unroll_forward(y, nullptr, mu, icfg, reg, nullptr,
                                colored ? &cov : nullptr);
      scale(x, noisy.peak);
      denoised = from_chw(x, noisy.peak);
    } else {
      denoised = denoise_image(params, noisy, ucfg, colored ? &cov : nullptr);
    }
    save_image(denoised, out / with_suffix(inputs.names[i], "_dn"));
  }
  std::cout << "denoise: wrote " << inputs.images.size() << " images to "
            << out.string() << "\n";
}

namespace {

std::string psnr_table(const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& columns,
                       const std::vector<std::string>& headers) {
  std::ostringstream out;
  out << "image";
  for (const auto& h : headers) out << " " << h;
  out << "\n";
  char buf[64];
  std::vector<double> sums(columns.size(), 0.0);
  for (size_t r = 0; r < names.size(); ++r) {
    out << names[r];
    for (size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof(buf), " %.4f", columns[c][r]);
      out << buf;
      sums[c] += columns[c][r];
    }
    out << "\n";
  }
  out << "average";
  for (size_t c = 0; c < columns.size(); ++c) {
    std::snprintf(buf, sizeof(buf), " %.4f", sums[c] / static_cast<double>(names.size()));
    out << buf;
  }
  out << "\n";
  return out.str();
}

}  // namespace

void cmd_eval(const KvConfig& cfg) {
  NamedImages test = load_folder(require_dir(cfg, "in"));
  NamedImages clean = load_folder(require_dir(cfg, "clean"));
  if (test.images.empty()) throw ConfigError("eval: no input images");
  if (test.images.size() != clean.images.size())
    throw ConfigError("eval: unpaired files (folder sizes differ)");

  std::vector<double> col;
  for (size_t i = 0; i < test.images.size(); ++i)
    col.push_back(psnr(clean.images[i], test.images[i]));
  std::string table = psnr_table(test.names, {col}, {"psnr"});
  std::cout << table;
  if (cfg.has("out")) {
    fs::path out = make_out_dir(cfg);
    atomic_write_bytes(out / "eval.txt", table);
  }
}

void cmd_compare(const KvConfig& cfg) {
  NamedImages test = load_folder(require_dir(cfg, "in"));
  NamedImages clean = load_folder(require_dir(cfg, "clean"));
  if (test.images.empty()) throw ConfigError("compare: empty test folder");
  if (test.images.size() != clean.images.size())
    throw ConfigError("compare: unpaired files (folder sizes differ)");

  auto list = cfg.get("compare.checkpoints");
  if (!list || list->empty())
    throw ConfigError("compare: compare.checkpoints is required");
  std::vector<std::string> ckpts;
  std::istringstream ss(*list);
  std::string item;
  while (std::getline(ss, item, ',')) ckpts.push_back(item);
  if (ckpts.size() < 2) throw ConfigError("compare: need at least two checkpoints");

  UnrollConfig ucfg = unroll_from_config(cfg);
  std::vector<std::vector<double>> columns;
  std::vector<std::string> headers;
  for (const auto& path : ckpts) {
    NetParams params = load_params(path);
    std::vector<double> col;
    for (size_t i = 0; i < test.images.size(); ++i)
      col.push_back(psnr(clean.images[i], denoise_image(params, test.images[i], ucfg)));
    columns.push_back(std::move(col));
    headers.push_back(fs::path(path).filename().string());
  }
  std::string table = psnr_table(test.names, columns, headers);
  std::cout << table;
  if (cfg.has("out")) {
    fs::path out = make_out_dir(cfg);
    atomic_write_bytes(out / "compare.txt", table);
  }
}

void run_command(const std::string& command, const KvConfig& cfg) {
  if (command == "synth") return cmd_synth(cfg);
  if (command == "train") return cmd_train(cfg);
  if (command == "denoise") return cmd_denoise(cfg);
  if (command == "eval") return cmd_eval(cfg);
  if (command == "compare") return cmd_compare(cfg);
  throw ConfigError("unknown command: " + command);
}

}  // namespace n2i
