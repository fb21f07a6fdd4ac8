#include "n2i/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "n2i/errors.hpp"

namespace n2i {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& path) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return e;
}

int quantize(double v, int maxval) {
  long q = std::lround(v);
  if (q < 0) q = 0;
  if (q > maxval) q = maxval;
  return static_cast<int>(q);
}

// ---- PNM (PGM "P5" / PPM "P6", binary) ----

int pnm_token(std::istringstream& in) {
  // skips whitespace and '#' comments
  for (;;) {
    int c = in.peek();
    if (c == EOF) throw FormatError("pnm: truncated header");
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    break;
  }
  int value = 0;
  if (!(in >> value)) throw FormatError("pnm: malformed header");
  return value;
}

Image load_pnm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError("pnm: not a binary PGM/PPM file");
  int channels = bytes[1] == '5' ? 1 : 3;
  std::istringstream in(bytes.substr(2));
  int width = pnm_token(in);
  int height = pnm_token(in);
  int maxval = pnm_token(in);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    throw FormatError("pnm: invalid dimensions or maxval");
  in.get();  // single whitespace byte before raster
  size_t raster_off = 2 + static_cast<size_t>(in.tellg());
  int bytes_per = maxval > 255 ? 2 : 1;
  size_t need = static_cast<size_t>(height) * width * channels * bytes_per;
  if (bytes.size() < raster_off + need) throw FormatError("pnm: truncated raster");

  Image img = Image::zeros(height, width, channels, static_cast<double>(maxval));
  const unsigned char* p =
      reinterpret_cast<const unsigned char*>(bytes.data()) + raster_off;
  for (size_t i = 0; i < img.data.size(); ++i) {
    if (bytes_per == 1) {
      img.data[i] = static_cast<double>(p[i]);
    } else {
      img.data[i] = static_cast<double>((p[2 * i] << 8) | p[2 * i + 1]);  // big-endian
    }
  }
  return img;
}

std::string save_pnm(const Image& img) {
  int maxval = static_cast<int>(std::lround(img.peak));
  if (maxval < 1 || maxval > 65535)
    throw FormatError("pnm: peak out of range for PGM/PPM");
  int bytes_per = maxval > 255 ? 2 : 1;
  std::ostringstream out;
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n"
      << maxval << "\n";
  std::string raster(img.data.size() * bytes_per, '\0');
  for (size_t i = 0; i < img.data.size(); ++i) {
    int q = quantize(img.data[i], maxval);
    if (bytes_per == 1) {
      raster[i] = static_cast<char>(q);
    } else {
      raster[2 * i] = static_cast<char>(q >> 8);
      raster[2 * i + 1] = static_cast<char>(q & 0xFF);
    }
  }
  return out.str() + raster;
}

// ---- PNG (8-bit gray / RGB) via libpng ----

struct PngReadState {
  const unsigned char* data;
  size_t size;
  size_t pos;
};

void png_read_fn(png_structp png, png_bytep out, png_size_t n) {
  auto* s = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (s->pos + n > s->size) png_error(png, "read past end");
  std::memcpy(out, s->data + s->pos, n);
  s->pos += n;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<char*>(data), n);
}

void png_flush_fn(png_structp) {}

Image load_png(const std::string& bytes) {
  if (bytes.size() < 8 ||
      png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8))
    throw FormatError("png: bad signature");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: allocation failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: allocation failure");
  }
  std::vector<png_bytep> rows;
  std::vector<unsigned char> raster;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: corrupt or truncated file");
  }
  PngReadState state{reinterpret_cast<const unsigned char*>(bytes.data()),
                     bytes.size(), 0};
  png_set_read_fn(png, &state, png_read_fn);
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);
  if (bit_depth != 8 ||
      (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: only 8-bit gray or RGB is supported");
  }
  int channels = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;
  raster.resize(static_cast<size_t>(height) * width * channels);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y)
    rows[y] = raster.data() + static_cast<size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img = Image::zeros(static_cast<int>(height), static_cast<int>(width),
                           channels, 255.0);
  for (size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<double>(raster[i]);
  return img;
}

std::string save_png(const Image& img) {
  if (std::lround(img.peak) != 255)
    throw FormatError("png: 8-bit output requires peak 255");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: allocation failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: allocation failure");
  }
  std::string out;
  std::vector<unsigned char> raster(img.data.size());
  std::vector<png_bytep> rows(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: write failure");
  }
  png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  for (size_t i = 0; i < img.data.size(); ++i)
    raster[i] = static_cast<unsigned char>(quantize(img.data[i], 255));
  for (int y = 0; y < img.height; ++y)
    rows[y] = raster.data() + static_cast<size_t>(y) * img.width * img.channels;
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write_bytes(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

Image load_image(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("file does not exist: " + path.string());
  std::string bytes = read_file_bytes(path);
  std::string ext = lower_ext(path);
  Image img;
  if (ext == ".png") {
    img = load_png(bytes);
  } else if (ext == ".pgm" || ext == ".ppm") {
    img = load_pnm(bytes);
  } else {
    throw FormatError("unsupported image format: " + path.string());
  }
  img.validate();
  return img;
}

void save_image(const Image& image, const fs::path& path) {
  image.validate();
  std::string ext = lower_ext(path);
  std::string bytes;
  if (ext == ".png") {
    bytes = save_png(image);
  } else if (ext == ".pgm" || ext == ".ppm") {
    if ((ext == ".pgm") != (image.channels == 1))
      throw FormatError("pnm: extension does not match channel count");
    bytes = save_pnm(image);
  } else {
    throw FormatError("unsupported image format: " + path.string());
  }
  atomic_write_bytes(path, bytes);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = lower_ext(entry.path());
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  return files;
}

Dataset load_dataset(const fs::path& dir) {
  Dataset ds;
  ds.provenance = dir.string();
  for (const auto& p : list_images(dir)) {
    ds.items.push_back(load_image(p));
    ds.names.push_back(p.filename().string());
  }
  return ds;
}

}  // namespace n2i
