#pragma once

// PNG (lossless) and base64 encodings for observation frames on the wire.

#include <png.h>

#include <algorithm>
#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "iglu/renderer.hpp"

namespace iglu {

inline std::vector<std::uint8_t> encode_png(const Image& img) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = Image::kWidth;
  desc.height = Image::kHeight;
  desc.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode failed: ") + desc.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, img.pixels.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode failed: ") + desc.message);
  out.resize(size);
  return out;
}

inline Image decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size()))
    throw std::invalid_argument(std::string("png decode failed: ") + desc.message);
  if (desc.width != static_cast<png_uint_32>(Image::kWidth) || desc.height != static_cast<png_uint_32>(Image::kHeight)) {
    png_image_free(&desc);
    throw std::invalid_argument("png frame must be 64x64");
  }
  desc.format = PNG_FORMAT_RGB;
  Image img;
  if (!png_image_finish_read(&desc, nullptr, img.pixels.data(), 0, nullptr))
    throw std::invalid_argument(std::string("png decode failed: ") + desc.message);
  return img;
}

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<std::vector<std::uint8_t>::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  const auto pad = static_cast<std::size_t>(std::count(text.begin(), text.end(), '='));
  if (pad > 2 || text.size() % 4 != 0 || text.find_first_of('=') < text.size() - pad)
    throw std::invalid_argument("malformed base64");
  std::replace(text.begin(), text.end(), '=', 'A');
  std::vector<std::uint8_t> out;
  try {
    out.assign(It(text.begin()), It(text.end()));
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed base64");
  }
  out.resize(out.size() - pad);
  return out;
}

}  // namespace iglu
