#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "raf/dsp.hpp"
#include "raf/errors.hpp"

namespace raf::dsp {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
         std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  if (raw.size() < 12 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0) {
    throw IoError(path.string() + ": not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const unsigned char* chunk = raw.data() + pos;
    const std::size_t len = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + len > raw.size()) throw IoError(path.string() + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) throw IoError(path.string() + ": short fmt chunk");
      format = le16(raw.data() + body);
      channels = le16(raw.data() + body + 2);
      rate = le32(raw.data() + body + 4);
      bits = le16(raw.data() + body + 14);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = raw.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);
  }
  if (data == nullptr || rate == 0) {
    throw IoError(path.string() + ": missing fmt or data chunk");
  }
  if (channels != 1) {
    throw IoError(path.string() + ": expected mono, found " +
                  std::to_string(channels) + " channels");
  }
  std::vector<double> samples;
  if (format == kFormatPcm && bits == 16) {
    samples.resize(data_len / 2);
    for (std::size_t i = 0; i < samples.size(); ++i)
      samples[i] = static_cast<std::int16_t>(le16(data + 2 * i)) / 32768.0;
  } else if (format == kFormatFloat && bits == 32) {
    samples.resize(data_len / 4);
    for (std::size_t i = 0; i < samples.size(); ++i)
      samples[i] = std::bit_cast<float>(le32(data + 4 * i));
  } else {
    throw IoError(path.string() + ": unsupported sample format " +
                  std::to_string(format) + "/" + std::to_string(bits) + " bit");
  }
  if (samples.empty()) throw IoError(path.string() + ": no samples");
  return Waveform(std::move(samples), rate);
}

void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavFormat format) {
  RAF_REQUIRE(std::floor(w.sample_rate) == w.sample_rate,
              "WAV files need an integral sample rate");
  const bool pcm = format == WavFormat::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t bytes = static_cast<std::uint32_t>(w.size() * (bits / 8));
  const auto rate = static_cast<std::uint32_t>(w.sample_rate);
  std::vector<unsigned char> out;
  out.reserve(44 + bytes);
  put_tag(out, "RIFF");
  put32(out, 36 + bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, pcm ? kFormatPcm : kFormatFloat);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * (bits / 8));
  put16(out, static_cast<std::uint16_t>(bits / 8));
  put16(out, bits);
  put_tag(out, "data");
  put32(out, bytes);
  for (double s : w.samples) {
    if (pcm) {
      const double c = std::clamp(s, -1.0, 32767.0 / 32768.0);
      put16(out, static_cast<std::uint16_t>(
                     static_cast<std::int16_t>(std::lround(c * 32768.0))));
    } else {
      put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for " + path.string());
}

}  // namespace raf::dsp
