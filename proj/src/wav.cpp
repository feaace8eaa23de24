#include "tiss/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace tiss {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void Waveform::validate() const {
  if (channels.empty()) throw std::invalid_argument("waveform has no channels");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
  const std::size_t len = channels.front().size();
  for (const auto& c : channels) {
    if (c.size() != len) throw std::invalid_argument("waveform channels differ in length");
  }
}

std::vector<std::uint8_t> encode_wav(const Waveform& wave, SampleFormat format) {
  wave.validate();
  const std::uint16_t nch = static_cast<std::uint16_t>(wave.num_channels());
  const std::uint32_t nsamp = static_cast<std::uint32_t>(wave.num_samples());
  const std::uint16_t bytes_per_sample = format == SampleFormat::kPcm16 ? 2 : 4;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(wave.sample_rate));
  const std::uint32_t data_bytes = nsamp * nch * bytes_per_sample;

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == SampleFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, nch);
  put_u32(out, rate);
  put_u32(out, rate * nch * bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(nch * bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(8 * bytes_per_sample));
  put_tag(out, "data");
  put_u32(out, data_bytes);

  for (std::uint32_t t = 0; t < nsamp; ++t) {
    for (std::uint16_t m = 0; m < nch; ++m) {
      const double x = wave.channels[m][t];
      if (format == SampleFormat::kPcm16) {
        const double scaled = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
      } else {
        const float f = static_cast<float>(x);
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        put_u32(out, bits);
      }
    }
  }
  return out;
}

WavFile decode_wav(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file");
  }
  std::uint16_t tag = 0, nch = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t len = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw std::runtime_error("truncated fmt chunk");
      tag = get_u16(chunk + 8);
      nch = get_u16(chunk + 10);
      rate = get_u32(chunk + 12);
      bits = get_u16(chunk + 22);
      if (tag == kFormatExtensible) {
        if (avail < 26) throw std::runtime_error("truncated extensible fmt chunk");
        tag = get_u16(chunk + 8 + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }
  if (nch == 0 || rate == 0) throw std::runtime_error("missing or invalid fmt chunk");
  if (data == nullptr) throw std::runtime_error("missing data chunk");

  WavFile out;
  if (tag == kFormatPcm && bits == 16) {
    out.format = SampleFormat::kPcm16;
  } else if (tag == kFormatFloat && bits == 32) {
    out.format = SampleFormat::kFloat32;
  } else {
    throw std::runtime_error("unsupported WAV encoding (need 16-bit PCM or 32-bit float)");
  }
  const std::size_t width = bits / 8;
  const std::size_t nsamp = data_len / (width * nch);
  out.wave.sample_rate = rate;
  out.wave.channels.assign(nch, std::vector<double>(nsamp));
  for (std::size_t t = 0; t < nsamp; ++t) {
    for (std::size_t m = 0; m < nch; ++m) {
      const std::uint8_t* p = data + (t * nch + m) * width;
      if (out.format == SampleFormat::kPcm16) {
        out.wave.channels[m][t] = static_cast<std::int16_t>(get_u16(p)) / 32768.0;
      } else {
        const std::uint32_t raw = get_u32(p);
        float f;
        std::memcpy(&f, &raw, sizeof f);
        out.wave.channels[m][t] = f;
      }
    }
  }
  return out;
}

WavFile read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

void write_wav(const std::string& path, const Waveform& wave, SampleFormat format) {
  const auto bytes = encode_wav(wave, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace tiss
