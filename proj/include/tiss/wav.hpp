#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tiss {

enum class SampleFormat { kPcm16, kFloat32 };

// Multichannel time-domain signal. channels[m][t] holds sample t of channel m.
struct Waveform {
  std::vector<std::vector<double>> channels;
  double sample_rate = 16000.0;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_samples() const {
    return channels.empty() ? 0 : channels.front().size();
  }

  // Throws std::invalid_argument if channels are ragged, empty, or the
  // sample rate is not positive.
  void validate() const;
};

struct WavFile {
  Waveform wave;
  SampleFormat format = SampleFormat::kFloat32;
};

// RIFF/WAVE reader for interleaved 16-bit PCM and 32-bit IEEE float,
// including the WAVE_FORMAT_EXTENSIBLE wrapper. PCM samples are scaled to
// [-1, 1).
WavFile read_wav(const std::string& path);

// Writes interleaved samples. PCM output is clipped to the int16 range.
void write_wav(const std::string& path, const Waveform& wave,
               SampleFormat format);

std::vector<std::uint8_t> encode_wav(const Waveform& wave, SampleFormat format);
WavFile decode_wav(const std::vector<std::uint8_t>& bytes);

}  // namespace tiss
