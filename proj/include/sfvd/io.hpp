#pragma once

#include <span>
#include <string>

#include "sfvd/denoiser.hpp"
#include "sfvd/metrics.hpp"
#include "sfvd/segmenter.hpp"
#include "sfvd/video.hpp"

namespace sfvd {

enum class IoCode {
    BadMagic,
    BadCrc,
    SizeMismatch,
    UnsupportedVersion,
    InvalidValue,
    HeaderParse,
    FileAccess,
};

std::string to_string(IoCode c);

class IoError : public std::runtime_error {
public:
    IoError(IoCode code, const std::string& msg)
        : std::runtime_error(to_string(code) + ": " + msg), code_(code) {}
    IoCode code() const { return code_; }

private:
    IoCode code_;
};

// .fvd container: "FVD1", version u16, N/H/W u32, float32 frames, byte
// masks, byte annotation flags, trailing CRC32. Little-endian, written
// atomically (temp file + rename).
void write_fvd(const std::string& path, const LabeledVideo& video);
LabeledVideo read_fvd(const std::string& path);

// Checkpoint: "SFVD", u32 JSON-header length, JSON header, float32 blob in
// manifest order, trailing CRC32.
void write_checkpoint(const std::string& path, const DenoiserModel& model);
void write_checkpoint(const std::string& path, const SegmenterModel& model);
DenoiserModel read_denoiser_checkpoint(const std::string& path);
SegmenterModel read_segmenter_checkpoint(const std::string& path);

// 8-bit grayscale PNG; [-1,1] maps to [0,255].
void write_png_gray(const std::string& path, const Plane& image);

// Frames left to right with a 1 px separator, matching the paper-style strip.
Plane contact_sheet(std::span<const Plane> frames);

// CSV report, fixed columns dice,hd,g2re,r2ge,sensitivity,precision; one row
// per video plus a trailing aggregate row.
void write_metrics_csv(const std::string& path, std::span<const SegMetrics> per_video,
                       const SegMetrics& aggregate);

void write_loss_csv(const std::string& path, std::span<const LossRow> rows);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace sfvd
