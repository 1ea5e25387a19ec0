#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "agec/errors.hpp"
#include "agec/matrix.hpp"

namespace agec {

inline constexpr std::size_t kNumChannels = 5;
inline constexpr std::size_t kWindowFrames = 20;  // 500 ms at 40 Hz
inline constexpr std::size_t kFlatFeatures = kNumChannels * kWindowFrames;

enum class GestureLabel : int {
    index_bend = 0,
    shoot = 1,
    flick_index = 2,
    flick_middle = 3,
    none = 4,
};

inline constexpr int kNumLabels = 5;

inline constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "index_bend", "shoot", "flick_index", "flick_middle", "none"};

inline std::string_view to_string(GestureLabel label) {
    return kLabelNames[static_cast<int>(label)];
}

inline GestureLabel label_from_string(std::string_view s) {
    for (int i = 0; i < kNumLabels; ++i)
        if (kLabelNames[i] == s) return static_cast<GestureLabel>(i);
    throw IoError("unknown gesture label '" + std::string(s) + "'");
}

// One normalized 5-channel x 20-step window. The signal is stored
// channel-major: entry [c*20 + t] is channel c at timestep t, which is also
// the flattened feature order (features 0-19 thumb, 20-39 index, ...).
struct GestureSample {
    std::array<double, kFlatFeatures> signal{};
    GestureLabel label = GestureLabel::none;
    int user_id = 0;

    double at(std::size_t channel, std::size_t t) const {
        return signal[channel * kWindowFrames + t];
    }
    double& at(std::size_t channel, std::size_t t) {
        return signal[channel * kWindowFrames + t];
    }

    bool in_range() const {
        for (double v : signal)
            if (!(v >= 0.0 && v <= 1.0)) return false;
        return true;
    }
};

// Channel-major flattening into the 100-feature vector.
inline std::array<double, kFlatFeatures> flatten(const GestureSample& sample) {
    return sample.signal;
}

inline GestureSample unflatten(std::span<const double> flat, GestureLabel label,
                               int user_id) {
    if (flat.size() != kFlatFeatures)
        throw ContractError("unflatten: expected 100 features");
    GestureSample s;
    std::copy(flat.begin(), flat.end(), s.signal.begin());
    s.label = label;
    s.user_id = user_id;
    return s;
}

// Ordered sample collection with the cached N x 100 flat matrix.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<GestureSample> samples)
        : samples_(std::move(samples)), flat_(samples_.size(), kFlatFeatures) {
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            auto row = flat_.row(i);
            std::copy(samples_[i].signal.begin(), samples_[i].signal.end(),
                      row.begin());
        }
    }

    const std::vector<GestureSample>& samples() const noexcept { return samples_; }
    const Matrix& flat() const noexcept { return flat_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const GestureSample& operator[](std::size_t i) const { return samples_[i]; }

    std::vector<int> label_ids() const {
        std::vector<int> ids(samples_.size());
        for (std::size_t i = 0; i < samples_.size(); ++i)
            ids[i] = static_cast<int>(samples_[i].label);
        return ids;
    }

private:
    std::vector<GestureSample> samples_;
    Matrix flat_;
};

// Per-channel [0,1] normalization with user/sensor-specific bounds:
// clamp((raw - lo_c) / (hi_c - lo_c), 0, 1).
inline Matrix normalize(const Matrix& raw, std::span<const double> lo,
                        std::span<const double> hi) {
    if (raw.rows() != kNumChannels)
        throw ContractError("normalize: expected 5 channels");
    if (lo.size() != kNumChannels || hi.size() != kNumChannels)
        throw ContractError("normalize: bounds must have 5 entries");
    for (std::size_t c = 0; c < kNumChannels; ++c)
        if (!(hi[c] > lo[c]))
            throw ConfigError("normalize: hi <= lo on channel " + std::to_string(c));
    Matrix out(raw.rows(), raw.cols());
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        const double scale = 1.0 / (hi[c] - lo[c]);
        for (std::size_t t = 0; t < raw.cols(); ++t)
            out(c, t) = std::clamp((raw(c, t) - lo[c]) * scale, 0.0, 1.0);
    }
    return out;
}

struct GestureMark {
    std::size_t start = 0;  // first frame of the gesture, inclusive
    std::size_t end = 0;    // last frame of the gesture, inclusive
    GestureLabel label = GestureLabel::none;
};

struct WindowExtraction {
    std::vector<GestureSample> samples;
    std::size_t skipped_short = 0;  // gestures shorter than one window
};

// Window extraction matching the recording protocol: for each marked
// gesture, 20-frame windows slide one frame at a time with the window end
// inside [start + ceil(2*(end-start)/3), end]; spans between gestures yield
// none-labelled windows with stride 20.
inline WindowExtraction sliding_windows(const Matrix& stream,
                                        std::vector<GestureMark> marks,
                                        int user_id = 0) {
    if (stream.rows() != kNumChannels)
        throw ContractError("sliding_windows: expected 5 channels");
    const std::size_t total = stream.cols();
    if (total < kWindowFrames)
        throw ContractError("sliding_windows: stream shorter than one window");
    for (double v : stream.values())
        if (!(v >= 0.0 && v <= 1.0))
            throw ContractError("sliding_windows: stream must be normalized to [0,1]");
    std::sort(marks.begin(), marks.end(),
              [](const GestureMark& a, const GestureMark& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < marks.size(); ++i) {
        if (marks[i].end < marks[i].start || marks[i].end >= total)
            throw ContractError("sliding_windows: mark " + std::to_string(i) +
                                " out of bounds");
        if (i + 1 < marks.size() && marks[i].end >= marks[i + 1].start)
            throw ContractError("sliding_windows: overlapping marks");
    }

    WindowExtraction out;
    auto window_at = [&](std::size_t end_frame, GestureLabel label) {
        GestureSample s;
        s.label = label;
        s.user_id = user_id;
        const std::size_t first = end_frame + 1 - kWindowFrames;
        for (std::size_t c = 0; c < kNumChannels; ++c)
            for (std::size_t t = 0; t < kWindowFrames; ++t)
                s.at(c, t) = stream(c, first + t);
        out.samples.push_back(s);
    };
    auto none_span = [&](std::size_t span_start, std::size_t span_end) {
        // inclusive span; non-overlapping none windows, stride 20
        std::size_t pos = span_start;
        while (pos + kWindowFrames - 1 <= span_end) {
            window_at(pos + kWindowFrames - 1, GestureLabel::none);
            pos += kWindowFrames;
        }
    };

    std::size_t cursor = 0;  // start of the pending none span
    for (const GestureMark& mark : marks) {
        if (mark.start > cursor) none_span(cursor, mark.start - 1);
        const std::size_t len = mark.end - mark.start + 1;
        if (len < kWindowFrames) {
            ++out.skipped_short;
        } else {
            const std::size_t offset = (2 * (len - 1) + 2) / 3;  // ceil(2*(end-start)/3)
            std::size_t lo = mark.start + offset;
            if (lo + 1 < kWindowFrames) lo = kWindowFrames - 1;  // keep window in stream
            for (std::size_t e = lo; e <= mark.end; ++e)
                window_at(e, mark.label);
        }
        cursor = mark.end + 1;
    }
    if (cursor < total) none_span(cursor, total - 1);
    return out;
}

// ---------------------------------------------------------------------------
// CSV dataset format: optional leading '#' comment lines, then the header
// `user_id,label,f0,...,f99`, then one row per sample with the label as its
// canonical string and floats at 10 significant digits.

inline std::string dataset_csv_header() {
    std::string h = "user_id,label";
    for (std::size_t i = 0; i < kFlatFeatures; ++i) h += ",f" + std::to_string(i);
    return h;
}

inline void write_dataset_csv(std::ostream& os, const Dataset& data,
                              const std::string& provenance = "") {
    if (!provenance.empty()) os << "# " << provenance << "\n";
    os << dataset_csv_header() << "\n";
    char buf[32];
    for (const GestureSample& s : data.samples()) {
        os << s.user_id << ',' << to_string(s.label);
        for (double v : s.signal) {
            std::snprintf(buf, sizeof(buf), "%.10g", v);
            os << ',' << buf;
        }
        os << '\n';
    }
}

inline void write_dataset_csv(const std::string& path, const Dataset& data,
                              const std::string& provenance = "") {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    write_dataset_csv(os, data, provenance);
    if (!os) throw IoError("failed writing '" + path + "'");
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line,
                                                    std::vector<std::string_view>& out) {
    out.clear();
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw IoError(context + ": bad number '" + std::string(s) + "'");
    return v;
}

}  // namespace detail

inline Dataset read_dataset_csv(std::istream& is, const std::string& name) {
    std::string line;
    // skip comments, find header
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        break;
    }
    if (line != dataset_csv_header())
        throw IoError(name + ": missing or malformed dataset header");

    std::vector<GestureSample> samples;
    std::vector<std::string_view> fields;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        detail::split_csv_line(line, fields);
        const std::string ctx = name + ":" + std::to_string(line_no);
        if (fields.size() != 2 + kFlatFeatures)
            throw IoError(ctx + ": expected " + std::to_string(2 + kFlatFeatures) +
                          " fields, got " + std::to_string(fields.size()));
        GestureSample s;
        s.user_id = static_cast<int>(detail::parse_double(fields[0], ctx));
        s.label = label_from_string(fields[1]);
        for (std::size_t i = 0; i < kFlatFeatures; ++i)
            s.signal[i] = detail::parse_double(fields[2 + i], ctx);
        if (!s.in_range()) throw IoError(ctx + ": feature outside [0,1]");
        samples.push_back(s);
    }
    return Dataset(std::move(samples));
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open dataset '" + path + "'");
    return read_dataset_csv(is, path);
}

}  // namespace agec
