#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <vector>

#include "agec/gesture.hpp"
#include "agec/rng.hpp"

using namespace agec;

namespace {

Matrix constant_stream(std::size_t frames, double value) {
    return Matrix(kNumChannels, frames, value);
}

GestureSample random_sample(Rng& rng) {
    GestureSample s;
    for (double& v : s.signal) v = rng.uniform();
    s.label = GestureLabel::shoot;
    s.user_id = 3;
    return s;
}

}  // namespace

TEST_CASE("label names round-trip") {
    for (int i = 0; i < kNumLabels; ++i) {
        const auto label = static_cast<GestureLabel>(i);
        CHECK(label_from_string(to_string(label)) == label);
    }
    CHECK_THROWS_AS(label_from_string("wave"), IoError);
}

TEST_CASE("normalize maps the bounds to 0, 1 and the midpoint to 0.5") {
    std::vector<double> lo = {0.0, 1.0, -2.0, 10.0, 0.5};
    std::vector<double> hi = {1.0, 3.0, 2.0, 20.0, 1.5};
    Matrix at_lo(kNumChannels, kWindowFrames);
    Matrix at_hi(kNumChannels, kWindowFrames);
    Matrix at_mid(kNumChannels, kWindowFrames);
    for (std::size_t c = 0; c < kNumChannels; ++c)
        for (std::size_t t = 0; t < kWindowFrames; ++t) {
            at_lo(c, t) = lo[c];
            at_hi(c, t) = hi[c];
            at_mid(c, t) = 0.5 * (lo[c] + hi[c]);
        }
    const Matrix n_lo = normalize(at_lo, lo, hi);
    const Matrix n_hi = normalize(at_hi, lo, hi);
    const Matrix n_mid = normalize(at_mid, lo, hi);
    for (double v : n_lo.values()) CHECK(v == 0.0);
    for (double v : n_hi.values()) CHECK(v == 1.0);
    for (double v : n_mid.values()) CHECK(v == Catch::Approx(0.5));
}

TEST_CASE("normalize clamps and validates the bounds") {
    std::vector<double> lo(kNumChannels, 0.0);
    std::vector<double> hi(kNumChannels, 2.0);
    Matrix raw(kNumChannels, kWindowFrames, -1.0);
    raw(0, 0) = 5.0;
    Matrix out = normalize(raw, lo, hi);
    CHECK(out(0, 0) == 1.0);
    CHECK(out(1, 0) == 0.0);

    std::vector<double> bad_hi(kNumChannels, 2.0);
    bad_hi[2] = 0.0;
    CHECK_THROWS_AS(normalize(raw, lo, bad_hi), ConfigError);
}

TEST_CASE("flatten uses channel-major index arithmetic") {
    GestureSample s;
    for (std::size_t c = 0; c < kNumChannels; ++c)
        for (std::size_t t = 0; t < kWindowFrames; ++t)
            s.at(c, t) = static_cast<double>(c) + static_cast<double>(t) / 100.0;
    auto flat = flatten(s);
    for (std::size_t c = 0; c < kNumChannels; ++c)
        for (std::size_t t = 0; t < kWindowFrames; ++t)
            CHECK(flat[20 * c + t] == static_cast<double>(c) + static_cast<double>(t) / 100.0);
}

TEST_CASE("flatten of the zero signal is zero and round-trips exactly") {
    GestureSample zero;
    for (double v : flatten(zero)) CHECK(v == 0.0);

    Rng rng(77);
    GestureSample s = random_sample(rng);
    GestureSample back = unflatten(flatten(s), s.label, s.user_id);
    CHECK(back.signal == s.signal);  // bit-identical
    CHECK(back.label == s.label);
    CHECK(back.user_id == s.user_id);
}

TEST_CASE("a 20-frame gesture away from the edges yields 7 windows") {
    Matrix stream = constant_stream(60, 0.2);
    // gesture frames [30, 49]: offset ceil(2*19/3) = 13, window ends 43..49
    WindowExtraction got =
        sliding_windows(stream, {{30, 49, GestureLabel::shoot}}, 9);
    std::size_t gesture_windows = 0;
    for (const GestureSample& s : got.samples) {
        CHECK(s.user_id == 9);
        if (s.label == GestureLabel::shoot) ++gesture_windows;
    }
    CHECK(gesture_windows == 7);
    CHECK(got.skipped_short == 0);
}

TEST_CASE("a stream with no marks yields floor(T/20) none windows") {
    WindowExtraction got = sliding_windows(constant_stream(60, 0.4), {});
    CHECK(got.samples.size() == 3);
    for (const GestureSample& s : got.samples) CHECK(s.label == GestureLabel::none);
}

TEST_CASE("marks at the stream edge never produce out-of-bounds windows") {
    // gesture at the very start: window ends clip to frame 19
    WindowExtraction head =
        sliding_windows(constant_stream(40, 0.3), {{0, 19, GestureLabel::index_bend}});
    std::size_t head_windows = 0;
    for (const GestureSample& s : head.samples)
        if (s.label == GestureLabel::index_bend) ++head_windows;
    CHECK(head_windows == 1);  // only end=19 keeps the window inside the stream

    // gesture flush against the stream end
    WindowExtraction tail =
        sliding_windows(constant_stream(50, 0.3), {{30, 49, GestureLabel::flick_index}});
    std::size_t tail_windows = 0;
    for (const GestureSample& s : tail.samples)
        if (s.label == GestureLabel::flick_index) ++tail_windows;
    CHECK(tail_windows == 7);
}

TEST_CASE("gestures shorter than a window are skipped and counted") {
    WindowExtraction got =
        sliding_windows(constant_stream(80, 0.2), {{25, 35, GestureLabel::shoot}});
    CHECK(got.skipped_short == 1);
    for (const GestureSample& s : got.samples) CHECK(s.label == GestureLabel::none);
}

TEST_CASE("between-gesture spans yield stride-20 none windows") {
    // gestures [20,39] and [80,99]; none spans [0,19], [40,79], [100,119]
    WindowExtraction got = sliding_windows(
        constant_stream(120, 0.5),
        {{20, 39, GestureLabel::shoot}, {80, 99, GestureLabel::flick_middle}});
    std::size_t none_count = 0;
    for (const GestureSample& s : got.samples)
        if (s.label == GestureLabel::none) ++none_count;
    CHECK(none_count == 1 + 2 + 1);
}

TEST_CASE("every emitted window is inside [0,1]") {
    Rng rng(5);
    Matrix stream(kNumChannels, 100);
    for (double& v : stream.values()) v = rng.uniform();
    WindowExtraction got = sliding_windows(stream, {{40, 69, GestureLabel::shoot}});
    for (const GestureSample& s : got.samples) CHECK(s.in_range());

    // a non-normalized stream is rejected outright
    stream(0, 0) = 1.5;
    CHECK_THROWS_AS(sliding_windows(stream, {}), ContractError);
}

TEST_CASE("dataset CSV writes deterministically and round-trips") {
    Rng rng(123);
    std::vector<GestureSample> samples;
    for (int i = 0; i < 25; ++i) {
        GestureSample s = random_sample(rng);
        s.label = static_cast<GestureLabel>(i % kNumLabels);
        s.user_id = i % 4;
        samples.push_back(s);
    }
    Dataset data(samples);

    std::ostringstream first, second;
    write_dataset_csv(first, data, "agec test seed=1");
    write_dataset_csv(second, data, "agec test seed=1");
    CHECK(first.str() == second.str());

    std::istringstream is(first.str());
    Dataset back = read_dataset_csv(is, "roundtrip");
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].label == data[i].label);
        CHECK(back[i].user_id == data[i].user_id);
        for (std::size_t j = 0; j < kFlatFeatures; ++j)
            CHECK(back[i].signal[j] == Catch::Approx(data[i].signal[j]).margin(1e-9));
    }
    CHECK(back.flat()(3, 7) == back[3].signal[7]);
}

TEST_CASE("malformed CSV input is rejected with context") {
    std::istringstream no_header("1,2,3\n");
    CHECK_THROWS_AS(read_dataset_csv(no_header, "x"), IoError);

    std::string good_header = dataset_csv_header();
    std::string row = "0,shoot";
    for (std::size_t i = 0; i < kFlatFeatures; ++i) row += ",0.5";

    std::istringstream bad_label(good_header + "\n" + "0,wave" + row.substr(7) + "\n");
    CHECK_THROWS_AS(read_dataset_csv(bad_label, "x"), IoError);

    std::string out_of_range = good_header + "\n0,shoot";
    for (std::size_t i = 0; i < kFlatFeatures; ++i)
        out_of_range += (i == 0 ? ",1.5" : ",0.5");
    std::istringstream oor(out_of_range + "\n");
    CHECK_THROWS_AS(read_dataset_csv(oor, "x"), IoError);

    std::istringstream short_row(good_header + "\n0,shoot,0.5\n");
    CHECK_THROWS_AS(read_dataset_csv(short_row, "x"), IoError);
}
