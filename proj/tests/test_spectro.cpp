#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <tuple>

#include <camid/rng.hpp>
#include <camid/spectro.hpp>

#include "oracles.hpp"

using namespace camid;

namespace {

AudioSignal noise_signal(std::size_t n, std::uint64_t seed, unsigned rate = 22050) {
    Rng rng(seed);
    AudioSignal s;
    s.sample_rate = rate;
    s.samples.resize(n);
    for (auto& v : s.samples) v = rng.uniform(-1.0, 1.0);
    return s;
}

}  // namespace

TEST_CASE("window coefficients", "[spectro]") {
    const auto hann4 = make_window(WindowKind::Hann, 4);
    REQUIRE(hann4.size() == 4);
    CHECK(hann4[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(hann4[1] == Catch::Approx(0.75).margin(1e-12));
    CHECK(hann4[2] == Catch::Approx(0.75).margin(1e-12));
    CHECK(hann4[3] == Catch::Approx(0.0).margin(1e-12));

    const auto rect4 = make_window(WindowKind::Rect, 4);
    CHECK(rect4 == std::vector<double>{1.0, 1.0, 1.0, 1.0});

    for (std::size_t n : {2, 3, 8, 17, 1024}) {
        const auto w = make_window(WindowKind::Hann, n);
        CHECK(w.front() == Catch::Approx(0.0).margin(1e-15));
        CHECK(w.back() == Catch::Approx(0.0).margin(1e-12));
        for (double v : w) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }

    CHECK_THROWS_AS(make_window(WindowKind::Hann, 1), ValidationError);
}

TEST_CASE("stft geometry and trivial signals", "[spectro]") {
    StftConfig cfg{64, 16, WindowKind::Hann};

    AudioSignal zero;
    zero.sample_rate = 22050;
    zero.samples.assign(200, 0.0);
    const auto spec = stft(zero, cfg);
    CHECK(spec.frames == (200 - 64) / 16 + 1);
    CHECK(spec.bins == 33);
    for (double m : spec.magnitudes) CHECK(m == 0.0);
    CHECK(spec.bin_freqs[1] == Catch::Approx(22050.0 / 64.0));
    CHECK(spec.frame_times[1] - spec.frame_times[0] ==
          Catch::Approx(16.0 / 22050.0).epsilon(1e-12));

    AudioSignal tiny;
    tiny.sample_rate = 22050;
    tiny.samples.assign(63, 0.1);
    CHECK_THROWS_AS(stft(tiny, cfg), DataError);
}

TEST_CASE("stft of a bin-aligned sine concentrates in one column", "[spectro]") {
    const std::size_t window = 256;
    const unsigned rate = 22050;
    const std::size_t k = 12;
    AudioSignal s;
    s.sample_rate = rate;
    s.samples.resize(window * 3);
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        s.samples[i] = std::sin(oracle::kTau * static_cast<double>(k) *
                                static_cast<double>(i) / static_cast<double>(window));
    }
    const auto spec = stft(s, {window, window, WindowKind::Rect});
    for (std::size_t t = 0; t < spec.frames; ++t) {
        for (std::size_t f = 0; f < spec.bins; ++f) {
            if (f == k) {
                CHECK(spec.at(t, f) ==
                      Catch::Approx(static_cast<double>(window) / 2.0).epsilon(1e-9));
            } else {
                CHECK(spec.at(t, f) < 1e-9 * static_cast<double>(window));
            }
        }
    }
}

TEST_CASE("stft matches the naive DFT reference", "[spectro]") {
    const std::array<std::tuple<std::size_t, std::size_t, WindowKind>, 3> cases{
        {{64, 16, WindowKind::Hann}, {128, 64, WindowKind::Rect}, {256, 100, WindowKind::Hann}}};
    for (const auto& [window, hop, kind] : cases) {
        const auto sig = noise_signal(1024, 7000 + window);
        const auto spec = stft(sig, {window, hop, kind});
        const auto ref =
            oracle::stft_mags(sig.samples, window, hop, kind == WindowKind::Rect);
        REQUIRE(spec.frames == ref.size());
        double scale = 0.0;
        for (const auto& row : ref) {
            for (double m : row) scale = std::max(scale, m);
        }
        for (std::size_t t = 0; t < spec.frames; ++t) {
            for (std::size_t f = 0; f < spec.bins; ++f) {
                CHECK(std::abs(spec.at(t, f) - ref[t][f]) <= 1e-9 * scale);
            }
        }
    }
}

TEST_CASE("rectangular-window stft satisfies Parseval", "[spectro]") {
    const std::size_t window = 128;
    const auto sig = noise_signal(window, 991);
    const auto spec = stft(sig, {window, window, WindowKind::Rect});
    REQUIRE(spec.frames == 1);
    // Reconstruct the two-sided spectrum from the stored half.
    double lhs = spec.at(0, 0) * spec.at(0, 0) +
                 spec.at(0, spec.bins - 1) * spec.at(0, spec.bins - 1);
    for (std::size_t f = 1; f + 1 < spec.bins; ++f) lhs += 2.0 * spec.at(0, f) * spec.at(0, f);
    double rhs = 0.0;
    for (double v : sig.samples) rhs += v * v;
    rhs *= static_cast<double>(window);
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("mel scale and its inverse", "[spectro]") {
    CHECK(mel_scale(0.0) == 0.0);
    CHECK(mel_scale(700.0) == Catch::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK(inverse_mel(0.0) == 0.0);
    CHECK(inverse_mel(781.177) == Catch::Approx(700.0).margin(0.01));

    for (double f : {100.0, 1000.0, 8000.0}) {
        CHECK(inverse_mel(mel_scale(f)) == Catch::Approx(f).epsilon(1e-9));
    }
    for (double m : {50.0, 500.0, 2500.0}) {
        CHECK(mel_scale(inverse_mel(m)) == Catch::Approx(m).epsilon(1e-9));
    }

    double prev = -1.0;
    for (double f = 0.0; f <= 11025.0; f += 250.0) {
        const double m = mel_scale(f);
        CHECK(m > prev);
        prev = m;
    }

    CHECK_THROWS_AS(mel_scale(-1.0), ValidationError);
    CHECK_THROWS_AS(inverse_mel(-0.5), ValidationError);
}

TEST_CASE("filterbank hand case: nine bins, one filter", "[spectro]") {
    // sr 16, f_max 8, 9 bins -> 1 Hz bin grid; the single filter's snapped
    // points land on bins 0, 4, 8.
    const auto bank = build_filterbank(9, 1, 0.0, 8.0, 16);
    REQUIRE(bank.bins == 9);
    REQUIRE(bank.mels == 1);
    const std::vector<double> expect{0.0, 0.25, 0.5, 0.75, 1.0, 0.75, 0.5, 0.25, 0.0};
    for (std::size_t b = 0; b < 9; ++b) {
        CHECK(bank.at(b, 0) == Catch::Approx(expect[b]).margin(1e-12));
    }
    // Peak exactly 1 at the center bin, 0 at the edge point, 0.5 midway.
    CHECK(bank.at(4, 0) == 1.0);
    CHECK(bank.at(0, 0) == 0.0);
    CHECK(bank.at(2, 0) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("filterbank shape invariants", "[spectro]") {
    const auto bank = build_filterbank(513, 40, 0.0, 11025.0, 22050);
    REQUIRE(bank.center_freqs.size() == 42);

    for (double w : bank.weights) {
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
    }
    // Every filter rises then falls (unimodal) and peaks at exactly 1.
    for (std::size_t m = 0; m < bank.mels; ++m) {
        double peak = 0.0;
        bool falling = false;
        double prev = 0.0;
        for (std::size_t b = 0; b < bank.bins; ++b) {
            const double w = bank.at(b, m);
            peak = std::max(peak, w);
            if (w < prev - 1e-15) falling = true;
            if (falling) CHECK(w <= prev + 1e-15);
            prev = w;
        }
        CHECK(peak == 1.0);
    }
    // No dead interior bins: strictly inside the snapped range every bin
    // touches at least one filter.
    const double bin_step = 11025.0 / 512.0;
    for (std::size_t b = 1; b + 1 < bank.bins; ++b) {
        const double f = static_cast<double>(b) * bin_step;
        if (f <= bank.center_freqs.front() || f >= bank.center_freqs.back()) continue;
        double row = 0.0;
        for (std::size_t m = 0; m < bank.mels; ++m) row += bank.at(b, m);
        CHECK(row > 0.0);
    }
}

TEST_CASE("filterbank rejects bad geometry", "[spectro]") {
    CHECK_THROWS_AS(build_filterbank(9, 8, 0.0, 8.0, 16), ValidationError);   // F < K+2
    CHECK_THROWS_AS(build_filterbank(9, 1, -1.0, 8.0, 16), ValidationError);  // f_min < 0
    CHECK_THROWS_AS(build_filterbank(9, 1, 8.0, 8.0, 16), ValidationError);   // empty range
    CHECK_THROWS_AS(build_filterbank(9, 1, 0.0, 9.0, 16), ValidationError);   // above Nyquist
    CHECK_THROWS_AS(build_filterbank(9, 0, 0.0, 8.0, 16), ValidationError);   // no filters

    // Too many filters for the 21.5 Hz grid of a 1024 window: centers collide.
    try {
        build_filterbank(513, 128, 0.0, 11025.0, 22050);
        FAIL("expected a degenerate-filterbank error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("filter") != std::string::npos);
    }
}

TEST_CASE("log mel basics", "[spectro]") {
    Spectrogram zero;
    zero.frames = 3;
    zero.bins = 9;
    zero.magnitudes.assign(27, 0.0);
    const auto bank = build_filterbank(9, 1, 0.0, 8.0, 16);
    const auto lm = log_mel(zero, bank, 1e-6);
    REQUIRE(lm.frames == 3);
    REQUIRE(lm.mels == 1);
    for (double v : lm.values) CHECK(v == Catch::Approx(std::log(1e-6)).epsilon(1e-12));

    // 1x1 system: X=[1], H=[1].
    Spectrogram one;
    one.frames = 1;
    one.bins = 1;
    one.magnitudes = {1.0};
    MelFilterBank unit;
    unit.bins = 1;
    unit.mels = 1;
    unit.weights = {1.0};
    CHECK_THROWS_AS(log_mel(one, unit, 0.0), ValidationError);
    const double e_minus_1 = std::exp(1.0) - 1.0;
    CHECK(log_mel(one, unit, e_minus_1).values[0] == Catch::Approx(1.0).epsilon(1e-12));

    Spectrogram wrong = zero;
    wrong.bins = 8;
    wrong.magnitudes.resize(24);
    CHECK_THROWS_AS(log_mel(wrong, bank, 1e-6), ShapeError);
}

TEST_CASE("log mel matches a triple-loop product", "[spectro]") {
    Rng rng(314);
    Spectrogram spec;
    spec.frames = 3;
    spec.bins = 5;
    spec.magnitudes.resize(15);
    for (auto& v : spec.magnitudes) v = rng.uniform(0.0, 2.0);
    MelFilterBank bank;
    bank.bins = 5;
    bank.mels = 2;
    bank.weights.resize(10);
    for (auto& v : bank.weights) v = rng.uniform(0.0, 1.0);

    const double eps = 1e-5;
    const auto lm = log_mel(spec, bank, eps);
    const auto prod = oracle::matmul(spec.magnitudes, 3, 5, bank.weights, 2);
    for (std::size_t i = 0; i < prod.size(); ++i) {
        CHECK(lm.values[i] == Catch::Approx(std::log(prod[i] + eps)).epsilon(1e-12));
    }

    // Raising epsilon never lowers a value.
    const auto lm2 = log_mel(spec, bank, 1e-2);
    for (std::size_t i = 0; i < lm.values.size(); ++i) CHECK(lm2.values[i] >= lm.values[i]);
}

TEST_CASE("time-axis resampling", "[spectro]") {
    const std::vector<double> two{0.0, 1.0};
    CHECK(resample_time_linear(two, 2, 1, 2) == two);
    const auto three = resample_time_linear(two, 2, 1, 3);
    REQUIRE(three.size() == 3);
    CHECK(three[0] == 0.0);
    CHECK(three[1] == Catch::Approx(0.5).margin(1e-15));
    CHECK(three[2] == 1.0);

    // Multi-column round trip against the reference interpolator.
    Rng rng(99);
    std::vector<double> vals(7 * 3);
    for (auto& v : vals) v = rng.uniform(-2.0, 2.0);
    const auto wide = resample_time_linear(vals, 7, 3, 11);
    for (std::size_t m = 0; m < 3; ++m) {
        std::vector<double> col(7);
        for (std::size_t t = 0; t < 7; ++t) col[t] = vals[t * 3 + m];
        const auto ref = oracle::lerp_resample(col, 11);
        for (std::size_t t = 0; t < 11; ++t) {
            CHECK(wide[t * 3 + m] == Catch::Approx(ref[t]).margin(1e-12));
        }
    }

    CHECK_THROWS_AS(resample_time_linear(two, 2, 1, 0), ValidationError);
    CHECK_THROWS_AS(resample_time_linear(two, 3, 1, 2), ShapeError);
}

TEST_CASE("three-channel image composition", "[spectro]") {
    const auto sig = noise_signal(2048, 5150);
    const std::array<StftConfig, 3> same{{{256, 64, WindowKind::Hann},
                                          {256, 64, WindowKind::Hann},
                                          {256, 64, WindowKind::Hann}}};
    const auto img = three_channel_logmel(sig, same, 8, 1e-6, 20);
    REQUIRE(img.frames == 20);
    REQUIRE(img.mels == 8);
    for (std::size_t t = 0; t < 20; ++t) {
        for (std::size_t m = 0; m < 8; ++m) {
            CHECK(img.at(0, t, m) == img.at(1, t, m));
            CHECK(img.at(0, t, m) == img.at(2, t, m));
        }
    }

    AudioSignal silent;
    silent.sample_rate = 22050;
    silent.samples.assign(2048, 0.0);
    const auto quiet = three_channel_logmel(silent, same, 8, 1e-6, 20);
    for (double v : quiet.values) CHECK(v == Catch::Approx(std::log(1e-6)).epsilon(1e-12));

    // Each channel equals stft -> log_mel -> reference resample.
    const std::array<StftConfig, 3> mixed{{{128, 32, WindowKind::Hann},
                                           {256, 64, WindowKind::Hann},
                                           {512, 128, WindowKind::Hann}}};
    const auto multi = three_channel_logmel(sig, mixed, 8, 1e-6, 25);
    for (std::size_t c = 0; c < 3; ++c) {
        const auto spec = stft(sig, mixed[c]);
        const auto bank = build_filterbank(spec.bins, 8, 0.0, 11025.0, sig.sample_rate);
        const auto lm = log_mel(spec, bank, 1e-6);
        for (std::size_t m = 0; m < 8; ++m) {
            std::vector<double> col(lm.frames);
            for (std::size_t t = 0; t < lm.frames; ++t) col[t] = lm.at(t, m);
            const auto ref = oracle::lerp_resample(col, 25);
            for (std::size_t t = 0; t < 25; ++t) {
                CHECK(multi.at(c, t, m) == Catch::Approx(ref[t]).margin(1e-12));
            }
        }
    }
}

TEST_CASE("feature files round-trip", "[spectro]") {
    const auto sig = noise_signal(1024, 77);
    const std::array<StftConfig, 3> cfgs{{{128, 32, WindowKind::Hann},
                                          {256, 64, WindowKind::Hann},
                                          {512, 128, WindowKind::Hann}}};
    const auto img = three_channel_logmel(sig, cfgs, 6, 1e-6, 10);

    const auto path = std::filesystem::temp_directory_path() / "camid_test_feat.lmg";
    write_logmel_image(path, img);
    const auto back = read_logmel_image(path);
    CHECK(back.frames == img.frames);
    CHECK(back.mels == img.mels);
    REQUIRE(back.values.size() == img.values.size());
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        // Payload is float32: equality after one float round trip.
        CHECK(back.values[i] == static_cast<double>(static_cast<float>(img.values[i])));
    }

    std::ofstream bad(std::filesystem::temp_directory_path() / "camid_test_bad.lmg",
                      std::ios::binary);
    bad << "NOPE";
    bad.close();
    CHECK_THROWS_AS(
        read_logmel_image(std::filesystem::temp_directory_path() / "camid_test_bad.lmg"),
        DataError);
    std::filesystem::remove(path);
    std::filesystem::remove(std::filesystem::temp_directory_path() / "camid_test_bad.lmg");
}
