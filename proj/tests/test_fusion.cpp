#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <camid/fusion.hpp>
#include <camid/rng.hpp>

using namespace camid;
namespace fs = std::filesystem;

namespace {

ProbabilityMatrix make_matrix(std::vector<int> classes, std::vector<std::string> samples,
                              std::vector<double> scores) {
    ProbabilityMatrix m;
    m.class_ids = std::move(classes);
    m.sample_ids = std::move(samples);
    m.scores = std::move(scores);
    return m;
}

// Random row-stochastic matrix with entries bounded away from the floor.
ProbabilityMatrix random_matrix(std::size_t samples, std::size_t classes, Rng& rng) {
    ProbabilityMatrix m;
    for (std::size_t c = 0; c < classes; ++c) m.class_ids.push_back(static_cast<int>(c));
    for (std::size_t n = 0; n < samples; ++n) m.sample_ids.push_back("s" + std::to_string(n));
    m.scores.resize(samples * classes);
    for (std::size_t n = 0; n < samples; ++n) {
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            m.at(n, c) = rng.uniform(1e-3, 1.0);
            sum += m.at(n, c);
        }
        for (std::size_t c = 0; c < classes; ++c) m.at(n, c) /= sum;
    }
    return m;
}

}  // namespace

TEST_CASE("frame probability averaging", "[fusion]") {
    CHECK(average_frame_probs({{0.2, 0.8}}) == std::vector<double>{0.2, 0.8});

    const auto half = average_frame_probs({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(half[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(half[1] == Catch::Approx(0.5).margin(1e-15));

    const auto tri = average_frame_probs({{0.6, 0.4}, {0.6, 0.4}, {0.9, 0.1}});
    CHECK(tri[0] == Catch::Approx(0.7).margin(1e-12));
    CHECK(tri[1] == Catch::Approx(0.3).margin(1e-12));
    CHECK(tri[0] + tri[1] == Catch::Approx(1.0).margin(1e-9));

    CHECK_THROWS_AS(average_frame_probs({}), ValidationError);
    CHECK_THROWS_AS(average_frame_probs({{0.5, 0.5}, {1.0}}), ShapeError);
    CHECK_THROWS_AS(average_frame_probs({{0.9, 0.3}}), ValidationError);  // not a distribution
}

TEST_CASE("product fusion scalar cases", "[fusion]") {
    const auto p1 = make_matrix({0, 1}, {"v"}, {0.6, 0.4});
    const auto p2 = make_matrix({0, 1}, {"v"}, {0.3, 0.7});
    const auto fused = product_fuse({p1, p2});
    CHECK(fused.at(0, 0) == Catch::Approx(0.18).margin(1e-15));
    CHECK(fused.at(0, 1) == Catch::Approx(0.28).margin(1e-15));
    // The per-modality argmax was class 0; fused flips to class 1.
    CHECK(predict_classes(p1) == std::vector<int>{0});
    CHECK(predict_classes(fused) == std::vector<int>{1});

    const auto sum = sum_fuse({p1, p2});
    CHECK(sum.at(0, 0) == Catch::Approx(0.9).margin(1e-15));
    CHECK(sum.at(0, 1) == Catch::Approx(1.1).margin(1e-15));
    CHECK(predict_classes(sum) == std::vector<int>{1});
}

TEST_CASE("fusing with a uniform matrix preserves argmax", "[fusion]") {
    Rng rng(2718);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t classes = 2 + rng.below(5);
        const auto p = random_matrix(1 + rng.below(6), classes, rng);
        auto uniform = p;
        for (auto& v : uniform.scores) v = 1.0 / static_cast<double>(classes);

        const auto fused = product_fuse({p, uniform});
        CHECK(predict_classes(fused) == predict_classes(p));
        for (std::size_t i = 0; i < p.scores.size(); ++i) {
            CHECK(fused.scores[i] ==
                  Catch::Approx(p.scores[i] / static_cast<double>(classes)).epsilon(1e-12));
        }

        // Sum rule: adding a constant within each sample's row keeps argmax.
        auto constant = p;
        for (std::size_t n = 0; n < p.num_samples(); ++n) {
            const double c = rng.uniform(0.0, 2.0);
            for (std::size_t k = 0; k < classes; ++k) constant.at(n, k) = c;
        }
        CHECK(predict_classes(sum_fuse({p, constant})) == predict_classes(p));
    }
}

TEST_CASE("product and sum identities", "[fusion]") {
    Rng rng(5);
    const auto m = random_matrix(4, 3, rng);

    const auto squared = product_fuse({m, m});
    for (std::size_t i = 0; i < m.scores.size(); ++i) {
        CHECK(squared.scores[i] == Catch::Approx(m.scores[i] * m.scores[i]).epsilon(1e-12));
    }

    const auto doubled = sum_fuse({m, m});
    for (std::size_t i = 0; i < m.scores.size(); ++i) {
        CHECK(doubled.scores[i] == 2.0 * m.scores[i]);
    }

    // K copies: every row sums to K.
    const auto five = sum_fuse({m, m, m, m, m});
    for (std::size_t n = 0; n < five.num_samples(); ++n) {
        double row = 0.0;
        for (std::size_t c = 0; c < five.num_classes(); ++c) row += five.at(n, c);
        CHECK(row == Catch::Approx(5.0).margin(1e-9));
    }

    // Products never rise above the smallest factor when inputs are <= 1.
    const auto other = random_matrix(4, 3, rng);
    const auto prod = product_fuse({m, other});
    for (std::size_t i = 0; i < m.scores.size(); ++i) {
        CHECK(prod.scores[i] <= std::min(m.scores[i], other.scores[i]) + 1e-15);
    }
}

TEST_CASE("fusion is order-insensitive within tolerance", "[fusion]") {
    Rng rng(31);
    const auto a = random_matrix(3, 4, rng);
    const auto b = random_matrix(3, 4, rng);
    const auto c = random_matrix(3, 4, rng);

    const auto pab = product_fuse({a, b, c});
    const auto pba = product_fuse({c, a, b});
    const auto paired = product_fuse({product_fuse({a, b}), c});
    for (std::size_t i = 0; i < pab.scores.size(); ++i) {
        CHECK(pab.scores[i] == Catch::Approx(pba.scores[i]).epsilon(1e-12));
        CHECK(pab.scores[i] == Catch::Approx(paired.scores[i]).epsilon(1e-12));
    }

    const auto sab = sum_fuse({a, b, c});
    const auto sba = sum_fuse({b, c, a});
    for (std::size_t i = 0; i < sab.scores.size(); ++i) {
        CHECK(sab.scores[i] == Catch::Approx(sba.scores[i]).epsilon(1e-12));
    }
}

TEST_CASE("probability floor in the product rule", "[fusion]") {
    const auto hole = make_matrix({0, 1}, {"v"}, {0.0, 1.0});
    const auto flat = make_matrix({0, 1}, {"v"}, {0.5, 0.5});

    const auto floored = product_fuse({hole, flat});
    CHECK(floored.at(0, 0) == Catch::Approx(1e-12 * 0.5).epsilon(1e-12));

    const auto raw = product_fuse({hole, flat}, 0.0);
    CHECK(raw.at(0, 0) == 0.0);
}

TEST_CASE("fusion alignment errors", "[fusion]") {
    const auto m = make_matrix({0, 1}, {"v"}, {0.6, 0.4});
    CHECK_THROWS_AS(product_fuse({m}), ValidationError);
    CHECK_THROWS_AS(sum_fuse({}), ValidationError);

    auto renamed = m;
    renamed.sample_ids = {"w"};
    CHECK_THROWS_AS(product_fuse({m, renamed}), ValidationError);

    auto reclassed = m;
    reclassed.class_ids = {0, 2};
    CHECK_THROWS_AS(sum_fuse({m, reclassed}), ValidationError);

    const auto wider = make_matrix({0, 1, 2}, {"v"}, {0.2, 0.3, 0.5});
    CHECK_THROWS_AS(product_fuse({m, wider}), ValidationError);
}

TEST_CASE("argmax tie-breaking picks the lowest class id", "[fusion]") {
    const auto simple = make_matrix({0, 1, 2}, {"v"}, {0.1, 0.8, 0.1});
    CHECK(predict_classes(simple) == std::vector<int>{1});

    const auto tie = make_matrix({0, 1}, {"v"}, {0.5, 0.5});
    CHECK(predict_classes(tie) == std::vector<int>{0});

    // Class ids need not start at zero; the returned label is the id itself.
    const auto shifted = make_matrix({3, 5}, {"a", "b"}, {0.5, 0.5, 0.1, 0.9});
    CHECK(predict_classes(shifted) == std::vector<int>{3, 5});
}

TEST_CASE("row normalization is display-only arithmetic", "[fusion]") {
    auto m = make_matrix({0, 1}, {"a", "b"}, {0.18, 0.28, 2.0, 2.0});
    normalize_rows(m);
    CHECK(m.at(0, 0) == Catch::Approx(0.18 / 0.46).epsilon(1e-12));
    CHECK(m.at(0, 1) == Catch::Approx(0.28 / 0.46).epsilon(1e-12));
    CHECK(m.at(1, 0) == 0.5);
    CHECK(m.at(1, 1) == 0.5);
}

TEST_CASE("matrix validation", "[fusion]") {
    auto bad = make_matrix({0, 1}, {"v"}, {0.5, -0.1});
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.scores = {0.5, std::nan("")};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.scores = {0.5};
    CHECK_THROWS_AS(bad.validate(), ShapeError);
}

TEST_CASE("probability csv round-trip is exact", "[fusion]") {
    Rng rng(17);
    auto m = random_matrix(6, 4, rng);
    m.at(0, 0) = 1.0 / 3.0;
    m.at(0, 1) = std::sqrt(2.0) - 0.4;

    const auto path = fs::temp_directory_path() / "camid_fusion_probs.csv";
    const auto path2 = fs::temp_directory_path() / "camid_fusion_probs2.csv";
    write_probability_csv(path, m);
    const auto back = read_probability_csv(path);
    CHECK(back.class_ids == m.class_ids);
    CHECK(back.sample_ids == m.sample_ids);
    CHECK(back.scores == m.scores);

    write_probability_csv(path2, back);
    std::ifstream f1(path, std::ios::binary);
    std::ifstream f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    std::ofstream(path) << "sample,0,1\nv,0.5,0.5\n";  // wrong header
    CHECK_THROWS_AS(read_probability_csv(path), DataError);
    std::ofstream(path) << "sample_id,0,1\nv,0.5,oops\n";
    CHECK_THROWS_AS(read_probability_csv(path), DataError);
    fs::remove(path);
    fs::remove(path2);
}
