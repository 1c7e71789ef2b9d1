#include <doctest.h>

#include <cmath>
#include <random>

#include "rectidic/matching.hpp"

using namespace rectidic;

namespace {

sift::KeyPoint make_kp(double x, double y, std::uint64_t seed) {
    sift::KeyPoint kp;
    kp.x = x;
    kp.y = y;
    kp.sigma = 1.6;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    float norm2 = 0.0f;
    for (auto& d : kp.descriptor) {
        d = dist(rng);
        norm2 += d * d;
    }
    for (auto& d : kp.descriptor) d /= std::sqrt(norm2);
    return kp;
}

sift::KeyPoint with_descriptor(double x, double y, const std::array<float, 128>& desc) {
    sift::KeyPoint kp;
    kp.x = x;
    kp.y = y;
    kp.descriptor = desc;
    return kp;
}

} // namespace

TEST_CASE("a set matched against itself returns the identity matching") {
    std::vector<sift::KeyPoint> kps;
    for (int i = 0; i < 20; ++i) kps.push_back(make_kp(i * 10.0, i * 7.0, 100 + i));

    const auto matches = match_descriptors(kps, kps, 0.8);
    REQUIRE(matches.size() == 20);
    for (const auto& m : matches) {
        CHECK(m.src.x == m.dst.x);
        CHECK(m.src.y == m.dst.y);
        CHECK(m.distance == 0.0);
        CHECK(m.ratio < 0.8);
    }
}

TEST_CASE("equidistant best and second-best descriptors are discarded") {
    // Destination holds two copies of the same descriptor: any source point
    // sees ratio exactly 1 and must be dropped.
    const auto proto = make_kp(0, 0, 7).descriptor;
    std::vector<sift::KeyPoint> dst = {with_descriptor(10, 10, proto),
                                       with_descriptor(50, 50, proto)};
    std::vector<sift::KeyPoint> src = {with_descriptor(0, 0, proto),
                                       with_descriptor(5, 5, proto)};
    CHECK(match_descriptors(src, dst, 0.99).empty());
}

TEST_CASE("duplicate targets keep only the closer source") {
    auto target = make_kp(10, 10, 1);
    auto near_src = target;  // distance 0
    near_src.x = 1;
    auto far_src = target;
    far_src.x = 2;
    for (int i = 0; i < 4; ++i) far_src.descriptor[i] += 0.05f;  // small distance

    // A far-away decoy so ratio tests pass.
    auto decoy = make_kp(90, 90, 999);
    std::vector<sift::KeyPoint> dst = {target, decoy};
    std::vector<sift::KeyPoint> src = {far_src, near_src};

    const auto matches = match_descriptors(src, dst, 0.9);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].src.x == 1);  // the closer claimant won
    CHECK(matches[0].distance == 0.0);
}

TEST_CASE("ratio threshold is strict") {
    // Construct distances d1 = 0.1, d2 = 0.2 exactly: ratio 0.5.
    std::array<float, 128> base{};
    base[0] = 1.0f;
    auto d_best = base;
    d_best[1] = 0.1f;
    auto d_second = base;
    d_second[1] = -0.2f;

    std::vector<sift::KeyPoint> src = {with_descriptor(0, 0, base)};
    std::vector<sift::KeyPoint> dst = {with_descriptor(1, 1, d_best),
                                       with_descriptor(2, 2, d_second)};
    CHECK(match_descriptors(src, dst, 0.51).size() == 1);
    CHECK(match_descriptors(src, dst, 0.5).empty());   // ratio == delta discarded
    CHECK(match_descriptors(src, dst, 0.49).empty());
}

TEST_CASE("fewer than two destination key points is an error") {
    std::vector<sift::KeyPoint> one = {make_kp(0, 0, 1)};
    std::vector<sift::KeyPoint> two = {make_kp(0, 0, 1), make_kp(5, 5, 2)};
    CHECK_THROWS_AS(match_descriptors(two, one, 0.8), InvalidParameterError);
    CHECK_THROWS_AS(match_descriptors({}, two, 0.8), InvalidParameterError);
    CHECK_THROWS_AS(match_descriptors(two, two, 1.5), InvalidParameterError);
}

TEST_CASE("accepted matches carry their distances and ratios") {
    std::vector<sift::KeyPoint> src, dst;
    for (int i = 0; i < 10; ++i) {
        src.push_back(make_kp(i, i, 200 + i));
        dst.push_back(src.back());
        dst.back().x += 3.0;  // same descriptor, shifted position
    }
    const auto matches = match_descriptors(src, dst, 0.8);
    for (const auto& m : matches) {
        CHECK(m.dst.x == doctest::Approx(m.src.x + 3.0));
        CHECK(m.ratio >= 0.0);
        CHECK(m.ratio < 0.8);
        CHECK(m.distance >= 0.0);
    }
}
