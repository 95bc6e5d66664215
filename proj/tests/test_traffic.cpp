#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cosseg/traffic.hpp"

#include "helpers.hpp"

using namespace cosseg;

TEST_CASE("direction round-trips through both spellings") {
    CHECK(direction_from_string("up") == Direction::Uplink);
    CHECK(direction_from_string("down") == Direction::Downlink);
    CHECK(direction_from_string("0") == Direction::Uplink);
    CHECK(direction_from_string("1") == Direction::Downlink);
    CHECK(to_string(Direction::Uplink) == "up");
    CHECK(to_string(Direction::Downlink) == "down");
    CHECK_THROWS_AS(direction_from_string("sideways"), Error);
}

TEST_CASE("cos label validation") {
    CHECK_THROWS_AS(CosLabel(-1, "x"), Error);
    CHECK_THROWS_AS(CosLabel(0, ""), Error);
    CHECK_THROWS_AS(CosLabel(0, "a,b"), Error);
    CosLabel ok(3, "file_transfer");
    CHECK(ok.id == 3);
}

TEST_CASE("stream validation catches ordering and iat drift") {
    TrafficStream s;
    s.label = CosLabel(0, "x");
    s.packets = {{0.0, 100, Direction::Uplink, 0.0}, {0.5, 200, Direction::Downlink, 0.5}};
    CHECK_NOTHROW(s.validate());

    SUBCASE("first iat must be zero") {
        s.packets[0].iat = 0.1;
        CHECK_THROWS_AS(s.validate(), Error);
    }
    SUBCASE("timestamps must not decrease") {
        s.packets[1].timestamp = -0.5;
        CHECK_THROWS_AS(s.validate(), Error);
    }
    SUBCASE("iat must match timestamp delta") {
        s.packets[1].iat = 0.4;
        CHECK_THROWS_AS(s.validate(), Error);
    }
    SUBCASE("zero-length packets are rejected") {
        s.packets[1].length = 0;
        CHECK_THROWS_AS(s.validate(), Error);
    }
}

TEST_CASE("iat reconstruction agrees with stored iats on random streams") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        TrafficStream s = test::random_stream(seed, 500);
        for (size_t i = 1; i < s.packets.size(); ++i) {
            const double delta = s.packets[i].timestamp - s.packets[i - 1].timestamp;
            CHECK(std::fabs(delta - s.packets[i].iat) <= 1e-9);
        }
    }
}

TEST_CASE("segment vector invariants") {
    SegmentVector v;
    v.len_min = 100;
    v.len_max = 300;
    v.len_mean = 200;
    v.len_std = 100;
    v.iat_min = 0.0;
    v.iat_max = 0.5;
    v.iat_mean = 0.25;
    v.iat_std = 0.25;
    v.up_count = 1;
    v.down_count = 1;
    v.duration = 0.5;
    CHECK_NOTHROW(v.validate(2));

    SUBCASE("mean outside min/max") {
        v.len_mean = 301;
        CHECK_THROWS_AS(v.validate(2), Error);
    }
    SUBCASE("count mismatch") { CHECK_THROWS_AS(v.validate(3), Error); }
    SUBCASE("fractional counts") {
        v.up_count = 0.5;
        v.down_count = 1.5;
        CHECK_THROWS_AS(v.validate(2), Error);
    }
    SUBCASE("array round-trip is identity") {
        CHECK(SegmentVector::from_array(v.as_array()).as_array() == v.as_array());
    }
}

TEST_CASE("matrix class table requires dense ids") {
    SegmentMatrix m;
    m.n = 2;
    SegmentVector v;
    v.up_count = 1;
    v.down_count = 1;
    m.rows.push_back({v, CosLabel(0, "a")});
    m.rows.push_back({v, CosLabel(2, "c")});
    CHECK_THROWS_AS(m.classes(), Error);
    m.rows[1].label = CosLabel(1, "b");
    CHECK(m.classes().size() == 2);
}
