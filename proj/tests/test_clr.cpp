#include <cmath>
#include <sstream>

#include "doctest.h"
#include "testutil.hpp"
#include "vtk/clr.hpp"

using namespace vtk;

TEST_CASE("schedule spec validation") {
    CHECK_NOTHROW(validate(ScheduleSpec{1e-7, 1e-5, 100, 4}));
    CHECK_THROWS_AS(validate(ScheduleSpec{0.0, 1e-5, 100, 4}), Error);
    CHECK_THROWS_AS(validate(ScheduleSpec{1e-5, 1e-7, 100, 4}), Error);
    CHECK_THROWS_AS(validate(ScheduleSpec{1e-7, 1e-5, 0, 4}), Error);
    CHECK_THROWS_AS(validate(ScheduleSpec{1e-7, 1e-5, 100, 0}), Error);
}

TEST_CASE("triangular waveform values") {
    const ScheduleSpec spec{1e-7, 1e-5, 1000, 3};
    CHECK(lr_at(spec, 0) == 1e-7);
    CHECK(lr_at(spec, 500) == doctest::Approx(1e-5).epsilon(1e-15));
    CHECK(lr_at(spec, 250) == doctest::Approx(5.05e-6).epsilon(1e-12));

    const ScheduleSpec flat{3e-6, 3e-6, 10, 2};
    for (long i = 0; i < 20; ++i) CHECK(lr_at(flat, i) == 3e-6);

    CHECK_THROWS_AS(lr_at(spec, -1), Error);
    CHECK_THROWS_AS(lr_at(spec, 3000), Error);
}

TEST_CASE("waveform bounds, periodicity, and linearity") {
    const ScheduleSpec spec{1e-7, 1e-5, 1000, 3};
    const long N = spec.iters_per_epoch;
    for (long i = 0; i < 3 * N; ++i) {
        const double lr = lr_at(spec, i);
        CHECK(lr >= spec.lr_min);
        CHECK(lr <= spec.lr_max);
        if (i + N < 3 * N) CHECK(lr_at(spec, i + N) == lr);  // exact period
    }
    // Second difference vanishes except at the per-cycle breakpoints
    // (the peak and the cycle restart).
    for (long i = 1; i + 1 < N; ++i) {
        const double d2 = lr_at(spec, i + 1) - 2 * lr_at(spec, i) + lr_at(spec, i - 1);
        const bool breakpoint = (i == N / 2);
        if (breakpoint)
            CHECK(std::abs(d2) > 1e-9);
        else
            CHECK(std::abs(d2) < 1e-14);
    }
}

TEST_CASE("schedule csv content") {
    SUBCASE("two-iteration epoch hits both bounds") {
        const std::string csv = schedule_csv({1e-7, 1e-5, 2, 1});
        CHECK(csv ==
              "iter,lr\n"
              "0,1.00000000000e-07\n"
              "1,1.00000000000e-05\n");
    }
    SUBCASE("second epoch repeats the first") {
        const std::string csv = schedule_csv({1e-7, 1e-5, 4, 2});
        std::istringstream in(csv);
        std::string header;
        std::getline(in, header);
        CHECK(header == "iter,lr");
        std::vector<std::string> lr(8);
        for (int i = 0; i < 8; ++i) {
            std::string line;
            REQUIRE(std::getline(in, line));
            const auto comma = line.find(',');
            CHECK(line.substr(0, comma) == std::to_string(i));
            lr[size_t(i)] = line.substr(comma + 1);
        }
        for (int i = 0; i < 4; ++i) CHECK(lr[size_t(i)] == lr[size_t(i + 4)]);
    }
    SUBCASE("degenerate bounds emit a constant column") {
        const std::string csv = schedule_csv({3e-6, 3e-6, 3, 1});
        CHECK(csv ==
              "iter,lr\n"
              "0,3.00000000000e-06\n"
              "1,3.00000000000e-06\n"
              "2,3.00000000000e-06\n");
    }
}

TEST_CASE("emit_schedule writes deterministic files") {
    testutil::TempDir dir("clr");
    const ScheduleSpec spec{1e-7, 1e-5, 8, 2};
    emit_schedule(spec, dir / "a.csv");
    emit_schedule(spec, dir / "b.csv");
    const std::string a = testutil::slurp(dir / "a.csv");
    CHECK(a == testutil::slurp(dir / "b.csv"));
    CHECK(a == schedule_csv(spec));
    CHECK_THROWS_AS(emit_schedule(spec, dir / "missing" / "c.csv"), Error);
}
