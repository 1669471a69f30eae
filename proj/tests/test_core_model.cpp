#include <doctest.h>

#include "core/rng.hpp"
#include "core/types.hpp"

using namespace bmdl;

TEST_CASE("config_from_times basic construction") {
    SUBCASE("empty model") {
        const auto config = config_from_times(std::vector<std::int64_t>{}, 600, 3);
        CHECK(config.total_changepoints() == 0);
        CHECK(config.eligible_count() == 597);
    }
    SUBCASE("paper changepoint times give regime lengths 149,150,150,151") {
        const auto config = config_from_times({150, 300, 450}, 600, 3);
        CHECK(config.num_changepoints(0) == 3);
        const auto regimes = regime_partition(config.times(0), 600);
        REQUIRE(regimes.size() == 4);
        CHECK(regimes[0].length() == 149);
        CHECK(regimes[1].length() == 150);
        CHECK(regimes[2].length() == 150);
        CHECK(regimes[3].length() == 151);
    }
    SUBCASE("single bit at t=4 with N=10, p=3") {
        const auto config = config_from_times({4}, 10, 3);
        CHECK(config.is_changepoint(0, 4));
        for (std::int64_t t = 5; t <= 10; ++t) CHECK_FALSE(config.is_changepoint(0, t));
        CHECK(config.num_changepoints(0) == 1);
    }
}

TEST_CASE("config_from_times rejects bad input") {
    CHECK_THROWS_AS(config_from_times({3}, 10, 3), OutOfRangeError);   // t <= p
    CHECK_THROWS_AS(config_from_times({11}, 10, 3), OutOfRangeError);  // t > N
    CHECK_THROWS_AS(config_from_times({5, 5}, 10, 3), DuplicateError);
}

TEST_CASE("regime_partition") {
    SUBCASE("no changepoints: one full range") {
        const auto regimes = regime_partition({}, 10);
        REQUIRE(regimes.size() == 1);
        CHECK(regimes[0].first == 1);
        CHECK(regimes[0].last == 10);
    }
    SUBCASE("adjacent changepoints give a length-1 regime") {
        const auto regimes = regime_partition({4, 5}, 10);
        REQUIRE(regimes.size() == 3);
        CHECK(regimes[0].first == 1);
        CHECK(regimes[0].last == 3);
        CHECK(regimes[1].first == 4);
        CHECK(regimes[1].last == 4);
        CHECK(regimes[2].first == 5);
        CHECK(regimes[2].last == 10);
    }
}

TEST_CASE("classify_counts") {
    SUBCASE("paper scenario") {
        const auto config = config_from_times({150, 300, 450}, 600, 3);
        const Metadata meta({75, 150, 250, 550}, 600, 3);
        const auto counts = classify_counts(config, 0, meta);
        CHECK(counts.m_undoc == 2);
        CHECK(counts.m_doc == 1);
        CHECK(counts.n_undoc == 593);
        CHECK(counts.n_doc == 4);
    }
    SUBCASE("empty metadata") {
        const auto config = config_from_times({150, 300}, 600, 3);
        const auto counts = classify_counts(config, 0, Metadata());
        CHECK(counts.m_undoc == 2);
        CHECK(counts.m_doc == 0);
        CHECK(counts.n_undoc == 597);
        CHECK(counts.n_doc == 0);
    }
    SUBCASE("all changepoints documented") {
        const auto config = config_from_times({150}, 600, 3);
        const Metadata meta({150}, 600, 3);
        const auto counts = classify_counts(config, 0, meta);
        CHECK(counts.m_undoc == 0);
        CHECK(counts.m_doc == 1);
        CHECK(counts.n_undoc == 596);
        CHECK(counts.n_doc == 1);
    }
}

TEST_CASE("metadata validation") {
    CHECK_THROWS_AS(Metadata({3}, 600, 3), OutOfRangeError);
    CHECK_THROWS_AS(Metadata({601}, 600, 3), OutOfRangeError);
    CHECK_THROWS_AS(Metadata({100, 100}, 600, 3), DuplicateError);
    const Metadata meta({550, 75}, 600, 3);  // sorted on construction
    CHECK(meta.documented_times().front() == 75);
    CHECK(meta.contains(550));
    CHECK_FALSE(meta.contains(76));
}

TEST_CASE("series data invariants") {
    MatrixXd ok = MatrixXd::Zero(27, 1);
    for (int i = 0; i < 27; ++i) ok(i, 0) = i;
    CHECK_NOTHROW(SeriesData(ok, 12, 3));
    CHECK_THROWS_AS(SeriesData(MatrixXd::Zero(26, 1), 12, 3), InvalidArgumentError);  // N < 2T+p
    MatrixXd nan_mat = ok;
    nan_mat(5, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(SeriesData(nan_mat, 12, 3), InvalidArgumentError);
    CHECK_THROWS_AS(SeriesData(MatrixXd::Zero(30, 3), 12, 3), InvalidArgumentError);
}

TEST_CASE("hyperparams presets and validation") {
    const Hyperparams def = Hyperparams::defaults();
    CHECK(def.a == 1.0);
    CHECK(def.b_undoc == 239.0);
    CHECK(def.b_doc == 47.0);
    CHECK(def.nu == 5.0);
    const Hyperparams mitchell = Hyperparams::mitchell_rate();
    CHECK(mitchell.a / (mitchell.a + mitchell.b_undoc) == doctest::Approx(0.005));
    Hyperparams bad = def;
    bad.nu = 0.0;
    CHECK_THROWS_AS(bad.validate(false), InvalidArgumentError);
    Hyperparams flipped = def;
    flipped.b_undoc = 10.0;
    flipped.b_doc = 20.0;
    CHECK_THROWS_AS(flipped.validate(true), InvalidArgumentError);
    CHECK_NOTHROW(flipped.validate(false));
}

TEST_CASE("property: times round-trip and partition coverage") {
    Rng rng(20240517);
    for (int rep = 0; rep < 200; ++rep) {
        const std::int64_t n = 40 + rng.next_below(200);
        const std::int64_t p = rng.next_below(4);
        const int comps = rng.next_below(2) == 0 ? 1 : 2;
        ChangepointConfig config(n, p, comps);
        for (int c = 0; c < comps; ++c) {
            const std::int64_t m = rng.next_below(6);
            for (std::int64_t i = 0; i < m; ++i) {
                const std::int64_t t = p + 1 + rng.next_below(n - p);
                if (!config.is_changepoint(c, t)) config.set(c, t);
            }
        }
        std::vector<std::vector<std::int64_t>> times;
        for (int c = 0; c < comps; ++c) times.push_back(config.times(c));
        const auto rebuilt = config_from_times(times, n, p, comps);
        CHECK(rebuilt == config);

        for (int c = 0; c < comps; ++c) {
            const auto regimes = regime_partition(config.times(c), n);
            CHECK(static_cast<std::int64_t>(regimes.size()) ==
                  config.num_changepoints(c) + 1);
            std::int64_t covered = 0;
            std::int64_t expect_start = 1;
            for (const auto& r : regimes) {
                CHECK(r.first == expect_start);
                covered += r.length();
                expect_start = r.last + 1;
            }
            CHECK(covered == n);
        }

        // classification counts always sum correctly
        std::vector<std::int64_t> meta_times;
        for (std::int64_t t = p + 1; t <= n; ++t) {
            if (rng.next_below(10) == 0) meta_times.push_back(t);
        }
        const Metadata meta(meta_times, n, p);
        for (int c = 0; c < comps; ++c) {
            const auto counts = classify_counts(config, c, meta);
            CHECK(counts.m_undoc + counts.m_doc == config.num_changepoints(c));
            CHECK(counts.n_undoc + counts.n_doc == n - p);
            CHECK(counts.m_doc <= counts.n_doc);
            CHECK(counts.m_undoc <= counts.n_undoc);
        }
    }
}
