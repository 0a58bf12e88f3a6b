#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "lsm/parallel.hpp"
#include "lsm/rng.hpp"

using namespace lsm;

TEST(RandomStream, SameKeySameSequence) {
    RandomStream a(7, "noise", 3);
    RandomStream b(7, "noise", 3);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.uniform(), b.uniform());
    }
}

TEST(RandomStream, KeysSeparateStreams) {
    EXPECT_NE(stream_key(7, "noise", 3), stream_key(7, "noise", 4));
    EXPECT_NE(stream_key(7, "noise", 3), stream_key(7, "sources", 3));
    EXPECT_NE(stream_key(7, "noise", 3), stream_key(8, "noise", 3));
    EXPECT_NE(stream_key(7, "noise", 3, 0), stream_key(7, "noise", 3, 1));
}

TEST(RandomStream, FnvReferenceValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(RandomStream, UniformMomentsAndRange) {
    RandomStream s(1, "moments");
    const int n = 200000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    EXPECT_NEAR(mean, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(sum2 / n - mean * mean, 1.0 / 12.0, 2e-3);
}

TEST(RandomStream, NormalMoments) {
    RandomStream s(2, "moments");
    const int n = 200000;
    double sum = 0.0;
    double sum2 = 0.0;
    double sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = s.normal();
        sum += g;
        sum2 += g * g;
        sum4 += g * g * g * g;
    }
    EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(sum2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(sum4 / n, 3.0, 0.1);
}

TEST(Parallel, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) {
        EXPECT_EQ(h.load(), 1);
    }
}

TEST(Parallel, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(100, [](std::size_t i) {
                     if (i == 57) {
                         throw std::runtime_error("boom");
                     }
                 }),
                 std::runtime_error);
}

TEST(Parallel, ThreadCountFromEnvironment) {
    ::setenv("LSM_THREADS", "3", 1);
    EXPECT_EQ(worker_count(), 3U);
    ::setenv("LSM_THREADS", "junk", 1);
    EXPECT_GE(worker_count(), 1U);
    ::unsetenv("LSM_THREADS");
    EXPECT_GE(worker_count(), 1U);
}
