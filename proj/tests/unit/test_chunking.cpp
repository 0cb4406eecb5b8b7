#include <doctest.h>

#include <random>
#include <stdexcept>

#include "layercode/chunking.hpp"
#include "oracles.hpp"

using namespace layercode;

namespace {

IntMatrix to_int(const oracle::Grid& g) {
  IntMatrix m(g.size(), g[0].size(), 0);
  for (std::size_t r = 0; r < g.size(); ++r)
    for (std::size_t c = 0; c < g[r].size(); ++c) m(r, c) = g[r][c];
  return m;
}

u128 pow_u128(std::uint64_t base, unsigned exp) {
  u128 out = 1;
  while (exp--) out *= base;
  return out;
}

MiniJobResults all_products(const ChunkedOperand& a, const ChunkedOperand& b, unsigned m) {
  MiniJobResults results;
  for (const auto& job : all_mini_jobs(m)) results.emplace(job, mini_job_product(a, b, job));
  return results;
}

}  // namespace

TEST_CASE("decompose splits digits in base q^d") {
  const ChunkParams hex{2, 8, 2};
  const auto scalar = decompose(IntMatrix{{0xABCD}}, hex);
  REQUIRE(scalar.chunks.size() == 2);
  CHECK(scalar.chunks[0](0, 0) == 0xCD);
  CHECK(scalar.chunks[1](0, 0) == 0xAB);

  const auto zero = decompose(IntMatrix{{0}}, hex);
  CHECK(zero.chunks[0](0, 0) == 0);
  CHECK(zero.chunks[1](0, 0) == 0);

  // Base-25 conversion oracle: 12345 = 20 + 18*25 + 19*625.
  const ChunkParams quinary{5, 2, 3};
  const auto q5 = decompose(IntMatrix{{12345}}, quinary);
  CHECK(q5.chunks[0](0, 0) == 20);
  CHECK(q5.chunks[1](0, 0) == 18);
  CHECK(q5.chunks[2](0, 0) == 19);
  CHECK(q5.chunks[0](0, 0) + q5.chunks[1](0, 0) * 25 + q5.chunks[2](0, 0) * 625 == 12345);

  CHECK_THROWS_AS(decompose(IntMatrix{{1 << 16}}, hex), std::out_of_range);
  CHECK_THROWS_AS(decompose(IntMatrix{{1}}, ChunkParams{4, 2, 2}), std::invalid_argument);
}

TEST_CASE("decompose round-trips on random inputs") {
  std::mt19937_64 rng(5);
  const ChunkParams cases[] = {{2, 8, 2}, {3, 4, 3}, {2, 1, 16}, {7, 3, 2}, {2, 16, 4}};
  for (const auto& params : cases) {
    const auto limit = static_cast<std::uint64_t>(params.element_limit() - 1);
    for (int trial = 0; trial < 50; ++trial) {
      IntMatrix m(3, 4, 0);
      std::uniform_int_distribution<std::uint64_t> dist(0, limit);
      for (auto& e : m.data()) e = dist(rng);
      const auto chunked = decompose(m, params);
      for (const auto& chunk : chunked.chunks)
        for (const auto e : chunk.data()) REQUIRE(e < params.chunk_base());
      CHECK(chunked.reconstruct(params) == m);
    }
  }
}

TEST_CASE("mini-job layers") {
  SUBCASE("m = 2") {
    CHECK(mini_job_count(0, 2) == 1);
    CHECK(mini_job_count(1, 2) == 2);
    CHECK(mini_job_count(2, 2) == 1);
    const auto middle = mini_jobs_of_layer(1, 2);
    REQUIRE(middle.size() == 2);
    CHECK(middle[0] == MiniJob{1, 1, 0});
    CHECK(middle[1] == MiniJob{1, 0, 1});
    CHECK(mini_jobs_of_layer(0, 2).front() == MiniJob{0, 1, 1});
    CHECK(mini_jobs_of_layer(2, 2).front() == MiniJob{2, 0, 0});
  }
  SUBCASE("m = 1 degenerates to one plain product") {
    const auto only = mini_jobs_of_layer(0, 1);
    REQUIRE(only.size() == 1);
    CHECK(only[0] == MiniJob{0, 0, 0});
    CHECK_THROWS_AS(mini_jobs_of_layer(1, 1), std::out_of_range);
  }
  SUBCASE("m = 3 matches enumeration") {
    const std::vector<std::size_t> expected{1, 2, 3, 2, 1};
    CHECK(oracle::layer_sizes_by_enumeration(3) == expected);
    for (unsigned l = 0; l < 5; ++l) CHECK(mini_job_count(l, 3) == expected[l]);
  }
  SUBCASE("every layer holds exactly the right index pairs, ordered by descending i") {
    for (unsigned m = 1; m <= 32; ++m) {
      const auto sizes = oracle::layer_sizes_by_enumeration(m);
      std::size_t total = 0;
      for (unsigned l = 0; l < 2 * m - 1; ++l) {
        const auto jobs = mini_jobs_of_layer(l, m);
        REQUIRE(jobs.size() == sizes[l]);
        REQUIRE(jobs.size() == mini_job_count(l, m));
        for (std::size_t n = 0; n < jobs.size(); ++n) {
          CHECK(jobs[n].i + jobs[n].j == (2 * m - 2) - l);
          CHECK(jobs[n].i < m);
          CHECK(jobs[n].j < m);
          if (n) CHECK(jobs[n].i < jobs[n - 1].i);
        }
        total += jobs.size();
      }
      CHECK(total == std::size_t{m} * m);
    }
  }
}

TEST_CASE("resolution assembly") {
  const ChunkParams params{2, 8, 2};
  std::mt19937_64 rng(99);
  const auto ga = oracle::random_grid(rng, 3, 3, 1 << 16);
  const auto gb = oracle::random_grid(rng, 3, 3, 1 << 16);
  const auto a = decompose(to_int(ga), params);
  const auto b = decompose(to_int(gb), params);
  const auto results = all_products(a, b, 2);

  const auto a1b1 = int_mul_transpose(a.chunks[1], b.chunks[1]);
  const auto a1b0 = int_mul_transpose(a.chunks[1], b.chunks[0]);
  const auto a0b1 = int_mul_transpose(a.chunks[0], b.chunks[1]);
  const auto a0b0 = int_mul_transpose(a.chunks[0], b.chunks[0]);

  SUBCASE("first resolution is the top chunk product alone") {
    const auto r0 = resolution_assemble(results, 0, params);
    for (std::size_t e = 0; e < r0.size(); ++e) CHECK(r0.data()[e] == (a1b1.data()[e] << 16));
  }
  SUBCASE("full resolution is the three-layer sum and the exact product") {
    const auto full = resolution_assemble(results, 2, params);
    const auto exact = oracle::transpose_product(ga, gb);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) {
        const u128 layered = (a1b1(r, c) << 16) + ((a1b0(r, c) + a0b1(r, c)) << 8) + a0b0(r, c);
        CHECK(full(r, c) == layered);
        CHECK(full(r, c) == exact[r][c]);
      }
    }
  }
  SUBCASE("missing results are named") {
    MiniJobResults partial = results;
    partial.erase(MiniJob{1, 0, 1});
    CHECK_NOTHROW(resolution_assemble(partial, 0, params));
    CHECK_THROWS_WITH_AS(resolution_assemble(partial, 1, params), "missing mini-job result (layer=1, i=0, j=1)",
                         std::out_of_range);
  }
}

TEST_CASE("full resolution equals the integer product on random instances") {
  std::mt19937_64 rng(2024);
  const ChunkParams cases[] = {{2, 8, 2}, {3, 3, 3}, {2, 4, 4}, {5, 2, 1}};
  for (const auto& params : cases) {
    const auto limit = static_cast<std::uint64_t>(params.element_limit());
    for (int trial = 0; trial < 100; ++trial) {
      std::uniform_int_distribution<std::size_t> dim(1, 5);
      const std::size_t n = dim(rng), ca = dim(rng), cb = dim(rng);
      const auto ga = oracle::random_grid(rng, n, ca, limit);
      const auto gb = oracle::random_grid(rng, n, cb, limit);
      const auto a = decompose(to_int(ga), params);
      const auto b = decompose(to_int(gb), params);
      const auto full = resolution_assemble(all_products(a, b, params.m), params.layers() - 1, params);
      const auto exact = oracle::transpose_product(ga, gb);
      for (std::size_t r = 0; r < ca; ++r)
        for (std::size_t c = 0; c < cb; ++c) REQUIRE(full(r, c) == exact[r][c]);
    }
  }
}

TEST_CASE("refinement only adds lower-weight terms") {
  std::mt19937_64 rng(17);
  const ChunkParams params{2, 4, 3};
  const auto ga = oracle::random_grid(rng, 4, 2, 1 << 12);
  const auto gb = oracle::random_grid(rng, 4, 2, 1 << 12);
  const auto a = decompose(to_int(ga), params);
  const auto b = decompose(to_int(gb), params);
  const auto results = all_products(a, b, 3);
  for (unsigned l = 0; l + 1 < params.layers(); ++l) {
    for (unsigned l2 = l + 1; l2 < params.layers(); ++l2) {
      const auto lo = resolution_assemble(results, l, params);
      const auto hi = resolution_assemble(results, l2, params);
      // The difference is exactly the mini-jobs with i + j < (2m - 2) - l.
      WideMatrix expected(2, 2, 0);
      for (const auto& [job, prod] : results) {
        if (job.i + job.j < (2 * params.m - 2) - l && job.i + job.j >= (2 * params.m - 2) - l2) {
          for (std::size_t e = 0; e < prod.size(); ++e)
            expected.data()[e] += static_cast<u128>(prod.data()[e]) * pow_u128(2, job.weight_exponent(4));
        }
      }
      for (std::size_t e = 0; e < lo.size(); ++e) {
        CHECK(hi.data()[e] >= lo.data()[e]);
        CHECK(hi.data()[e] - lo.data()[e] == expected.data()[e]);
      }
    }
  }
}

TEST_CASE("layered accumulator enforces layer order") {
  const ChunkParams params{2, 8, 2};
  const auto a = decompose(IntMatrix{{0x1234}}, params);
  const auto b = decompose(IntMatrix{{0xFEDC}}, params);
  const auto results = all_products(a, b, 2);
  LayeredAccumulator acc(params, 1, 1);
  CHECK_THROWS_AS(acc.absorb_layer(1, results), std::logic_error);
  for (unsigned l = 0; l < 3; ++l) {
    acc.absorb_layer(l, results);
    CHECK(acc.completed_layers() == l + 1);
    CHECK(acc.partial() == resolution_assemble(results, l, params));
  }
  CHECK(acc.partial()(0, 0) == u128{0x1234} * 0xFEDC);
}
