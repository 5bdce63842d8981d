// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "ccdkit/core.hpp"
#include "ccdkit/error.hpp"
#include "support.hpp"

using namespace ccdkit;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInternal;
}

}  // namespace

TEST_CASE("cosine similarity examples") {
  const std::vector<double> u{0.25, 0.25, 0.25, 0.25};
  CHECK(cosine_similarity(u, u) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(std::vector<double>{1, 0, 0, 0}, std::vector<double>{0, 1, 0, 0}) == 0.0);
  // 0.25 / (sqrt(0.5) * sqrt(0.5))
  CHECK(cosine_similarity(std::vector<double>{0.5, 0.5, 0, 0}, std::vector<double>{0.5, 0, 0.5, 0}) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cosine similarity errors") {
  CHECK(kind_of([] { cosine_similarity(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}); }) ==
        ErrorKind::kDimension);
  CHECK(kind_of([] { cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 2}); }) ==
        ErrorKind::kDegenerateInput);
}

TEST_CASE("cosine similarity is symmetric and scale invariant") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(32);
    auto a = testing::uniform_vector(rng, n, 0.0, 1.0);
    auto b = testing::uniform_vector(rng, n, 0.0, 1.0);
    a[0] += 0.1;
    b[0] += 0.1;
    CHECK(cosine_similarity(a, b) == cosine_similarity(b, a));
    const double c = 0.01 + 100.0 * rng.uniform();
    std::vector<double> scaled = a;
    for (double& x : scaled) x *= c;
    CHECK(cosine_similarity(scaled, b) == doctest::Approx(cosine_similarity(a, b)).epsilon(1e-12));
    const double s = cosine_similarity(a, b);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("normalize_attention examples") {
  auto w = [](std::vector<double> raw) {
    const auto m = normalize_attention(raw);
    return std::vector<double>(m.weights().begin(), m.weights().end());
  };
  CHECK(w({2, 2}) == std::vector<double>{0.5, 0.5});
  CHECK(w({1, 0, 0}) == std::vector<double>{1, 0, 0});
  CHECK(w({3, 1}) == std::vector<double>{0.75, 0.25});
  CHECK(kind_of([] { normalize_attention(std::vector<double>{1, -1}); }) == ErrorKind::kDegenerateInput);
  CHECK(kind_of([] { normalize_attention(std::vector<double>{0, 0}); }) == ErrorKind::kDegenerateInput);
  CHECK(kind_of([] { normalize_attention(std::vector<double>{}); }) == ErrorKind::kDegenerateInput);
}

TEST_CASE("normalized attention sums to one") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto raw = testing::uniform_vector(rng, 1 + rng.index(64), 0.0, 1000.0);
    const auto m = normalize_attention(raw);
    const double sum = std::accumulate(m.weights().begin(), m.weights().end(), 0.0);
    CHECK(std::abs(sum - 1.0) <= 1e-4);
  }
}

TEST_CASE("softmax examples") {
  CHECK(softmax(std::vector<double>{0, 0}) == std::vector<double>{0.5, 0.5});
  const auto big = softmax(std::vector<double>{1000, 0});
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] < 1e-300);

  // Oracle in extended precision without max-shift.
  const std::vector<double> l{1, 2, 3};
  long double z = 0;
  for (double x : l) z += std::exp(static_cast<long double>(x));
  const auto p = softmax(l);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(p[i] == doctest::Approx(static_cast<double>(std::exp(static_cast<long double>(l[i])) / z)).epsilon(1e-13));
  }
  CHECK(p[0] == doctest::Approx(0.0900).epsilon(1e-3));
  CHECK(p[1] == doctest::Approx(0.2447).epsilon(1e-3));
  CHECK(p[2] == doctest::Approx(0.6652).epsilon(1e-3));

  CHECK(kind_of([] { softmax(std::vector<double>{1, 2}, 0.0); }) == ErrorKind::kParameter);
  CHECK(kind_of([] { softmax(std::vector<double>{1, 2}, -1.0); }) == ErrorKind::kParameter);
}

TEST_CASE("softmax gives -inf entries zero mass") {
  const double ninf = -std::numeric_limits<double>::infinity();
  const auto p = softmax(std::vector<double>{ninf, 0.0, ninf});
  CHECK(p == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("softmax is shift invariant, normalized and monotone") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.index(64);
    const auto l = testing::uniform_vector(rng, n, -20.0, 20.0);
    const double shift = -50.0 + 100.0 * rng.uniform();
    std::vector<double> shifted = l;
    for (double& x : shifted) x += shift;
    const double t = 0.25 + 2.0 * rng.uniform();
    const auto p = softmax(l, t);
    const auto q = softmax(shifted, t);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(p[i] - q[i]) <= 1e-9);
      sum += p[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (l[i] < l[j]) CHECK(p[i] <= p[j]);
      }
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("entropy examples") {
  CHECK(entropy(std::vector<double>{0, 1, 0}) == 0.0);
  CHECK(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  const double direct = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  CHECK(entropy(std::vector<double>{0.75, 0.25}) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(entropy(std::vector<double>{0.75, 0.25}) == doctest::Approx(0.5623).epsilon(1e-3));
  CHECK(kind_of([] { entropy(std::vector<double>{1.5, -0.5}); }) == ErrorKind::kDomain);
}

TEST_CASE("entropy of softmax peaks at constant logits") {
  Rng rng(5);
  for (std::size_t n : {2u, 3u, 8u, 64u}) {
    const double flat = entropy(softmax(std::vector<double>(n, 0.7)));
    CHECK(flat == doctest::Approx(std::log(static_cast<double>(n))).epsilon(1e-12));
    for (int trial = 0; trial < 50; ++trial) {
      const auto l = testing::uniform_vector(rng, n, -5.0, 5.0);
      CHECK(entropy(softmax(l)) <= flat + 1e-12);
    }
  }
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng c(1);
  std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7};
  c.shuffle(items);
  std::vector<int> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.index(3) < 3u);
  }
}

TEST_CASE("fnv1a64 matches published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("mention labels round-trip") {
  for (auto l : {MentionLabel::kUnknown, MentionLabel::kGrounded, MentionLabel::kHallucinated}) {
    CHECK(parse_label(label_name(l)) == l);
  }
  CHECK(kind_of([] { parse_label("maybe"); }) == ErrorKind::kValidation);
}
