#include <doctest.h>

#include <ksme/assignment.hpp>

#include <algorithm>
#include <limits>

#include "support.hpp"

using namespace ksme;
using namespace ksme::testing;

TEST_CASE("assignment: zero diagonal picks the identity") {
  Eigen::MatrixXd cost(3, 3);
  cost << 0, 5, 5,
          5, 0, 5,
          5, 5, 0;
  auto a = hungarian(cost);
  CHECK(a.mapping == std::vector<Eigen::Index>{0, 1, 2});
  CHECK(a.total_cost == 0.0);
}

TEST_CASE("assignment: small hand-solved instance") {
  Eigen::MatrixXd cost(2, 2);
  cost << 1, 2,
          2, 1;
  auto a = hungarian(cost);
  CHECK(a.mapping == std::vector<Eigen::Index>{0, 1});
  CHECK(a.total_cost == 2.0);
}

TEST_CASE("assignment: agrees with exhaustive search") {
  auto rng = test_rng(60);
  for (int trial = 0; trial < 100; ++trial) {
    auto cost = random_matrix(rng, 6, 6);
    cost.array() += 1.5;  // keep costs positive, shifts do not matter
    auto fast = hungarian(cost);
    auto slow = brute_force_assignment(cost);
    REQUIRE(fast.mapping == slow.mapping);
    CHECK(fast.total_cost == slow.total_cost);
  }
}

TEST_CASE("assignment: ties resolve to the smallest mapping") {
  auto all_equal = Eigen::MatrixXd::Constant(3, 3, 4.0);
  auto a = hungarian(Eigen::MatrixXd(all_equal));
  CHECK(a.mapping == std::vector<Eigen::Index>{0, 1, 2});

  Eigen::MatrixXd two(2, 2);
  two << 1, 1,
         1, 1;
  CHECK(hungarian(two).mapping == std::vector<Eigen::Index>{0, 1});
}

TEST_CASE("assignment: mapping is a permutation and cost adds up") {
  auto rng = test_rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    auto cost = random_matrix(rng, 5, 5);
    auto a = hungarian(cost);
    std::vector<Eigen::Index> sorted = a.mapping;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<Eigen::Index>{0, 1, 2, 3, 4});
    double total = 0.0;
    for (Eigen::Index i = 0; i < 5; ++i) {
      total += cost(i, a.mapping[static_cast<std::size_t>(i)]);
    }
    CHECK(a.total_cost == total);
  }
}

TEST_CASE("assignment: rejects malformed inputs") {
  CHECK_THROWS_AS(hungarian(Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 3))),
                  ConfigError);

  Eigen::MatrixXd with_nan = Eigen::MatrixXd::Zero(2, 2);
  with_nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(hungarian(with_nan), ConfigError);

  Eigen::MatrixXd with_inf = Eigen::MatrixXd::Zero(2, 2);
  with_inf(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(hungarian(with_inf), ConfigError);
}

TEST_CASE("assignment: empty instance") {
  auto a = hungarian(Eigen::MatrixXd(0, 0));
  CHECK(a.mapping.empty());
  CHECK(a.total_cost == 0.0);
}
