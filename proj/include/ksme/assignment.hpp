#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "ksme/errors.hpp"
#include "ksme/linalg.hpp"

namespace ksme {

/// Minimum-cost perfect matching on a square cost matrix. mapping[i] is the
/// column assigned to row i.
template <typename Scalar>
struct Assignment {
  std::vector<Eigen::Index> mapping;
  Scalar total_cost = Scalar(0);
};

namespace detail {

/// Potentials-based shortest augmenting path solver, cubic in the matrix
/// size. Returns one optimal matching without tie-break guarantees.
template <typename Scalar>
Assignment<Scalar> solve_assignment(const MatrixX<Scalar>& cost) {
  const Eigen::Index n = cost.rows();
  Assignment<Scalar> out;
  if (n == 0) return out;

  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  std::vector<Scalar> u(static_cast<std::size_t>(n) + 1, Scalar(0));
  std::vector<Scalar> v(static_cast<std::size_t>(n) + 1, Scalar(0));
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Eigen::Index> way(static_cast<std::size_t>(n) + 1, 0);

  for (Eigen::Index i = 1; i <= n; ++i) {
    p[0] = i;
    Eigen::Index j0 = 0;
    std::vector<Scalar> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Eigen::Index i0 = p[static_cast<std::size_t>(j0)];
      Scalar delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const Scalar cur = cost(i0 - 1, j - 1) -
                           u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Eigen::Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  out.mapping.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index j = 1; j <= n; ++j) {
    out.mapping[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] =
        j - 1;
  }
  Scalar total(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    total += cost(i, out.mapping[static_cast<std::size_t>(i)]);
  }
  out.total_cost = total;
  return out;
}

}  // namespace detail

/// Optimal assignment with deterministic tie-breaking: among all matchings
/// whose cost is within a relative tolerance of the optimum, returns the
/// lexicographically smallest mapping vector. The refinement fixes rows one
/// at a time and re-solves the remainder, which is affordable at the sizes
/// this library deals with.
template <typename Scalar>
Assignment<Scalar> hungarian(const MatrixX<Scalar>& cost) {
  if (cost.rows() != cost.cols()) {
    throw ConfigError("assignment requires a square cost matrix");
  }
  if (!cost.allFinite()) {
    throw ConfigError("assignment cost matrix has non-finite entries");
  }
  const Eigen::Index n = cost.rows();
  Assignment<Scalar> out;
  if (n == 0) return out;

  const Scalar best = detail::solve_assignment(cost).total_cost;
  const Scalar tol = Scalar(1e-9) * (Scalar(1) + std::abs(best));

  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(n));
  std::vector<char> col_used(static_cast<std::size_t>(n), 0);
  Scalar prefix(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool placed = false;
    for (Eigen::Index j = 0; j < n && !placed; ++j) {
      if (col_used[static_cast<std::size_t>(j)]) continue;
      const Eigen::Index rest = n - i - 1;
      Scalar completion(0);
      if (rest > 0) {
        MatrixX<Scalar> sub(rest, rest);
        Eigen::Index rr = 0;
        for (Eigen::Index r = i + 1; r < n; ++r, ++rr) {
          Eigen::Index cc = 0;
          for (Eigen::Index c = 0; c < n; ++c) {
            if (col_used[static_cast<std::size_t>(c)] || c == j) continue;
            sub(rr, cc++) = cost(r, c);
          }
        }
        completion = detail::solve_assignment(sub).total_cost;
      }
      if (prefix + cost(i, j) + completion <= best + tol) {
        chosen.push_back(j);
        col_used[static_cast<std::size_t>(j)] = 1;
        prefix += cost(i, j);
        placed = true;
      }
    }
    if (!placed) {
      throw NumericalError("assignment tie-break failed to extend a prefix");
    }
  }

  out.mapping = std::move(chosen);
  Scalar total(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    total += cost(i, out.mapping[static_cast<std::size_t>(i)]);
  }
  out.total_cost = total;
  return out;
}

using Assignmentd = Assignment<double>;

}  // namespace ksme
