#include "stackgame/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stackgame::linalg {

GramState::GramState(int dim, double lambda)
    : dim_(dim), lambda_(lambda), count_(0) {
  if (dim < 1) {
    throw std::invalid_argument("GramState: dim must be >= 1, got " +
                                std::to_string(dim));
  }
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("GramState: lambda must be > 0");
  }
  gram_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  inv_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    gram_[static_cast<std::size_t>(i) * dim + i] = lambda;
    inv_[static_cast<std::size_t>(i) * dim + i] = 1.0 / lambda;
  }
}

void GramState::check_dim(std::size_t n) const {
  if (n != static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("GramState: vector has dimension " +
                                std::to_string(n) + ", expected " +
                                std::to_string(dim_));
  }
}

void GramState::rank_one_update(std::span<const double> phi) {
  check_dim(phi.size());
  const int d = dim_;

  // u = Lambda^-1 phi, s = 1 + phi^T u
  std::vector<double> u(d, 0.0);
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    const double* row = inv_.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) acc += row[j] * phi[j];
    u[i] = acc;
  }
  double s = 1.0;
  for (int i = 0; i < d; ++i) s += phi[i] * u[i];

  for (int i = 0; i < d; ++i) {
    const double ui = u[i] / s;
    double* row = inv_.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) row[j] -= ui * u[j];
  }
  // Re-symmetrize the cached inverse to damp floating-point drift.
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double m =
          0.5 * (inv_[static_cast<std::size_t>(i) * d + j] +
                 inv_[static_cast<std::size_t>(j) * d + i]);
      inv_[static_cast<std::size_t>(i) * d + j] = m;
      inv_[static_cast<std::size_t>(j) * d + i] = m;
    }
  }

  for (int i = 0; i < d; ++i) {
    double* row = gram_.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) row[j] += phi[i] * phi[j];
  }

  ++count_;
  if (count_ % kRefreshInterval == 0) refresh_inverse();
}

double GramState::quad_form(std::span<const double> phi) const {
  check_dim(phi.size());
  const int d = dim_;
  double q = 0.0;
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    const double* row = inv_.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) acc += row[j] * phi[j];
    q += phi[i] * acc;
  }
  return q < 0.0 ? 0.0 : q;
}

std::vector<double> GramState::apply_inverse(std::span<const double> v) const {
  check_dim(v.size());
  const int d = dim_;
  std::vector<double> out(d, 0.0);
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    const double* row = inv_.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

// Recompute the inverse from the Gram matrix: Cholesky factorize (the Gram is
// symmetric positive definite with eigenvalues >= lambda) and solve for each
// basis column.
void GramState::refresh_inverse() {
  const int d = dim_;
  std::vector<double> chol(gram_);
  for (int j = 0; j < d; ++j) {
    double diag = chol[static_cast<std::size_t>(j) * d + j];
    for (int k = 0; k < j; ++k) {
      const double ljk = chol[static_cast<std::size_t>(j) * d + k];
      diag -= ljk * ljk;
    }
    if (diag <= 0.0) {
      throw std::runtime_error(
          "GramState: Gram matrix lost positive definiteness");
    }
    const double root = std::sqrt(diag);
    chol[static_cast<std::size_t>(j) * d + j] = root;
    for (int i = j + 1; i < d; ++i) {
      double acc = chol[static_cast<std::size_t>(i) * d + j];
      for (int k = 0; k < j; ++k) {
        acc -= chol[static_cast<std::size_t>(i) * d + k] *
               chol[static_cast<std::size_t>(j) * d + k];
      }
      chol[static_cast<std::size_t>(i) * d + j] = acc / root;
    }
  }

  std::vector<double> col(d);
  for (int c = 0; c < d; ++c) {
    // L y = e_c
    for (int i = 0; i < d; ++i) {
      double acc = (i == c) ? 1.0 : 0.0;
      for (int k = 0; k < i; ++k) {
        acc -= chol[static_cast<std::size_t>(i) * d + k] * col[k];
      }
      col[i] = acc / chol[static_cast<std::size_t>(i) * d + i];
    }
    // L^T x = y
    for (int i = d - 1; i >= 0; --i) {
      double acc = col[i];
      for (int k = i + 1; k < d; ++k) {
        acc -= chol[static_cast<std::size_t>(k) * d + i] * col[k];
      }
      col[i] = acc / chol[static_cast<std::size_t>(i) * d + i];
    }
    for (int i = 0; i < d; ++i) inv_[static_cast<std::size_t>(i) * d + c] = col[i];
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double m =
          0.5 * (inv_[static_cast<std::size_t>(i) * d + j] +
                 inv_[static_cast<std::size_t>(j) * d + i]);
      inv_[static_cast<std::size_t>(i) * d + j] = m;
      inv_[static_cast<std::size_t>(j) * d + i] = m;
    }
  }
}

}  // namespace stackgame::linalg
