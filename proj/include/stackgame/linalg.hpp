#pragma once

#include <span>
#include <vector>

namespace stackgame::linalg {

// Regularized design matrix Lambda = lambda*I + sum_t phi_t phi_t^T together
// with a cached inverse maintained by Sherman-Morrison rank-one updates.
//
// The cached inverse is re-symmetrized after every update and recomputed from
// the Gram matrix by Cholesky factorization every kRefreshInterval updates,
// which keeps Lambda*Lambda^-1 within 1e-8 of identity over long runs.
//
// Value type: copyable, no hidden sharing, single-writer mutation.
class GramState {
 public:
  static constexpr long kRefreshInterval = 4096;

  // Starts at Lambda = lambda*I. Rejects dim < 1 and lambda <= 0.
  GramState(int dim, double lambda);

  int dim() const noexcept { return dim_; }
  double lambda() const noexcept { return lambda_; }
  long count() const noexcept { return count_; }

  // Absorbs one feature vector: Lambda += phi phi^T.
  void rank_one_update(std::span<const double> phi);

  // phi^T Lambda^-1 phi, clamped to 0 if a tiny negative slips through.
  double quad_form(std::span<const double> phi) const;

  // Lambda^-1 v using the cached inverse.
  std::vector<double> apply_inverse(std::span<const double> v) const;

  double gram(int i, int j) const { return gram_[i * dim_ + j]; }
  double gram_inv(int i, int j) const { return inv_[i * dim_ + j]; }
  const std::vector<double>& gram_data() const noexcept { return gram_; }
  const std::vector<double>& gram_inv_data() const noexcept { return inv_; }

 private:
  void check_dim(std::size_t n) const;
  void refresh_inverse();

  int dim_;
  double lambda_;
  long count_;
  std::vector<double> gram_;
  std::vector<double> inv_;
};

}  // namespace stackgame::linalg
