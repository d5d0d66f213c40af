#pragma once

#include "dgpal/dgp.hpp"

namespace dgpal {

/// Integration box for the latent-space IMSE, one interval per node.
struct Bounds {
  Vector a;
  Vector b;

  void validate() const {
    if (a.size() != b.size()) throw DimensionMismatch("Bounds: a/b mismatch");
    for (Index i = 0; i < a.size(); ++i) {
      if (!(a(i) < b(i))) throw DomainError("Bounds: need a_i < b_i");
    }
  }

  double volume() const { return (b - a).prod(); }
};

/// Column-wise min/max over the stacked rows of two designs.
Bounds union_bounds(const Matrix& w_train, const Matrix& w_cand);

enum class Criterion { Imse, Alc };

/// Per-iteration quantities shared by every candidate: the inverse of the
/// un-scaled training covariance C_n, the candidate-independent block of the
/// IMSE H matrix (with its trace term), and the reference cross-correlations
/// for ALC.
struct AcqPrecompute {
  Matrix cn_inv;
  double theta_y = 0.0;
  double g = 0.0;
  double tau2hat = 0.0;
  Bounds bounds;
  Matrix h_base;             // IMSE path
  double base_trace = 0.0;   // tr(cn_inv * h_base)
  Matrix k_ref;              // ALC path: n_ref x n
};

AcqPrecompute acq_precompute(const Matrix& w_train, double theta_y, double g,
                             double tau2hat, const Bounds& bounds,
                             Criterion criterion, const Matrix& w_ref);

/// One entry of the H matrix: the product over nodes of Gaussian-kernel
/// overlap integrals against a uniform measure on [a, b].
double h_entry(const Vector& w_j, const Vector& w_k, double theta_y,
               const Bounds& bounds);

/// Closed-form IMSE of the design augmented with the last row of w_n1,
/// integrated over the bounds box.
double imse(const Matrix& w_n1, double theta_y, double g, double tau2hat,
            const Bounds& bounds);

/// Fast path: IMSE of w_train plus candidate row, via the bordered inverse
/// and the last row/column of H only.
double imse_fast(const Vector& w_new, const AcqPrecompute& pre,
                 const Matrix& w_train);

/// IMSE of the current design alone (no candidate), over the same bounds.
double imse_base(const AcqPrecompute& pre);

/// ALC of a candidate: total predictive-variance reduction over the mapped
/// reference set, dropping the candidate-independent constant.
double alc(const Vector& w_new, const Matrix& w_ref, const AcqPrecompute& pre,
           const Matrix& w_train);

struct AcqResult {
  Vector values;      // criterion averaged over retained iterations
  Index chosen = 0;   // argmin for IMSE, argmax for ALC; lowest-index ties
  Criterion criterion = Criterion::Alc;
};

/// Map candidates through the latent layers (conditional means), evaluate
/// the criterion per retained iteration, and average.  Candidates whose
/// update is numerically degenerate get the worst possible value instead of
/// aborting the sweep.  The ALC reference set is the candidate set itself.
AcqResult evaluate_candidates(const FittedModel& model, const Matrix& xcand,
                              Criterion criterion, std::uint64_t seed = 0,
                              int threads = 0);

}  // namespace dgpal
