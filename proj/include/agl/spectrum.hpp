#pragma once

#include <Eigen/Sparse>

#include <optional>
#include <string>
#include <vector>

#include "agl/certificates.hpp"
#include "agl/forms.hpp"

namespace agl {

/**
 * @brief Stiffness/mass pencil of one Fourier mode.
 *
 * Unknowns are the interleaved tracks (phi_i, psi_i), or (u_i, v_i) for n = 0,
 * with Dirichlet nodes removed. For n = 1 the inner psi value is kept free,
 * which the translation mode needs. Mass is the lumped diagonal w.
 */
template <typename Scalar>
struct ModeOperator {
    int n = 0;
    Scalar delta{};
    Eigen::SparseMatrix<Scalar> stiffness;
    Eigen::SparseMatrix<Scalar> mass;
    Eigen::SparseMatrix<Scalar> energy;  // Gram of the H norm, for alignment
    std::vector<Eigen::Index> dofs;      // reduced index -> interleaved index
    Vec<Scalar> kernel;                  // n = 1: cut-off translation mode; empty otherwise
    Eigen::Index grid_size = 0;
    Eigen::Index size() const { return Eigen::Index(dofs.size()); }
};

template <typename Scalar>
ModeOperator<Scalar> assemble_mode_operator(const Profile<Scalar>& p, Scalar delta, int n);

// Reduced vector -> full track pair (zeros at eliminated nodes).
template <typename Scalar>
ModePair<Scalar> expand(const ModeOperator<Scalar>& op, const Vec<Scalar>& x);

// Full track pair -> reduced vector (eliminated entries dropped).
template <typename Scalar>
Vec<Scalar> restrict_pair(const ModeOperator<Scalar>& op, const ModePair<Scalar>& pair);

template <typename Scalar>
struct ModeSpectrum {
    int n = 0;
    Scalar delta{};
    Vec<Scalar> eigenvalues;                             // ascending
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;  // M-orthonormal columns
    Vec<Scalar> residuals;
    Scalar kernel_alignment{};  // n = 1 only
    bool deflated = false;
    int iterations = 0;
};

struct EigenOptions {
    int max_iter = 400;
    int extra_vectors = 6;
    unsigned seed = 12345;
};

/**
 * k smallest eigenpairs of (stiffness, mass) by shift-and-invert block subspace
 * iteration. The shift is placed just below the lowest eigenvalue of the
 * deflated problem using LDLT inertia. Columns of deflate are removed in the
 * mass inner product before every Rayleigh-Ritz step.
 */
template <typename Scalar>
ModeSpectrum<Scalar> min_eigenpairs(const ModeOperator<Scalar>& op, int k, Scalar tol,
                                    const std::vector<Vec<Scalar>>& deflate = {}, EigenOptions opts = {});

// Number of pencil eigenvalues below sigma.
template <typename Scalar>
Eigen::Index count_below(const ModeOperator<Scalar>& op, Scalar sigma);

template <typename Scalar>
struct SufficientCondition {
    bool holds = false;
    Scalar alpha{}, beta{}, gamma{};  // 1 - 5d^2, 2(1 - d^2), -3(1 - d^2)
    Scalar n2_value{};                // 5 - 21 d^2
};

template <typename Scalar>
SufficientCondition<Scalar> sufficient_condition(Scalar delta);

enum class Verdict { stable, unstable, inconclusive };
enum class TailCondition { certified_positive, not_certified };

const char* verdict_name(Verdict v);
const char* tail_name(TailCondition t);

enum class Evidence { eigen_positive, eigen_negative, certificate_negative, solver_failure };

const char* evidence_name(Evidence e);

template <typename Scalar>
struct ModeResult {
    int n = 0;
    Scalar lambda_min{};
    Evidence evidence = Evidence::eigen_positive;
    std::string note;
};

template <typename Scalar>
struct StabilityReport {
    Scalar delta{};
    std::vector<ModeResult<Scalar>> modes;  // ascending n
    Verdict overall = Verdict::inconclusive;
    int n_max_scanned = 0;
    TailCondition tail = TailCondition::not_certified;
    std::optional<PositiveDeltaWitness<Scalar>> positive_witness;
    std::optional<HighModeWitness<Scalar>> high_mode_witness;
};

struct VerdictOptions {
    int n_max = 64;
    int k = 1;
    double tol = 1e-8;
    std::vector<int> dilations{8, 16, 32, 64};
    int threads = 0;  // 0: hardware concurrency, capped by AGL_THREADS
};

template <typename Scalar>
StabilityReport<Scalar> stability_verdict(const Profile<Scalar>& p, Scalar delta, const VerdictOptions& opts = {});

template <typename Scalar>
struct Delta1Estimate {
    Scalar lo{}, hi{};
    bool lo_witnessed = false;
    bool inconclusive = false;
    std::vector<Scalar> inconclusive_at;
    std::vector<StabilityReport<Scalar>> probes;  // in probe order
};

template <typename Scalar>
Delta1Estimate<Scalar> estimate_delta1(const Profile<Scalar>& p, Scalar width, const VerdictOptions& opts = {});

// Worker count: requested (or hardware) capped by the AGL_THREADS environment variable.
int worker_count(int requested);

}  // namespace agl
