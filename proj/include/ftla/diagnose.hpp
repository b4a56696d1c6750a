// Deciding whether a region is a uniform finite-time two-timescale set:
// uniform spectral gaps over the sampled (T, x) set, transversality of the
// splitting, exponential bounds nu > sigma on the subspace exponents, cone
// inclusion checks, and empirical subspace convergence rates.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ftla/lyap.hpp"

namespace ftla {

struct Region {
    // Axis-aligned bounds per coordinate (n x 2) with per-axis grid counts,
    // or an explicit point list (which takes precedence).
    MatrixXd bounds;
    std::vector<int> grid;
    std::vector<VectorXd> explicit_points;

    std::vector<VectorXd> points() const;  // tensor grid; a count of 1 picks the midpoint
    double diameter() const;
    int dimension() const;
};

// Full-space FTLE curves for every region point on a common T grid.
struct SpectraSet {
    std::vector<double> times;
    std::vector<MatrixXd> fwd;  // per point: times x n, ascending per row
    std::vector<MatrixXd> bwd;  // per point: times x n, descending per row
};

struct SpectralGap {
    int ns = 0, nc = 0, nu = 0;
    double alpha = 0, beta = 0, delta_mu = 0;
    double t_s = 0, T_bar = 0;
};

// The eight extremal subspace exponents (sup/inf over the sampled window).
struct BoundsReport {
    double nu = 0, sigma = 0;
    double t_c = 0;
    double mu_s_fwd_sup = 0, mu_s_bwd_inf = 0;  // stable: decay fwd, growth bwd
    double mu_u_fwd_inf = 0, mu_u_bwd_sup = 0;  // unstable: growth fwd, decay bwd
    double mu_c_fwd_inf = 0, mu_c_fwd_sup = 0;  // center window, forward
    double mu_c_bwd_inf = 0, mu_c_bwd_sup = 0;  // center window, backward
};

struct DiagnoseOptions {
    double dt = 0.1;
    int t_samples = 20;             // target samples on (0, T_bar]
    double min_delta_mu = 0.5;      // below this a gap candidate is not a timescale split
    double min_resolvability = 3.0; // required Delta-mu * (T_bar - t_s)
    double cond_limit = 1e8;        // Property 2 transversality threshold
    double cutoff_fraction = 0.1;   // select_cutoff deviation fraction
    double trailing_fraction = 0.5; // fraction of the window used for the median
    int workers = 0;                // 0 = hardware concurrency
    int force_ns = -1, force_nc = -1, force_nu = -1;  // -1 = choose by largest gap
    OdeTols tols{};
};

struct TwoTimescaleDiagnosis {
    bool verdict = false;
    std::optional<SpectralGap> gap;
    std::vector<SpectralGap> candidates;      // all admissible gaps, best first
    std::optional<BoundsReport> bounds;
    double t_c = 0;
    double resolvability = 0;
    double cond_min = 0, cond_max = 0, cond_mean = 0;
    MatrixXd x_ext;                           // n x 2 bounding box of visited states
    std::vector<std::string> failure_reasons;
};

// For each admissible (ns, nc, nu): the smallest sampled t_s for which the
// gap inequalities hold on all samples with T > t_s, with alpha/beta tight
// over that window; one (alpha, beta) pair bounds both spectra symmetrically
// about zero. Candidates are sorted by delta_mu descending.
std::vector<SpectralGap> spectral_gap_scan(const SpectraSet& spectra, double T_bar);

// nu = min of the four fast extremals, sigma = max of the four center
// extremal magnitudes, over samples with t_s < T <= t_c.
BoundsReport exponential_bounds(const std::vector<SubspaceCurves>& curves, double t_s,
                                double t_c);

// Largest sample time such that every curve stays within `fraction` of its
// trailing-window median on (t_s, t]; T_bar if no final transient exists.
double select_cutoff(const std::vector<SubspaceCurves>& curves, double t_s, double T_bar,
                     double fraction = 0.1, double trailing_fraction = 0.5);

TwoTimescaleDiagnosis check_two_timescale(const VectorField& vf, const Region& region,
                                          double T_bar, const DiagnoseOptions& options);

// Cone invariance: unit vectors sampled on the cone boundary (angle exactly
// psi from the cone's center subspace) are propagated per the four inclusion
// directions (C^s backward, C^u forward, C^cs backward, C^cu forward) and
// compared against the cone at the propagated point.
struct ConeViolation {
    std::string cone;
    double t = 0;
    int sample = 0;
    double angle = 0;
};
struct ConeReport {
    int checked = 0;
    std::vector<ConeViolation> violations;
    std::vector<std::string> errors;  // e.g. splitting unavailable at a propagated point
};
ConeReport cone_invariance_check(const VectorField& vf, const VectorXd& x,
                                 const Splitting& splitting, double psi,
                                 const std::vector<double>& times, int random_samples = 32,
                                 std::uint64_t seed = 7, double dt = 0.1,
                                 const OdeTols& tols = {});

// Empirical check of the exponential subspace-convergence rate: fits
// log dist(L_j(T), L_j(T + dT)) against T by least squares and reports the
// sampled spectral-gap lower bound for index j.
struct ConvergenceRate {
    std::vector<double> times;      // T values (left end of each pair)
    std::vector<double> distances;
    double fitted_rate = 0;         // decay rate (positive = converging)
    double empirical_gap = 0;       // inf over sampled T of the neighboring gap
    bool identifiable = true;       // false when distances hit the noise floor
};
ConvergenceRate convergence_rate(const VectorField& vf, const VectorXd& x, int j,
                                 Direction direction, const std::vector<double>& T_grid,
                                 double dt, const OdeTols& tols = {});

}  // namespace ftla
