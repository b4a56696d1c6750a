#include "ftla/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ftla/parallel.hpp"

namespace ftla {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<VectorXd> Region::points() const {
    if (!explicit_points.empty()) return explicit_points;
    const int n = static_cast<int>(bounds.rows());
    if (n == 0) throw Error("region has neither bounds nor explicit points");
    if (static_cast<int>(grid.size()) != n)
        throw Error("region grid counts must match the number of coordinates");
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double lo = bounds(i, 0), hi = bounds(i, 1);
        if (!(std::isfinite(lo) && std::isfinite(hi)) || hi < lo)
            throw Error("region bounds must be finite with hi >= lo");
        const int c = grid[static_cast<std::size_t>(i)];
        if (c < 1) throw Error("region grid counts must be >= 1");
        auto& ax = axes[static_cast<std::size_t>(i)];
        if (c == 1) {
            ax.push_back(0.5 * (lo + hi));
        } else {
            for (int k = 0; k < c; ++k) ax.push_back(lo + (hi - lo) * k / (c - 1));
        }
    }
    std::vector<VectorXd> pts;
    VectorXd cur(n);
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
        for (int i = 0; i < n; ++i) cur[i] = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
        pts.push_back(cur);
        int i = n - 1;
        while (i >= 0) {
            if (++idx[static_cast<std::size_t>(i)] < axes[static_cast<std::size_t>(i)].size()) break;
            idx[static_cast<std::size_t>(i)] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return pts;
}

double Region::diameter() const {
    if (!explicit_points.empty()) {
        const int n = dimension();
        VectorXd lo = explicit_points.front(), hi = explicit_points.front();
        for (const auto& p : explicit_points)
            for (int i = 0; i < n; ++i) {
                lo[i] = std::min(lo[i], p[i]);
                hi[i] = std::max(hi[i], p[i]);
            }
        double d = (hi - lo).norm();
        return d > 0 ? d : 1.0;
    }
    double s = 0;
    for (Eigen::Index i = 0; i < bounds.rows(); ++i) {
        double w = bounds(i, 1) - bounds(i, 0);
        s += w * w;
    }
    double d = std::sqrt(s);
    return d > 0 ? d : 1.0;
}

int Region::dimension() const {
    if (!explicit_points.empty()) return static_cast<int>(explicit_points.front().size());
    return static_cast<int>(bounds.rows());
}

std::vector<SpectralGap> spectral_gap_scan(const SpectraSet& spectra, double T_bar) {
    std::vector<SpectralGap> out;
    if (spectra.fwd.empty() || spectra.times.empty()) return out;
    const int n = static_cast<int>(spectra.fwd.front().cols());
    const int m = static_cast<int>(spectra.times.size());
    const int npts = static_cast<int>(spectra.fwd.size());

    // Effective exponent magnitudes combining both directions: at each sample,
    // the slot-i constraint uses fwd mu_i and -bwd mu_i.
    for (int ns = 0; ns <= n - 1; ++ns) {
        for (int nu = 0; nu + ns <= n - 1; ++nu) {
            const int nc = n - ns - nu;
            if (nc < 1) continue;
            if (ns == 0 && nu == 0) continue;
            // Suffix extrema over the sampled window starting at each index:
            // A/C are block-edge suprema, B/D infima, over points and times.
            std::vector<double> A(m, -kInf), B(m, kInf), C(m, -kInf), D(m, kInf);
            for (int t = m - 1; t >= 0; --t) {
                double a = t + 1 < m ? A[static_cast<std::size_t>(t + 1)] : -kInf;
                double b = t + 1 < m ? B[static_cast<std::size_t>(t + 1)] : kInf;
                double c = t + 1 < m ? C[static_cast<std::size_t>(t + 1)] : -kInf;
                double d = t + 1 < m ? D[static_cast<std::size_t>(t + 1)] : kInf;
                for (int p = 0; p < npts; ++p) {
                    const MatrixXd& F = spectra.fwd[static_cast<std::size_t>(p)];
                    const MatrixXd& G = spectra.bwd[static_cast<std::size_t>(p)];
                    if (ns >= 1) a = std::max({a, F(t, ns - 1), -G(t, ns - 1)});
                    b = std::min({b, F(t, ns), -G(t, ns)});
                    c = std::max({c, F(t, ns + nc - 1), -G(t, ns + nc - 1)});
                    if (nu >= 1) d = std::min({d, F(t, ns + nc), -G(t, ns + nc)});
                }
                A[static_cast<std::size_t>(t)] = a;
                B[static_cast<std::size_t>(t)] = b;
                C[static_cast<std::size_t>(t)] = c;
                D[static_cast<std::size_t>(t)] = d;
            }
            // The gap widens as t_s grows while the usable window shrinks;
            // pick the sampled t_s that maximizes the resolvability
            // delta_mu * (T_bar - t_s), the number of convergence time
            // constants, breaking ties toward the smaller t_s.
            int chosen = -1;
            double alpha = 0, beta = 0, best = 0;
            for (int start = 0; start < m; ++start) {
                const double a =
                    std::max({-B[static_cast<std::size_t>(start)],
                              C[static_cast<std::size_t>(start)], 0.0});
                const double b = std::min(ns >= 1 ? -A[static_cast<std::size_t>(start)] : kInf,
                                          nu >= 1 ? D[static_cast<std::size_t>(start)] : kInf);
                if (!(b > a)) continue;
                const double t_s =
                    start == 0 ? 0.0 : spectra.times[static_cast<std::size_t>(start - 1)];
                const double product = (b - a) * (T_bar - t_s);
                if (product > best + 1e-12) {
                    best = product;
                    chosen = start;
                    alpha = a;
                    beta = b;
                }
            }
            if (chosen < 0) continue;
            SpectralGap g;
            g.ns = ns;
            g.nc = nc;
            g.nu = nu;
            g.alpha = alpha;
            g.beta = beta;
            g.delta_mu = beta - alpha;
            g.t_s = chosen == 0 ? 0.0 : spectra.times[static_cast<std::size_t>(chosen - 1)];
            g.T_bar = T_bar;
            out.push_back(g);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const SpectralGap& a, const SpectralGap& b) { return a.delta_mu > b.delta_mu; });
    return out;
}

BoundsReport exponential_bounds(const std::vector<SubspaceCurves>& curves, double t_s,
                                double t_c) {
    BoundsReport r;
    r.t_c = t_c;
    double s_fwd_sup = -kInf, s_bwd_inf = kInf, u_fwd_inf = kInf, u_bwd_sup = -kInf;
    double c_fwd_inf = kInf, c_fwd_sup = -kInf, c_bwd_inf = kInf, c_bwd_sup = -kInf;
    bool have_s = false, have_u = false, have_c = false, any = false;
    for (const auto& sc : curves) {
        for (std::size_t t = 0; t < sc.times.size(); ++t) {
            const double T = sc.times[t];
            if (!(T > t_s && T <= t_c + 1e-12)) continue;
            any = true;
            const auto row = static_cast<Eigen::Index>(t);
            if (sc.s_fwd.size() > 0) {
                have_s = true;
                s_fwd_sup = std::max(s_fwd_sup, sc.s_fwd(row, sc.s_fwd.cols() - 1));
                s_bwd_inf = std::min(s_bwd_inf, sc.s_bwd(row, sc.s_bwd.cols() - 1));
            }
            if (sc.u_fwd.size() > 0) {
                have_u = true;
                u_fwd_inf = std::min(u_fwd_inf, sc.u_fwd(row, 0));
                u_bwd_sup = std::max(u_bwd_sup, sc.u_bwd(row, 0));
            }
            if (sc.c_fwd.size() > 0) {
                have_c = true;
                c_fwd_inf = std::min(c_fwd_inf, sc.c_fwd(row, 0));
                c_fwd_sup = std::max(c_fwd_sup, sc.c_fwd(row, sc.c_fwd.cols() - 1));
                c_bwd_sup = std::max(c_bwd_sup, sc.c_bwd(row, 0));
                c_bwd_inf = std::min(c_bwd_inf, sc.c_bwd(row, sc.c_bwd.cols() - 1));
            }
        }
    }
    if (!any) throw NumericalError("no subspace-exponent samples in (t_s, t_c]");
    r.mu_s_fwd_sup = s_fwd_sup;
    r.mu_s_bwd_inf = s_bwd_inf;
    r.mu_u_fwd_inf = u_fwd_inf;
    r.mu_u_bwd_sup = u_bwd_sup;
    r.mu_c_fwd_inf = c_fwd_inf;
    r.mu_c_fwd_sup = c_fwd_sup;
    r.mu_c_bwd_inf = c_bwd_inf;
    r.mu_c_bwd_sup = c_bwd_sup;
    double nu = kInf;
    if (have_s) nu = std::min({nu, -s_fwd_sup, s_bwd_inf});
    if (have_u) nu = std::min({nu, u_fwd_inf, -u_bwd_sup});
    r.nu = nu;
    double sigma = 0;
    if (have_c)
        sigma = std::max({std::abs(c_fwd_inf), std::abs(c_fwd_sup), std::abs(c_bwd_inf),
                          std::abs(c_bwd_sup)});
    r.sigma = sigma;
    return r;
}

double select_cutoff(const std::vector<SubspaceCurves>& curves, double t_s, double T_bar,
                     double fraction, double trailing_fraction) {
    // Collect per-curve series restricted to (t_s, T_bar].
    struct Series {
        std::vector<double> t, v;
    };
    std::vector<Series> series;
    for (const auto& sc : curves) {
        auto add = [&](const MatrixXd& M) {
            if (M.size() == 0) return;
            for (Eigen::Index c = 0; c < M.cols(); ++c) {
                Series s;
                for (std::size_t k = 0; k < sc.times.size(); ++k) {
                    const double T = sc.times[k];
                    if (T > t_s && T <= T_bar + 1e-12) {
                        s.t.push_back(T);
                        s.v.push_back(M(static_cast<Eigen::Index>(k), c));
                    }
                }
                if (!s.t.empty()) series.push_back(std::move(s));
            }
        };
        add(sc.s_fwd);
        add(sc.s_bwd);
        add(sc.c_fwd);
        add(sc.c_bwd);
        add(sc.u_fwd);
        add(sc.u_bwd);
    }
    if (series.empty()) return T_bar;

    // Trailing-window medians and the global exponent scale.
    const double w0 = T_bar - trailing_fraction * (T_bar - t_s);
    std::vector<double> med(series.size());
    double scale = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::vector<double> win;
        for (std::size_t k = 0; k < series[i].t.size(); ++k)
            if (series[i].t[k] >= w0) win.push_back(series[i].v[k]);
        if (win.empty()) win = series[i].v;
        std::sort(win.begin(), win.end());
        med[i] = win.size() % 2 ? win[win.size() / 2]
                                : 0.5 * (win[win.size() / 2 - 1] + win[win.size() / 2]);
        scale = std::max(scale, std::abs(med[i]));
    }
    const double floor_ = 0.05 * scale;

    // A final transient sample both sits in the suffix of accelerating steps
    // (each step much larger than the curve's median step) and deviates from
    // the trailing-window median by more than the configured fraction. Smooth
    // drift across the whole window triggers neither condition.
    double t_c = T_bar;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const std::size_t nk = s.t.size();
        if (nk < 3) continue;
        std::vector<double> steps(nk - 1);
        for (std::size_t k = 0; k + 1 < nk; ++k) steps[k] = std::abs(s.v[k + 1] - s.v[k]);
        std::vector<double> sorted = steps;
        std::sort(sorted.begin(), sorted.end());
        const double med_step = sorted[sorted.size() / 2];
        const double spike = std::max(8.0 * med_step, 1e-12);

        std::size_t k0 = nk - 1;
        while (k0 > 0 && steps[k0 - 1] > spike) --k0;
        if (k0 == nk - 1) continue;  // no accelerating suffix
        const double thr = fraction * std::max(std::abs(med[i]), floor_);
        for (std::size_t k = std::max<std::size_t>(k0, 1); k < nk; ++k) {
            if (std::abs(s.v[k] - med[i]) > thr) {
                t_c = std::min(t_c, s.t[k - 1]);
                break;
            }
        }
    }
    return t_c;
}

TwoTimescaleDiagnosis check_two_timescale(const VectorField& vf, const Region& region,
                                          double T_bar, const DiagnoseOptions& options) {
    TwoTimescaleDiagnosis diag;
    const int n = vf.dimension();
    if (region.dimension() != n)
        throw Error("region dimension does not match the vector field");
    std::vector<VectorXd> pts = region.points();
    const auto npts = pts.size();

    // Stride for the spectra T-grid (subspace curves stay at full resolution).
    const int segments = static_cast<int>(std::lround(T_bar / options.dt));
    const int stride = std::max(1, segments / std::max(1, options.t_samples));

    std::vector<TransitionChain> fchains(npts), bchains(npts);
    SpectraSet spectra;
    spectra.fwd.resize(npts);
    spectra.bwd.resize(npts);
    std::vector<LyapunovData> fdata(npts), bdata(npts);

    parallel_for(npts, options.workers, [&](std::size_t i) {
        fchains[i] = transition_chain(vf, pts[i], T_bar, options.dt, Direction::Forward,
                                      options.tols);
        bchains[i] = transition_chain(vf, pts[i], T_bar, options.dt, Direction::Backward,
                                      options.tols);
        if (fchains[i].dt != bchains[i].dt) {
            const double common = std::min(fchains[i].dt, bchains[i].dt);
            fchains[i] = transition_chain(vf, pts[i], T_bar, common, Direction::Forward,
                                          options.tols);
            bchains[i] = transition_chain(vf, pts[i], T_bar, common, Direction::Backward,
                                          options.tols);
        }
        // Keep the sample times aligned across points even if dt was halved.
        const int factor = static_cast<int>(std::lround(options.dt / fchains[i].dt));
        auto fs = ftle_curves(fchains[i], stride * factor);
        auto bs = ftle_curves(bchains[i], stride * factor);
        MatrixXd F(fs.size(), n), B(bs.size(), n);
        for (std::size_t k = 0; k < fs.size(); ++k) F.row(static_cast<Eigen::Index>(k)) = fs[k].exponents.transpose();
        for (std::size_t k = 0; k < bs.size(); ++k) B.row(static_cast<Eigen::Index>(k)) = bs[k].exponents.transpose();
        spectra.fwd[i] = F;
        spectra.bwd[i] = B;
        if (i == 0) {
            spectra.times.clear();
            for (const auto& s : fs) spectra.times.push_back(s.T);
        }
        fdata[i] = compute_ftle_from_chain(fchains[i], FtleMethod::Svd);
        bdata[i] = compute_ftle_from_chain(bchains[i], FtleMethod::Svd);
    });

    // Bounding box of every visited state.
    diag.x_ext.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        diag.x_ext(i, 0) = kInf;
        diag.x_ext(i, 1) = -kInf;
    }
    for (std::size_t p = 0; p < npts; ++p)
        for (const auto* chain : {&fchains[p], &bchains[p]})
            for (const auto& s : chain->trajectory.states)
                for (int i = 0; i < n; ++i) {
                    diag.x_ext(i, 0) = std::min(diag.x_ext(i, 0), s[i]);
                    diag.x_ext(i, 1) = std::max(diag.x_ext(i, 1), s[i]);
                }

    // Property 1: uniform spectral gaps.
    diag.candidates = spectral_gap_scan(spectra, T_bar);
    std::vector<SpectralGap> viable;
    for (const auto& c : diag.candidates) {
        if (c.delta_mu < options.min_delta_mu) continue;
        if (options.force_ns >= 0 && c.ns != options.force_ns) continue;
        if (options.force_nc >= 0 && c.nc != options.force_nc) continue;
        if (options.force_nu >= 0 && c.nu != options.force_nu) continue;
        viable.push_back(c);
    }
    if (viable.empty()) {
        diag.failure_reasons.push_back("no uniform spectral gap");
        diag.verdict = false;
        return diag;
    }
    const SpectralGap best = viable.front();
    diag.gap = best;

    // Property 2: transverse splitting at every point.
    std::vector<Splitting> splits(npts);
    std::vector<std::string> split_errors(npts);
    parallel_for(npts, options.workers, [&](std::size_t i) {
        try {
            splits[i] = build_splitting(fdata[i], bdata[i], best.ns, best.nc, best.nu,
                                        options.cond_limit);
        } catch (const Error& e) {
            split_errors[i] = e.what();
        }
    });
    diag.cond_min = kInf;
    diag.cond_max = 0;
    diag.cond_mean = 0;
    int ok = 0;
    for (std::size_t i = 0; i < npts; ++i) {
        if (!split_errors[i].empty()) {
            diag.failure_reasons.push_back("splitting failed at point " + std::to_string(i) +
                                           ": " + split_errors[i]);
            continue;
        }
        diag.cond_min = std::min(diag.cond_min, splits[i].stacked_cond);
        diag.cond_max = std::max(diag.cond_max, splits[i].stacked_cond);
        diag.cond_mean += splits[i].stacked_cond;
        ++ok;
    }
    if (ok > 0) diag.cond_mean /= ok;
    if (ok < static_cast<int>(npts)) {
        diag.verdict = false;
        return diag;
    }

    // Property 3: exponential bounds on the subspace exponents.
    std::vector<SubspaceCurves> curves(npts);
    parallel_for(npts, options.workers, [&](std::size_t i) {
        curves[i] = subspace_ftles_from_chains(fchains[i], bchains[i], splits[i], 1);
    });
    diag.t_c = select_cutoff(curves, best.t_s, T_bar, options.cutoff_fraction,
                             options.trailing_fraction);
    if (!(diag.t_c > best.t_s)) {
        diag.failure_reasons.push_back("cut-off time at or below the start time");
        diag.verdict = false;
        return diag;
    }
    BoundsReport bounds = exponential_bounds(curves, best.t_s, diag.t_c);
    diag.bounds = bounds;
    if (!(bounds.nu > bounds.sigma))
        diag.failure_reasons.push_back("exponential bounds: nu <= sigma");

    diag.resolvability = best.delta_mu * (T_bar - best.t_s);
    if (diag.resolvability < options.min_resolvability)
        diag.failure_reasons.push_back("resolvability below minimum");

    diag.verdict = diag.failure_reasons.empty();
    return diag;
}

namespace {

double angle_to_subspace(const VectorXd& v, const MatrixXd& Q) {
    // Q has orthonormal columns; angle between v and its projection into span(Q).
    const double vn = v.norm();
    if (vn == 0) return 0;
    const double off = (v - Q * (Q.transpose() * v)).norm() / vn;
    return std::asin(std::min(1.0, off));
}

MatrixXd orthonormal_complement(const MatrixXd& Q, int n) {
    Eigen::JacobiSVD<MatrixXd> svd(Q, Eigen::ComputeFullU);
    return svd.matrixU().rightCols(n - Q.cols());
}

MatrixXd orthonormal_span(const MatrixXd& B) {
    Eigen::HouseholderQR<MatrixXd> qr(B);
    return qr.householderQ() * MatrixXd::Identity(B.rows(), B.cols());
}

}  // namespace

ConeReport cone_invariance_check(const VectorField& vf, const VectorXd& x,
                                 const Splitting& splitting, double psi,
                                 const std::vector<double>& times, int random_samples,
                                 std::uint64_t seed, double dt, const OdeTols& tols) {
    if (!(psi > 0 && psi < M_PI_2)) throw Error("cone angle must lie in (0, pi/2)");
    const int n = static_cast<int>(x.size());
    ConeReport report;

    double tmax = 0;
    for (double t : times) {
        if (!(t > 0)) throw Error("cone check times must be positive");
        tmax = std::max(tmax, t);
    }
    if (times.empty()) return report;

    TransitionChain fwd = transition_chain(vf, x, tmax, dt, Direction::Forward, tols);
    TransitionChain bwd = transition_chain(vf, x, tmax, dt, Direction::Backward, tols);

    struct Cone {
        std::string name;
        MatrixXd center;       // orthonormal
        Direction propagate;
    };
    std::vector<Cone> cones;
    if (splitting.ns > 0) cones.push_back({"C_s", orthonormal_span(splitting.Es), Direction::Backward});
    if (splitting.nu > 0) cones.push_back({"C_u", orthonormal_span(splitting.Eu), Direction::Forward});
    // Center-stable/center-unstable cones are trivial when they fill the space.
    if (splitting.ns > 0 && splitting.ns + splitting.nc < n) {
        MatrixXd cs(n, splitting.ns + splitting.nc);
        cs << splitting.Es, splitting.Ec;
        cones.push_back({"C_cs", orthonormal_span(cs), Direction::Backward});
    }
    if (splitting.nu > 0 && splitting.nc + splitting.nu < n) {
        MatrixXd cu(n, splitting.nc + splitting.nu);
        cu << splitting.Ec, splitting.Eu;
        cones.push_back({"C_cu", orthonormal_span(cu), Direction::Forward});
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (const auto& cone : cones) {
        const int k = static_cast<int>(cone.center.cols());
        MatrixXd comp = orthonormal_complement(cone.center, n);
        // Boundary directions: pairs of center x complement great circles,
        // then seeded random boundary vectors.
        std::vector<VectorXd> samples;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n - k; ++j) {
                samples.push_back(std::cos(psi) * cone.center.col(i) +
                                  std::sin(psi) * comp.col(j));
                samples.push_back(std::cos(psi) * cone.center.col(i) -
                                  std::sin(psi) * comp.col(j));
            }
        for (int r = 0; r < random_samples; ++r) {
            VectorXd gu(k), gw(n - k);
            for (int i = 0; i < k; ++i) gu[i] = gauss(rng);
            for (int i = 0; i < n - k; ++i) gw[i] = gauss(rng);
            VectorXd u = cone.center * gu;
            VectorXd w = comp * gw;
            if (u.norm() < 1e-12 || w.norm() < 1e-12) continue;
            samples.push_back(std::cos(psi) * u.normalized() + std::sin(psi) * w.normalized());
        }

        const TransitionChain& chain = cone.propagate == Direction::Forward ? fwd : bwd;
        for (double t : times) {
            int segs = static_cast<int>(std::lround(t / chain.dt));
            segs = std::max(1, std::min(segs, chain.count()));
            const double t_actual = segs * chain.dt;
            MatrixXd P = chain.product(segs);
            const VectorXd& y = chain.trajectory.states[static_cast<std::size_t>(segs)];

            MatrixXd center_y;
            try {
                Splitting sy = splitting_at(vf, y, splitting.T_bar, dt, splitting.ns,
                                            splitting.nc, splitting.nu, tols);
                if (cone.name == "C_s") center_y = orthonormal_span(sy.Es);
                else if (cone.name == "C_u") center_y = orthonormal_span(sy.Eu);
                else if (cone.name == "C_cs") {
                    MatrixXd cs(n, sy.ns + sy.nc);
                    cs << sy.Es, sy.Ec;
                    center_y = orthonormal_span(cs);
                } else {
                    MatrixXd cu(n, sy.nc + sy.nu);
                    cu << sy.Ec, sy.Eu;
                    center_y = orthonormal_span(cu);
                }
            } catch (const Error& e) {
                report.errors.push_back(cone.name + " at t=" + std::to_string(t_actual) +
                                        ": " + e.what());
                continue;
            }

            for (std::size_t s = 0; s < samples.size(); ++s) {
                VectorXd img = P * samples[s];
                ++report.checked;
                const double ang = angle_to_subspace(img, center_y);
                if (ang > psi + 1e-9)
                    report.violations.push_back(
                        {cone.name, t_actual, static_cast<int>(s), ang});
            }
        }
    }
    return report;
}

ConvergenceRate convergence_rate(const VectorField& vf, const VectorXd& x, int j,
                                 Direction direction, const std::vector<double>& T_grid,
                                 double dt, const OdeTols& tols) {
    if (T_grid.size() < 3) throw Error("convergence_rate needs at least 3 grid times");
    const int n = vf.dimension();
    if (j < 1 || j > n) throw Error("subspace index out of range");
    std::vector<double> Ts = T_grid;
    std::sort(Ts.begin(), Ts.end());
    const double tmax = Ts.back();

    TransitionChain chain = transition_chain(vf, x, tmax, dt, direction, tols);
    auto samples = ftle_curves(chain, 1);
    auto at_time = [&](double T) -> const FtleSample& {
        std::size_t best = 0;
        double err = kInf;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            double e = std::abs(samples[i].T - T);
            if (e < err) {
                err = e;
                best = i;
            }
        }
        return samples[best];
    };

    ConvergenceRate out;
    // Empirical spectral-gap lower bound for this index over the grid span.
    out.empirical_gap = kInf;
    for (const auto& s : samples) {
        if (s.T < Ts.front() || s.T > tmax) continue;
        if (direction == Direction::Forward) {
            if (j <= n - 1) out.empirical_gap = std::min(out.empirical_gap,
                                                         s.exponents[j] - s.exponents[j - 1]);
        } else {
            if (j >= 2) out.empirical_gap = std::min(out.empirical_gap,
                                                     s.exponents[j - 2] - s.exponents[j - 1]);
        }
    }

    for (std::size_t i = 0; i + 1 < Ts.size(); ++i) {
        const FtleSample& s1 = at_time(Ts[i]);
        const FtleSample& s2 = at_time(Ts[i + 1]);
        auto sub = [&](const FtleSample& s) {
            Subspace ss;
            ss.x = x;
            ss.basis = direction == Direction::Forward ? MatrixXd(s.L.leftCols(j))
                                                       : MatrixXd(s.L.rightCols(n - j + 1));
            return ss;
        };
        out.times.push_back(s1.T);
        out.distances.push_back(subspace_distance(sub(s1), sub(s2)));
    }

    // Least-squares fit of log distance vs T, skipping converged pairs.
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < out.distances.size(); ++i) {
        if (out.distances[i] < 1e-12) continue;
        xs.push_back(out.times[i]);
        ys.push_back(std::log(out.distances[i]));
    }
    if (xs.size() < 2) {
        out.identifiable = false;
        out.fitted_rate = 0;
        return out;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double m = static_cast<double>(xs.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    out.fitted_rate = -slope;
    return out;
}

}  // namespace ftla
