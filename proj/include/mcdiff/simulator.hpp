#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mcdiff/closures.hpp"
#include "mcdiff/darken.hpp"
#include "mcdiff/errors.hpp"
#include "mcdiff/groupinv.hpp"
#include "mcdiff/mixture.hpp"
#include "mcdiff/transforms.hpp"

namespace mcdiff {

/// Fick-Onsager closure with constant off-diagonal S; a = -S y at every state.
struct FickOnsagerModel {
    Mat S;
};
struct MaxwellStefanModel {
    Mat f;
};
struct CoreDiagonalModel {
    Vec d;
};
struct DarkenModel {
    SelfDiffusionModel table;
};
/// Projected (d, K) image of a Maxwell-Stefan closure, recomputed at each state.
struct NovelImageModel {
    Mat f;
};

using SimClosure = std::variant<FickOnsagerModel, MaxwellStefanModel, CoreDiagonalModel, DarkenModel, NovelImageModel>;

struct SimConfig {
    std::vector<std::string> species;
    Vec M;
    double T = 298.15;
    double rho = 1.0;
    std::size_t n_cells = 0;
    double length = 1.0;
    std::optional<double> dt;
    double t_end = 0.0;
    std::size_t output_every = 0; ///< steps between monitor rows; 0 records only start and end
    SimClosure closure;
    std::vector<Vec> initial_profile;
};

struct MonitorRow {
    double t = 0.0;
    double min_fraction = 0.0;
    Vec mass;
    double zeta_total = 0.0;
    double zeta_scale = 0.0; ///< sum of |F_i| |grad_i| dz, the reference for the sign check
};

struct SimState {
    double t = 0.0;
    std::vector<Vec> y; ///< one mass-fraction vector per cell
};

struct Snapshot {
    double t = 0.0;
    std::vector<Vec> y;
};

struct SimResult {
    SimState state;
    std::vector<MonitorRow> monitors;
    std::vector<Snapshot> snapshots;
    std::size_t steps = 0;
    double dt = 0.0;
    double min_fraction_seen = 0.0;
    double worst_zeta_ratio = 0.0; ///< min over steps of zeta_total / zeta_scale
};

/**
 * @brief Onsager matrix of a simulation closure at one state (no validation).
 */
inline Mat closure_onsager(const SimClosure& closure, const MixtureState& s)
{
    const Eigen::Index n = s.size();
    return std::visit(
        [&](const auto& c) -> Mat {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, FickOnsagerModel>) {
                OnsagerStructure st{-(c.S * s.y()), c.S};
                return onsager_from_structure(s, st);
            } else if constexpr (std::is_same_v<T, MaxwellStefanModel>) {
                const Mat B = assemble_B(s, c.f);
                const Mat Bs = group_inverse(RankDeficientMatrix{B, s.y(), Vec::Ones(n)}).Asharp;
                return Bs * s.partial_densities().asDiagonal();
            } else if constexpr (std::is_same_v<T, CoreDiagonalModel>) {
                return novel_onsager_matrix(s, NovelClosure{c.d, Mat::Zero(n, n)});
            } else if constexpr (std::is_same_v<T, DarkenModel>) {
                const Vec d = self_diffusion_mix(c.table, s.mole_fractions());
                return novel_onsager_matrix(s, NovelClosure{d, Mat::Zero(n, n)});
            } else {
                const ProbeSet none{0, 0, 1};
                const auto fo = ms_to_fo(s, MaxwellStefanClosure{c.f}, std::nullopt, none);
                const auto nc = fo_to_novel(s, fo.closure, none);
                return novel_onsager_matrix(s, nc.closure);
            }
        },
        closure);
}

/// Validates the closure once against a state (PSD and structural invariants).
inline void validate_closure(const SimClosure& closure, const MixtureState& s)
{
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, MaxwellStefanModel> || std::is_same_v<T, NovelImageModel>) {
                validate_ms(s, make_ms_closure(c.f));
            } else if constexpr (std::is_same_v<T, CoreDiagonalModel>) {
                detail::require_positive(c.d, "core diagonal must be positive");
            } else if constexpr (std::is_same_v<T, DarkenModel>) {
                (void)self_diffusion_mix(c.table, s.mole_fractions());
            } else {
                if ((c.S - c.S.transpose()).norm() > 1e-12 * std::max(1.0, c.S.norm()))
                    throw Error(ErrorKind::NotSymmetric, "S is not symmetric");
            }
            validate_onsager(s, OnsagerClosure{closure_onsager(closure, s), std::nullopt});
        },
        closure);
}

/// Derivative of mu/RT with respect to mass fractions at fixed rho: M^-1 (Y^-1 - e (1/M)^T / W).
inline Mat mass_fraction_hessian(const MixtureState& s)
{
    const Vec invM = s.M().cwiseInverse();
    const double W = s.y().dot(invM);
    const Mat H = Mat(s.y().cwiseInverse().asDiagonal()) - Vec::Ones(s.size()) * invM.transpose() / W;
    return invM.asDiagonal() * H;
}

/// Spectral radius of the mass-fraction diffusion matrix L H_y / rho.
inline double effective_diffusivity(const Mat& L, const MixtureState& s)
{
    const Mat D = L * mass_fraction_hessian(s) / s.rho();
    Eigen::EigenSolver<Mat> es(D, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace detail {

inline MixtureState face_state(const SimConfig& cfg, const Vec& yl, const Vec& yr)
{
    Vec y = 0.5 * (yl + yr);
    y /= y.sum();
    return make_state(cfg.T, cfg.rho, cfg.M, y);
}

inline void check_config(const SimConfig& cfg)
{
    if (cfg.n_cells < 3)
        throw Error(ErrorKind::InvalidParameter, "need at least three cells");
    if (cfg.initial_profile.size() != cfg.n_cells)
        throw Error(ErrorKind::DimensionMismatch, "initial profile length differs from n_cells");
    if (!(cfg.length > 0.0))
        throw Error(ErrorKind::InvalidParameter, "domain length must be positive");
    if (!cfg.species.empty() && static_cast<Eigen::Index>(cfg.species.size()) != cfg.M.size())
        throw Error(ErrorKind::DimensionMismatch, "species names and molar masses differ in count");
    for (const auto& y : cfg.initial_profile) {
        const MixtureState s = make_state(cfg.T, cfg.rho, cfg.M, y);
        require_strict(s);
    }
}

} // namespace detail

/// Largest effective diffusivity over all faces of a profile.
inline double max_effective_diffusivity(const SimConfig& cfg, const std::vector<Vec>& y)
{
    double dmax = 0.0;
    for (std::size_t k = 0; k + 1 < y.size(); ++k) {
        const MixtureState fs = detail::face_state(cfg, y[k], y[k + 1]);
        dmax = std::max(dmax, effective_diffusivity(closure_onsager(cfg.closure, fs), fs));
    }
    return dmax;
}

/// 0.25 dz^2 / max d_eff over the faces of the initial profile.
inline double auto_time_step(const SimConfig& cfg)
{
    const double dz = cfg.length / static_cast<double>(cfg.n_cells);
    const double dmax = max_effective_diffusivity(cfg, cfg.initial_profile);
    if (!(dmax > 0.0))
        return std::numeric_limits<double>::infinity();
    return 0.25 * dz * dz / dmax;
}

struct StepInfo {
    double zeta_total = 0.0;
    double zeta_scale = 0.0;
    double max_d_eff = 0.0;
};

/**
 * @brief One explicit conservative update with no-flux walls.
 *
 * Face fluxes F = -L(face) grad with the face composition the renormalized
 * mean of its neighbours and grad = (ln x_R - ln x_L)/(M dz).
 */
inline StepInfo step(SimState& st, const SimConfig& cfg, double dt, bool check_stability = true)
{
    const std::size_t nc = st.y.size();
    const double dz = cfg.length / static_cast<double>(nc);
    const Eigen::Index n = cfg.M.size();
    std::vector<Vec> flux(nc + 1, Vec::Zero(n));
    StepInfo info;
    std::vector<Vec> x(nc);
    for (std::size_t k = 0; k < nc; ++k) {
        Vec w = st.y[k].cwiseQuotient(cfg.M);
        x[k] = w / w.sum();
    }
    for (std::size_t k = 0; k + 1 < nc; ++k) {
        const MixtureState fs = detail::face_state(cfg, st.y[k], st.y[k + 1]);
        const GradientField g = ideal_mu_gradient_two_point(x[k], x[k + 1], cfg.M, dz);
        const Mat L = closure_onsager(cfg.closure, fs);
        if (check_stability)
            info.max_d_eff = std::max(info.max_d_eff, effective_diffusivity(L, fs));
        const Vec F = -L * g.col(0);
        flux[k + 1] = F;
        info.zeta_total += -F.dot(g.col(0)) * dz;
        info.zeta_scale += F.cwiseAbs().dot(g.col(0).cwiseAbs()) * dz;
    }
    if (check_stability && dt * info.max_d_eff > 0.5 * dz * dz)
        throw Error(ErrorKind::StabilityViolation,
                    "dt exceeds the explicit limit 0.5 dz^2 / d_eff = " + std::to_string(0.5 * dz * dz / info.max_d_eff));
    const double factor = dt / (cfg.rho * dz);
    for (std::size_t k = 0; k < nc; ++k)
        st.y[k] -= factor * (flux[k + 1] - flux[k]);
    st.t += dt;
    return info;
}

/// Minimum fraction, per-species mass and entropy production of a state.
inline MonitorRow diagnostics(const SimState& st, const SimConfig& cfg)
{
    const std::size_t nc = st.y.size();
    const double dz = cfg.length / static_cast<double>(nc);
    const Eigen::Index n = cfg.M.size();
    MonitorRow row;
    row.t = st.t;
    row.mass = Vec::Zero(n);
    row.min_fraction = std::numeric_limits<double>::infinity();
    for (const auto& y : st.y) {
        row.mass += cfg.rho * dz * y;
        row.min_fraction = std::min(row.min_fraction, y.minCoeff());
    }
    for (std::size_t k = 0; k + 1 < nc; ++k) {
        const MixtureState fs = detail::face_state(cfg, st.y[k], st.y[k + 1]);
        Vec wl = st.y[k].cwiseQuotient(cfg.M);
        Vec wr = st.y[k + 1].cwiseQuotient(cfg.M);
        const GradientField g = ideal_mu_gradient_two_point(wl / wl.sum(), wr / wr.sum(), cfg.M, dz);
        const Vec F = -closure_onsager(cfg.closure, fs) * g.col(0);
        row.zeta_total += -F.dot(g.col(0)) * dz;
        row.zeta_scale += F.cwiseAbs().dot(g.col(0).cwiseAbs()) * dz;
    }
    return row;
}

struct RunOptions {
    std::optional<std::size_t> steps; ///< overrides t_end / dt when set
    bool validate = true;
    bool keep_snapshots = true;
};

/**
 * @brief Integrates to t_end (or a fixed step count) and records monitors.
 *
 * Aborts with InvariantBreach when a fraction becomes non-positive, a
 * per-step entropy production is negative beyond rounding, or the cell
 * fraction sums drift.
 */
inline SimResult run(const SimConfig& cfg, const RunOptions& opt = {})
{
    detail::check_config(cfg);
    if (opt.validate)
        validate_closure(cfg.closure, make_state(cfg.T, cfg.rho, cfg.M, cfg.initial_profile.front()));

    SimResult res;
    const double dt_max = cfg.dt.value_or(auto_time_step(cfg));
    if (!std::isfinite(dt_max) && !opt.steps && cfg.t_end > 0.0)
        throw Error(ErrorKind::StabilityViolation, "no finite time step for this profile");
    std::size_t nsteps = 0;
    double dt = dt_max;
    if (opt.steps) {
        nsteps = *opt.steps;
    } else if (cfg.t_end > 0.0) {
        nsteps = static_cast<std::size_t>(std::ceil(cfg.t_end / dt_max - 1e-9));
        dt = cfg.t_end / static_cast<double>(nsteps);
    }
    res.dt = dt;

    SimState st{0.0, cfg.initial_profile};
    auto record = [&](const MonitorRow& row) {
        res.monitors.push_back(row);
        if (opt.keep_snapshots)
            res.snapshots.push_back({st.t, st.y});
    };
    record(diagnostics(st, cfg));
    res.min_fraction_seen = res.monitors.front().min_fraction;
    res.worst_zeta_ratio = std::numeric_limits<double>::infinity();

    for (std::size_t k = 1; k <= nsteps; ++k) {
        const StepInfo info = step(st, cfg, dt);
        if (info.zeta_scale > 0.0)
            res.worst_zeta_ratio = std::min(res.worst_zeta_ratio, info.zeta_total / info.zeta_scale);
        if (info.zeta_total < -1e-12 * info.zeta_scale)
            throw Error(ErrorKind::InvariantBreach, "negative entropy production at step " + std::to_string(k));
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& y : st.y) {
            lo = std::min(lo, y.minCoeff());
            if (std::abs(y.sum() - 1.0) > 1e-10)
                throw Error(ErrorKind::InvariantBreach, "cell fractions no longer sum to one");
        }
        res.min_fraction_seen = std::min(res.min_fraction_seen, lo);
        if (!(lo > 0.0))
            throw Error(ErrorKind::InvariantBreach, "non-positive fraction at step " + std::to_string(k));
        const bool out = (cfg.output_every > 0 && k % cfg.output_every == 0) || k == nsteps;
        if (out) {
            MonitorRow row = diagnostics(st, cfg);
            record(row);
        }
    }
    res.state = st;
    res.steps = nsteps;
    return res;
}

} // namespace mcdiff
