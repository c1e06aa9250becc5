#pragma once

#include <filesystem>
#include <fstream>

#include "mcdiff/darken.hpp"
#include "mcdiff/fickian.hpp"
#include "mcdiff/transforms.hpp"
#include "scenario_io.hpp"

namespace mcdiff::cli {

using io::ClosureKind;
using io::ClosureSpec;
using io::Json;
using io::Scenario;

enum class Form { A, B, C };

inline char form_letter(Form f) { return f == Form::A ? 'A' : (f == Form::B ? 'B' : 'C'); }

inline Form parse_form(const std::string& s)
{
    if (s == "A") return Form::A;
    if (s == "B") return Form::B;
    if (s == "C") return Form::C;
    throw io::SchemaError("--target", "expected A, B or C");
}

struct Options {
    std::string target = "C";
    bool strict = false;
    std::uint64_t seed = 0;
    std::size_t probes = 20;
    std::optional<std::size_t> steps;
    std::string output;
};

/// Output document plus whether a certificate failed (exit code 3 under --strict).
struct Outcome {
    Json doc;
    bool certificate_failed = false;
    std::vector<std::pair<std::string, std::string>> files; ///< relative name, contents
};

/// A closure resolved at one state, in whichever of the three forms it was given.
struct Resolved {
    Form form = Form::B;
    std::optional<OnsagerClosure> fo;
    std::optional<MaxwellStefanClosure> ms;
    std::optional<NovelClosure> nc;

    Mat flux(const MixtureState& s, const GradientField& g) const
    {
        switch (form) {
        case Form::A: return flux_FO(*fo, g);
        case Form::B: return flux_MS(s, ms->f, g);
        case Form::C: return flux_novel(s, *nc, g);
        }
        return {};
    }
};

inline Resolved resolve(const MixtureState& s, const ClosureSpec& c)
{
    const Eigen::Index n = s.size();
    Resolved r;
    switch (c.kind) {
    case ClosureKind::FickOnsager: {
        r.form = Form::A;
        OnsagerClosure oc;
        if (c.S) {
            OnsagerStructure st{c.a ? *c.a : Vec(-(*c.S * s.y())), *c.S};
            oc.L = onsager_from_structure(s, st);
            oc.structure = st;
            if (c.L && (*c.L - oc.L).norm() > 1e-10 * std::max(c.L->norm(), 1e-300))
                throw Error(ErrorKind::PreconditionViolated, "L and (a, S) disagree");
        } else {
            oc.L = *c.L;
            if (s.strict())
                oc.structure = structure_from_L(s, oc.L);
        }
        validate_onsager(s, oc);
        r.fo = oc;
        break;
    }
    case ClosureKind::MaxwellStefan:
        r.form = Form::B;
        r.ms = make_ms_closure(*c.f);
        validate_ms(s, *r.ms);
        break;
    case ClosureKind::CoreDiagonal:
    case ClosureKind::Novel:
        r.form = Form::C;
        r.nc = NovelClosure{*c.d, c.K ? *c.K : Mat::Zero(n, n)};
        validate_novel(s, *r.nc);
        break;
    case ClosureKind::DarkenSelfDiffusion: {
        r.form = Form::C;
        const Vec d = c.d ? *c.d : self_diffusion_mix(SelfDiffusionModel{*c.table}, s.mole_fractions());
        detail::require_positive(d, "self-diffusivities must be positive");
        r.nc = NovelClosure{d, Mat::Zero(n, n)};
        validate_novel(s, *r.nc);
        break;
    }
    }
    return r;
}

/// Converts a resolved closure to the requested form along (A) -> (C) -> (B) -> (A).
inline Resolved convert_to(const MixtureState& s, const Resolved& src, Form target)
{
    if (src.form == target)
        return src;
    const ProbeSet none{0, 0, 1};
    Resolved out;
    out.form = target;
    auto as_fo = [&]() -> OnsagerClosure {
        if (src.form == Form::B)
            return ms_to_fo(s, *src.ms, std::nullopt, none).closure;
        const Mat L = novel_onsager_matrix(s, *src.nc);
        return OnsagerClosure{L, structure_from_L(s, L)};
    };
    auto as_novel = [&]() -> NovelClosure {
        const OnsagerClosure oc = src.form == Form::A ? *src.fo : as_fo();
        if (oc.structure)
            return fo_to_novel(s, oc, none).closure;
        return fo_to_novel(s, OnsagerClosure{oc.L, structure_from_L(s, oc.L)}, none).closure;
    };
    switch (target) {
    case Form::A: out.fo = as_fo(); break;
    case Form::C: out.nc = as_novel(); break;
    case Form::B: out.ms = novel_to_ms(s, src.form == Form::C ? *src.nc : as_novel(), none).closure; break;
    }
    return out;
}

inline ClosureSpec to_spec(const MixtureState& s, const Resolved& r)
{
    ClosureSpec c;
    switch (r.form) {
    case Form::A:
        c.kind = ClosureKind::FickOnsager;
        c.L = r.fo->L;
        if (r.fo->structure) {
            c.a = r.fo->structure->a;
            c.S = r.fo->structure->S;
        }
        break;
    case Form::B:
        c.kind = ClosureKind::MaxwellStefan;
        c.f = r.ms->f;
        break;
    case Form::C:
        c.d = r.nc->d;
        if (s.size() == 2) {
            c.kind = ClosureKind::CoreDiagonal;
        } else {
            c.kind = ClosureKind::Novel;
            c.K = r.nc->K;
        }
        break;
    }
    return c;
}

/// Largest d0 for which the form's ellipticity certificate holds at this state.
inline double best_constant(const MixtureState& s, const Resolved& r)
{
    switch (r.form) {
    case Form::A: return best_fick_onsager_constant(s, r.fo->L);
    case Form::B: return best_maxwell_stefan_constant(s, r.ms->f);
    case Form::C: return best_novel_constant(s, *r.nc);
    }
    return 0.0;
}

inline std::string form_name(Form f)
{
    switch (f) {
    case Form::A: return std::string(to_string(CertificateForm::FickOnsager));
    case Form::B: return std::string(to_string(CertificateForm::MaxwellStefan));
    case Form::C: return std::string(to_string(CertificateForm::Novel));
    }
    return {};
}

inline Outcome cmd_convert(const Scenario& sc, const Options& opt)
{
    const MixtureState s = io::scenario_state(sc);
    const Resolved src = resolve(s, sc.closure);
    const Form target = parse_form(opt.target);
    const Resolved dst = convert_to(s, src, target);
    const ProbeSet ps{opt.probes, opt.seed, 3};
    const double residual = flux_residual(s.size(), ps, [&](const GradientField& g) { return src.flux(s, g); },
                                          [&](const GradientField& g) { return dst.flux(s, g); });
    const double best = best_constant(s, dst);

    Scenario out = sc;
    out.closure = to_spec(s, dst);
    out.extra["report"] = Json{{"command", "convert"},
                               {"source_kind", io::to_string(sc.closure.kind)},
                               {"target", std::string(1, form_letter(target))},
                               {"probes", opt.probes},
                               {"seed", opt.seed},
                               {"flux_residual", residual},
                               {"ellipticity", Json{{"form", form_name(target)}, {"best_constant", best},
                                                    {"elliptic", best > 0.0}}}};
    return {io::to_json(out), !(best > 0.0), {}};
}

inline Json certificate_json(const EllipticityCertificate& c)
{
    return Json{{"form", std::string(to_string(c.form))}, {"d0", c.d0}, {"min_excess_eig", c.min_excess_eig},
                {"relative_slack", c.relative_slack()}, {"ok", c.ok}};
}

inline Json psd_json(const SubspaceCertificate& c)
{
    return Json{{"min_eig", c.min_eig}, {"ok", c.ok}};
}

/**
 * @brief Certificates of all three forms plus the PSD check of the given closure.
 *
 * An optional top-level "certificate": {"form": "A"|"B"|"C", "d0": value}
 * requests one specific certificate; --strict turns any failure into exit code 3.
 */
inline Outcome cmd_check(const Scenario& sc, const Options& opt)
{
    const MixtureState s = io::scenario_state(sc);
    const Resolved src = resolve(s, sc.closure);
    const Eigen::Index n = s.size();
    bool failed = false;

    Json psd;
    switch (src.form) {
    case Form::A: psd = psd_json(psd_on_subspace(src.fo->L, Vec::Ones(n))); break;
    case Form::B: psd = psd_json(psd_on_subspace(assemble_tau(s, src.ms->f), Vec::Ones(n))); break;
    case Form::C: psd = psd_json(psd_on_subspace(novel_D(s, *src.nc), derived(s).sqrt_x())); break;
    }
    failed |= !psd["ok"].get<bool>();

    Json constants = Json::object();
    Json forms = Json::object();
    std::optional<Resolved> fo, ms, nc;
    for (Form f : {Form::A, Form::B, Form::C}) {
        const Resolved r = convert_to(s, src, f);
        const double best = best_constant(s, r);
        constants[form_name(f)] = best;
        failed |= !(best > 0.0);
        if (f == Form::A) fo = r;
        if (f == Form::B) ms = r;
        if (f == Form::C) nc = r;
    }

    Json report{{"command", "check"}, {"source_kind", io::to_string(sc.closure.kind)}, {"psd", psd},
                {"best_constants", constants}};

    const Mat& f = ms->ms->f;
    Mat off = f;
    off.diagonal().setConstant(1.0);
    if ((off.array() > 0.0).all()) {
        const double d0 = friction_bound_constant(f, s.M());
        const auto cert = certify_fick_onsager(s, fo->fo->L, d0);
        report["friction_bound"] = certificate_json(cert);
        failed |= !cert.ok;
    }
    const double best_fo = constants[form_name(Form::A)].get<double>();
    if (best_fo > 0.0) {
        const auto cert = certify_inverse_mass_bound(s, fo->fo->L, propagated_ms_constant(best_fo, s.M()));
        report["propagated_bound"] = certificate_json(cert);
        failed |= !cert.ok;
    }

    if (sc.extra.contains("certificate")) {
        const Json& req = sc.extra["certificate"];
        const Form f = parse_form(io::detail::field(req, "form", "certificate").get<std::string>());
        const double d0 = io::detail::number(io::detail::field(req, "d0", "certificate"), "certificate.d0");
        EllipticityCertificate cert;
        switch (f) {
        case Form::A: cert = certify_fick_onsager(s, fo->fo->L, d0); break;
        case Form::B: cert = certify_maxwell_stefan(s, ms->ms->f, d0); break;
        case Form::C: cert = certify_novel(s, *nc->nc, d0); break;
        }
        report["requested"] = certificate_json(cert);
        failed |= !cert.ok;
    }
    report["ok"] = !failed;
    (void)opt;
    return {report, failed, {}};
}

inline Json matrix_json(const Mat& m) { return io::detail::write(m); }
inline Json vector_json(const Vec& v) { return io::detail::write(v); }

/// Multicomponent Darken table from self-diffusivities; binary states add Darken and Vignes values.
inline Outcome cmd_darken(const Scenario& sc, const Options&)
{
    if (sc.closure.kind != ClosureKind::DarkenSelfDiffusion)
        throw io::SchemaError("closure.kind", "darken needs a darken-self-diffusion closure");
    const MixtureState s = io::scenario_state(sc);
    const Vec x = s.mole_fractions();
    const Vec d = sc.closure.d ? *sc.closure.d : self_diffusion_mix(SelfDiffusionModel{*sc.closure.table}, x);
    const Mat Dms = darken_ms_diffusivities(x, d);
    Json report{{"command", "darken"},
                {"x", vector_json(x)},
                {"self_diffusivities", vector_json(d)},
                {"ms_diffusivities", matrix_json(Dms)},
                {"mass_friction", matrix_json(mass_friction_from_ms_diffusivities(s, Dms))},
                {"Bmol", matrix_json(assemble_Bmol(x, Dms))}};
    if (s.size() == 2) {
        Json bin{{"darken", x[0] * d[1] + x[1] * d[0]}};
        if (sc.closure.table) {
            const Mat& T = *sc.closure.table;
            bin["vignes"] = vignes_binary(T(1, 0), T(0, 1), x[0]);
        }
        report["binary"] = bin;
    }
    return {report, false, {}};
}

/**
 * @brief Composition-dependent ternary friction with a negative coefficient at y0.
 *
 * Parameters come from a top-level "counterexample": {"a": 3, "y0": [...]}
 * block; a = 3 and y0 = (1/3, 1/3, 1/3) by default.
 */
inline Outcome cmd_counterexample(const Scenario& sc, const Options&)
{
    double a = 3.0;
    Vec y0 = Vec::Constant(3, 1.0 / 3.0);
    if (sc.extra.contains("counterexample")) {
        const Json& p = sc.extra["counterexample"];
        if (p.contains("a"))
            a = io::detail::number(p["a"], "counterexample.a");
        if (p.contains("y0"))
            y0 = io::detail::vector(p["y0"], 3, "counterexample.y0");
    }
    if (sc.size() != 3)
        throw io::SchemaError("species", "the counterexample is ternary");
    const CounterexampleFactory fac(a, y0);
    const MixtureState s = make_state(sc.T, sc.rho, sc.molar_masses(), y0);
    const Mat f = fac.friction(y0);
    const Mat tau = fac.tau(s);
    const auto psd = psd_on_subspace(tau, Vec::Ones(3));
    const Mat fc = fac.consistent_friction(y0);
    Json report{{"command", "counterexample"},
                {"a", a},
                {"y0", vector_json(y0)},
                {"friction", matrix_json(f)},
                {"f13", f(0, 2)},
                {"tau", matrix_json(tau)},
                {"tau_psd", psd_json(psd)},
                {"consistent_friction", matrix_json(fc)},
                {"negative_coefficient", f(0, 2) < 0.0 && psd.ok}};
    return {report, false, {}};
}

/// Fickian matrix in mass and mole-fraction form with spectra and the Z-matrix test.
inline Outcome cmd_fickian(const Scenario& sc, const Options&)
{
    const MixtureState s = io::scenario_state(sc);
    const Resolved src = resolve(s, sc.closure);
    const OnsagerClosure oc = convert_to(s, src, Form::A).fo.value();
    const FickianMatrix D = fickian_ideal_isobaric(s, oc);
    const FickianMatrix Dt = fickian_molefraction_form(s, oc);
    auto spectrum = [](const Mat& m) {
        const SpectrumReport r = fickian_spectrum(m);
        Json re = Json::array(), im = Json::array();
        for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) {
            re.push_back(r.eigenvalues[i].real());
            im.push_back(r.eigenvalues[i].imag());
        }
        return Json{{"real", re}, {"imag", im}, {"max_abs_imag", r.max_abs_imag}, {"min_real", r.min_real}};
    };
    Json report{{"command", "fickian"},
                {"D_fick", matrix_json(D.D)},
                {"D_molefraction", matrix_json(Dt.D)},
                {"spectrum", spectrum(D.D)},
                {"spectrum_molefraction", spectrum(Dt.D)},
                {"z_matrix", z_matrix_test(Dt.D)}};
    if (src.form == Form::C && src.nc->K.cwiseAbs().maxCoeff() == 0.0)
        report["diag_bound_slack"] = vector_json(fick_diag_bound_check(s, src.nc->d));
    return {report, false, {}};
}

/// Runs the simulator; CSV files go under --output (monitor.csv, profile_NNNN.csv).
inline Outcome cmd_simulate(const Scenario& sc, const Options& opt)
{
    const SimConfig cfg = io::sim_config(sc);
    const SimResult res = run(cfg, RunOptions{opt.steps, true, true});
    const Eigen::Index n = cfg.M.size();
    Outcome out;
    out.files.emplace_back("monitor.csv", io::monitor_csv(res.monitors, n));
    for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "profile_%04zu.csv", k);
        out.files.emplace_back(name, io::profile_csv(res.snapshots[k].y, cfg.length));
    }
    const MonitorRow& first = res.monitors.front();
    const MonitorRow& last = res.monitors.back();
    double drift = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        drift = std::max(drift, std::abs(last.mass[i] - first.mass[i]) / first.mass[i]);
    out.doc = Json{{"command", "simulate"},
                   {"steps", res.steps},
                   {"dt", res.dt},
                   {"t_final", res.state.t},
                   {"min_fraction_seen", res.min_fraction_seen},
                   {"worst_zeta_ratio", std::isfinite(res.worst_zeta_ratio) ? Json(res.worst_zeta_ratio) : Json(nullptr)},
                   {"max_mass_drift", drift},
                   {"snapshots", res.snapshots.size()}};
    return out;
}

} // namespace mcdiff::cli
