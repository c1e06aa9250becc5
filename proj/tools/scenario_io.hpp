#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcdiff/simulator.hpp"

namespace mcdiff::io {

using Json = nlohmann::ordered_json;

/// Malformed or incomplete scenario document; path names the offending field.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path))
    {
    }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct Species {
    std::string name;
    double molar_mass = 0.0;
};

enum class ClosureKind { FickOnsager, MaxwellStefan, CoreDiagonal, Novel, DarkenSelfDiffusion };

inline std::string to_string(ClosureKind k)
{
    switch (k) {
    case ClosureKind::FickOnsager: return "fick-onsager";
    case ClosureKind::MaxwellStefan: return "maxwell-stefan";
    case ClosureKind::CoreDiagonal: return "core-diagonal";
    case ClosureKind::Novel: return "novel";
    case ClosureKind::DarkenSelfDiffusion: return "darken-self-diffusion";
    }
    return "unknown";
}

/// Closure payload as written in the document; which fields are set depends on the kind.
struct ClosureSpec {
    ClosureKind kind = ClosureKind::MaxwellStefan;
    std::optional<Mat> L;
    std::optional<Vec> a;
    std::optional<Mat> S;
    std::optional<Mat> f;
    std::optional<Vec> d;
    std::optional<Mat> K;
    std::optional<Mat> table;
};

struct SimSection {
    std::size_t n_cells = 0;
    double length = 1.0;
    double t_end = 0.0;
    std::optional<double> dt;
    std::size_t output_every = 0;
};

/**
 * @brief In-memory scenario document.
 *
 * Unknown top-level keys (reports, certificate requests) are kept in extra
 * and written back after the known sections.
 */
struct Scenario {
    std::vector<Species> species;
    double T = 298.15;
    double rho = 1.0;
    std::optional<Vec> y;
    std::vector<Vec> profile;
    ClosureSpec closure;
    std::optional<SimSection> sim;
    Json extra = Json::object();

    Eigen::Index size() const { return static_cast<Eigen::Index>(species.size()); }
    Vec molar_masses() const
    {
        Vec M(size());
        for (Eigen::Index i = 0; i < size(); ++i)
            M[i] = species[static_cast<std::size_t>(i)].molar_mass;
        return M;
    }
};

namespace detail {

inline const Json& field(const Json& j, const char* key, const std::string& path)
{
    if (!j.is_object())
        throw SchemaError(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end())
        throw SchemaError(path == "$" ? std::string(key) : path + "." + key, "missing");
    return *it;
}

inline double number(const Json& j, const std::string& path)
{
    if (!j.is_number())
        throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v))
        throw SchemaError(path, "not finite");
    return v;
}

inline std::size_t count(const Json& j, const std::string& path)
{
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
        throw SchemaError(path, "expected a non-negative integer");
    return static_cast<std::size_t>(j.get<std::int64_t>());
}

inline Vec vector(const Json& j, Eigen::Index n, const std::string& path)
{
    if (!j.is_array())
        throw SchemaError(path, "expected an array");
    if (static_cast<Eigen::Index>(j.size()) != n)
        throw SchemaError(path, "expected " + std::to_string(n) + " entries");
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = number(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    return v;
}

/// {"n": N, "data": [row-major N*N]}
inline Mat matrix(const Json& j, Eigen::Index n, const std::string& path)
{
    const std::size_t dim = count(field(j, "n", path), path + ".n");
    if (static_cast<Eigen::Index>(dim) != n)
        throw SchemaError(path + ".n", "expected " + std::to_string(n));
    const Json& data = field(j, "data", path);
    if (!data.is_array() || data.size() != dim * dim)
        throw SchemaError(path + ".data", "expected " + std::to_string(dim * dim) + " entries");
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) {
            const std::size_t idx = static_cast<std::size_t>(i * n + k);
            m(i, k) = number(data[idx], path + ".data[" + std::to_string(idx) + "]");
        }
    return m;
}

inline void require_symmetric(const Mat& m, const std::string& path)
{
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * m.cwiseAbs().maxCoeff())
        throw SchemaError(path, "matrix must be symmetric");
}

inline Json write(const Vec& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

inline Json write(const Mat& m)
{
    Json data = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            data.push_back(m(i, k));
    return Json{{"n", m.rows()}, {"data", std::move(data)}};
}

inline ClosureKind parse_kind(const Json& j, const std::string& path)
{
    if (!j.is_string())
        throw SchemaError(path, "expected a string");
    const std::string s = j.get<std::string>();
    for (ClosureKind k : {ClosureKind::FickOnsager, ClosureKind::MaxwellStefan, ClosureKind::CoreDiagonal,
                          ClosureKind::Novel, ClosureKind::DarkenSelfDiffusion})
        if (s == to_string(k))
            return k;
    throw SchemaError(path, "unknown closure kind '" + s + "'");
}

} // namespace detail

inline ClosureSpec parse_closure(const Json& j, Eigen::Index n)
{
    ClosureSpec c;
    c.kind = detail::parse_kind(detail::field(j, "kind", "closure"), "closure.kind");
    const Json& p = detail::field(j, "payload", "closure");
    if (!p.is_object())
        throw SchemaError("closure.payload", "expected an object");
    const std::string base = "closure.payload";
    auto mat = [&](const char* key, bool symmetric) -> std::optional<Mat> {
        if (!p.contains(key))
            return std::nullopt;
        Mat m = detail::matrix(p[key], n, base + "." + key);
        if (symmetric)
            detail::require_symmetric(m, base + "." + key);
        return m;
    };
    auto vec = [&](const char* key) -> std::optional<Vec> {
        if (!p.contains(key))
            return std::nullopt;
        return detail::vector(p[key], n, base + "." + key);
    };
    switch (c.kind) {
    case ClosureKind::FickOnsager:
        c.L = mat("L", true);
        c.a = vec("a");
        c.S = mat("S", true);
        if (!c.L && !c.S)
            throw SchemaError(base, "fick-onsager needs L or S");
        if (c.a && !c.S)
            throw SchemaError(base + ".a", "a is only meaningful together with S");
        break;
    case ClosureKind::MaxwellStefan:
        c.f = mat("f", true);
        if (!c.f)
            throw SchemaError(base + ".f", "missing");
        break;
    case ClosureKind::CoreDiagonal:
    case ClosureKind::Novel:
        c.d = vec("d");
        c.K = mat("K", true);
        if (!c.d)
            throw SchemaError(base + ".d", "missing");
        if (c.kind == ClosureKind::CoreDiagonal && c.K)
            throw SchemaError(base + ".K", "core-diagonal closures carry no K");
        break;
    case ClosureKind::DarkenSelfDiffusion:
        c.table = mat("table", false);
        c.d = vec("d");
        if (!c.table == !c.d)
            throw SchemaError(base, "darken-self-diffusion needs exactly one of table or d");
        break;
    }
    return c;
}

inline Json closure_json(const ClosureSpec& c)
{
    Json p = Json::object();
    if (c.L) p["L"] = detail::write(*c.L);
    if (c.a) p["a"] = detail::write(*c.a);
    if (c.S) p["S"] = detail::write(*c.S);
    if (c.f) p["f"] = detail::write(*c.f);
    if (c.table) p["table"] = detail::write(*c.table);
    if (c.d) p["d"] = detail::write(*c.d);
    if (c.K) p["K"] = detail::write(*c.K);
    return Json{{"kind", to_string(c.kind)}, {"payload", std::move(p)}};
}

inline Scenario parse_scenario(const Json& doc)
{
    if (!doc.is_object())
        throw SchemaError("$", "document must be an object");
    Scenario sc;
    const Json& sp = detail::field(doc, "species", "$");
    if (!sp.is_array() || sp.size() < 2)
        throw SchemaError("species", "expected an array of at least two species");
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const std::string path = "species[" + std::to_string(i) + "]";
        const Json& name = detail::field(sp[i], "name", path);
        if (!name.is_string())
            throw SchemaError(path + ".name", "expected a string");
        const double m = detail::number(detail::field(sp[i], "molar_mass", path), path + ".molar_mass");
        if (!(m > 0.0))
            throw SchemaError(path + ".molar_mass", "must be positive");
        sc.species.push_back({name.get<std::string>(), m});
    }
    const Eigen::Index n = sc.size();

    const Json& st = detail::field(doc, "state", "$");
    sc.T = detail::number(detail::field(st, "T", "state"), "state.T");
    sc.rho = detail::number(detail::field(st, "rho", "state"), "state.rho");
    if (st.contains("y"))
        sc.y = detail::vector(st["y"], n, "state.y");
    if (st.contains("profile")) {
        const Json& pr = st["profile"];
        if (!pr.is_array() || pr.empty())
            throw SchemaError("state.profile", "expected a non-empty array of cells");
        for (std::size_t k = 0; k < pr.size(); ++k)
            sc.profile.push_back(detail::vector(pr[k], n, "state.profile[" + std::to_string(k) + "]"));
    }
    if (!sc.y && sc.profile.empty())
        throw SchemaError("state", "needs y or profile");

    sc.closure = parse_closure(detail::field(doc, "closure", "$"), n);

    if (doc.contains("sim")) {
        const Json& s = doc["sim"];
        SimSection sim;
        sim.n_cells = detail::count(detail::field(s, "n_cells", "sim"), "sim.n_cells");
        sim.length = detail::number(detail::field(s, "length", "sim"), "sim.length");
        sim.t_end = detail::number(detail::field(s, "t_end", "sim"), "sim.t_end");
        if (s.contains("dt"))
            sim.dt = detail::number(s["dt"], "sim.dt");
        sim.output_every = detail::count(detail::field(s, "output_every", "sim"), "sim.output_every");
        sc.sim = sim;
    }

    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (it.key() != "species" && it.key() != "state" && it.key() != "closure" && it.key() != "sim")
            sc.extra[it.key()] = it.value();
    return sc;
}

inline Json to_json(const Scenario& sc)
{
    Json doc = Json::object();
    Json sp = Json::array();
    for (const auto& s : sc.species)
        sp.push_back(Json{{"name", s.name}, {"molar_mass", s.molar_mass}});
    doc["species"] = std::move(sp);
    Json st{{"T", sc.T}, {"rho", sc.rho}};
    if (sc.y)
        st["y"] = detail::write(*sc.y);
    if (!sc.profile.empty()) {
        Json pr = Json::array();
        for (const auto& y : sc.profile)
            pr.push_back(detail::write(y));
        st["profile"] = std::move(pr);
    }
    doc["state"] = std::move(st);
    doc["closure"] = closure_json(sc.closure);
    if (sc.sim) {
        Json s{{"n_cells", sc.sim->n_cells}, {"length", sc.sim->length}, {"t_end", sc.sim->t_end}};
        if (sc.sim->dt)
            s["dt"] = *sc.sim->dt;
        s["output_every"] = sc.sim->output_every;
        doc["sim"] = std::move(s);
    }
    for (auto it = sc.extra.begin(); it != sc.extra.end(); ++it)
        doc[it.key()] = it.value();
    return doc;
}

/// Two-space indented JSON with a trailing newline; doubles use shortest round-trip digits.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline Json parse_text(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw SchemaError("$", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(parse_text(read_file(path))); }

/// Single-state view of the document (state.y).
inline MixtureState scenario_state(const Scenario& sc)
{
    if (!sc.y)
        throw SchemaError("state.y", "this command needs a single state");
    return make_state(sc.T, sc.rho, sc.molar_masses(), *sc.y);
}

inline SimClosure sim_closure(const Scenario& sc)
{
    const ClosureSpec& c = sc.closure;
    switch (c.kind) {
    case ClosureKind::FickOnsager:
        if (!c.S || c.a || c.L)
            throw SchemaError("closure.payload", "simulation needs a fick-onsager closure given by S alone");
        return FickOnsagerModel{*c.S};
    case ClosureKind::MaxwellStefan: return MaxwellStefanModel{*c.f};
    case ClosureKind::CoreDiagonal: return CoreDiagonalModel{*c.d};
    case ClosureKind::Novel:
        if (c.K && c.K->cwiseAbs().maxCoeff() > 0.0)
            throw SchemaError("closure.payload.K", "simulation supports only K = 0");
        return CoreDiagonalModel{*c.d};
    case ClosureKind::DarkenSelfDiffusion:
        if (!c.table)
            throw SchemaError("closure.payload.table", "simulation needs the self-diffusion table");
        return DarkenModel{SelfDiffusionModel{*c.table}};
    }
    throw SchemaError("closure.kind", "unsupported");
}

inline SimConfig sim_config(const Scenario& sc)
{
    if (!sc.sim)
        throw SchemaError("sim", "missing");
    SimConfig cfg;
    for (const auto& s : sc.species)
        cfg.species.push_back(s.name);
    cfg.M = sc.molar_masses();
    cfg.T = sc.T;
    cfg.rho = sc.rho;
    cfg.n_cells = sc.sim->n_cells;
    cfg.length = sc.sim->length;
    cfg.dt = sc.sim->dt;
    cfg.t_end = sc.sim->t_end;
    cfg.output_every = sc.sim->output_every;
    cfg.closure = sim_closure(sc);
    if (!sc.profile.empty()) {
        if (sc.profile.size() != cfg.n_cells)
            throw SchemaError("state.profile", "expected sim.n_cells cells");
        cfg.initial_profile = sc.profile;
    } else {
        cfg.initial_profile.assign(cfg.n_cells, *sc.y);
    }
    return cfg;
}

/// Shortest decimal that reads back to the same double.
inline std::string format_number(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

/// Columns t, min_fraction, mass_1..N, zeta_total.
inline std::string monitor_csv(const std::vector<MonitorRow>& rows, Eigen::Index n)
{
    std::string out = "t,min_fraction";
    for (Eigen::Index i = 1; i <= n; ++i)
        out += ",mass_" + std::to_string(i);
    out += ",zeta_total\n";
    for (const auto& r : rows) {
        out += format_number(r.t) + "," + format_number(r.min_fraction);
        for (Eigen::Index i = 0; i < n; ++i)
            out += "," + format_number(r.mass[i]);
        out += "," + format_number(r.zeta_total) + "\n";
    }
    return out;
}

/// Columns z, y_1..N at the cell centres.
inline std::string profile_csv(const std::vector<Vec>& y, double length)
{
    const Eigen::Index n = y.empty() ? 0 : y.front().size();
    std::string out = "z";
    for (Eigen::Index i = 1; i <= n; ++i)
        out += ",y_" + std::to_string(i);
    out += "\n";
    const double dz = length / static_cast<double>(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        out += format_number((static_cast<double>(k) + 0.5) * dz);
        for (Eigen::Index i = 0; i < n; ++i)
            out += "," + format_number(y[k][i]);
        out += "\n";
    }
    return out;
}

} // namespace mcdiff::io
