#include "piezo/scenario.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace piezo {

namespace {

using Tree = boost::property_tree::ptree;

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys = {
        {"system", {"type", "m0", "m1", "u0"}},
        {"grid", {"dim", "cells", "length", "mask"}},
        {"time", {"nu", "dt", "n_steps", "t0"}},
        {"coefficients",
         {"rho", "eps", "mu", "sigma", "eps_kernel", "C", "C_lambda", "C_mu", "C_tensor", "e_bound", "e_seed"}},
        {"boundary", {"mode"}},
        {"boundary.data", {"v_kind", "v_amplitude", "E_kind", "E_amplitude", "omega", "t_on", "g0", "f1"}},
        {"leontovich", {"Q", "q_scale", "alpha", "alpha_scale", "seed"}},
        {"source", {"kind", "field", "amplitude", "t_on", "center", "width", "omega", "seed"}},
        {"output", {"dir", "prefix"}},
        {"verify", {"nu_range", "random_sources", "allow_uncertified", "seed"}},
    };
    return keys;
}

class Reader {
public:
    explicit Reader(const Tree& root) : root_(root)
    {
        for (const auto& [section, body] : root_) {
            const auto it = known_keys().find(section);
            if (it == known_keys().end()) {
                if (body.empty() && !body.data().empty()) {
                    throw ScenarioError("key outside any section: " + section);
                }
                throw ScenarioError("unknown section [" + section + "]");
            }
            for (const auto& [key, value] : body) {
                if (!it->second.count(key)) {
                    throw ScenarioError("unknown key '" + key + "' in [" + section + "]");
                }
            }
        }
    }

    std::optional<std::string> raw(const std::string& section, const std::string& key) const
    {
        const auto s = root_.find(section);
        if (s == root_.not_found()) {
            return std::nullopt;
        }
        const auto k = s->second.find(key);
        if (k == s->second.not_found()) {
            return std::nullopt;
        }
        return k->second.data();
    }

    std::string text(const std::string& section, const std::string& key, const std::string& def) const
    {
        return raw(section, key).value_or(def);
    }

    double number(const std::string& section, const std::string& key, double def) const
    {
        const auto r = raw(section, key);
        return r ? parse_number(*r, section, key) : def;
    }

    int integer(const std::string& section, const std::string& key, int def) const
    {
        const auto r = raw(section, key);
        if (!r) {
            return def;
        }
        const double v = parse_number(*r, section, key);
        if (v != std::floor(v) || std::abs(v) > 1e9) {
            throw ScenarioError(section + "." + key + ": expected an integer, got '" + *r + "'");
        }
        return static_cast<int>(v);
    }

    std::vector<double> list(const std::string& section, const std::string& key, std::vector<double> def) const
    {
        const auto r = raw(section, key);
        if (!r) {
            return def;
        }
        std::string s = *r;
        std::replace(s.begin(), s.end(), ',', ' ');
        std::istringstream is(s);
        std::vector<double> out;
        std::string tok;
        while (is >> tok) {
            out.push_back(parse_number(tok, section, key));
        }
        if (out.empty()) {
            throw ScenarioError(section + "." + key + ": empty list");
        }
        return out;
    }

    bool flag(const std::string& section, const std::string& key, bool def) const
    {
        const auto r = raw(section, key);
        if (!r) {
            return def;
        }
        if (*r == "true" || *r == "1" || *r == "yes") {
            return true;
        }
        if (*r == "false" || *r == "0" || *r == "no") {
            return false;
        }
        throw ScenarioError(section + "." + key + ": expected true or false");
    }

    static double parse_number(const std::string& s, const std::string& section, const std::string& key)
    {
        const bool decimal = !s.empty() && s.find_first_not_of("0123456789+-.eE") == std::string::npos;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = decimal ? std::stod(s, &used) : 0.0;
        } catch (const std::exception&) {
            used = 0;
        }
        if (!decimal || used != s.size() || !std::isfinite(v)) {
            throw ScenarioError(section + "." + key + ": not a decimal number: '" + s + "'");
        }
        return v;
    }

private:
    const Tree& root_;
};

void check_choice(const std::string& value, std::initializer_list<const char*> allowed, const std::string& what)
{
    for (const char* a : allowed) {
        if (value == a) {
            return;
        }
    }
    throw ScenarioError(what + ": unknown value '" + value + "'");
}

Generator read_generator(const Reader& r, const std::string& section, const std::string& prefix, double def_amp)
{
    Generator g;
    const std::string kind_key = prefix.empty() ? "kind" : prefix + "_kind";
    const std::string amp_key = prefix.empty() ? "amplitude" : prefix + "_amplitude";
    g.kind = r.text(section, kind_key, "zero");
    check_choice(g.kind, {"zero", "step", "ramp", "sine", "gaussian", "random"}, section + "." + kind_key);
    g.amplitude = r.number(section, amp_key, def_amp);
    g.t_on = r.number(section, "t_on", 0.0);
    g.omega = r.number(section, "omega", 1.0);
    return g;
}

Scenario parse_tree(const Tree& tree, const std::string& name)
{
    const Reader r(tree);
    Scenario sc;
    sc.name = name;

    const std::string type = r.text("system", "type", "piezo");
    check_choice(type, {"piezo", "scalar", "rotation"}, "system.type");
    sc.system = type == "piezo" ? SystemType::Piezo : type == "scalar" ? SystemType::Scalar : SystemType::Rotation;
    sc.m0 = r.number("system", "m0", 1.0);
    sc.m1 = r.number("system", "m1", 1.0);
    sc.u0 = r.number("system", "u0", sc.system == SystemType::Rotation ? 1.0 : 0.0);
    if (sc.system == SystemType::Scalar && sc.m0 <= 0.0) {
        throw ScenarioError("system.m0 must be positive");
    }

    const int dim = r.integer("grid", "dim", 1);
    if (dim < 1 || dim > 3) {
        throw ScenarioError("grid.dim must be 1, 2 or 3");
    }
    const auto cells = r.list("grid", "cells", {8.0});
    const auto length = r.list("grid", "length", {1.0});
    if ((cells.size() != 1 && static_cast<int>(cells.size()) != dim) ||
        (length.size() != 1 && static_cast<int>(length.size()) != dim)) {
        throw ScenarioError("grid.cells / grid.length: give one value or one per axis");
    }
    Index3 c{1, 1, 1};
    std::array<double, 3> h{1.0, 1.0, 1.0};
    for (int a = 0; a < dim; ++a) {
        const double n = cells.size() == 1 ? cells[0] : cells[a];
        const double L = length.size() == 1 ? length[0] : length[a];
        if (n != std::floor(n) || n < 2 || n > 4096) {
            throw ScenarioError("grid.cells must be integers in [2, 4096]");
        }
        if (L <= 0.0) {
            throw ScenarioError("grid.length must be positive");
        }
        c[a] = static_cast<int>(n);
        h[a] = L / n;
    }
    sc.grid = GridSpec::box(dim, c, h);
    const std::string mask = r.text("grid", "mask", "none");
    check_choice(mask, {"none", "lshape"}, "grid.mask");
    if (mask == "lshape") {
        if (dim < 2) {
            throw ScenarioError("grid.mask = lshape needs dim >= 2");
        }
        sc.grid.active.assign(sc.grid.num_cells(), 1);
        for (int k = 0; k < c[2]; ++k) {
            for (int j = 0; j < c[1]; ++j) {
                for (int i = 0; i < c[0]; ++i) {
                    if (2 * i >= c[0] && 2 * j >= c[1]) {
                        sc.grid.active[sc.grid.cell_index({i, j, k})] = 0;
                    }
                }
            }
        }
    }

    sc.time.nu = r.number("time", "nu", 1.0);
    sc.time.dt = r.number("time", "dt", 0.01);
    sc.time.n_steps = r.integer("time", "n_steps", 100);
    sc.time.t0 = r.number("time", "t0", 0.0);
    if (!(sc.time.nu > 0.0) || !(sc.time.dt > 0.0) || sc.time.n_steps < 1) {
        throw ScenarioError("time: nu and dt must be positive and n_steps >= 1");
    }

    sc.rho = r.number("coefficients", "rho", 1.0);
    sc.eps = r.number("coefficients", "eps", 1.0);
    sc.mu = r.number("coefficients", "mu", 1.0);
    sc.sigma = r.number("coefficients", "sigma", 1.0);
    sc.eps_kernel = r.number("coefficients", "eps_kernel", 0.0);
    sc.C_kind = r.text("coefficients", "C", "identity");
    check_choice(sc.C_kind, {"identity", "isotropic", "tensor"}, "coefficients.C");
    sc.C_lambda = r.number("coefficients", "C_lambda", 1.0);
    sc.C_mu = r.number("coefficients", "C_mu", 0.5);
    if (sc.C_kind == "tensor") {
        const auto t = r.list("coefficients", "C_tensor", {});
        if (t.size() != 81) {
            throw ScenarioError("coefficients.C_tensor needs 81 numbers");
        }
        std::copy(t.begin(), t.end(), sc.C_tensor.begin());
    }
    sc.e_bound = r.number("coefficients", "e_bound", 0.5);
    sc.e_seed = static_cast<unsigned>(r.integer("coefficients", "e_seed", 7));
    if (sc.rho <= 0.0 || sc.mu <= 0.0 || sc.eps < 0.0 || sc.eps_kernel < 0.0 || sc.e_bound < 0.0) {
        throw ScenarioError("coefficients: rho, mu must be positive; eps, eps_kernel, e_bound nonnegative");
    }

    const std::string mode = r.text("boundary", "mode", "dirichlet");
    check_choice(mode, {"dirichlet", "inhomogeneous", "leontovich"}, "boundary.mode");
    sc.mode = mode == "dirichlet"       ? BoundaryMode::Dirichlet
              : mode == "inhomogeneous" ? BoundaryMode::Inhomogeneous
                                        : BoundaryMode::Leontovich;
    sc.v_data = read_generator(r, "boundary.data", "v", 0.0);
    sc.E_data = read_generator(r, "boundary.data", "E", 0.0);
    sc.g0 = r.number("boundary.data", "g0", 0.0);
    sc.f1 = r.number("boundary.data", "f1", 0.0);
    if (sc.v_data.kind == "random" || sc.E_data.kind == "random") {
        throw ScenarioError("boundary.data: random generators are not supported for boundary data");
    }

    sc.Q_kind = r.text("leontovich", "Q", "random");
    check_choice(sc.Q_kind, {"zero", "scalar", "random"}, "leontovich.Q");
    sc.alpha_kind = r.text("leontovich", "alpha", "random");
    check_choice(sc.alpha_kind, {"zero", "scalar", "random"}, "leontovich.alpha");
    sc.q_scale = r.number("leontovich", "q_scale", 0.5);
    sc.alpha_scale = r.number("leontovich", "alpha_scale", 0.5);
    sc.leontovich_seed = static_cast<unsigned>(r.integer("leontovich", "seed", 11));
    if (sc.alpha_scale < 0.0) {
        throw ScenarioError("leontovich.alpha_scale must be nonnegative");
    }

    sc.source.kind = r.text("source", "kind", "zero");
    check_choice(sc.source.kind, {"zero", "step", "ramp", "sine", "gaussian", "random"}, "source.kind");
    sc.source.amplitude = r.number("source", "amplitude", 1.0);
    sc.source.t_on = r.number("source", "t_on", sc.time.t0);
    sc.source.center = r.number("source", "center", 0.5);
    sc.source.width = r.number("source", "width", 0.1);
    sc.source.omega = r.number("source", "omega", 1.0);
    sc.source.seed = static_cast<unsigned>(r.integer("source", "seed", 1));
    if (sc.source.width <= 0.0) {
        throw ScenarioError("source.width must be positive");
    }
    sc.source_field = r.text("source", "field", "all");
    check_choice(sc.source_field, {"v", "T", "E", "H", "all"}, "source.field");

    sc.out_dir = r.text("output", "dir", ".");
    sc.prefix = r.text("output", "prefix", name);

    sc.nu_range = r.list("verify", "nu_range", {1.0, 2.0, 4.0});
    for (double nu : sc.nu_range) {
        if (!(nu > 0.0)) {
            throw ScenarioError("verify.nu_range entries must be positive");
        }
    }
    sc.random_sources = r.integer("verify", "random_sources", 20);
    sc.allow_uncertified = r.flag("verify", "allow_uncertified", false);
    sc.verify_seed = static_cast<unsigned>(r.integer("verify", "seed", 3));
    return sc;
}

// ---------------------------------------------------------------- systems

PiezoSystem toy_system(const Scenario& sc)
{
    PiezoSystem s;
    if (sc.system == SystemType::Scalar) {
        s.evo.M0 = sparse_diag(Vec::Constant(1, sc.m0));
        s.evo.M1 = RationalFamily::zero(1);
        s.evo.M1.instant = sparse_diag(Vec::Constant(1, sc.m1));
        s.evo.A = SpMat(1, 1);
        s.evo.layout = StateLayout({{"u", 1}});
    } else {
        s.evo.M0 = sparse_diag(Vec::Ones(2));
        s.evo.M1 = RationalFamily::zero(2);
        Mat a(2, 2);
        a << 0.0, -1.0, 1.0, 0.0;
        s.evo.A = a.sparseView();
        s.evo.layout = StateLayout({{"u", 2}});
    }
    s.evo.validate();
    return s;
}

LeontovichParams scenario_params(const Scenario& sc, int nbG, int nbE)
{
    const LeontovichParams rnd = random_leontovich_params(nbG, nbE, sc.q_scale, sc.alpha_scale, sc.leontovich_seed);
    LeontovichParams p;
    if (sc.Q_kind == "zero") {
        p.Q = Mat::Zero(nbG, nbE);
    } else if (sc.Q_kind == "scalar") {
        p.Q = sc.q_scale * Mat::Identity(nbG, nbE);
    } else {
        p.Q = rnd.Q;
    }
    if (sc.alpha_kind == "zero") {
        p.alpha = Mat::Zero(nbG, nbG);
    } else if (sc.alpha_kind == "scalar") {
        p.alpha = sc.alpha_scale * Mat::Identity(nbG, nbG);
    } else {
        p.alpha = rnd.alpha;
    }
    return p;
}

bool is_piezo(const Scenario& sc)
{
    return sc.system == SystemType::Piezo;
}

// Block names carrying field sources, in layout order.
std::vector<std::string> field_blocks(const PiezoSystem& s)
{
    std::vector<std::string> out;
    for (const auto& b : s.evo.layout.blocks()) {
        out.push_back(b.name);
    }
    return out;
}

// sqrt of the quadrature weights of the dofs present in a block (nodal 1 -> scaled).
Vec block_profile(const PiezoSystem& s, const std::string& name)
{
    const Discretization& d = *s.disc;
    const Eigen::Index n = s.evo.layout.block(name).size;
    const FieldSpace* fs = name == "v" ? &d.v() : name == "T" ? &d.T() : name == "E" ? &d.E() : &d.H();
    Vec w = fs->weights().cwiseSqrt();
    if (w.size() != n) {
        const DofMask& m = name == "v" ? d.grad.mask : d.curl.mask;
        w = select(w, m.interior_dofs());
    }
    return w;
}

Trajectory source_trajectory(const Scenario& sc, const PiezoSystem& s, const TimeGrid& tg)
{
    Trajectory F(tg, s.evo.size());
    const Generator& g = sc.source;
    std::mt19937 gen(g.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto& lay = s.evo.layout;
    for (int n = 0; n < tg.n_steps; ++n) {
        const double t = tg.time(n);
        double p = 0.0;
        if (g.kind == "random") {
            p = t >= g.t_on ? g.amplitude : 0.0;
        } else if (g.kind != "zero") {
            p = g.value(t);
        }
        if (!is_piezo(sc)) {
            for (Eigen::Index i = 0; i < F.dim(); ++i) {
                F.step(n)[i] = g.kind == "random" ? p * nd(gen) : p;
            }
            continue;
        }
        for (const std::string& name : field_blocks(s)) {
            const auto& b = lay.block(name);
            double amp = 0.0;
            if (name == "tau_T") {
                amp = sc.g0;
            } else if (name == "tau_H") {
                amp = sc.f1;
            } else if (sc.source_field == "all" || sc.source_field == name) {
                amp = 1.0;
            }
            if (amp == 0.0) {
                continue;
            }
            Vec prof = name.rfind("tau", 0) == 0 ? Vec(Vec::Ones(b.size)) : block_profile(s, name);
            if (g.kind == "random") {
                for (Eigen::Index i = 0; i < prof.size(); ++i) {
                    prof[i] = nd(gen);
                }
            }
            F.step(n).segment(b.offset, b.size) = amp * p * prof;
        }
    }
    return F;
}

BoundaryData boundary_data(const Scenario& sc, const PiezoSystem& s, const TimeGrid& tg)
{
    const int nG = s.grad_bd->primal.dim();
    const int nE = s.curl_bd->primal.dim();
    BoundaryData d{Trajectory(tg, nG), Trajectory(tg, nE)};
    for (int n = 0; n < tg.n_steps; ++n) {
        const double t = tg.time(n);
        const double pv = sc.v_data.value(t);
        const double pE = sc.E_data.value(t);
        for (int k = 0; k < nG; ++k) {
            d.v_bnd.step(n)[k] = pv / (1.0 + k);
        }
        for (int k = 0; k < nE; ++k) {
            d.E_bnd.step(n)[k] = pE / (1.0 + k);
        }
    }
    return d;
}

struct Solved {
    SolveReport report;
    Trajectory F;
    Trajectory full; // reconstructed state (lifted problems) or the trajectory itself
    bool lifted = false;
};

Solved solve_scenario(const Scenario& sc, const PiezoSystem& s, const TimeGrid& tg)
{
    Solved out;
    out.F = source_trajectory(sc, s, tg);
    SolveOptions opt;
    opt.allow_uncertified = sc.allow_uncertified;
    if (!is_piezo(sc)) {
        Vec U0 = Vec::Zero(s.evo.size());
        U0[0] = sc.u0;
        const LiftedProblem lp = lift_initial_data(s.evo, U0, out.F);
        out.report = solve(s.evo, lp.rhs, opt);
        out.full = lp.reconstruct(out.report.trajectory);
        out.lifted = true;
    } else if (sc.mode == BoundaryMode::Inhomogeneous) {
        const LiftedProblem lp = lift_boundary_data(s, boundary_data(sc, s, tg), out.F);
        out.report = solve(s.evo, lp.rhs, opt);
        out.full = lp.reconstruct(out.report.trajectory);
        out.lifted = true;
    } else {
        out.report = solve(s.evo, out.F, opt);
        out.full = out.report.trajectory;
    }
    return out;
}

// Named segments of the state a run reports on.
std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> report_segments(const Scenario& sc,
                                                                                          const PiezoSystem& s)
{
    std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> out;
    if (!is_piezo(sc)) {
        out.push_back({"u", {0, s.evo.size()}});
    } else if (sc.mode == BoundaryMode::Inhomogeneous) {
        const Discretization& d = *s.disc;
        Eigen::Index o = 0;
        for (const auto& [name, n] : std::vector<std::pair<std::string, Eigen::Index>>{
                 {"v", d.v().size()}, {"T", d.T().size()}, {"E", d.E().size()}, {"H", d.H().size()}}) {
            out.push_back({name, {o, n}});
            o += n;
        }
    } else {
        for (const auto& b : s.evo.layout.blocks()) {
            out.push_back({b.name, {b.offset, b.size}});
        }
    }
    return out;
}

double relative(double a, double b)
{
    return a / std::max(b, std::numeric_limits<double>::min());
}

nlohmann::json check(double value, double tol, bool pass)
{
    nlohmann::json j;
    j["value"] = std::isfinite(value) ? nlohmann::json(value) : nlohmann::json(std::to_string(value));
    j["tol"] = tol;
    j["pass"] = pass;
    return j;
}

nlohmann::json at_most(double value, double tol)
{
    return check(value, tol, std::isfinite(value) && value <= tol);
}

nlohmann::json info(double value)
{
    nlohmann::json j;
    j["value"] = std::isfinite(value) ? nlohmann::json(value) : nlohmann::json(std::to_string(value));
    j["tol"] = nullptr;
    j["pass"] = true;
    return j;
}

Trajectory random_source(const TimeGrid& tg, Eigen::Index n, std::mt19937& gen)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    Trajectory F(tg, n);
    for (int k = 0; k < tg.n_steps; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            F.step(k)[i] = nd(gen);
        }
    }
    return F;
}

struct Trend {
    double h, unitarity, adjoint, basis_error;
};

Trend grad_trend_row(int cells, double length)
{
    const GridSpec g = GridSpec::box(1, {cells, 1, 1}, {length / cells, 1.0, 1.0});
    const BoundaryPairData bd = boundary_pair(g, PairKind::Grad);
    return {length / cells, unitarity_defect(bd.forward), adjoint_identity_report(bd.forward, bd.backward),
            grad_basis_error_1d(bd)};
}

template <typename Fn>
void parallel_for(int n, int threads, Fn fn)
{
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::mutex m;
    int next = 0;
    std::exception_ptr err;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                int i;
                {
                    std::lock_guard<std::mutex> lock(m);
                    if (next >= n || err) {
                        return;
                    }
                    i = next++;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(m);
                    err = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (err) {
        std::rethrow_exception(err);
    }
}

std::string mode_name(BoundaryMode m)
{
    switch (m) {
    case BoundaryMode::Dirichlet:
        return "dirichlet";
    case BoundaryMode::Inhomogeneous:
        return "inhomogeneous";
    case BoundaryMode::Leontovich:
        return "leontovich";
    }
    return "?";
}

} // namespace

double Generator::value(double t) const
{
    if (kind == "zero") {
        return 0.0;
    }
    if (kind == "step" || kind == "random") {
        return t >= t_on ? amplitude : 0.0;
    }
    if (kind == "ramp") {
        return t >= t_on ? amplitude * (t - t_on) : 0.0;
    }
    if (kind == "sine") {
        return amplitude * std::sin(omega * t);
    }
    if (kind == "gaussian") {
        const double s = (t - center) / width;
        return amplitude * std::exp(-0.5 * s * s);
    }
    throw Error(Error::Kind::InvalidInput, "Generator: unknown kind " + kind);
}

Scenario parse_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError("cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_string(ss.str(), path.stem().string());
}

Scenario parse_scenario_string(const std::string& text, const std::string& name)
{
    Tree tree;
    std::istringstream is(text);
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ScenarioError(std::string("syntax: ") + e.what());
    }
    return parse_tree(tree, name);
}

Coefficients scenario_coefficients(const Scenario& sc)
{
    const int dim = sc.grid.dim;
    Coefficients c = default_coefficients(dim, sc.e_bound, sc.e_seed);
    c.rho = FieldCoefficient::constant(sc.rho);
    c.eps = FieldCoefficient::constant(sc.eps);
    c.mu = FieldCoefficient::constant(sc.mu);
    c.sigma = FieldCoefficient::constant(sc.sigma);
    if (sc.eps_kernel > 0.0) {
        const int nE = FieldSpace::edges(sc.grid).size();
        c.eps.kernel.a = Mat::Constant(nE, 1, std::sqrt(sc.eps_kernel));
        c.eps.kernel.b = c.eps.kernel.a;
    }
    if (sc.C_kind == "isotropic") {
        c.C = {mandel_isotropic(dim, sc.C_lambda, sc.C_mu)};
    } else if (sc.C_kind == "tensor") {
        c.C = {mandel_from_tensor(sc.C_tensor, dim)};
    }
    return c;
}

PiezoSystem build_system(const Scenario& sc)
{
    if (!is_piezo(sc)) {
        return toy_system(sc);
    }
    const Coefficients coeffs = scenario_coefficients(sc);
    if (sc.mode == BoundaryMode::Leontovich) {
        auto gbd = std::make_shared<const BoundaryPairData>(boundary_pair(sc.grid, PairKind::Grad));
        auto cbd = std::make_shared<const BoundaryPairData>(boundary_pair(sc.grid, PairKind::Curl));
        const LeontovichParams p = scenario_params(sc, gbd->primal.dim(), cbd->primal.dim());
        return build_leontovich_system(sc.grid, coeffs, p, gbd, cbd);
    }
    PiezoSystem s = build_dirichlet_system(sc.grid, coeffs);
    if (sc.mode == BoundaryMode::Inhomogeneous) {
        s.mode = BoundaryMode::Inhomogeneous;
        attach_boundary_spaces(s);
    }
    return s;
}

RunOutput run_scenario(const Scenario& sc)
{
    PiezoSystem s;
    try {
        s = build_system(sc);
    } catch (const Error& e) {
        if (e.kind() == Error::Kind::InvalidInput || e.kind() == Error::Kind::DimensionMismatch) {
            throw RunError(ParseFailure, e.what());
        }
        throw RunError(SolverFailure, e.what());
    }
    const PosdefReport pr = certify(s.evo, {sc.time.nu});
    RunOutput out;
    out.c0 = pr.c0;
    out.certified = pr.well_posed;
    if (!pr.well_posed && !sc.allow_uncertified) {
        throw RunError(CertificationFailure,
                       "certification failed: c0 = " + format_double(pr.c0) + " at nu = " + format_double(sc.time.nu));
    }
    const TimeGrid& tg = sc.time;
    Solved sol;
    try {
        sol = solve_scenario(sc, s, tg);
    } catch (const Error& e) {
        throw RunError(SolverFailure, e.what());
    }

    const auto segs = report_segments(sc, s);
    const bool leon = is_piezo(sc) && sc.mode == BoundaryMode::Leontovich;
    out.columns.push_back("t");
    for (const auto& [name, seg] : segs) {
        out.columns.push_back("norm_" + name);
    }
    out.columns.push_back("weighted_cumulative");
    if (leon) {
        out.columns.push_back("boundary_residual");
    }
    Vec bres;
    if (leon) {
        bres = boundary_residual(s, sol.report, sol.F);
    }
    out.table.resize(tg.n_steps, static_cast<Eigen::Index>(out.columns.size()));
    double cum = 0.0;
    for (int n = 0; n < tg.n_steps; ++n) {
        const Vec u = sol.full.step(n);
        Eigen::Index c = 0;
        out.table(n, c++) = tg.time(n);
        for (const auto& [name, seg] : segs) {
            out.table(n, c++) = u.segment(seg.first, seg.second).norm();
        }
        cum += u.squaredNorm() * tg.weight(n);
        out.table(n, c++) = std::sqrt(cum);
        if (leon) {
            out.table(n, c++) = bres[n];
        }
    }

    const Vec last = sol.full.step(tg.n_steps - 1);
    for (const auto& [name, seg] : segs) {
        out.final_fields.push_back(name);
        if (!is_piezo(sc) || name.rfind("tau", 0) == 0) {
            out.final_values.push_back(last.segment(seg.first, seg.second));
        } else if (sol.lifted) {
            out.final_values.push_back(nodal_field_full(s, last, name));
        } else {
            out.final_values.push_back(nodal_field(s, last, name));
        }
    }
    return out;
}

std::pair<std::filesystem::path, std::filesystem::path> write_run(const Scenario& sc, const RunOutput& out)
{
    std::filesystem::create_directories(sc.out_dir);
    const auto main_path = sc.out_dir / (sc.prefix + ".csv");
    const auto final_path = sc.out_dir / (sc.prefix + "_final.csv");
    std::ofstream(main_path) << csv(out.columns, out.table);
    std::ofstream f(final_path);
    f << "field,index,value\n";
    for (std::size_t k = 0; k < out.final_fields.size(); ++k) {
        const Vec& v = out.final_values[k];
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            f << out.final_fields[k] << ',' << i << ',' << format_double(v[i]) << '\n';
        }
    }
    return {main_path, final_path};
}

Vec closed_form(const Scenario& sc, double t)
{
    // Backward Euler starts from the zero state at t0 - dt.
    const double s = t - (sc.time.t0 - sc.time.dt);
    if (sc.system == SystemType::Rotation) {
        Vec u(2);
        u << sc.u0 * std::cos(s), -sc.u0 * std::sin(s);
        return u;
    }
    require(sc.system == SystemType::Scalar, Error::Kind::InvalidInput, "closed_form: not a toy system");
    require(sc.source.kind == "zero" || sc.source.kind == "step", Error::Kind::InvalidInput,
            "closed_form: needs a zero or step source");
    const double k = sc.m1 / sc.m0;
    double u = sc.u0 * std::exp(-k * s);
    if (sc.source.kind == "step") {
        // The discrete step switches on at the first grid time >= t_on and acts on the
        // interval ending there.
        const double n_on = std::max(0.0, std::ceil((sc.source.t_on - sc.time.t0) / sc.time.dt - 1e-12));
        const double start = sc.time.t0 + (n_on - 1.0) * sc.time.dt;
        if (t > start) {
            const double f = sc.source.amplitude;
            const double r = t - start;
            u += sc.m1 != 0.0 ? f / sc.m1 * (1.0 - std::exp(-k * r)) : f / sc.m0 * r;
        }
    }
    return Vec::Constant(1, u);
}

nlohmann::json verify_scenario(const Scenario& sc)
{
    nlohmann::json rep;
    rep["scenario"] = sc.name;
    rep["system"] = is_piezo(sc) ? "piezo" : sc.system == SystemType::Scalar ? "scalar" : "rotation";
    rep["mode"] = mode_name(sc.mode);
    nlohmann::json& ck = rep["checks"];

    PiezoSystem s = build_system(sc);
    EvoSystem& evo = s.evo;
    const Eigen::Index n = evo.size();
    rep["system_size"] = n;
    ck["A_skew_defect"] = at_most(skew_defect(evo.A), 1e-13);
    ck["M0_symmetry_defect"] = at_most(symmetry_defect(evo.M0), 1e-13);

    const PosdefReport range = check_posdef(evo.M0, evo.M1, sc.nu_range);
    nlohmann::json per = nlohmann::json::array();
    double drop = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < range.per_nu.size(); ++k) {
        per.push_back({range.per_nu[k].first, range.per_nu[k].second});
        scale = std::max(scale, std::abs(range.per_nu[k].second));
        if (k > 0) {
            drop = std::max(drop, range.per_nu[k - 1].second - range.per_nu[k].second);
        }
    }
    rep["c0_per_nu"] = per;
    ck["c0_positive"] = check(range.c0, 0.0, range.c0 > 0.0);
    ck["c0_nondecreasing"] = at_most(drop, 1e-12 * std::max(1.0, scale));
    rep["null_dim"] = range.null_dim;
    ck["null_space_bound"] = range.null_dim > 0 ? check(range.null_bound, 0.0, range.null_bound > 0.0)
                                                : info(range.null_bound);
    const PosdefReport at_nu = certify(evo, {sc.time.nu});
    rep["well_posed"] = at_nu.well_posed;
    rep["c0"] = at_nu.c0;

    if (is_piezo(sc)) {
        const Discretization& d = *s.disc;
        if (sc.mode != BoundaryMode::Leontovich) {
            ck["grad_containment"] = at_most(containment_check(d.grad.hom, d.grad.full, d.grad.mask), 1e-14);
            ck["curl_containment"] = at_most(containment_check(d.curl.hom, d.curl.full, d.curl.mask), 1e-14);
        }
        // (T, E) block of M0 against diag(C^{-1}, eps).
        const MaterialBlocks mb = material_blocks(scenario_coefficients(sc), d);
        const Eigen::Index nT = mb.Cinv.rows();
        const Eigen::Index nE = mb.eps.rows();
        if (nT + nE <= 3000) {
            Mat block(nT + nE, nT + nE);
            block << Mat(mb.Cinv), Mat(mb.Cinv_e), Mat(mb.Cinv_e.transpose()), Mat(mb.eps_total);
            const auto gc = gauss_congruence<double>(block, nT);
            Mat target = Mat::Zero(nT + nE, nT + nE);
            target.topLeftCorner(nT, nT) = Mat(mb.Cinv);
            target.bottomRightCorner(nE, nE) = Mat(mb.eps);
            const double res = (gc.W * block * gc.W.transpose() - target).norm() / block.norm();
            ck["gauss_congruence_residual"] = at_most(res, 1e-12);
        }
        if (s.grad_bd && s.curl_bd) {
            const BoundaryPairData& g = *s.grad_bd;
            const BoundaryPairData& c = *s.curl_bd;
            ck["grad_bdspace_dim"] = check(g.primal.dim(), static_cast<double>(g.pair.mask.boundary_dofs.size()),
                                           g.primal.dim() == static_cast<int>(g.pair.mask.boundary_dofs.size()));
            ck["curl_bdspace_dim"] = check(c.primal.dim(), static_cast<double>(c.pair.mask.boundary_dofs.size()),
                                           c.primal.dim() == static_cast<int>(c.pair.mask.boundary_dofs.size()));
            ck["grad_dot_unitarity_defect"] = info(unitarity_defect(g.forward));
            ck["grad_dot_adjoint_defect"] = info(adjoint_identity_report(g.forward, g.backward));
            ck["curl_dot_skew_defect"] = info(relative_skew_defect(c.square));
        }
    }

    if (at_nu.well_posed || sc.allow_uncertified) {
        SolveOptions opt;
        opt.allow_uncertified = sc.allow_uncertified;
        std::mt19937 gen(sc.verify_seed);
        const TimeGrid& tg = sc.time;
        const Trajectory F = random_source(tg, n, gen);
        const double a = tg.time(tg.n_steps / 2);
        ck["causality_defect"] =
            at_most(relative(causality_defect(make_solver(evo, opt), F, a), weighted_norm(F)), 1e-14);
        double worst = 0.0;
        double res = 0.0;
        for (int k = 0; k < sc.random_sources; ++k) {
            const Trajectory Fk = random_source(tg, n, gen);
            const SolveReport r = solve(evo, Fk, opt);
            worst = std::max(worst, r.stability_ratio);
            res = std::max(res, r.residual_max);
        }
        if (sc.random_sources > 0) {
            ck["stability_ratio_max"] = at_most(worst, (1.0 + 1e-6) / at_nu.c0);
            ck["solver_residual_max"] = at_most(res, 1e-8);
        }

        if (n <= 600) {
            Mat W = Mat::Identity(n, n);
            std::normal_distribution<double> nd(0.0, 1.0);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j) {
                    W(i, j) += 0.3 * nd(gen) / std::sqrt(static_cast<double>(n));
                }
            }
            EvoSystem tr = congruence_transform(evo, W);
            const PosdefReport tp = certify(tr, {tg.nu});
            const Trajectory U = solve(evo, F, opt).trajectory;
            const Trajectory WF(tg, Mat(W * F.values()));
            SolveOptions topt = opt;
            topt.allow_uncertified = true;
            const Trajectory V = solve(tr, WF, topt).trajectory;
            const Mat expected = W.transpose().partialPivLu().solve(U.values());
            ck["congruence_solution_defect"] =
                at_most(relative((V.values() - expected).norm(), expected.norm()), 1e-8);
            const double winv = W.inverse().transpose().jacobiSvd().singularValues()(0);
            const double bound = at_nu.c0 / (winv * winv) - 1e-10;
            ck["congruence_c0_bound"] = check(tp.c0, bound, tp.c0 >= bound);
        }

        if (is_piezo(sc) && sc.mode == BoundaryMode::Leontovich) {
            const Trajectory Fs = source_trajectory(sc, s, tg);
            const SolveReport r = solve(evo, Fs, opt);
            const Vec br = boundary_residual(s, r, Fs);
            ck["boundary_residual_max"] = at_most(br.size() ? br.maxCoeff() : 0.0, 1e-8);
            const auto [eT, eH] = tau_consistency(s, r.trajectory);
            ck["tau_T_consistency"] = info(eT.size() ? eT.maxCoeff() : 0.0);
            ck["tau_H_consistency"] = info(eH.size() ? eH.maxCoeff() : 0.0);
        }
        if (is_piezo(sc) && sc.mode == BoundaryMode::Inhomogeneous) {
            const Trajectory Fs = source_trajectory(sc, s, tg);
            const BoundaryData bd = boundary_data(sc, s, tg);
            const LiftedProblem lp = lift_boundary_data(s, bd, Fs);
            const Trajectory full = lp.reconstruct(solve(evo, lp.rhs, opt).trajectory);
            const Discretization& d = *s.disc;
            double mismatch = 0.0;
            for (int k = 0; k < tg.n_steps; ++k) {
                const Vec v = nodal_field_full(s, full.step(k), "v");
                const Vec E = nodal_field_full(s, full.step(k), "E");
                const Vec vb = embed(s.grad_bd->primal, bd.v_bnd.step(k));
                const Vec Eb = embed(s.curl_bd->primal, bd.E_bnd.step(k));
                for (int i : d.grad.mask.boundary_dofs) {
                    mismatch = std::max(mismatch, std::abs(v[i] - vb[i]));
                }
                for (int i : d.curl.mask.boundary_dofs) {
                    mismatch = std::max(mismatch, std::abs(E[i] - Eb[i]));
                }
            }
            ck["boundary_dof_mismatch"] = at_most(mismatch, 1e-12);
        }
    }

    if (is_piezo(sc) && s.grad_bd) {
        const BoundaryPairData& g = *s.grad_bd;
        if (sc.mode == BoundaryMode::Inhomogeneous) {
            // Grad iota c = iota_Div (Grad dot c) on every coordinate vector.
            const Mat lhs = g.pair.full.matrix * g.primal.basis;
            const Mat rhs = g.dual.basis * g.forward.matrix;
            ck["grad_lift_identity"] = at_most(relative((lhs - rhs).norm(), lhs.norm()), 1e-12);
        }
    }

    if (is_piezo(sc) && sc.mode == BoundaryMode::Leontovich) {
        const Mat& c = s.curl_bd->square.matrix;
        double worst = 0.0;
        for (double z : {0.0, 0.1, 0.5}) {
            const Mat S = S_of_z<double>(s.params.Q, s.params.alpha, c, z);
            const Mat O = S_original<double>(s.params.Q, s.params.alpha, c, z);
            worst = std::max(worst, (S * O - Mat::Identity(S.rows(), S.cols())).norm());
        }
        ck["S_identity_residual"] = at_most(worst, 1e-10);
        ck["curl_dot_square_defect"] = info((c * c + Mat::Identity(c.rows(), c.cols())).norm());
        const Mat S0 = S_of_z<double>(s.params.Q, s.params.alpha, c, 0.0);
        const Mat sym = 0.5 * (S0 + S0.transpose());
        const double lam = sym.size() ? Eigen::SelfAdjointEigenSolver<Mat>(sym).eigenvalues().minCoeff()
                                      : std::numeric_limits<double>::infinity();
        ck["sym_S0_min_eigenvalue"] = check(lam, 0.0, lam > 0.0);
    }

    if (!is_piezo(sc)) {
        const TimeGrid& tg = sc.time;
        Vec U0 = Vec::Zero(n);
        U0[0] = sc.u0;
        if (sc.source.kind == "zero" || sc.source.kind == "step" || sc.system == SystemType::Rotation) {
            SolveOptions opt;
            opt.allow_uncertified = true;
            const Trajectory F = source_trajectory(sc, s, tg);
            if (sc.system == SystemType::Scalar || weighted_norm(F) == 0.0) {
                const LiftedProblem lp = lift_initial_data(evo, U0, F);
                const Trajectory full = lp.reconstruct(solve(evo, lp.rhs, opt).trajectory);
                double err = 0.0;
                for (int k = 0; k < tg.n_steps; ++k) {
                    err = std::max(err, (Vec(full.step(k)) - closed_form(sc, tg.time(k))).norm());
                }
                ck["closed_form_error"] = info(err);
            }
        }
    }

    if (is_piezo(sc) && sc.grid.dim == 1 && !sc.grid.masked()) {
        const double L = sc.grid.cells[0] * sc.grid.h[0];
        nlohmann::json table = nlohmann::json::array();
        std::vector<Trend> rows;
        for (int cells : {8, 16, 32, 64}) {
            rows.push_back(grad_trend_row(cells, L));
            table.push_back({{"h", rows.back().h},
                             {"unitarity_defect", rows.back().unitarity},
                             {"adjoint_defect", rows.back().adjoint},
                             {"basis_error", rows.back().basis_error}});
        }
        rep["grad_refinement"] = table;
        double min_u = std::numeric_limits<double>::infinity();
        double min_a = min_u;
        for (std::size_t k = 1; k < rows.size(); ++k) {
            min_u = std::min(min_u, rows[k - 1].unitarity / rows[k].unitarity);
            min_a = std::min(min_a, rows[k - 1].adjoint / rows[k].adjoint);
        }
        ck["grad_unitarity_trend"] = check(min_u, 1.5, min_u >= 1.5);
        ck["grad_adjoint_trend"] = check(min_a, 1.5, min_a >= 1.5);
        const double order = std::log2(rows[0].basis_error / rows[2].basis_error) / 2.0;
        ck["grad_basis_order"] = check(order, 1.9, order >= 1.9);
    }

    bool all = true;
    for (const auto& [k, v] : ck.items()) {
        all = all && v["pass"].get<bool>();
    }
    rep["all_pass"] = all;
    return rep;
}

SweepTable sweep_scenario(const Scenario& sc, const std::string& axis, const std::vector<double>& values, int threads)
{
    require(!values.empty(), Error::Kind::InvalidInput, "sweep: no values");
    for (double v : values) {
        require(std::isfinite(v) && v > 0.0, Error::Kind::InvalidInput, "sweep: values must be positive");
    }
    const int m = static_cast<int>(values.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    SweepTable out;
    if (axis == "nu") {
        const PiezoSystem s = build_system(sc);
        out.columns = {"nu", "c0", "nondecreasing"};
        out.rows = Mat::Constant(m, 3, nan);
        parallel_for(m, threads, [&](int i) {
            const PosdefReport r = check_posdef(s.evo.M0, s.evo.M1, {values[i]});
            out.rows(i, 0) = values[i];
            out.rows(i, 1) = r.c0;
        });
        for (int i = 0; i < m; ++i) {
            out.rows(i, 2) = i == 0 ? 1.0 : (out.rows(i, 1) >= out.rows(i - 1, 1) ? 1.0 : 0.0);
        }
        return out;
    }
    if (axis == "dt") {
        out.columns = {"dt", "n_steps", "t_final", "final_norm", "error", "order", "error_decreasing"};
        out.rows = Mat::Constant(m, 7, nan);
        const double window = sc.time.n_steps * sc.time.dt;
        std::vector<Vec> finals(m);
        parallel_for(m, threads, [&](int i) {
            Scenario s2 = sc;
            s2.time.dt = values[i];
            s2.time.n_steps = std::max(1, static_cast<int>(std::lround(window / values[i])));
            PiezoSystem s = build_system(s2);
            certify(s.evo, {s2.time.nu});
            const Solved sol = solve_scenario(s2, s, s2.time);
            finals[i] = sol.full.step(s2.time.n_steps - 1);
            const double tf = s2.time.time(s2.time.n_steps - 1);
            out.rows(i, 0) = values[i];
            out.rows(i, 1) = s2.time.n_steps;
            out.rows(i, 2) = tf;
            out.rows(i, 3) = finals[i].norm();
            if (!is_piezo(sc) && (sc.system == SystemType::Rotation || sc.source.kind == "zero" ||
                                  sc.source.kind == "step")) {
                out.rows(i, 4) = (finals[i] - closed_form(s2, tf)).norm();
            }
        });
        if (is_piezo(sc)) {
            // Against the finest dt.
            const int best = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
            for (int i = 0; i < m; ++i) {
                if (i != best && finals[i].size() == finals[best].size()) {
                    out.rows(i, 4) = (finals[i] - finals[best]).norm();
                }
            }
        }
        for (int i = 1; i < m; ++i) {
            const double e0 = out.rows(i - 1, 4), e1 = out.rows(i, 4);
            if (e0 > 0.0 && e1 > 0.0) {
                out.rows(i, 5) = std::log(e0 / e1) / std::log(values[i - 1] / values[i]);
                out.rows(i, 6) = e1 <= e0 ? 1.0 : 0.0;
            }
        }
        return out;
    }
    if (axis == "h") {
        require(is_piezo(sc), Error::Kind::InvalidInput, "sweep: h axis needs a piezo scenario");
        out.columns = {"h",           "grad_dim",   "curl_dim",   "grad_unitarity", "grad_adjoint",
                       "curl_skew",   "basis_error", "basis_order", "unitarity_ratio", "adjoint_ratio",
                       "curl_skew_decreasing"};
        out.rows = Mat::Constant(m, static_cast<Eigen::Index>(out.columns.size()), nan);
        parallel_for(m, threads, [&](int i) {
            GridSpec g = sc.grid;
            Index3 cells{1, 1, 1};
            std::array<double, 3> h{1.0, 1.0, 1.0};
            for (int a = 0; a < g.dim; ++a) {
                const double L = g.cells[a] * g.h[a];
                cells[a] = std::max(2, static_cast<int>(std::lround(L / values[i])));
                h[a] = L / cells[a];
            }
            g = GridSpec::box(g.dim, cells, h);
            const BoundaryPairData gb = boundary_pair(g, PairKind::Grad);
            const BoundaryPairData cb = boundary_pair(g, PairKind::Curl);
            out.rows(i, 0) = values[i];
            out.rows(i, 1) = gb.primal.dim();
            out.rows(i, 2) = cb.primal.dim();
            out.rows(i, 3) = unitarity_defect(gb.forward);
            out.rows(i, 4) = adjoint_identity_report(gb.forward, gb.backward);
            out.rows(i, 5) = relative_skew_defect(cb.square);
            if (g.dim == 1) {
                out.rows(i, 6) = grad_basis_error_1d(gb);
            }
        });
        for (int i = 1; i < m; ++i) {
            const double q = std::log(values[i - 1] / values[i]);
            if (out.rows(i, 6) > 0.0 && out.rows(i - 1, 6) > 0.0) {
                out.rows(i, 7) = std::log(out.rows(i - 1, 6) / out.rows(i, 6)) / q;
            }
            out.rows(i, 8) = out.rows(i - 1, 3) / out.rows(i, 3);
            out.rows(i, 9) = out.rows(i - 1, 4) / out.rows(i, 4);
            out.rows(i, 10) = out.rows(i, 5) < out.rows(i - 1, 5) ? 1.0 : 0.0;
        }
        return out;
    }
    throw Error(Error::Kind::InvalidInput, "sweep: unknown axis '" + axis + "' (h | dt | nu)");
}

BdspaceDump bdspace_scenario(const Scenario& sc, int max_columns)
{
    require(is_piezo(sc), Error::Kind::InvalidInput, "bdspace: needs a piezo scenario");
    const BoundaryPairData g = boundary_pair(sc.grid, PairKind::Grad);
    const BoundaryPairData c = boundary_pair(sc.grid, PairKind::Curl);
    BdspaceDump out;
    auto& s = out.summary;
    s.emplace_back("grad_mask_size", static_cast<double>(g.pair.mask.boundary_dofs.size()));
    s.emplace_back("grad_primal_dim", g.primal.dim());
    s.emplace_back("grad_dual_dim", g.dual.dim());
    s.emplace_back("curl_mask_size", static_cast<double>(c.pair.mask.boundary_dofs.size()));
    s.emplace_back("curl_primal_dim", c.primal.dim());
    s.emplace_back("curl_dual_dim", c.dual.dim());
    s.emplace_back("grad_dot_unitarity_defect", unitarity_defect(g.forward));
    s.emplace_back("grad_dot_adjoint_defect", adjoint_identity_report(g.forward, g.backward));
    s.emplace_back("div_dot_unitarity_defect", unitarity_defect(g.backward));
    s.emplace_back("curl_dot_forward_unitarity_defect", unitarity_defect(c.forward));
    s.emplace_back("curl_dot_skew_defect", relative_skew_defect(c.square));
    if (sc.grid.dim == 1 && !sc.grid.masked()) {
        s.emplace_back("grad_basis_error", grad_basis_error_1d(g));
    }
    for (const auto& [name, bs] : {std::pair<std::string, const BoundarySpace*>{"grad", &g.primal},
                                   std::pair<std::string, const BoundarySpace*>{"curl", &c.primal}}) {
        const int k = std::min(max_columns, bs->dim());
        for (int j = 0; j < k; ++j) {
            for (Eigen::Index i = 0; i < bs->ambient(); ++i) {
                out.basis_columns.push_back(name + ',' + std::to_string(j) + ',' + std::to_string(i) + ',' +
                                            format_double(bs->basis(i, j)));
            }
        }
    }
    return out;
}

double grad_basis_error_1d(const BoundaryPairData& bd)
{
    const FieldSpace& v = bd.pair.dom_space;
    const GridSpec& g = v.grid();
    require(g.dim == 1 && !g.masked(), Error::Kind::InvalidInput, "grad_basis_error_1d: needs an unmasked 1D grid");
    const auto& bdofs = bd.pair.mask.boundary_dofs;
    require(bdofs.size() == 2 && bd.primal.dim() == 2, Error::Kind::Internal, "grad_basis_error_1d: expected dim 2");
    const double L = g.cells[0] * g.h[0];
    const Mat& B = bd.primal.basis;
    Mat Bb(2, 2);
    Vec xb(2);
    for (int r = 0; r < 2; ++r) {
        Bb.row(r) = B.row(bdofs[r]);
        xb[r] = v.locate(bdofs[r]).second[0] * g.h[0];
    }
    // Extension columns with unit value at one end.
    const Mat ext = B * Bb.inverse();
    double err = 0.0;
    for (Eigen::Index i = 0; i < B.rows(); ++i) {
        const double x = v.locate(static_cast<int>(i)).second[0] * g.h[0];
        for (int r = 0; r < 2; ++r) {
            const double exact = xb[r] == 0.0 ? std::sinh(L - x) / std::sinh(L) : std::sinh(x) / std::sinh(L);
            err = std::max(err, std::abs(ext(i, r) - exact));
        }
    }
    return err;
}

std::string format_double(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv(const std::vector<std::string>& columns, const Mat& rows)
{
    std::ostringstream os;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        os << (c ? "," : "") << columns[c];
    }
    os << '\n';
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            os << (c ? "," : "") << format_double(rows(r, c));
        }
        os << '\n';
    }
    return os.str();
}

int thread_count_from_env()
{
    const char* s = std::getenv("PIEZO_THREADS");
    if (!s || !*s) {
        return 1;
    }
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (*end != '\0' || v < 1 || v > 256) {
        return 1;
    }
    return static_cast<int>(v);
}

} // namespace piezo
