#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dblsim/analysis.hpp"
#include "dblsim/linear.hpp"
#include "dblsim/model.hpp"
#include "dblsim/netlist.hpp"

namespace dblsim {

struct NewtonOptions {
    int max_iter = 100;
    double abstol = 1e-12;   // A
    double reltol = 1e-6;
    double vntol = 1e-9;     // V
    double gmin = 1e-12;     // S, every node to ground
    double damping = 0.5;    // max node-voltage step per iteration, V

    void validate() const {
        if (max_iter < 1 || !(abstol > 0.0) || !(reltol > 0.0) ||
            !(vntol > 0.0) || !(gmin > 0.0) || !(damping > 0.0))
            throw std::invalid_argument("NewtonOptions: all fields must be positive");
        if (!(reltol < 1.0))
            throw std::invalid_argument("NewtonOptions: reltol must be below 1");
    }
};

struct OperatingPoint {
    std::vector<double> node_voltages;  // aligned with circuit.nodes, [0] = ground
    std::vector<std::pair<std::string, double>> source_currents;
    int iterations = 0;
    bool converged = false;
    double worst_residual = 0.0;
    double worst_residual_bound = 0.0;
    std::string worst_node;
    std::string message;
};

inline double node_voltage(const Circuit& c, const OperatingPoint& op,
                           const std::string& name) {
    auto it = c.node_index.find(to_lower(name));
    if (it == c.node_index.end())
        throw std::invalid_argument("unknown node '" + name + "'");
    return op.node_voltages.at(static_cast<size_t>(it->second));
}

inline double source_current(const OperatingPoint& op, const std::string& name) {
    const std::string low = to_lower(name);
    for (const auto& [n, i] : op.source_currents)
        if (n == low) return i;
    throw std::invalid_argument("unknown source '" + name + "'");
}

enum class Integrator { BackwardEuler, Trapezoidal };

struct TranOptions {
    double tstep = 0.0;
    double tstop = 0.0;
    Integrator integrator = Integrator::Trapezoidal;
    bool uic = false;  // skip the t=0 operating point; start from zero state
    NewtonOptions newton{};
};

struct TranError : std::runtime_error {
    double t;
    std::string node;
    TranError(double t_, std::string node_, const std::string& what_)
        : std::runtime_error(what_), t(t_), node(std::move(node_)) {}
};

struct TranResult {
    std::vector<std::string> node_names;  // non-ground, circuit node order
    std::vector<Waveform> waveforms;      // parallel to node_names

    const Waveform& node(const std::string& name) const {
        const std::string low = to_lower(name);
        for (size_t i = 0; i < node_names.size(); ++i)
            if (node_names[i] == low) return waveforms[i];
        throw std::invalid_argument("no waveform for node '" + name + "'");
    }
};

struct SweepPoint {
    double value = 0.0;
    OperatingPoint op;
};

// ---------------------------------------------------------------------------
// MNA assembly
// ---------------------------------------------------------------------------

namespace detail {

struct MosInstance {
    std::string name;
    const MosModelCard* card;
    MosGeometry geom;
    int d, g, s;
};
struct ResInstance {
    std::string name;
    int a, b;
    double g;
};
struct CapInstance {
    std::string name;
    int a, b;
    double farads;
};
struct VsrcInstance {
    std::string name;
    int np, nn;
    double dc;
    std::optional<SinSpec> sin;
};
struct IsrcInstance {
    std::string name;
    int np, nn;
    double amperes;
};
struct CccsInstance {
    std::string name;
    int np, nn, ctrl;  // ctrl: index into vsrc list
    double gain;
};

/// Unknown layout: x[0..N-2] are voltages of nodes 1..N-1, followed by one
/// branch current per voltage source. Node equations sum currents leaving
/// the node; a source's branch current flows np -> nn through the source.
class Mna {
public:
    explicit Mna(const Circuit& c) : circuit_(&c) {
        if (!c.validated)
            throw std::invalid_argument("engine requires a validated circuit");
        node_count_ = static_cast<int>(c.nodes.size());

        auto idx = [&](const std::string& n) { return c.node_index.at(n); };
        for (const Element& e : c.elements) {
            if (const auto* m = std::get_if<MosElement>(&e)) {
                const MosModelCard& card = c.models.at(m->model);
                mos_.push_back({m->name, &card, {m->w, m->l}, idx(m->drain),
                                idx(m->gate), idx(m->source)});
            } else if (const auto* r = std::get_if<ResistorElement>(&e)) {
                res_.push_back({r->name, idx(r->n1), idx(r->n2), 1.0 / r->ohms});
            } else if (const auto* cap = std::get_if<CapacitorElement>(&e)) {
                caps_.push_back({cap->name, idx(cap->n1), idx(cap->n2), cap->farads});
            } else if (const auto* v = std::get_if<VSourceElement>(&e)) {
                vsrc_.push_back({v->name, idx(v->np), idx(v->nn), v->dc, v->sin});
            } else if (const auto* i = std::get_if<ISourceElement>(&e)) {
                isrc_.push_back({i->name, idx(i->np), idx(i->nn), i->amperes});
            }
        }
        for (const Element& e : c.elements) {
            if (const auto* f = std::get_if<CccsElement>(&e)) {
                int ctrl = -1;
                for (size_t j = 0; j < vsrc_.size(); ++j)
                    if (vsrc_[j].name == f->control) ctrl = static_cast<int>(j);
                if (ctrl < 0)
                    throw std::logic_error("cccs control source not found: " +
                                           f->control);
                cccs_.push_back({f->name, idx(f->np), idx(f->nn), ctrl, f->gain});
            }
        }
    }

    const Circuit& circuit() const { return *circuit_; }
    int node_count() const { return node_count_; }
    int num_vsrc() const { return static_cast<int>(vsrc_.size()); }
    int unknowns() const { return node_count_ - 1 + num_vsrc(); }
    bool nonlinear() const { return !mos_.empty(); }
    bool has_caps() const { return !caps_.empty(); }
    const std::vector<VsrcInstance>& vsrcs() const { return vsrc_; }
    const std::vector<CapInstance>& caps() const { return caps_; }

    int vsrc_index(const std::string& name) const {
        for (size_t j = 0; j < vsrc_.size(); ++j)
            if (vsrc_[j].name == name) return static_cast<int>(j);
        return -1;
    }

    double volt(const std::vector<double>& x, int node) const {
        return node == 0 ? 0.0 : x[static_cast<size_t>(node) - 1];
    }
    double branch_current(const std::vector<double>& x, int j) const {
        return x[static_cast<size_t>(node_count_) - 1 + j];
    }

    struct SourceValues {
        std::vector<double> v;  // per vsrc
        std::vector<double> i;  // per isrc
    };

    SourceValues source_values(double t, double alpha = 1.0) const {
        SourceValues sv;
        sv.v.reserve(vsrc_.size());
        for (const auto& s : vsrc_) {
            double val = s.dc;
            if (s.sin)
                val = s.sin->offset +
                      s.sin->amplitude * std::sin(2.0 * kPi * s.sin->freq * t);
            sv.v.push_back(alpha * val);
        }
        sv.i.reserve(isrc_.size());
        for (const auto& s : isrc_) sv.i.push_back(alpha * s.amperes);
        return sv;
    }

    /// Per-capacitor companion values for the current timestep.
    struct CapCompanion {
        std::vector<double> geq;    // conductance
        std::vector<double> ihist;  // history current source
    };

    CapCompanion companion(const std::vector<double>& v_prev,
                           const std::vector<double>& i_prev, double dt,
                           Integrator integ) const {
        CapCompanion cc;
        cc.geq.resize(caps_.size());
        cc.ihist.resize(caps_.size());
        for (size_t j = 0; j < caps_.size(); ++j) {
            if (integ == Integrator::Trapezoidal) {
                cc.geq[j] = 2.0 * caps_[j].farads / dt;
                cc.ihist[j] = cc.geq[j] * v_prev[j] + i_prev[j];
            } else {
                cc.geq[j] = caps_[j].farads / dt;
                cc.ihist[j] = cc.geq[j] * v_prev[j];
            }
        }
        return cc;
    }

    void assemble(const std::vector<double>& x, const SourceValues& sv,
                  double gmin, const CapCompanion* caps, DenseMatrix& a,
                  std::vector<double>& z) const {
        const int n = unknowns();
        a.zero();
        z.assign(static_cast<size_t>(n), 0.0);

        auto row = [&](int node) { return node - 1; };  // ground rows skipped

        auto stamp_g = [&](int p, int q, double g) {
            if (p != 0) {
                a(row(p), row(p)) += g;
                if (q != 0) a(row(p), row(q)) -= g;
            }
            if (q != 0) {
                a(row(q), row(q)) += g;
                if (p != 0) a(row(q), row(p)) -= g;
            }
        };

        for (const auto& r : res_) stamp_g(r.a, r.b, r.g);

        if (caps) {
            for (size_t j = 0; j < caps_.size(); ++j) {
                stamp_g(caps_[j].a, caps_[j].b, caps->geq[j]);
                if (caps_[j].a != 0) z[row(caps_[j].a)] += caps->ihist[j];
                if (caps_[j].b != 0) z[row(caps_[j].b)] -= caps->ihist[j];
            }
        }

        for (size_t j = 0; j < isrc_.size(); ++j) {
            const auto& s = isrc_[j];
            if (s.np != 0) z[row(s.np)] -= sv.i[j];
            if (s.nn != 0) z[row(s.nn)] += sv.i[j];
        }

        for (size_t j = 0; j < vsrc_.size(); ++j) {
            const auto& s = vsrc_[j];
            const int br = node_count_ - 1 + static_cast<int>(j);
            if (s.np != 0) {
                a(row(s.np), br) += 1.0;
                a(br, row(s.np)) += 1.0;
            }
            if (s.nn != 0) {
                a(row(s.nn), br) -= 1.0;
                a(br, row(s.nn)) -= 1.0;
            }
            z[static_cast<size_t>(br)] = sv.v[j];
        }

        for (const auto& f : cccs_) {
            const int br = node_count_ - 1 + f.ctrl;
            if (f.np != 0) a(row(f.np), br) += f.gain;
            if (f.nn != 0) a(row(f.nn), br) -= f.gain;
        }

        for (const auto& m : mos_) {
            const double vg = volt(x, m.g), vd = volt(x, m.d), vs = volt(x, m.s);
            const MosEval e = mos_eval(*m.card, m.geom, vg - vs, vd - vs);
            const double ieq =
                e.id - e.gm * (vg - vs) - e.gds * (vd - vs);
            if (m.d != 0) {
                a(row(m.d), row(m.d)) += e.gds;
                if (m.g != 0) a(row(m.d), row(m.g)) += e.gm;
                if (m.s != 0) a(row(m.d), row(m.s)) -= e.gm + e.gds;
                z[row(m.d)] -= ieq;
            }
            if (m.s != 0) {
                a(row(m.s), row(m.s)) += e.gm + e.gds;
                if (m.g != 0) a(row(m.s), row(m.g)) -= e.gm;
                if (m.d != 0) a(row(m.s), row(m.d)) -= e.gds;
                z[row(m.s)] += ieq;
            }
        }

        for (int node = 1; node < node_count_; ++node)
            a(row(node), row(node)) += gmin;
    }

    struct Residual {
        bool ok = true;
        int worst_node = 0;       // circuit node index
        double worst_abs = 0.0;   // |sum of currents| there
        double worst_bound = 0.0; // abstol + reltol*scale there
    };

    /// True KCL at x: devices re-evaluated nonlinearly, not linearized.
    Residual kcl_residual(const std::vector<double>& x, const SourceValues& sv,
                          double gmin, const CapCompanion* caps,
                          const NewtonOptions& opt) const {
        std::vector<double> res(static_cast<size_t>(node_count_), 0.0);
        std::vector<double> scale(static_cast<size_t>(node_count_), 0.0);

        auto add = [&](int p, int q, double current) {
            if (p != 0) {
                res[p] += current;
                scale[p] += std::fabs(current);
            }
            if (q != 0) {
                res[q] -= current;
                scale[q] += std::fabs(current);
            }
        };

        for (const auto& r : res_) add(r.a, r.b, r.g * (volt(x, r.a) - volt(x, r.b)));
        if (caps)
            for (size_t j = 0; j < caps_.size(); ++j)
                add(caps_[j].a, caps_[j].b,
                    caps->geq[j] * (volt(x, caps_[j].a) - volt(x, caps_[j].b)) -
                        caps->ihist[j]);
        for (size_t j = 0; j < isrc_.size(); ++j)
            add(isrc_[j].np, isrc_[j].nn, sv.i[j]);
        for (size_t j = 0; j < vsrc_.size(); ++j)
            add(vsrc_[j].np, vsrc_[j].nn,
                branch_current(x, static_cast<int>(j)));
        for (const auto& f : cccs_)
            add(f.np, f.nn, f.gain * branch_current(x, f.ctrl));
        for (const auto& m : mos_) {
            const double vg = volt(x, m.g), vd = volt(x, m.d), vs = volt(x, m.s);
            const MosEval e = mos_eval(*m.card, m.geom, vg - vs, vd - vs);
            add(m.d, m.s, e.id);
        }
        for (int node = 1; node < node_count_; ++node) {
            const double i = gmin * volt(x, node);
            res[node] += i;
            scale[node] += std::fabs(i);
        }

        Residual out;
        double worst_ratio = -1.0;
        for (int node = 1; node < node_count_; ++node) {
            const double bound = opt.abstol + opt.reltol * scale[node];
            const double r = std::fabs(res[node]);
            if (r > bound) out.ok = false;
            const double ratio = r / bound;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                out.worst_node = node;
                out.worst_abs = r;
                out.worst_bound = bound;
            }
        }
        return out;
    }

    std::string unknown_name(int row) const {
        if (row < node_count_ - 1) return circuit_->nodes[static_cast<size_t>(row) + 1];
        return "branch i(" + vsrc_[static_cast<size_t>(row - (node_count_ - 1))].name + ")";
    }

private:
    const Circuit* circuit_;
    int node_count_ = 0;
    std::vector<MosInstance> mos_;
    std::vector<ResInstance> res_;
    std::vector<CapInstance> caps_;
    std::vector<VsrcInstance> vsrc_;
    std::vector<IsrcInstance> isrc_;
    std::vector<CccsInstance> cccs_;
};

struct NewtonOutcome {
    bool converged = false;
    int iterations = 0;
    Mna::Residual residual;
    std::string message;
};

/// Newton-Raphson on the MNA equations. Linear circuits are solved with a
/// single factorization (one iteration by construction); nonlinear solves
/// require both a small voltage update and a satisfied KCL residual.
inline NewtonOutcome newton_solve(const Mna& m, std::vector<double>& x,
                                  const Mna::SourceValues& sv, double gmin,
                                  const NewtonOptions& opt,
                                  const Mna::CapCompanion* caps) {
    NewtonOutcome out;
    const int n = m.unknowns();
    if (static_cast<int>(x.size()) != n) x.assign(static_cast<size_t>(n), 0.0);
    if (n == 0) {
        out.converged = true;
        out.iterations = 1;
        return out;
    }

    DenseMatrix a(n);
    std::vector<double> z;

    if (!m.nonlinear()) {
        try {
            m.assemble(x, sv, gmin, caps, a, z);
            x = linear_solve(std::move(a), std::move(z));
        } catch (const SingularMatrixError& e) {
            out.message = "singular matrix at " + m.unknown_name(e.pivot_index) +
                          ": check for floating nodes or conflicting sources";
            return out;
        }
        out.iterations = 1;
        out.residual = m.kcl_residual(x, sv, gmin, caps, opt);
        out.converged = out.residual.ok;
        if (!out.converged)
            out.message = "linear solve left KCL residual " +
                          format_double(out.residual.worst_abs) + " A at node " +
                          m.circuit().nodes[static_cast<size_t>(out.residual.worst_node)];
        return out;
    }

    const int nv = m.node_count() - 1;
    for (int iter = 1; iter <= opt.max_iter; ++iter) {
        std::vector<double> xnew;
        try {
            m.assemble(x, sv, gmin, caps, a, z);
            xnew = linear_solve(a, z);
        } catch (const SingularMatrixError& e) {
            out.message = "singular matrix at " + m.unknown_name(e.pivot_index) +
                          ": check for floating nodes or conflicting sources";
            out.iterations = iter;
            return out;
        }

        bool delta_ok = true;
        for (int i = 0; i < nv; ++i) {
            double d = xnew[i] - x[i];
            if (std::fabs(d) > opt.vntol + opt.reltol * std::fabs(xnew[i]))
                delta_ok = false;
            if (d > opt.damping) d = opt.damping;
            if (d < -opt.damping) d = -opt.damping;
            xnew[i] = x[i] + d;
        }

        x = std::move(xnew);
        out.iterations = iter;
        out.residual = m.kcl_residual(x, sv, gmin, caps, opt);
        if (delta_ok && out.residual.ok) {
            out.converged = true;
            return out;
        }
    }
    out.message =
        "no convergence in " + std::to_string(opt.max_iter) +
        " iterations; worst KCL residual " + format_double(out.residual.worst_abs) +
        " A at node " + m.circuit().nodes[static_cast<size_t>(out.residual.worst_node)];
    return out;
}

/// Plain Newton, then gmin stepping (gmin*1e6 relaxed decade by decade),
/// then source stepping (all sources ramped 0 -> full in 10 steps).
inline NewtonOutcome solve_point(const Mna& m, const Mna::SourceValues& sv,
                                 const NewtonOptions& opt, std::vector<double>& x) {
    NewtonOutcome out = newton_solve(m, x, sv, opt.gmin, opt, nullptr);
    if (out.converged) return out;
    std::string first_message = out.message;

    // gmin stepping
    {
        std::vector<double> xs(static_cast<size_t>(m.unknowns()), 0.0);
        bool ok = true;
        NewtonOutcome stage;
        for (int decade = 6; decade >= 0; --decade) {
            const double g = opt.gmin * std::pow(10.0, decade);
            stage = newton_solve(m, xs, sv, g, opt, nullptr);
            if (!stage.converged) {
                ok = false;
                break;
            }
        }
        if (ok) {
            x = std::move(xs);
            return stage;
        }
    }

    // source stepping
    {
        std::vector<double> xs(static_cast<size_t>(m.unknowns()), 0.0);
        bool ok = true;
        NewtonOutcome stage;
        for (int step = 1; step <= 10; ++step) {
            Mna::SourceValues scaled = sv;
            const double alpha = static_cast<double>(step) / 10.0;
            for (double& v : scaled.v) v *= alpha;
            for (double& i : scaled.i) i *= alpha;
            stage = newton_solve(m, xs, scaled, opt.gmin, opt, nullptr);
            if (!stage.converged) {
                ok = false;
                break;
            }
        }
        if (ok) {
            x = std::move(xs);
            return stage;
        }
    }

    out.message = "no convergence after gmin and source stepping (" +
                  (first_message.empty() ? std::string("iteration limit")
                                         : first_message) +
                  ")";
    return out;
}

inline OperatingPoint make_operating_point(const Mna& m,
                                           const std::vector<double>& x,
                                           const NewtonOutcome& outcome) {
    OperatingPoint op;
    op.node_voltages.assign(static_cast<size_t>(m.node_count()), 0.0);
    for (int node = 1; node < m.node_count(); ++node)
        op.node_voltages[static_cast<size_t>(node)] = m.volt(x, node);
    for (int j = 0; j < m.num_vsrc(); ++j)
        op.source_currents.emplace_back(m.vsrcs()[static_cast<size_t>(j)].name,
                                        m.branch_current(x, j));
    op.iterations = outcome.iterations;
    op.converged = outcome.converged;
    op.worst_residual = outcome.residual.worst_abs;
    op.worst_residual_bound = outcome.residual.worst_bound;
    op.worst_node =
        m.circuit().nodes[static_cast<size_t>(outcome.residual.worst_node)];
    op.message = outcome.message;
    return op;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public solves
// ---------------------------------------------------------------------------

inline OperatingPoint solve_dc(const Circuit& c, const NewtonOptions& opt = {}) {
    opt.validate();
    detail::Mna m(c);
    const auto sv = m.source_values(0.0);
    std::vector<double> x(static_cast<size_t>(m.unknowns()), 0.0);
    const auto outcome = detail::solve_point(m, sv, opt, x);
    return detail::make_operating_point(m, x, outcome);
}

/// Sweeps a DC voltage source, warm-starting each point from the previous
/// converged solution. Non-convergent points are flagged and the sweep
/// continues. Points appear in sweep order.
inline std::vector<SweepPoint> dc_sweep(const Circuit& c,
                                        const std::string& source, double start,
                                        double stop, double step,
                                        const NewtonOptions& opt = {}) {
    if (!(step > 0.0)) throw std::invalid_argument("dc_sweep: step must be positive");
    opt.validate();
    detail::Mna m(c);
    const int idx = m.vsrc_index(to_lower(source));
    if (idx < 0) throw std::invalid_argument("unknown source " + source);
    if (m.vsrcs()[static_cast<size_t>(idx)].sin)
        throw std::invalid_argument("source " + source + " is not a DC source");

    const double dir = stop >= start ? 1.0 : -1.0;
    const auto npts =
        static_cast<int>(std::floor(std::fabs(stop - start) / step + 1e-9)) + 1;

    std::vector<SweepPoint> out;
    out.reserve(static_cast<size_t>(npts));
    std::vector<double> warm(static_cast<size_t>(m.unknowns()), 0.0);
    auto sv = m.source_values(0.0);
    for (int k = 0; k < npts; ++k) {
        const double value = start + dir * step * k;
        sv.v[static_cast<size_t>(idx)] = value;
        std::vector<double> x = warm;
        const auto outcome = detail::solve_point(m, sv, opt, x);
        if (outcome.converged) warm = x;
        out.push_back({value, detail::make_operating_point(m, x, outcome)});
    }
    return out;
}

/// Fixed-step transient. Capacitors become companion conductances
/// (trapezoidal by default); circuits without capacitors reduce to a chain
/// of DC solves at the sampled source values. The initial state is the
/// t=0 operating point unless uic is set.
inline TranResult solve_tran(const Circuit& c, const TranOptions& topt) {
    if (!(topt.tstep > 0.0) || !(topt.tstop > topt.tstep))
        throw std::invalid_argument("solve_tran: need 0 < tstep < tstop");
    topt.newton.validate();
    detail::Mna m(c);
    const NewtonOptions& opt = topt.newton;

    const auto steps = static_cast<int>(std::llround(topt.tstop / topt.tstep));

    std::vector<double> x(static_cast<size_t>(m.unknowns()), 0.0);
    if (!topt.uic) {
        const auto sv0 = m.source_values(0.0);
        const auto outcome = detail::solve_point(m, sv0, opt, x);
        if (!outcome.converged)
            throw TranError(0.0,
                            m.circuit().nodes[static_cast<size_t>(
                                outcome.residual.worst_node)],
                            "transient aborted at t=0 (operating point): " +
                                outcome.message);
    }

    const size_t ncaps = m.caps().size();
    std::vector<double> cap_v(ncaps, 0.0), cap_i(ncaps, 0.0);
    for (size_t j = 0; j < ncaps; ++j)
        cap_v[j] = m.volt(x, m.caps()[j].a) - m.volt(x, m.caps()[j].b);

    const int nodes = m.node_count();
    std::vector<std::vector<double>> samples(static_cast<size_t>(nodes) - 1);
    for (auto& s : samples) s.reserve(static_cast<size_t>(steps) + 1);
    auto record = [&]() {
        for (int node = 1; node < nodes; ++node)
            samples[static_cast<size_t>(node) - 1].push_back(m.volt(x, node));
    };
    record();

    for (int k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * topt.tstep;
        const auto sv = m.source_values(t);
        // The first step runs backward Euler so the trapezoidal history
        // starts from a consistent capacitor current.
        const Integrator integ = (k == 1 && topt.integrator == Integrator::Trapezoidal)
                                     ? Integrator::BackwardEuler
                                     : topt.integrator;
        const auto cc = m.companion(cap_v, cap_i, topt.tstep, integ);
        const auto outcome = detail::newton_solve(m, x, sv, opt.gmin, opt, &cc);
        if (!outcome.converged)
            throw TranError(
                t,
                m.circuit().nodes[static_cast<size_t>(outcome.residual.worst_node)],
                "transient aborted at t=" + format_double(t) + " s (node " +
                    m.circuit()
                        .nodes[static_cast<size_t>(outcome.residual.worst_node)] +
                    "): " + outcome.message);
        for (size_t j = 0; j < ncaps; ++j) {
            const double vnow = m.volt(x, m.caps()[j].a) - m.volt(x, m.caps()[j].b);
            cap_i[j] = cc.geq[j] * vnow - cc.ihist[j];
            cap_v[j] = vnow;
        }
        record();
    }

    TranResult res;
    for (int node = 1; node < nodes; ++node)
        res.node_names.push_back(c.nodes[static_cast<size_t>(node)]);
    for (auto& s : samples) {
        Waveform w;
        w.t0 = 0.0;
        w.dt = topt.tstep;
        w.samples = std::move(s);
        res.waveforms.push_back(std::move(w));
    }
    return res;
}

/// True-KCL check of a solved operating point; used by the verification
/// suites to confirm the converged-solution invariant.
inline bool kcl_satisfied(const Circuit& c, const OperatingPoint& op,
                          const NewtonOptions& opt = {}) {
    detail::Mna m(c);
    std::vector<double> x(static_cast<size_t>(m.unknowns()), 0.0);
    for (int node = 1; node < m.node_count(); ++node)
        x[static_cast<size_t>(node) - 1] =
            op.node_voltages.at(static_cast<size_t>(node));
    for (int j = 0; j < m.num_vsrc(); ++j)
        x[static_cast<size_t>(m.node_count()) - 1 + j] =
            op.source_currents.at(static_cast<size_t>(j)).second;
    const auto sv = m.source_values(0.0);
    return m.kcl_residual(x, sv, opt.gmin, nullptr, opt).ok;
}

}  // namespace dblsim
