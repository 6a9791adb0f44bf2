#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace dblsim {

enum class MosPolarity { Nmos, Pmos };

enum class MosRegion { Cutoff, Triode, Saturation };

/// Process parameters read from a .model card. vto is negative for PMOS
/// cards; kp is the raw process transconductance (A/V^2) before the W/L
/// and 1/2 factors are applied; lambda is channel-length modulation (1/V).
struct MosModelCard {
    std::string name;
    MosPolarity polarity = MosPolarity::Nmos;
    double vto = 0.0;
    double kp = 0.0;
    double lambda = 0.0;

    bool operator==(const MosModelCard&) const = default;
};

struct MosGeometry {
    double w = 0.0;
    double l = 0.0;

    bool operator==(const MosGeometry&) const = default;
};

/// Drain current and its analytic partials at one bias point.
///
/// id uses the drain-to-source positive convention for NMOS, so a
/// conducting PMOS reports negative id. gm = d(id)/d(vgs) and
/// gds = d(id)/d(vds), both taken with respect to the raw terminal
/// voltages handed to mos_eval (not the internally reflected ones).
struct MosEval {
    double id = 0.0;
    double gm = 0.0;
    double gds = 0.0;
    MosRegion region = MosRegion::Cutoff;
};

/// Device transconductance K such that saturation current is K*(vgs-vt)^2.
/// K = (kp/2)*(w/l), making the quadratic-law K and the beta/2 prefactor
/// one and the same constant.
inline double device_k(const MosModelCard& card, const MosGeometry& geom) {
    return 0.5 * card.kp * (geom.w / geom.l);
}

/// Region classification in NMOS sign convention, vds >= 0.
/// The vds == vgs-vt boundary classifies as saturation.
inline MosRegion mos_region(double vgs, double vds, double vt) {
    if (vgs <= vt) return MosRegion::Cutoff;
    if (vgs - vt <= vds) return MosRegion::Saturation;
    return MosRegion::Triode;
}

namespace detail {

// Forward NMOS square law, vds >= 0. The triode expression is the
// boundary-continuous form K*[2*(vgs-vt)*vds - vds^2]; at vds == vgs-vt
// it reproduces the saturation value bit for bit.
inline MosEval square_law_forward(double k, double lambda, double vgs,
                                  double vds, double vt) {
    MosEval e;
    e.region = mos_region(vgs, vds, vt);
    if (e.region == MosRegion::Cutoff) return e;

    const double od = vgs - vt;
    const double clm = 1.0 + lambda * vds;
    if (e.region == MosRegion::Saturation) {
        const double core = od * od;
        e.id = k * core * clm;
        e.gm = 2.0 * k * od * clm;
        e.gds = k * core * lambda;
    } else {
        const double core = 2.0 * (od * vds) - vds * vds;
        e.id = k * core * clm;
        e.gm = 2.0 * k * vds * clm;
        e.gds = 2.0 * k * (od - vds) * clm + k * core * lambda;
    }
    return e;
}

}  // namespace detail

/// Square-law evaluation for either polarity and any bias quadrant.
///
/// PMOS devices are evaluated by reflecting (vgs, vds, vto) onto NMOS
/// axes and negating the current. A reflected vds < 0 swaps the roles of
/// drain and source (the device is symmetric), keeping the current and
/// both partials continuous through vds = 0.
inline MosEval mos_eval(const MosModelCard& card, const MosGeometry& geom,
                        double vgs, double vds) {
    if (!std::isfinite(vgs))
        throw std::invalid_argument("mos_eval: non-finite vgs for device '" +
                                    card.name + "'");
    if (!std::isfinite(vds))
        throw std::invalid_argument("mos_eval: non-finite vds for device '" +
                                    card.name + "'");

    const double k = device_k(card, geom);
    const bool pmos = card.polarity == MosPolarity::Pmos;
    const double g = pmos ? -vgs : vgs;
    const double d = pmos ? -vds : vds;
    const double vt = pmos ? -card.vto : card.vto;

    MosEval e;
    if (d < 0.0) {
        // Reversed: the nominal source acts as the drain.
        const MosEval f = detail::square_law_forward(k, card.lambda, g - d, -d, vt);
        e.id = -f.id;
        e.gm = -f.gm;
        e.gds = f.gm + f.gds;
        e.region = f.region;
    } else {
        e = detail::square_law_forward(k, card.lambda, g, d, vt);
    }
    if (pmos) e.id = -e.id;
    return e;
}

}  // namespace dblsim
