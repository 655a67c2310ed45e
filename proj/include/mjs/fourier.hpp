#pragma once

#include "mjs/core.hpp"

#include <complex>
#include <vector>

namespace mjs {

using cplx = std::complex<double>;
using CVec3 = Eigen::Matrix<cplx, 3, 1>;

/// Trigonometric polynomial t -> Σ a_k cos(ω_k t) + b_k sin(ω_k t) in R³.
/// Frequencies are real and non-negative; they need not be integers.
struct FourierCurve {
    struct Mode {
        double freq = 0.0;
        Vec3 a = Vec3::Zero(); ///< cosine coefficient
        Vec3 b = Vec3::Zero(); ///< sine coefficient
    };
    std::vector<Mode> modes;

    /// Adds a mode, folding negative frequencies and merging duplicates.
    FourierCurve& add(double freq, const Vec3& a, const Vec3& b)
    {
        Vec3 bb = b;
        if (freq < 0.0) {
            freq = -freq;
            bb = -bb;
        }
        for (auto& m : modes) {
            if (std::abs(m.freq - freq) < 1e-12) {
                m.a += a;
                m.b += bb;
                return *this;
            }
        }
        modes.push_back({freq, a, bb});
        return *this;
    }

    Vec3 operator()(double t) const
    {
        Vec3 out = Vec3::Zero();
        for (const auto& m : modes)
            out += m.a * std::cos(m.freq * t) + m.b * std::sin(m.freq * t);
        return out;
    }

    /// Analytic continuation to complex argument.
    CVec3 eval(cplx w) const
    {
        CVec3 out = CVec3::Zero();
        for (const auto& m : modes)
            out += m.a.cast<cplx>() * std::cos(m.freq * w) + m.b.cast<cplx>() * std::sin(m.freq * w);
        return out;
    }

    FourierCurve derivative() const
    {
        FourierCurve d;
        for (const auto& m : modes)
            if (m.freq != 0.0)
                d.add(m.freq, m.freq * m.b, -m.freq * m.a);
        return d;
    }

    /// Pointwise cross product of two curves.
    friend FourierCurve cross(const FourierCurve& f, const FourierCurve& g)
    {
        FourierCurve out;
        for (const auto& m : f.modes) {
            for (const auto& n : g.modes) {
                const double x = m.freq, y = n.freq;
                // cos x cos y = (cos(x-y) + cos(x+y))/2, etc.
                const Vec3 aa = m.a.cross(n.a), ab = m.a.cross(n.b);
                const Vec3 ba = m.b.cross(n.a), bb = m.b.cross(n.b);
                out.add(x - y, 0.5 * aa + 0.5 * bb, Vec3::Zero());
                out.add(x + y, 0.5 * aa - 0.5 * bb, Vec3::Zero());
                out.add(x + y, Vec3::Zero(), 0.5 * ab + 0.5 * ba);
                out.add(x - y, Vec3::Zero(), -0.5 * ab + 0.5 * ba);
            }
        }
        return out;
    }
};

/// ∫_0^w f(ζ) dζ for complex w, mode by mode.
inline CVec3 antiderivative(const FourierCurve& f, cplx w)
{
    CVec3 out = CVec3::Zero();
    for (const auto& m : f.modes) {
        if (m.freq == 0.0) {
            out += m.a.cast<cplx>() * w;
            continue;
        }
        const cplx s = std::sin(m.freq * w) / m.freq;
        const cplx c = (1.0 - std::cos(m.freq * w)) / m.freq;
        out += m.a.cast<cplx>() * s + m.b.cast<cplx>() * c;
    }
    return out;
}

} // namespace mjs
