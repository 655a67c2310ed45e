#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace mjs {

using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = 3.14159265358979323846;

enum class Errc {
    DegenerateImmersion,
    NonFiniteIntegrand,
    StepTooLarge,
    InvalidAngles,
    InvalidArgument,
    SolveFailure,
    NotOrthonormal,
    IncompatibleField,
    NotMinimal,
    NotCompactlySupported,
    ConstraintRankFailure,
    EigSolveFailure,
    ZeroAngleField,
    ExponentOutOfRange,
    JunctionMismatch,
    ConfigError,
    IOError,
};

inline const char* to_string(Errc e)
{
    switch (e) {
    case Errc::DegenerateImmersion: return "DegenerateImmersion";
    case Errc::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case Errc::StepTooLarge: return "StepTooLarge";
    case Errc::InvalidAngles: return "InvalidAngles";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::SolveFailure: return "SolveFailure";
    case Errc::NotOrthonormal: return "NotOrthonormal";
    case Errc::IncompatibleField: return "IncompatibleField";
    case Errc::NotMinimal: return "NotMinimal";
    case Errc::NotCompactlySupported: return "NotCompactlySupported";
    case Errc::ConstraintRankFailure: return "ConstraintRankFailure";
    case Errc::EigSolveFailure: return "EigSolveFailure";
    case Errc::ZeroAngleField: return "ZeroAngleField";
    case Errc::ExponentOutOfRange: return "ExponentOutOfRange";
    case Errc::JunctionMismatch: return "JunctionMismatch";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IOError: return "IOError";
    }
    return "Unknown";
}

/// Error carrying a machine-readable kind and the module that raised it.
class Error : public std::runtime_error {
public:
    Error(Errc kind, std::string module, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " [" + module + "]: " + what),
          kind_(kind), module_(std::move(module))
    {
    }

    Errc kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }

private:
    Errc kind_;
    std::string module_;
};

struct ParamPoint {
    double u = 0.0;
    double v = 0.0;
};

struct Rect {
    double u0 = 0.0, u1 = 1.0;
    double v0 = 0.0, v1 = 1.0;

    bool contains(const ParamPoint& p, double slack = 1e-12) const
    {
        return p.u >= u0 - slack && p.u <= u1 + slack && p.v >= v0 - slack && p.v <= v1 + slack;
    }
    double width() const { return u1 - u0; }
    double height() const { return v1 - v0; }
    double diameter() const { return std::hypot(width(), height()); }
};

/// Finite-difference weights for the m-th derivative at z0 on arbitrary nodes
/// (Fornberg's recursion). Returns one weight per node.
inline std::vector<double> fornberg_weights(double z0, const std::vector<double>& x, int m)
{
    const int n = static_cast<int>(x.size()) - 1;
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z0;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n + 1);
    for (int i = 0; i <= n; ++i)
        w[i] = c[i][m];
    return w;
}

/// Five-point stencil offsets (in units of h) centred on x when possible and
/// shifted to stay inside [lo, hi] otherwise.
inline std::vector<double> stencil_offsets(double x, double h, double lo, double hi)
{
    double shift = 0.0;
    if (x - 2 * h < lo)
        shift = std::min(2.0, (lo - (x - 2 * h)) / h);
    else if (x + 2 * h > hi)
        shift = -std::min(2.0, ((x + 2 * h) - hi) / h);
    // Round up to whole steps so nodes never leave the interval.
    shift = shift > 0 ? std::ceil(shift - 1e-12) : std::floor(shift + 1e-12);
    return {-2 + shift, -1 + shift, shift, 1 + shift, 2 + shift};
}

/// First derivative of a scalar function of one variable on [lo, hi],
/// fourth-order accurate.
template <class F>
auto derivative_1d(const F& f, double x, double h, double lo, double hi)
{
    const auto off = stencil_offsets(x, h, lo, hi);
    const auto w = fornberg_weights(0.0, off, 1);
    using R = std::decay_t<decltype(f(x))>;
    R acc = f(x + off[0] * h) * w[0];
    for (std::size_t k = 1; k < off.size(); ++k)
        acc += f(x + off[k] * h) * w[k];
    return acc / h;
}

/// Cubic smoothstep cutoff: 1 for t <= 1, 0 for t >= 2, |eta'| <= 3/2.
inline double cutoff_profile(double t)
{
    if (t <= 1.0)
        return 1.0;
    if (t >= 2.0)
        return 0.0;
    const double s = t - 1.0;
    return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

inline double cutoff_profile_derivative(double t)
{
    if (t <= 1.0 || t >= 2.0)
        return 0.0;
    const double s = t - 1.0;
    return -6.0 * s + 6.0 * s * s;
}

/// Thread cap from MJS_THREADS (default 1).
inline unsigned thread_cap()
{
    if (const char* env = std::getenv("MJS_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0)
            return static_cast<unsigned>(n);
    }
    return 1;
}

/// Runs fn(k) for k in [0, n). Each index writes its own slot, so results do
/// not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, const F& fn)
{
    const unsigned threads = std::min<std::size_t>(thread_cap(), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        for (std::size_t k = 0; k < n; ++k)
            fn(k);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t k = t; k < n; k += threads)
                    fn(k);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace mjs
