// Shared basics: error hierarchy, canonical symplectic structure, a few
// numeric helpers used across the library.
#ifndef MAGROD_CORE_HPP
#define MAGROD_CORE_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace magrod {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Recorded in every run-metadata file so outputs can be traced to a build.
inline constexpr const char* version_string = "0.1.0";

// Base for all domain errors. The CLI prints name() verbatim on the
// diagnostic stream, so the name is part of the tool's interface.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define MAGROD_DEFINE_ERROR(NAME)                                    \
    class NAME : public Error {                                      \
    public:                                                          \
        explicit NAME(const std::string& what) : Error(#NAME, what) {} \
    };

// model
MAGROD_DEFINE_ERROR(SingularState)
MAGROD_DEFINE_ERROR(NegativeRadicand)
MAGROD_DEFINE_ERROR(ZeroScale)
// integration
MAGROD_DEFINE_ERROR(StepUnderflow)
MAGROD_DEFINE_ERROR(SingularityReached)
// root finding / eigen
MAGROD_DEFINE_ERROR(NoConvergence)
MAGROD_DEFINE_ERROR(SingularJacobian)
MAGROD_DEFINE_ERROR(DefectiveMatrix)
// quadrature
MAGROD_DEFINE_ERROR(TailTooFat)
// melnikov
MAGROD_DEFINE_ERROR(RegimeViolation)
// manifolds
MAGROD_DEFINE_ERROR(NoEquilibrium)
MAGROD_DEFINE_ERROR(NotSaddleFocus)
MAGROD_DEFINE_ERROR(StallOut)
MAGROD_DEFINE_ERROR(NoIntersection)
MAGROD_DEFINE_ERROR(TangencyDetected)
MAGROD_DEFINE_ERROR(EscapeDetected)

#undef MAGROD_DEFINE_ERROR

// Canonical symplectic matrix for coordinates (q1, q2, p1, p2):
//   J = [  0   I ]
//       [ -I   0 ]
inline Mat4 symplectic_j() {
    Mat4 j = Mat4::Zero();
    j(0, 2) = 1.0;
    j(1, 3) = 1.0;
    j(2, 0) = -1.0;
    j(3, 1) = -1.0;
    return j;
}

inline double sq(double x) { return x * x; }

// Wrap an angle into [-pi, pi).
inline double wrap_angle(double a) {
    a = std::fmod(a + pi, 2.0 * pi);
    if (a < 0.0) a += 2.0 * pi;
    return a - pi;
}

} // namespace magrod

#endif
