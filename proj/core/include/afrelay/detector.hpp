#pragma once

#include <string>

#include "afrelay/constellation.hpp"

namespace afr {

struct Sigma2 {
    enum class Kind { Finite, ZeroLimit, InfinityLimit };
    Kind kind = Kind::Finite;
    double value = 1.0;

    static Sigma2 finite(double v);
    static Sigma2 zero_limit() { return {Kind::ZeroLimit, 0.0}; }
    static Sigma2 infinity_limit() { return {Kind::InfinityLimit, 0.0}; }
    bool is_limit() const { return kind != Kind::Finite; }
};

enum class DetectorLabel { JDD, MAP, LMMSE, MF, ZF, Custom };

struct DetectorSpec {
    Constellation postulated_prior;
    Sigma2 sigma2;
    DetectorLabel label = DetectorLabel::Custom;

    static DetectorSpec jdd(const Constellation& prior);
    static DetectorSpec map(const Constellation& prior);
    static DetectorSpec lmmse();
    static DetectorSpec mf();
    static DetectorSpec zf();
    static DetectorSpec custom(const Constellation& q, Sigma2 sigma2);

    // Posterior is the true one (q = p, sigma^2 = 1).
    bool matched(const Constellation& prior) const;
    bool linear() const { return postulated_prior.is_gaussian(); }
};

// Throws ConfigError when the label's requirements are violated.
void validate_detector(const DetectorSpec& det, const Constellation& prior);

std::string to_string(DetectorLabel label);
// "jdd", "map", "lmmse", "mf", "zf"
DetectorSpec detector_from_name(const std::string& name, const Constellation& prior);

}  // namespace afr
