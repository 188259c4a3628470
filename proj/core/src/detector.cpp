#include "afrelay/detector.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "afrelay/errors.hpp"

namespace afr {

Sigma2 Sigma2::finite(double v)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError("postulated noise variance must be positive and finite");
    return {Kind::Finite, v};
}

DetectorSpec DetectorSpec::jdd(const Constellation& prior) { return {prior, Sigma2::finite(1.0), DetectorLabel::JDD}; }
DetectorSpec DetectorSpec::map(const Constellation& prior) { return {prior, Sigma2::finite(1.0), DetectorLabel::MAP}; }
DetectorSpec DetectorSpec::lmmse() { return {Constellation::gaussian(), Sigma2::finite(1.0), DetectorLabel::LMMSE}; }
DetectorSpec DetectorSpec::mf() { return {Constellation::gaussian(), Sigma2::infinity_limit(), DetectorLabel::MF}; }
DetectorSpec DetectorSpec::zf() { return {Constellation::gaussian(), Sigma2::zero_limit(), DetectorLabel::ZF}; }
DetectorSpec DetectorSpec::custom(const Constellation& q, Sigma2 sigma2) { return {q, sigma2, DetectorLabel::Custom}; }

bool DetectorSpec::matched(const Constellation& prior) const
{
    return postulated_prior == prior && sigma2.kind == Sigma2::Kind::Finite && sigma2.value == 1.0;
}

void validate_detector(const DetectorSpec& det, const Constellation& prior)
{
    switch (det.label) {
    case DetectorLabel::JDD:
    case DetectorLabel::MAP:
        if (!det.matched(prior))
            throw ConfigError(to_string(det.label) + " requires the true prior and sigma2 = 1");
        break;
    case DetectorLabel::LMMSE:
        if (!det.linear() || det.sigma2.kind != Sigma2::Kind::Finite || det.sigma2.value != 1.0)
            throw ConfigError("LMMSE requires a Gaussian postulated prior and sigma2 = 1");
        break;
    case DetectorLabel::MF:
        if (!det.linear() || det.sigma2.kind != Sigma2::Kind::InfinityLimit)
            throw ConfigError("MF requires a Gaussian postulated prior and sigma2 -> infinity");
        break;
    case DetectorLabel::ZF:
        if (!det.linear() || det.sigma2.kind != Sigma2::Kind::ZeroLimit)
            throw ConfigError("ZF requires a Gaussian postulated prior and sigma2 -> 0");
        break;
    case DetectorLabel::Custom:
        break;
    }
}

std::string to_string(DetectorLabel label)
{
    switch (label) {
    case DetectorLabel::JDD: return "jdd";
    case DetectorLabel::MAP: return "map";
    case DetectorLabel::LMMSE: return "lmmse";
    case DetectorLabel::MF: return "mf";
    case DetectorLabel::ZF: return "zf";
    case DetectorLabel::Custom: return "custom";
    }
    return "custom";
}

DetectorSpec detector_from_name(const std::string& name, const Constellation& prior)
{
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (n == "jdd")
        return DetectorSpec::jdd(prior);
    if (n == "map")
        return DetectorSpec::map(prior);
    if (n == "lmmse" || n == "mmse")
        return DetectorSpec::lmmse();
    if (n == "mf")
        return DetectorSpec::mf();
    if (n == "zf")
        return DetectorSpec::zf();
    throw ConfigError("unknown detector '" + name + "'");
}

}  // namespace afr
