#include "afrelay/constellation.hpp"

#include <algorithm>
#include <cctype>

#include "afrelay/errors.hpp"

namespace afr {

Constellation Constellation::gaussian() { return Constellation{}; }

Constellation Constellation::bpsk()
{
    auto c = discrete({{1.0, 0.0}, {-1.0, 0.0}}, {0.5, 0.5}, "bpsk");
    c.symmetric_ = true;
    return c;
}

Constellation Constellation::qpsk()
{
    const double a = 1.0 / std::sqrt(2.0);
    auto c = discrete({{a, a}, {-a, a}, {-a, -a}, {a, -a}}, {0.25, 0.25, 0.25, 0.25}, "qpsk");
    c.qpsk_ = true;
    c.symmetric_ = true;
    return c;
}

Constellation Constellation::psk(int order)
{
    if (order < 2)
        throw ConfigError("PSK order must be at least 2");
    if (order == 2)
        return bpsk();
    if (order == 4)
        return qpsk();
    std::vector<cplx> pts(order);
    for (int i = 0; i < order; ++i)
        pts[i] = std::polar(1.0, 2.0 * kPi * i / order);
    auto c = discrete(std::move(pts), std::vector<double>(order, 1.0 / order), std::to_string(order) + "psk");
    c.symmetric_ = true;
    return c;
}

Constellation Constellation::discrete(std::vector<cplx> points, std::vector<double> probs, std::string name)
{
    if (points.empty() || points.size() != probs.size())
        throw ConfigError("constellation points and probabilities must be nonempty and of equal length");
    double psum = 0.0;
    cplx mean = 0.0;
    double energy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (probs[i] < 0.0)
            throw ConfigError("constellation probabilities must be nonnegative");
        psum += probs[i];
        mean += probs[i] * points[i];
        energy += probs[i] * std::norm(points[i]);
    }
    if (std::fabs(psum - 1.0) > 1e-12)
        throw ConfigError("constellation probabilities must sum to 1");
    if (std::abs(mean) > 1e-12)
        throw ConfigError("constellation must have zero mean");
    if (std::fabs(energy - 1.0) > 1e-12)
        throw ConfigError("constellation must have unit average energy");
    Constellation c;
    c.kind_ = Kind::Discrete;
    c.points_ = std::move(points);
    c.probs_ = std::move(probs);
    c.name_ = std::move(name);
    return c;
}

bool Constellation::operator==(const Constellation& o) const
{
    return kind_ == o.kind_ && points_ == o.points_ && probs_ == o.probs_;
}

Constellation constellation_from_name(const std::string& name)
{
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (n == "gaussian" || n == "gauss")
        return Constellation::gaussian();
    if (n == "bpsk")
        return Constellation::bpsk();
    if (n == "qpsk")
        return Constellation::qpsk();
    if (n == "8psk" || n == "8-psk")
        return Constellation::psk(8);
    throw ConfigError("unknown constellation '" + name + "'");
}

}  // namespace afr
