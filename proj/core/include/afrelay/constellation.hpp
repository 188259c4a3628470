#pragma once

#include <string>
#include <vector>

#include "afrelay/math.hpp"

namespace afr {

class Constellation {
public:
    enum class Kind { Gaussian, Discrete };

    static Constellation gaussian();
    static Constellation bpsk();
    static Constellation qpsk();
    static Constellation psk(int order);
    // Validates zero mean and unit energy to 1e-12.
    static Constellation discrete(std::vector<cplx> points, std::vector<double> probs, std::string name = "discrete");

    Kind kind() const { return kind_; }
    bool is_gaussian() const { return kind_ == Kind::Gaussian; }
    const std::vector<cplx>& points() const { return points_; }
    const std::vector<double>& probs() const { return probs_; }
    std::size_t size() const { return points_.size(); }
    const std::string& name() const { return name_; }
    // True for the built-in QPSK (enables the 1-D reductions).
    bool is_qpsk() const { return qpsk_; }
    // Uniform PSK: every point sees the same neighbourhood up to a rotation.
    bool symmetric() const { return symmetric_; }

    bool operator==(const Constellation& o) const;
    bool operator!=(const Constellation& o) const { return !(*this == o); }

private:
    Kind kind_ = Kind::Gaussian;
    std::vector<cplx> points_;
    std::vector<double> probs_;
    std::string name_ = "gaussian";
    bool qpsk_ = false;
    bool symmetric_ = false;
};

// "gaussian", "bpsk", "qpsk", "8psk"
Constellation constellation_from_name(const std::string& name);

}  // namespace afr
