#include "kef/quadrature.hpp"

namespace kef::quad {

std::vector<double> breakpoints(double a, double b, std::span<const double> interior) {
    std::vector<double> pts{a};
    for (double x : interior) {
        if (std::isfinite(x) && x > a && x < b) pts.push_back(x);
    }
    pts.push_back(b);
    std::sort(pts.begin() + 1, pts.end() - 1);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace kef::quad
