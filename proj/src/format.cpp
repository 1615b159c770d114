#include "spotforward/format.hpp"

#include <cmath>
#include <cstdio>

namespace spotforward {

std::string format_sig12(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0.0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    const double a = std::fabs(x);
    const int e = static_cast<int>(std::floor(std::log10(a)));
    int decimals = 11 - e;
    if (decimals < 0) decimals = 0;
    if (decimals > 40) decimals = 40;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    std::string out(buf);
    // a value rounded to all zeros should not keep its sign
    bool all_zero = true;
    for (char ch : out)
        if (ch != '-' && ch != '0' && ch != '.') {
            all_zero = false;
            break;
        }
    if (all_zero) return "0";
    return out;
}

} // namespace spotforward
