#ifndef ISOSCAPE_DETAIL_KAHAN_HPP
#define ISOSCAPE_DETAIL_KAHAN_HPP

#include <cmath>
#include <cstddef>

namespace isoscape {
namespace detail {

// Kahan-Babuska (Neumaier) compensated accumulator. Comparison sets can
// approach 1e5 terms, so plain left-to-right summation is not good enough
// for the 1e-9 oracle tolerances.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double total() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

template<typename It>
double kahan_total(It first, It last) {
    KahanSum s;
    for (; first != last; ++first) {
        s.add(static_cast<double>(*first));
    }
    return s.total();
}

}
}

#endif
