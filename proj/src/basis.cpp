#include "atsm/basis.hpp"

#include <algorithm>
#include <cmath>

namespace atsm {

int monomial_count(int k, int d) {
    // C(k+d-1, k) with small arguments; exact in 64-bit.
    std::int64_t num = 1, den = 1;
    for (int i = 1; i <= k; ++i) {
        num *= (k + d - 1 - (k - i));
        den *= i;
    }
    return static_cast<int>(num / den);
}

namespace {

void emit_descending(int d, int degree, int pos, Exponents& scratch,
                     std::vector<Exponents>& out) {
    if (pos == d - 1) {
        scratch[pos] = degree;
        out.push_back(scratch);
        return;
    }
    for (int e = degree; e >= 0; --e) {
        scratch[pos] = e;
        emit_descending(d, degree - e, pos + 1, scratch, out);
    }
}

} // namespace

MonomialBasis::MonomialBasis(int d, int p) : d_(d), p_(p) {
    if (d < 1 || d > 3) throw std::invalid_argument("MonomialBasis: d must be in [1,3]");
    if (p < 1 || p > 4) throw std::invalid_argument("MonomialBasis: p must be in [1,4]");
    block_start_.resize(p + 2, 0);
    for (int k = 0; k <= p; ++k) {
        block_start_[k] = static_cast<int>(exponents_.size());
        Exponents scratch{0, 0, 0};
        emit_descending(d, k, 0, scratch, exponents_);
    }
    block_start_[p + 1] = static_cast<int>(exponents_.size());
}

int MonomialBasis::block_size(int k) const {
    if (k < 0 || k > p_) throw std::invalid_argument("block_size: degree out of range");
    return block_start_[k + 1] - block_start_[k];
}

int MonomialBasis::block_start(int k) const {
    if (k < 0 || k > p_) throw std::invalid_argument("block_start: degree out of range");
    return block_start_[k];
}

int MonomialBasis::index_of(const Exponents& e) const {
    int degree = 0;
    for (int j = 0; j < 3; ++j) {
        if (e[j] < 0) throw std::invalid_argument("index_of: negative exponent");
        if (j >= d_ && e[j] != 0) throw std::invalid_argument("index_of: exponent beyond dimension");
        degree += e[j];
    }
    if (degree > p_) throw std::invalid_argument("index_of: degree exceeds p");
    // Blocks are small (<= 15): scan the degree block.
    for (int i = block_start_[degree]; i < block_start_[degree + 1]; ++i) {
        if (exponents_[i] == e) return i;
    }
    throw std::logic_error("index_of: tuple not found");
}

Vector MonomialBasis::stack(const Vector& x) const {
    if (x.size() != d_) throw std::invalid_argument("stack: state dimension mismatch");
    Vector out(size());
    for (int i = 0; i < size(); ++i) {
        double v = 1.0;
        const Exponents& e = exponents_[i];
        for (int j = 0; j < d_; ++j) {
            for (int r = 0; r < e[j]; ++r) v *= x(j);
        }
        out(i) = v;
    }
    return out;
}

} // namespace atsm
