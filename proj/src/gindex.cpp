#include "atsm/gindex.hpp"

#include <algorithm>
#include <array>

#include "atsm/basis.hpp"

namespace atsm {

namespace {

void check_sorted_range(std::initializer_list<int> idx, int d, const char* who) {
    int prev = 1;
    for (int v : idx) {
        if (v < prev || v > d) throw std::invalid_argument(std::string(who) + ": indices must be sorted and within 1..d");
        prev = v;
    }
}

// Rank (1-based) of the sorted index tuple within the lexicographic listing
// of all degree-k index multisets over letters 1..d.  This listing matches
// the descending-lex exponent ordering of the basis blocks.
int multiset_rank(const int* idx, int k, int d) {
    int rank = 1;
    int lo = 1;
    for (int pos = 0; pos < k; ++pos) {
        for (int a = lo; a < idx[pos]; ++a)
            rank += monomial_count(k - pos - 1, d - a + 1);
        lo = idx[pos];
    }
    return rank;
}

} // namespace

int g2(int i, int j, int d) {
    check_sorted_range({i, j}, d, "g2");
    const int idx[2] = {i, j};
    return multiset_rank(idx, 2, d);
}

int g3(int i, int j, int m, int d) {
    check_sorted_range({i, j, m}, d, "g3");
    const int idx[3] = {i, j, m};
    return multiset_rank(idx, 3, d);
}

int g4(int i, int j, int m, int n, int d) {
    check_sorted_range({i, j, m, n}, d, "g4");
    const int idx[4] = {i, j, m, n};
    return multiset_rank(idx, 4, d);
}

int g2_sorted(int i, int j, int d) {
    if (i > j) std::swap(i, j);
    return g2(i, j, d);
}

int g3_sorted(int i, int j, int m, int d) {
    std::array<int, 3> a{i, j, m};
    std::sort(a.begin(), a.end());
    return g3(a[0], a[1], a[2], d);
}

int g4_sorted(int i, int j, int m, int n, int d) {
    std::array<int, 4> a{i, j, m, n};
    std::sort(a.begin(), a.end());
    return g4(a[0], a[1], a[2], a[3], d);
}

Matrix vech_inverse(const Vector& v, int d) {
    if (v.size() != d * (d + 1) / 2)
        throw std::invalid_argument("vech_inverse: length must be d(d+1)/2");
    Matrix S(d, d);
    int pos = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            S(i, j) = v(pos);
            S(j, i) = v(pos);
            ++pos;
        }
    return S;
}

Vector vech(const Matrix& S) {
    if (S.rows() != S.cols()) throw std::invalid_argument("vech: matrix not square");
    const int d = static_cast<int>(S.rows());
    Vector v(d * (d + 1) / 2);
    int pos = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) v(pos++) = S(i, j);
    return v;
}

} // namespace atsm
