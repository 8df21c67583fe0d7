#include "atsm/generator.hpp"

namespace atsm {

void DiffusionSpec::validate() const {
    if (d < 1 || d > 3) throw std::invalid_argument("DiffusionSpec: d must be in [1,3]");
    if (b.size() != d || beta.rows() != d || beta.cols() != d ||
        Sigma.size() != d || B0.size() != d || Bx.rows() != d || Bx.cols() != d)
        throw std::invalid_argument("DiffusionSpec: dimension mismatch");
    for (int i = 0; i < d; ++i)
        if (!(Sigma(i) > 0.0)) throw std::invalid_argument("DiffusionSpec: Sigma entries must be > 0");
}

GeneratorMatrix build_generator(const DiffusionSpec& spec, const MonomialBasis& basis) {
    spec.validate();
    if (spec.d != basis.d()) throw std::invalid_argument("build_generator: spec/basis dimension mismatch");

    const int d = spec.d;
    const int N = basis.size();
    Matrix A = Matrix::Zero(N, N);

    for (int row = 0; row < N; ++row) {
        const Exponents& e = basis.exponents(row);
        for (int i = 0; i < d; ++i) {
            // Drift part: (b_i + beta_{i,:} x) * e_i * x^{e - delta_i}.
            if (e[i] >= 1) {
                Exponents base = e;
                base[i] -= 1;
                const double fac = static_cast<double>(e[i]);
                A(row, basis.index_of(base)) += fac * spec.b(i);
                for (int j = 0; j < d; ++j) {
                    Exponents shifted = base;
                    shifted[j] += 1;
                    A(row, basis.index_of(shifted)) += fac * spec.beta(i, j);
                }
            }
            // Diffusion part: 1/2 Sigma_i^2 (B0_i + Bx_{:,i}' x) * e_i (e_i - 1) x^{e - 2 delta_i}.
            if (e[i] >= 2) {
                Exponents base = e;
                base[i] -= 2;
                const double s2 = spec.Sigma(i) * spec.Sigma(i);
                const double fac = 0.5 * static_cast<double>(e[i]) * static_cast<double>(e[i] - 1);
                A(row, basis.index_of(base)) += fac * s2 * spec.B0(i);
                for (int j = 0; j < d; ++j) {
                    Exponents shifted = base;
                    shifted[j] += 1;
                    A(row, basis.index_of(shifted)) += fac * s2 * spec.Bx(j, i);
                }
            }
        }
    }
    return GeneratorMatrix{std::move(A), basis};
}

} // namespace atsm
