#include "pme/superop.hpp"

namespace pme {

ComplexVector flatten(const ComplexMatrix& m) {
    const int n = static_cast<int>(m.rows());
    ComplexVector v(static_cast<Index>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) v[flat_index(r, c, n)] = m(r, c);
    return v;
}

ComplexMatrix unflatten(const ComplexVector& v, int n) {
    ComplexMatrix m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m(r, c) = v[flat_index(r, c, n)];
    return m;
}

ComplexMatrix left_mult(const ComplexMatrix& x) {
    const int n = static_cast<int>(x.rows());
    ComplexMatrix sup = ComplexMatrix::Zero(n * n, n * n);
    for (int r = 0; r < n; ++r)
        for (int k = 0; k < n; ++k)
            for (int c = 0; c < n; ++c) sup(flat_index(r, c, n), flat_index(k, c, n)) += x(r, k);
    return sup;
}

ComplexMatrix right_mult(const ComplexMatrix& x) {
    const int n = static_cast<int>(x.rows());
    ComplexMatrix sup = ComplexMatrix::Zero(n * n, n * n);
    for (int r = 0; r < n; ++r)
        for (int k = 0; k < n; ++k)
            for (int c = 0; c < n; ++c) sup(flat_index(r, c, n), flat_index(r, k, n)) += x(k, c);
    return sup;
}

void add_elementary_commutator(ComplexMatrix& sup, Complex coeff, int a1, int a2, int b1, int b2,
                               int n) {
    // A B rho with A = |a1><a2|, B = |b1><b2|: nonzero only when a2 == b1.
    if (a2 == b1)
        for (int c = 0; c < n; ++c) sup(flat_index(a1, c, n), flat_index(b2, c, n)) += coeff;
    // B rho A places rho(b2, a1) at (b1, a2).
    sup(flat_index(b1, a2, n), flat_index(b2, a1, n)) -= coeff;
}

void add_commutator(ComplexMatrix& sup, Complex coeff, const ComplexMatrix& a,
                    const ComplexMatrix& b) {
    const int n = static_cast<int>(a.rows());
    const ComplexMatrix ab = a * b;
    for (int r = 0; r < n; ++r)
        for (int k = 0; k < n; ++k) {
            if (ab(r, k) != Complex(0.0, 0.0))
                for (int c = 0; c < n; ++c)
                    sup(flat_index(r, c, n), flat_index(k, c, n)) += coeff * ab(r, k);
        }
    // rho -> B rho A
    for (int b1 = 0; b1 < n; ++b1)
        for (int b2 = 0; b2 < n; ++b2) {
            if (b(b1, b2) == Complex(0.0, 0.0)) continue;
            for (int a1 = 0; a1 < n; ++a1)
                for (int a2 = 0; a2 < n; ++a2) {
                    if (a(a1, a2) == Complex(0.0, 0.0)) continue;
                    sup(flat_index(b1, a2, n), flat_index(b2, a1, n)) -=
                        coeff * b(b1, b2) * a(a1, a2);
                }
        }
}

ComplexMatrix hermitian_closure(const ComplexMatrix& sup, int n) {
    ComplexMatrix out = sup;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d)
                    out(flat_index(a, b, n), flat_index(c, d, n)) +=
                        std::conj(sup(flat_index(b, a, n), flat_index(d, c, n)));
    return out;
}

} // namespace pme
