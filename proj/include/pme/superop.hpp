// superop.hpp — Flattening and commutator algebra on the N^2 density vector

#pragma once

#include "pme/types.hpp"

namespace pme {

// Row-major flattening: element (r, c) of an N x N matrix sits at r*N + c.
inline Index flat_index(int r, int c, int n) { return static_cast<Index>(r) * n + c; }

ComplexVector flatten(const ComplexMatrix& m);
ComplexMatrix unflatten(const ComplexVector& v, int n);

// Superoperator matrices for rho -> X rho and rho -> rho X.
ComplexMatrix left_mult(const ComplexMatrix& x);
ComplexMatrix right_mult(const ComplexMatrix& x);

// Adds coeff * [ |a1><a2| , |b1><b2| rho ] to sup (all indices in the eigenbasis).
void add_elementary_commutator(ComplexMatrix& sup, Complex coeff, int a1, int a2, int b1, int b2,
                               int n);

// Adds coeff * [ A, B rho ] for dense A, B.
void add_commutator(ComplexMatrix& sup, Complex coeff, const ComplexMatrix& a,
                    const ComplexMatrix& b);

// The "+ h.c." closure: returns sup + H(sup) where H maps rho -> (sup rho)^dagger
// for Hermitian rho, i.e. H[(ab),(cd)] = conj(sup[(ba),(dc)]).
ComplexMatrix hermitian_closure(const ComplexMatrix& sup, int n);

} // namespace pme
