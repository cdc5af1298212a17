#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "secagg/field.hpp"

namespace secagg {

/// Dense row-major matrix over a prime field. Entries are stored as canonical
/// residues; every entry shares the matrix's field. Immutable use is the norm:
/// the mutating helpers exist for construction and for elimination working
/// copies inside rank/row_reduce/kernel.
class FieldMatrix {
public:
    FieldMatrix(const PrimeField& field, std::size_t rows, std::size_t cols)
        : field_(field), rows_(rows), cols_(cols), a_(rows * cols, 0) {}

    static FieldMatrix identity(const PrimeField& field, std::size_t n) {
        FieldMatrix m(field, n, n);
        for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1);
        return m;
    }

    static FieldMatrix from_rows(const PrimeField& field,
                                 const std::vector<std::vector<std::uint64_t>>& rows) {
        std::size_t cols = rows.empty() ? 0 : rows.front().size();
        FieldMatrix m(field, rows.size(), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols)
                throw std::invalid_argument("FieldMatrix: ragged row list");
            for (std::size_t j = 0; j < cols; ++j) m.set(i, j, rows[i][j]);
        }
        return m;
    }

    const PrimeField& field() const { return field_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::uint64_t get(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
    void set(std::size_t i, std::size_t j, std::uint64_t v) { a_[i * cols_ + j] = field_.reduce(v); }

    FieldElement at(std::size_t i, std::size_t j) const {
        if (i >= rows_ || j >= cols_) throw std::invalid_argument("FieldMatrix: index out of range");
        return FieldElement(get(i, j), field_);
    }

    std::span<const std::uint64_t> row(std::size_t i) const {
        return std::span<const std::uint64_t>(a_).subspan(i * cols_, cols_);
    }

    void swap_rows(std::size_t i, std::size_t j) {
        if (i == j) return;
        for (std::size_t c = 0; c < cols_; ++c) std::swap(a_[i * cols_ + c], a_[j * cols_ + c]);
    }
    void scale_row(std::size_t i, std::uint64_t f) {
        for (std::size_t c = 0; c < cols_; ++c) a_[i * cols_ + c] = field_.mul(a_[i * cols_ + c], f);
    }
    /// row i += f * row j
    void add_scaled_row(std::size_t i, std::size_t j, std::uint64_t f) {
        for (std::size_t c = 0; c < cols_; ++c)
            a_[i * cols_ + c] = field_.add(a_[i * cols_ + c], field_.mul(f, a_[j * cols_ + c]));
    }

    bool operator==(const FieldMatrix& o) const {
        return field_ == o.field_ && rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
    }
    bool operator!=(const FieldMatrix& o) const { return !(*this == o); }

private:
    PrimeField field_;
    std::size_t rows_, cols_;
    std::vector<std::uint64_t> a_;
};

/// Vertical concatenation, preserving row order. All inputs must share the
/// declared field and column count; the explicit (field, cols) form covers
/// the empty list.
inline FieldMatrix stack(const PrimeField& field, std::size_t cols,
                         const std::vector<FieldMatrix>& ms) {
    std::size_t rows = 0;
    for (const auto& m : ms) {
        if (m.field() != field) throw std::invalid_argument("stack: mixed fields");
        if (m.cols() != cols) throw std::invalid_argument("stack: column count mismatch");
        rows += m.rows();
    }
    FieldMatrix out(field, rows, cols);
    std::size_t r = 0;
    for (const auto& m : ms)
        for (std::size_t i = 0; i < m.rows(); ++i, ++r)
            for (std::size_t j = 0; j < cols; ++j) out.set(r, j, m.get(i, j));
    return out;
}

inline FieldMatrix stack(const std::vector<FieldMatrix>& ms) {
    if (ms.empty()) throw std::invalid_argument("stack: empty list needs an explicit field and width");
    return stack(ms.front().field(), ms.front().cols(), ms);
}

inline FieldMatrix transpose(const FieldMatrix& m) {
    FieldMatrix t(m.field(), m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t.set(j, i, m.get(i, j));
    return t;
}

inline std::vector<std::uint64_t> mat_vec_mul(const FieldMatrix& m,
                                              const std::vector<std::uint64_t>& v) {
    if (v.size() != m.cols()) throw std::invalid_argument("mat_vec_mul: dimension mismatch");
    const PrimeField& F = m.field();
    std::vector<std::uint64_t> out(m.rows(), 0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::uint64_t acc = 0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc = F.add(acc, F.mul(m.get(i, j), F.reduce(v[j])));
        out[i] = acc;
    }
    return out;
}

inline std::vector<FieldElement> mat_vec_mul(const FieldMatrix& m,
                                             const std::vector<FieldElement>& v) {
    std::vector<std::uint64_t> raw;
    raw.reserve(v.size());
    for (const auto& e : v) {
        if (e.modulus() != m.field().modulus())
            throw std::invalid_argument("mat_vec_mul: vector entries in a different field");
        raw.push_back(e.value());
    }
    auto out = mat_vec_mul(m, raw);
    std::vector<FieldElement> res;
    res.reserve(out.size());
    for (auto x : out) res.emplace_back(x, m.field());
    return res;
}

/// Reduced row echelon form via exact Gauss-Jordan elimination. The pivot in
/// each column is the lowest-index row with a nonzero entry, which makes the
/// result (and rank) deterministic.
inline FieldMatrix row_reduce(FieldMatrix m, std::vector<std::size_t>* pivot_cols = nullptr) {
    const PrimeField F = m.field();
    std::size_t r = 0;
    for (std::size_t col = 0; col < m.cols() && r < m.rows(); ++col) {
        std::size_t piv = r;
        while (piv < m.rows() && m.get(piv, col) == 0) ++piv;
        if (piv == m.rows()) continue;
        m.swap_rows(r, piv);
        m.scale_row(r, F.inv(m.get(r, col)));
        for (std::size_t i = 0; i < m.rows(); ++i)
            if (i != r && m.get(i, col) != 0) m.add_scaled_row(i, r, F.neg(m.get(i, col)));
        if (pivot_cols) pivot_cols->push_back(col);
        ++r;
    }
    return m;
}

inline std::size_t rank(const FieldMatrix& m) {
    std::vector<std::size_t> pivots;
    row_reduce(m, &pivots);
    return pivots.size();
}

/// Basis of the right kernel {v : M v = 0}, one basis vector per row of the
/// returned matrix (so it has m.cols() columns and m.cols() - rank(m) rows).
inline FieldMatrix kernel(const FieldMatrix& m) {
    const PrimeField F = m.field();
    std::vector<std::size_t> pivots;
    FieldMatrix r = row_reduce(m, &pivots);
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto c : pivots) is_pivot[c] = true;
    std::vector<std::size_t> free_cols;
    for (std::size_t c = 0; c < m.cols(); ++c)
        if (!is_pivot[c]) free_cols.push_back(c);

    FieldMatrix basis(F, free_cols.size(), m.cols());
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
        std::size_t fc = free_cols[k];
        basis.set(k, fc, 1);
        for (std::size_t p = 0; p < pivots.size(); ++p)
            basis.set(k, pivots[p], F.neg(r.get(p, fc)));
    }
    return basis;
}

}  // namespace secagg
