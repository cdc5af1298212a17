#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "secagg/matrix.hpp"

namespace secagg {

/// Column layout of the global source vector: the UV input symbols W followed
/// by the source-key symbols N. Every source coordinate is i.i.d. uniform
/// over F_q and all coordinates are mutually independent.
struct SourceLayout {
    std::size_t num_inputs = 0;
    std::size_t num_key_symbols = 0;

    std::size_t total() const { return num_inputs + num_key_symbols; }
    std::size_t input_col(std::size_t i) const { return i; }
    std::size_t key_col(std::size_t j) const { return num_inputs + j; }

    bool operator==(const SourceLayout& o) const = default;
};

/// A protocol random variable expressed as a linear map over the source
/// vector: one matrix row per emitted symbol. For jointly linear functions of
/// i.i.d. uniform field symbols, joint entropy in log-q units equals the rank
/// of the stacked maps, which is what entropy()/mutual_information() compute.
class LinearVariable {
public:
    LinearVariable(FieldMatrix map, SourceLayout layout, std::string label)
        : map_(std::move(map)), layout_(layout), label_(std::move(label)) {
        if (map_.cols() != layout_.total())
            throw std::invalid_argument("LinearVariable: map width does not match layout");
    }

    const FieldMatrix& map() const { return map_; }
    const SourceLayout& layout() const { return layout_; }
    const std::string& label() const { return label_; }

    /// Row-wise sum of two variables with identical shape (e.g. W + Z).
    friend LinearVariable operator+(const LinearVariable& a, const LinearVariable& b) {
        if (a.layout_ != b.layout_) throw std::invalid_argument("LinearVariable: layout mismatch");
        if (a.map_.rows() != b.map_.rows())
            throw std::invalid_argument("LinearVariable: row count mismatch");
        FieldMatrix m = a.map_;
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j)
                m.set(i, j, m.field().add(m.get(i, j), b.map_.get(i, j)));
        return LinearVariable(std::move(m), a.layout_, a.label_ + "+" + b.label_);
    }

private:
    FieldMatrix map_;
    SourceLayout layout_;
    std::string label_;
};

/// Single-row variable selecting one source coordinate.
inline LinearVariable coordinate_selector(const PrimeField& field, const SourceLayout& layout,
                                          std::size_t col, std::string label) {
    FieldMatrix m(field, 1, layout.total());
    m.set(0, col, 1);
    return LinearVariable(std::move(m), layout, std::move(label));
}

inline FieldMatrix stack_maps(const std::vector<LinearVariable>& vars) {
    if (vars.empty()) throw std::invalid_argument("stack_maps: empty variable list");
    const SourceLayout& layout = vars.front().layout();
    std::vector<FieldMatrix> ms;
    ms.reserve(vars.size());
    for (const auto& v : vars) {
        if (v.layout() != layout) throw std::invalid_argument("entropy: variables use different layouts");
        ms.push_back(v.map());
    }
    return stack(vars.front().map().field(), layout.total(), ms);
}

/// Joint entropy H(vars) in log-q symbols.
inline std::size_t entropy(const std::vector<LinearVariable>& vars) {
    if (vars.empty()) return 0;
    return rank(stack_maps(vars));
}

namespace detail {
inline std::vector<LinearVariable> concat(const std::vector<LinearVariable>& a,
                                          const std::vector<LinearVariable>& b) {
    std::vector<LinearVariable> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}
}  // namespace detail

/// H(a | given) = rank([a; given]) - rank([given]).
inline std::size_t conditional_entropy(const std::vector<LinearVariable>& a,
                                       const std::vector<LinearVariable>& given) {
    return entropy(detail::concat(a, given)) - entropy(given);
}

/// I(a; b | given), always a nonnegative integer in log-q units.
inline std::int64_t mutual_information(const std::vector<LinearVariable>& a,
                                       const std::vector<LinearVariable>& b,
                                       const std::vector<LinearVariable>& given = {}) {
    const std::int64_t rag = static_cast<std::int64_t>(entropy(detail::concat(a, given)));
    const std::int64_t rbg = static_cast<std::int64_t>(entropy(detail::concat(b, given)));
    const std::int64_t rabg = static_cast<std::int64_t>(entropy(detail::concat(a, detail::concat(b, given))));
    const std::int64_t rg = static_cast<std::int64_t>(entropy(given));
    return rag + rbg - rabg - rg;
}

}  // namespace secagg
