#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace secagg {

namespace detail {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(static_cast<__uint128_t>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
    std::uint64_t r = 1 % m;
    base %= m;
    while (exp) {
        if (exp & 1) r = mulmod(r, base, m);
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    return r;
}

// Deterministic Miller-Rabin, exact for all 64-bit inputs with this base set.
inline bool is_prime_u64(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        std::uint64_t x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) { composite = false; break; }
        }
        if (composite) return false;
    }
    return true;
}

}  // namespace detail

/// Prime field F_q with a runtime modulus. All values are canonical
/// representatives in [0, q). The modulus is capped so that products fit a
/// 128-bit intermediate and sums never wrap 64 bits.
class PrimeField {
public:
    static constexpr std::uint64_t kMaxModulus = 1ull << 62;

    explicit PrimeField(std::uint64_t q) : q_(q) {
        if (q >= kMaxModulus)
            throw std::invalid_argument("PrimeField: modulus " + std::to_string(q) + " exceeds 2^62");
        if (!detail::is_prime_u64(q))
            throw std::invalid_argument("PrimeField: modulus " + std::to_string(q) + " is not prime");
    }

    std::uint64_t modulus() const { return q_; }

    std::uint64_t reduce(std::uint64_t v) const { return v % q_; }
    std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
        std::uint64_t s = a + b;
        return s >= q_ ? s - q_ : s;
    }
    std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return a >= b ? a - b : a + q_ - b; }
    std::uint64_t neg(std::uint64_t a) const { return a == 0 ? 0 : q_ - a; }
    std::uint64_t mul(std::uint64_t a, std::uint64_t b) const { return detail::mulmod(a, b, q_); }
    std::uint64_t pow(std::uint64_t a, std::uint64_t e) const { return detail::powmod(a, e, q_); }
    std::uint64_t inv(std::uint64_t a) const {
        if (a == 0) throw std::invalid_argument("PrimeField: division by zero");
        return detail::powmod(a, q_ - 2, q_);
    }

    bool operator==(const PrimeField& o) const { return q_ == o.q_; }
    bool operator!=(const PrimeField& o) const { return q_ != o.q_; }

private:
    std::uint64_t q_;
};

/// A single element of a prime field, tagged with its modulus. Mixed-field
/// arithmetic is a usage error.
class FieldElement {
public:
    FieldElement(std::uint64_t value, const PrimeField& field)
        : v_(field.reduce(value)), q_(field.modulus()) {}

    std::uint64_t value() const { return v_; }
    std::uint64_t modulus() const { return q_; }
    PrimeField field() const { return PrimeField(q_); }

    friend FieldElement operator+(const FieldElement& a, const FieldElement& b) {
        a.check(b);
        std::uint64_t s = a.v_ + b.v_;
        return FieldElement(s >= a.q_ ? s - a.q_ : s, a.q_);
    }
    friend FieldElement operator-(const FieldElement& a, const FieldElement& b) {
        a.check(b);
        return FieldElement(a.v_ >= b.v_ ? a.v_ - b.v_ : a.v_ + a.q_ - b.v_, a.q_);
    }
    friend FieldElement operator*(const FieldElement& a, const FieldElement& b) {
        a.check(b);
        return FieldElement(detail::mulmod(a.v_, b.v_, a.q_), a.q_);
    }
    FieldElement operator-() const { return FieldElement(v_ == 0 ? 0 : q_ - v_, q_); }
    FieldElement inv() const {
        if (v_ == 0) throw std::invalid_argument("FieldElement: division by zero");
        return FieldElement(detail::powmod(v_, q_ - 2, q_), q_);
    }
    friend FieldElement operator/(const FieldElement& a, const FieldElement& b) { return a * b.inv(); }

    bool operator==(const FieldElement& o) const { return v_ == o.v_ && q_ == o.q_; }
    bool operator!=(const FieldElement& o) const { return !(*this == o); }

private:
    FieldElement(std::uint64_t canonical, std::uint64_t q) : v_(canonical), q_(q) {}
    void check(const FieldElement& o) const {
        if (q_ != o.q_)
            throw std::invalid_argument("FieldElement: operands live in different fields (q=" +
                                        std::to_string(q_) + " vs q=" + std::to_string(o.q_) + ")");
    }

    std::uint64_t v_;
    std::uint64_t q_;
};

inline bool is_prime(std::uint64_t n) { return detail::is_prime_u64(n); }

/// Smallest prime strictly greater than n. Throws if the search would leave
/// the supported modulus range.
inline std::uint64_t next_prime_above(std::uint64_t n) {
    std::uint64_t c = n + 1;
    if (c < 2) c = 2;
    while (!detail::is_prime_u64(c)) {
        ++c;
        if (c >= PrimeField::kMaxModulus)
            throw std::invalid_argument("next_prime_above: no prime below the modulus cap");
    }
    return c;
}

}  // namespace secagg
