#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace csd {

// Arithmetic in the prime field F_p, p < 2^31.  All residues are kept
// reduced in [0, p); products go through 64 bits so no overflow is possible.
class Fp {
public:
    explicit Fp(uint32_t p) : p_(p) {
        if (!is_prime(p)) {
            throw std::invalid_argument("Fp: modulus " + std::to_string(p) + " is not a prime in [2, 2^31)");
        }
    }

    uint32_t modulus() const { return p_; }

    uint32_t reduce(int64_t x) const {
        int64_t r = x % static_cast<int64_t>(p_);
        if (r < 0) r += p_;
        return static_cast<uint32_t>(r);
    }

    uint32_t add(uint32_t a, uint32_t b) const {
        uint32_t s = a + b;
        return s >= p_ ? s - p_ : s;
    }
    uint32_t sub(uint32_t a, uint32_t b) const { return a >= b ? a - b : a + p_ - b; }
    uint32_t neg(uint32_t a) const { return a == 0 ? 0 : p_ - a; }
    uint32_t mul(uint32_t a, uint32_t b) const {
        return static_cast<uint32_t>((static_cast<uint64_t>(a) * b) % p_);
    }
    uint32_t pow(uint32_t a, uint64_t e) const {
        uint64_t base = a % p_, acc = 1;
        while (e) {
            if (e & 1) acc = (acc * base) % p_;
            base = (base * base) % p_;
            e >>= 1;
        }
        return static_cast<uint32_t>(acc);
    }
    // p prime, so a^(p-2) inverts any nonzero a.
    uint32_t inv(uint32_t a) const {
        if (a == 0) throw std::domain_error("Fp::inv: division by zero");
        return pow(a, p_ - 2);
    }

    // Symmetric integer representative in (-p/2, p/2].
    int64_t lift(uint32_t a) const {
        return a <= p_ / 2 ? static_cast<int64_t>(a) : static_cast<int64_t>(a) - p_;
    }

    static bool is_prime(uint32_t p) {
        if (p < 2 || p >= (1u << 31)) return false;
        if (p < 4) return true;
        if (p % 2 == 0) return false;
        for (uint64_t d = 3; d * d <= p; d += 2)
            if (p % d == 0) return false;
        return true;
    }

private:
    uint32_t p_;
};

} // namespace csd
