// Copyright 2026 The sdqrng Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file extraction.hpp
 * @brief Toeplitz hashing of raw outcome bits.
 *
 * The extractor for input length L and output length m is the m x L GF(2)
 * matrix T[i][j] = seed[i - j + L - 1], so row i reads seed bits
 * i .. i + L - 1 against the input in reverse order.
 */
#pragma once

#include "sdqrng/detection_model.hpp"
#include "sdqrng/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sdqrng {

/// Packed bit sequence. Bit i lives in word i / 64 at position i % 64.
class BitString {
  public:
    BitString() = default;
    explicit BitString(std::size_t n, bool value = false)
        : words_((n + 63) / 64, value ? ~std::uint64_t{0} : 0), size_(n) {
        clear_tail();
    }

    /// Parse a string of '0' and '1' characters.
    static BitString from_string(std::string_view s) {
        BitString out(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '0' && s[i] != '1')
                throw DomainError("bit strings may only contain 0 and 1");
            out.set(i, s[i] == '1');
        }
        return out;
    }

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
    [[nodiscard]] const std::vector<std::uint64_t> &words() const noexcept { return words_; }

    [[nodiscard]] bool operator[](std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }

    void set(std::size_t i, bool v) {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (v)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    void push_back(bool v) {
        if ((size_ & 63) == 0)
            words_.push_back(0);
        ++size_;
        set(size_ - 1, v);
    }

    void append(const BitString &other) {
        for (std::size_t i = 0; i < other.size(); ++i)
            push_back(other[i]);
    }

    [[nodiscard]] BitString slice(std::size_t offset, std::size_t length) const {
        if (offset > size_ || length > size_ - offset)
            throw SizeError("bit slice out of range");
        BitString out(length);
        for (std::size_t i = 0; i < length; ++i)
            out.set(i, (*this)[offset + i]);
        return out;
    }

    [[nodiscard]] std::size_t popcount() const {
        std::size_t c = 0;
        for (auto w : words_)
            c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    [[nodiscard]] std::string to_string() const {
        std::string s(size_, '0');
        for (std::size_t i = 0; i < size_; ++i)
            if ((*this)[i])
                s[i] = '1';
        return s;
    }

    friend BitString operator^(const BitString &a, const BitString &b) {
        if (a.size() != b.size())
            throw SizeError("xor of bit strings with different lengths");
        BitString out = a;
        for (std::size_t w = 0; w < out.words_.size(); ++w)
            out.words_[w] ^= b.words_[w];
        return out;
    }

    friend bool operator==(const BitString &a, const BitString &b) {
        return a.size_ == b.size_ && a.words_ == b.words_;
    }

  private:
    void clear_tail() {
        if (size_ & 63)
            words_.back() &= (std::uint64_t{1} << (size_ & 63)) - 1;
    }

    std::vector<std::uint64_t> words_;
    std::size_t size_ = 0;
};

struct RawBits {
    BitString bits;
    /// Encoding descriptor, e.g. "fixed-width big-endian, 2 bits per symbol, d=4".
    std::string origin;
    int bits_per_symbol = 0;
};

/// ceil(log2(d)) for d >= 2.
inline int bits_per_symbol(int d) {
    if (d < 2)
        throw DomainError("an alphabet needs at least two symbols");
    return std::bit_width(static_cast<unsigned>(d - 1));
}

/// Fixed-width big-endian encoding of each outcome, concatenated in order.
inline RawBits outcome_encoding(const std::vector<int> &outcomes, int d) {
    if (outcomes.empty())
        throw DomainError("no outcomes to encode");
    const int w = bits_per_symbol(d);
    RawBits raw;
    raw.bits_per_symbol = w;
    raw.origin = "fixed-width big-endian, " + std::to_string(w) + " bits per symbol, d=" + std::to_string(d);
    raw.bits = BitString(outcomes.size() * static_cast<std::size_t>(w));
    std::size_t pos = 0;
    for (int b : outcomes) {
        if (b < 0 || b >= d)
            throw DomainError("outcome " + std::to_string(b) + " outside alphabet of size " + std::to_string(d));
        for (int k = w - 1; k >= 0; --k)
            raw.bits.set(pos++, (b >> k) & 1);
    }
    return raw;
}

inline RawBits outcome_encoding(const std::vector<TrialRecord> &trials, int d) {
    std::vector<int> b;
    b.reserve(trials.size());
    for (const auto &t : trials)
        b.push_back(t.b);
    return outcome_encoding(b, d);
}

/// Leftover-hash output length floor(n h - 2 log2(1/eps_sec)), at least 0.
inline std::size_t output_length(std::size_t n_symbols, double h_min_per_symbol, double eps_sec) {
    if (!(h_min_per_symbol >= 0.0) || !std::isfinite(h_min_per_symbol))
        throw DomainError("min-entropy per symbol must be finite and non-negative");
    if (!(eps_sec > 0.0 && eps_sec < 1.0))
        throw DomainError("eps_sec must lie in (0, 1)");
    const double m = std::floor(static_cast<double>(n_symbols) * h_min_per_symbol + 2.0 * std::log2(eps_sec));
    return m > 0.0 ? static_cast<std::size_t>(m) : 0;
}

/// Seed bits needed to hash `input_bits` bits down to `output_bits`.
inline std::size_t toeplitz_seed_length(std::size_t input_bits, std::size_t output_bits) {
    return output_bits == 0 ? 0 : input_bits + output_bits - 1;
}

/// y_i = XOR_j seed[i - j + L - 1] x_j for i in [0, m).
inline BitString toeplitz_extract(const BitString &raw, const BitString &seed, std::size_t m) {
    const std::size_t len = raw.size();
    if (len == 0)
        throw DomainError("empty extractor input");
    if (m < 1)
        throw DomainError("output length must be at least one");
    if (seed.size() != len + m - 1)
        throw SizeError("Toeplitz seed must have length " + std::to_string(len + m - 1) + ", got " +
                        std::to_string(seed.size()));

    // Row i is parity(seed[i .. i+L-1] & reverse(x)). Keep 64 shifted copies
    // of the seed so every window starts on a word boundary.
    BitString rev(len);
    for (std::size_t j = 0; j < len; ++j)
        rev.set(j, raw[len - 1 - j]);
    const auto &rw = rev.words();
    const std::size_t nw = rw.size();

    const auto &sw = seed.words();
    const std::size_t seed_words = sw.size();
    std::vector<std::vector<std::uint64_t>> shifted(64);
    for (unsigned r = 0; r < 64 && r < m; ++r) {
        auto &v = shifted[r];
        v.assign(seed_words + 1, 0);
        for (std::size_t w = 0; w < seed_words; ++w) {
            v[w] = r == 0 ? sw[w] : (sw[w] >> r) | (w + 1 < seed_words ? sw[w + 1] << (64 - r) : 0);
        }
    }

    BitString out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::uint64_t *s = shifted[i & 63].data() + (i >> 6);
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < nw; ++w)
            acc ^= s[w] & rw[w];
        out.set(i, std::popcount(acc) & 1);
    }
    return out;
}

// ----------------------------------------------------------- block mode --

inline constexpr std::size_t default_block_bits = std::size_t{1} << 20;
inline constexpr double default_eps_sec = 0x1.0p-64;

struct BlockInfo {
    std::size_t input_offset = 0;
    std::size_t input_bits = 0;
    std::size_t symbols = 0;
    std::size_t output_bits = 0;
    std::size_t seed_offset = 0;
    std::size_t seed_bits = 0;
};

struct ExtractionPlan {
    double h_min_per_symbol = 0.0;
    double eps_sec = default_eps_sec;
    int bits_per_symbol = 0;
    std::vector<BlockInfo> blocks;

    [[nodiscard]] std::size_t seed_bits() const {
        std::size_t s = 0;
        for (const auto &b : blocks)
            s += b.seed_bits;
        return s;
    }
    [[nodiscard]] std::size_t output_bits() const {
        std::size_t s = 0;
        for (const auto &b : blocks)
            s += b.output_bits;
        return s;
    }
};

/// Split `raw` into symbol-aligned blocks of at most `block_bits` bits, each
/// hashed with its own seed segment and its own eps_sec budget.
inline ExtractionPlan plan_extraction(const RawBits &raw, double h_min_per_symbol, double eps_sec = default_eps_sec,
                                      std::size_t block_bits = default_block_bits) {
    if (raw.bits_per_symbol < 1)
        throw DomainError("raw bits carry no symbol width");
    const auto w = static_cast<std::size_t>(raw.bits_per_symbol);
    if (raw.bits.size() % w != 0)
        throw SizeError("raw bit count is not a whole number of symbols");
    const std::size_t per_block = block_bits / w;
    if (per_block == 0)
        throw DomainError("block size is smaller than one symbol");

    ExtractionPlan plan;
    plan.h_min_per_symbol = h_min_per_symbol;
    plan.eps_sec = eps_sec;
    plan.bits_per_symbol = raw.bits_per_symbol;
    const std::size_t total_symbols = raw.bits.size() / w;
    std::size_t seed_offset = 0;
    for (std::size_t start = 0; start < total_symbols; start += per_block) {
        BlockInfo b;
        b.symbols = std::min(per_block, total_symbols - start);
        b.input_offset = start * w;
        b.input_bits = b.symbols * w;
        b.output_bits = output_length(b.symbols, h_min_per_symbol, eps_sec);
        b.seed_offset = seed_offset;
        b.seed_bits = toeplitz_seed_length(b.input_bits, b.output_bits);
        seed_offset += b.seed_bits;
        plan.blocks.push_back(b);
    }
    return plan;
}

/// Run a plan. Blocks with zero output length are skipped.
inline BitString extract_blocks(const RawBits &raw, const BitString &seed, const ExtractionPlan &plan) {
    if (seed.size() < plan.seed_bits())
        throw SizeError("seed provides " + std::to_string(seed.size()) + " bits, plan needs " +
                        std::to_string(plan.seed_bits()));
    BitString out;
    for (const auto &b : plan.blocks) {
        if (b.output_bits == 0)
            continue;
        out.append(toeplitz_extract(raw.bits.slice(b.input_offset, b.input_bits),
                                    seed.slice(b.seed_offset, b.seed_bits), b.output_bits));
    }
    return out;
}

// ------------------------------------------------------------ bit files --

inline constexpr std::uint32_t bit_file_version = 1;

/// "SDQB", uint32 version, uint64 bit count (little endian), then the bits
/// packed most significant bit first with the last byte zero padded.
inline void write_bit_file(std::ostream &os, const BitString &bits) {
    os.write("SDQB", 4);
    auto put = [&](std::uint64_t v, int bytes) {
        for (int k = 0; k < bytes; ++k)
            os.put(static_cast<char>((v >> (8 * k)) & 0xFF));
    };
    put(bit_file_version, 4);
    put(bits.size(), 8);
    for (std::size_t i = 0; i < bits.size(); i += 8) {
        unsigned char byte = 0;
        for (std::size_t k = 0; k < 8 && i + k < bits.size(); ++k)
            if (bits[i + k])
                byte |= static_cast<unsigned char>(0x80U >> k);
        os.put(static_cast<char>(byte));
    }
    if (!os)
        throw FormatError("failed to write bit file");
}

inline BitString read_bit_file(std::istream &is) {
    char magic[4];
    if (!is.read(magic, 4) || std::string_view(magic, 4) != "SDQB")
        throw FormatError("not a bit file (bad magic)");
    auto get = [&](int bytes) {
        std::uint64_t v = 0;
        for (int k = 0; k < bytes; ++k) {
            const int c = is.get();
            if (c == std::char_traits<char>::eof())
                throw FormatError("truncated bit file header");
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * k);
        }
        return v;
    };
    const auto version = get(4);
    if (version != bit_file_version)
        throw FormatError("unsupported bit file version " + std::to_string(version));
    const auto n = get(8);
    BitString bits(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < n; i += 8) {
        const int c = is.get();
        if (c == std::char_traits<char>::eof())
            throw FormatError("bit file payload shorter than its header claims");
        for (std::size_t k = 0; k < 8 && i + k < n; ++k)
            bits.set(i + k, (static_cast<unsigned>(c) >> (7 - k)) & 1U);
    }
    return bits;
}

} // namespace sdqrng
